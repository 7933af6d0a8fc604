//! Null reference samples, empirical critical values and the
//! multivariate-normal approximation for maximum statistics.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::robust::{trend_null_correlation, CorrelationMatrix, Sidedness};
use crate::trend::TrendScore;
use crate::{Error, Result};

use super::sampler::ScenarioSampler;
use super::scenario::{NullKey, Scenario};
use super::statistic::{Statistic, StatisticBattery};
use super::replicate_map;

/// Smallest null sample accepted for critical values.
pub const MIN_NULL_REPLICATES: usize = 1000;

/// Upper empirical quantile `v(⌈(1 − α)B⌉)` of an ascending sample.
pub fn empirical_quantile(sorted: &[f64], alpha: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let b = sorted.len() as f64;
    // guard against (1 - α)B landing a rounding error above an integer
    let rank = ((1.0 - alpha) * b - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

fn sort_valid(values: impl Iterator<Item = f64>) -> (Vec<f64>, usize) {
    let mut errors = 0;
    let mut v: Vec<f64> = values
        .filter(|x| {
            let ok = !x.is_nan();
            errors += usize::from(!ok);
            ok
        })
        .collect();
    v.sort_by(f64::total_cmp);
    (v, errors)
}

/// Sorted null samples of the decision values of every statistic in a
/// battery.
#[derive(Debug, Clone)]
pub struct NullReference {
    battery: StatisticBattery,
    key: NullKey,
    samples: Vec<Vec<f64>>,
    errors: Vec<usize>,
    replicates: usize,
    seed: u64,
}

impl NullReference {
    /// Simulates `replicates` tables from the null counterpart of
    /// `scenario` and evaluates the battery on each.
    pub fn simulate(scenario: &Scenario, battery: &StatisticBattery, replicates: usize, seed: u64) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::InvalidArgument("null reference needs at least one replicate".into()));
        }
        let null = scenario.null_counterpart();
        let sampler = ScenarioSampler::new(&null)?;
        let rows = replicate_map(replicates, seed, |rng| battery.decision_values(&sampler.draw(rng)));
        let (samples, errors) = (0..battery.len())
            .map(|j| sort_valid(rows.iter().map(|row| row[j])))
            .unzip();
        Ok(Self {
            battery: battery.clone(),
            key: null.null_key(),
            samples,
            errors,
            replicates,
            seed,
        })
    }

    pub fn battery(&self) -> &StatisticBattery {
        &self.battery
    }

    pub fn key(&self) -> NullKey {
        self.key
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    /// Ascending valid null values of statistic `index`.
    pub fn sample(&self, index: usize) -> &[f64] {
        &self.samples[index]
    }

    /// Replicates on which statistic `index` could not be evaluated.
    pub fn errors(&self, index: usize) -> usize {
        self.errors[index]
    }

    /// Empirical upper-tail p-value `#{null ≥ value} / B` over the valid
    /// null values. NaN values get p = 1.
    pub fn pvalue(&self, index: usize, value: f64) -> f64 {
        let sample = &self.samples[index];
        if value.is_nan() || sample.is_empty() {
            return 1.0;
        }
        let below = sample.partition_point(|&v| v < value);
        (sample.len() - below) as f64 / sample.len() as f64
    }

    pub fn critical_values(&self, alpha: f64) -> Result<CriticalValueSet> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let values = self
            .battery
            .statistics()
            .iter()
            .enumerate()
            .map(|(j, &statistic)| CriticalValue {
                statistic,
                threshold: empirical_quantile(&self.samples[j], alpha),
                errors: self.errors[j],
            })
            .collect();
        Ok(CriticalValueSet {
            alpha,
            replicates: self.replicates,
            seed: self.seed,
            sidedness: self.battery.sidedness(),
            key: self.key,
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub statistic: Statistic,
    pub threshold: f64,
    /// Null replicates on which the statistic errored.
    pub errors: usize,
}

/// Empirical α-level thresholds. A test rejects when its decision value is
/// strictly greater than the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueSet {
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
    pub sidedness: Sidedness,
    pub key: NullKey,
    pub values: Vec<CriticalValue>,
}

impl CriticalValueSet {
    pub fn threshold(&self, stat: Statistic) -> Option<f64> {
        self.values.iter().find(|c| c.statistic == stat).map(|c| c.threshold)
    }
}

/// Simulates the null counterpart of `scenario` and returns the empirical
/// `(1 − α)` quantile of each statistic's decision value.
pub fn estimate_critical_values(
    scenario: &Scenario,
    battery: &StatisticBattery,
    replicates: usize,
    alpha: f64,
    seed: u64,
) -> Result<CriticalValueSet> {
    if replicates < MIN_NULL_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "critical values need at least {MIN_NULL_REPLICATES} null replicates, got {replicates}"
        )));
    }
    NullReference::simulate(scenario, battery, replicates, seed)?.critical_values(alpha)
}

/// Lower-triangular `L` with `L Lᵀ = ρ`, allowing zero pivots so that
/// singular (perfectly correlated) matrices are accepted.
fn psd_cholesky(rho: &CorrelationMatrix) -> Result<Vec<Vec<f64>>> {
    let k = rho.dim();
    let tol = 1e-10;
    let mut l = vec![vec![0.0; k]; k];
    for j in 0..k {
        let d = rho.get(j, j) - (0..j).map(|m| l[j][m] * l[j][m]).sum::<f64>();
        if d < -tol {
            return Err(Error::NotPsd);
        }
        let pivot = d.max(0.0).sqrt();
        l[j][j] = pivot;
        for i in j + 1..k {
            let v = rho.get(i, j) - (0..j).map(|m| l[i][m] * l[j][m]).sum::<f64>();
            if pivot > tol {
                l[i][j] = v / pivot;
            } else if v.abs() > 1e-8 {
                return Err(Error::NotPsd);
            }
        }
    }
    Ok(l)
}

/// Null correlation matrix of the components of a maximum statistic at
/// pooled genotype proportions `props`.
pub fn max_null_correlation(stat: Statistic, props: [f64; 3], grid: &[TrendScore]) -> Result<CorrelationMatrix> {
    let (rec, add, dom) = (TrendScore::RECESSIVE, TrendScore::ADDITIVE, TrendScore::DOMINANT);
    let scores = match stat {
        Statistic::Max2 => vec![rec, dom],
        Statistic::Max2RecAdd => vec![rec, add],
        Statistic::Max3 => vec![rec, add, dom],
        Statistic::MaxGrid => grid.to_vec(),
        Statistic::Max3Mert => {
            let r01 = trend_null_correlation(props, rec, dom)?;
            // corr(Z_MERT, Z_x) = (ρ_0x + ρ_1x) / √(2(1 + ρ_01)), which is the same for both ends
            let m = ((1.0 + r01) / 2.0).sqrt();
            return CorrelationMatrix::new(vec![vec![1.0, m, r01], vec![m, 1.0, m], vec![r01, m, 1.0]]);
        }
        other => {
            return Err(Error::InvalidArgument(format!("{other} is not a maximum statistic")));
        }
    };
    let rows = scores
        .iter()
        .map(|&x| scores.iter().map(|&y| if x == y { Ok(1.0) } else { trend_null_correlation(props, x, y) }).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    CorrelationMatrix::new(rows)
}

/// Critical value of `max_i Z_i` (or `max_i |Z_i|`) for jointly normal
/// statistics with correlation matrix `rho`, by direct simulation.
pub fn normal_approx_critical_max(
    rho: &CorrelationMatrix,
    alpha: f64,
    replicates: usize,
    sidedness: Sidedness,
    seed: u64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || replicates == 0 {
        return Err(Error::InvalidArgument("need 0 < alpha < 1 and at least one replicate".into()));
    }
    let l = psd_cholesky(rho)?;
    let k = rho.dim();
    let maxima = replicate_map(replicates, seed, |rng| {
        let e: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        (0..k)
            .map(|i| sidedness.decision((0..=i).map(|m| l[i][m] * e[m]).sum::<f64>()))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let (sorted, _) = sort_valid(maxima.into_iter());
    Ok(empirical_quantile(&sorted, alpha))
}
