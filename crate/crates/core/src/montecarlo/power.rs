//! Rejection rates under alternatives and penetrance calibration.

use serde::{Deserialize, Serialize};

use crate::population::{penetrances_for_model, GeneticModel, PenetranceModel};
use crate::robust::Sidedness;
use crate::{Error, Result};

use super::critical::{CriticalValueSet, NullReference};
use super::sampler::ScenarioSampler;
use super::scenario::Scenario;
use super::statistic::{Statistic, StatisticBattery};
use super::{binomial_se, derive_seed, replicate_map};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEntry {
    pub statistic: Statistic,
    pub rate: f64,
    pub se: f64,
    /// Replicates on which the statistic errored; counted as acceptances.
    pub errors: usize,
}

/// Rejection rates of a battery under one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub scenario: String,
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    pub entries: Vec<PowerEntry>,
}

impl PowerRow {
    pub fn rate(&self, stat: Statistic) -> Option<f64> {
        self.entries.iter().find(|e| e.statistic == stat).map(|e| e.rate)
    }
}

/// Simulates `replicates` tables from `scenario` and counts how often each
/// statistic's decision value exceeds its critical value.
pub fn estimate_power(
    scenario: &Scenario,
    battery: &StatisticBattery,
    criticals: &CriticalValueSet,
    replicates: usize,
    seed: u64,
) -> Result<PowerRow> {
    if criticals.key != scenario.null_key() {
        return Err(Error::MismatchedScenario(format!(
            "{}: population, sample sizes or correction differ",
            scenario.id
        )));
    }
    if criticals.sidedness != battery.sidedness() {
        return Err(Error::MismatchedScenario(format!("{}: sidedness differs", scenario.id)));
    }
    let thresholds = battery
        .statistics()
        .iter()
        .map(|&s| {
            criticals
                .threshold(s)
                .ok_or_else(|| Error::MismatchedScenario(format!("no critical value for {s}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if replicates == 0 {
        return Err(Error::InvalidArgument("power needs at least one replicate".into()));
    }

    let sampler = ScenarioSampler::new(scenario)?;
    let rows = replicate_map(replicates, seed, |rng| battery.decision_values(&sampler.draw(rng)));
    let entries = battery
        .statistics()
        .iter()
        .enumerate()
        .map(|(j, &statistic)| {
            let mut rejections = 0usize;
            let mut errors = 0usize;
            for row in &rows {
                let v = row[j];
                if v.is_nan() {
                    errors += 1;
                } else if v > thresholds[j] {
                    rejections += 1;
                }
            }
            let rate = rejections as f64 / replicates as f64;
            PowerEntry {
                statistic,
                rate,
                se: binomial_se(rate, replicates),
                errors,
            }
        })
        .collect();
    Ok(PowerRow {
        scenario: scenario.id.clone(),
        replicates,
        seed,
        alpha: criticals.alpha,
        entries,
    })
}

/// Controls for [`calibrate_f2`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    pub target: f64,
    /// Accepted distance between achieved and target power.
    pub tolerance: f64,
    pub alpha: f64,
    pub null_replicates: usize,
    pub power_replicates: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            target: 0.80,
            tolerance: 0.01,
            alpha: 0.05,
            null_replicates: 200_000,
            power_replicates: 10_000,
            seed: 20_070_101,
            max_iterations: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub penetrance: PenetranceModel,
    /// Power of the model's optimal trend test at the calibrated
    /// penetrances, on the calibration stream.
    pub power: f64,
    pub iterations: usize,
}

/// Finds `f2` (with `f1` tied to `f0`, `f2` by the model) at which the
/// model's optimal trend test reaches the target power, by bisection.
///
/// Calibration runs on `template`'s population, sample sizes and
/// correction; its penetrances are ignored. Every bisection step reuses the
/// same random streams, so the estimated power is a nearly monotone
/// function of `f2`.
pub fn calibrate_f2(
    kind: GeneticModel,
    f0: f64,
    template: &Scenario,
    sidedness: Sidedness,
    settings: &CalibrationSettings,
) -> Result<Calibration> {
    let statistic = match kind {
        GeneticModel::Recessive => Statistic::Z0,
        GeneticModel::Additive => Statistic::ZHalf,
        GeneticModel::Dominant => Statistic::Z1,
        GeneticModel::Custom => {
            return Err(Error::Calibration("custom models have no optimal trend test".into()))
        }
    };
    let base = Scenario {
        id: format!("{}/calibration", template.id),
        penetrance: None,
        ..template.clone()
    };
    base.validate()?;
    let battery = StatisticBattery::new(vec![statistic], sidedness)?;
    let criticals = NullReference::simulate(
        &base,
        &battery,
        settings.null_replicates,
        derive_seed(settings.seed, "calibration/null"),
    )?
    .critical_values(settings.alpha)?;
    let power_seed = derive_seed(settings.seed, "calibration/power");

    let power_at = |f2: f64| -> Result<(PenetranceModel, f64)> {
        let f = penetrances_for_model(kind, f0, f2)?;
        let scenario = Scenario {
            penetrance: Some(f),
            ..base.clone()
        };
        let row = estimate_power(&scenario, &battery, &criticals, settings.power_replicates, power_seed)?;
        Ok((f, row.entries[0].rate))
    };

    let mut lo = f0;
    let mut hi = 0.999;
    let (mut best, mut best_power) = power_at(hi)?;
    if best_power < settings.target {
        return Err(Error::Calibration(format!(
            "{kind} model cannot reach power {} in {} (max {best_power:.3})",
            settings.target, template.id
        )));
    }
    let mut iterations = 0;
    for iteration in 1..=settings.max_iterations {
        iterations = iteration;
        let mid = 0.5 * (lo + hi);
        let (f, power) = power_at(mid)?;
        if (power - settings.target).abs() < (best_power - settings.target).abs() {
            best = f;
            best_power = power;
        }
        if (power - settings.target).abs() <= 0.25 * settings.tolerance {
            return Ok(Calibration {
                penetrance: f,
                power,
                iterations: iteration,
            });
        }
        if power < settings.target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    if (best_power - settings.target).abs() <= settings.tolerance {
        Ok(Calibration {
            penetrance: best,
            power: best_power,
            iterations,
        })
    } else {
        Err(Error::Calibration(format!(
            "{kind} model: closest power {best_power:.4} misses target {}",
            settings.target
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::estimate_critical_values;

    fn battery() -> StatisticBattery {
        StatisticBattery::new(vec![Statistic::ZHalf, Statistic::Chi2TwoDf], Sidedness::Two).unwrap()
    }

    #[test]
    fn mismatched_scenarios_are_rejected() {
        let null = Scenario::hwe("n", 0.3, None, 100, 100).unwrap();
        let criticals = estimate_critical_values(&null, &battery(), 2000, 0.05, 1).unwrap();
        let other = Scenario::hwe("o", 0.3, None, 100, 120).unwrap();
        assert!(matches!(
            estimate_power(&other, &battery(), &criticals, 100, 2),
            Err(Error::MismatchedScenario(_))
        ));
        let one_sided = StatisticBattery::new(vec![Statistic::ZHalf], Sidedness::One).unwrap();
        assert!(estimate_power(&null, &one_sided, &criticals, 100, 2).is_err());
    }

    #[test]
    fn power_grows_with_effect_size() {
        let null = Scenario::hwe("n", 0.3, None, 150, 150).unwrap();
        let criticals = estimate_critical_values(&null, &battery(), 20_000, 0.05, 3).unwrap();
        let mut last = 0.0;
        for f2 in [0.015, 0.02, 0.03] {
            let f = penetrances_for_model(GeneticModel::Additive, 0.01, f2).unwrap();
            let alt = Scenario {
                penetrance: Some(f),
                ..null.clone()
            };
            let row = estimate_power(&alt, &battery(), &criticals, 4000, 4).unwrap();
            let rate = row.rate(Statistic::ZHalf).unwrap();
            assert!(rate >= last, "f2={f2}: {rate} < {last}");
            last = rate;
            let e = &row.entries[0];
            assert!((e.se - (e.rate * (1.0 - e.rate) / 4000.0).sqrt()).abs() < 1e-15);
        }
        assert!(last > 0.5);
    }

    #[test]
    fn calibration_hits_target() {
        let settings = CalibrationSettings {
            null_replicates: 20_000,
            power_replicates: 4000,
            ..Default::default()
        };
        let template = Scenario::hwe("t", 0.3, None, 250, 250).unwrap();
        let cal = calibrate_f2(GeneticModel::Dominant, 0.01, &template, Sidedness::Two, &settings).unwrap();
        assert!((cal.power - 0.8).abs() <= 0.01, "{cal:?}");
        assert_eq!(cal.penetrance.f1, cal.penetrance.f2);
        assert!(calibrate_f2(GeneticModel::Custom, 0.01, &template, Sidedness::Two, &settings).is_err());
    }
}
