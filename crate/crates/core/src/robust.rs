//! Efficiency-robust combinations of trend statistics.
//!
//! For a family of asymptotically normal statistics with null correlation
//! matrix `ρ`, the Pitman ARE of `Z_i` relative to the optimal `Z_j` is
//! `ρ_ij²`. The maximin efficiency robust test (MERT) for an extreme pair
//! `(s, t)` is `(Z_s + Z_t) / √(2(1 + ρ_st))`, valid for the whole family
//! when `ρ_si + ρ_it ≥ 1 + ρ_st` for every member `i`. Maximum statistics
//! take the largest member instead and need simulated critical values.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tables::GenotypeTable;
use crate::trend::{trend_statistic, TrendScore};
use crate::{Error, Result};

/// Whether decisions use the signed statistic (`M` known to be the risk
/// allele) or its absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sidedness {
    #[serde(alias = "one-sided")]
    One,
    #[default]
    #[serde(alias = "two-sided")]
    Two,
}

impl Sidedness {
    /// Maps a signed normal-type statistic to the value a test compares
    /// against its upper critical value.
    pub fn decision(self, z: f64) -> f64 {
        match self {
            Self::One => z,
            Self::Two => z.abs(),
        }
    }
}

impl fmt::Display for Sidedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::One => "one",
            Self::Two => "two",
        })
    }
}

/// Null correlations among `Z_0`, `Z_1/2` and `Z_1` from the closed forms,
/// with field names in the conventional tabulated order.
///
/// With proportions ordered `(NN, NM, MM)` the exact score correlations are
/// `corr(Z_0, Z_1/2) = rho_half_1` and `corr(Z_1/2, Z_1) = rho_0_half`;
/// `rho_0_1` is symmetric and unaffected. Use [`trend_null_correlation`] for
/// an arbitrary pair of scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTriple {
    pub rho_0_half: f64,
    pub rho_0_1: f64,
    pub rho_half_1: f64,
}

impl CorrelationTriple {
    /// 3×3 matrix over the members ordered `(Z_0, Z_1/2, Z_1)`.
    pub fn to_matrix(&self) -> CorrelationMatrix {
        let (a, b, c) = (self.rho_0_half, self.rho_0_1, self.rho_half_1);
        CorrelationMatrix(vec![vec![1.0, a, b], vec![a, 1.0, c], vec![b, c, 1.0]])
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rho_0_half, self.rho_0_1, self.rho_half_1]
    }
}

/// Evaluates the closed-form null correlations at genotype proportions
/// `(p0, p1, p2)`; in practice the pooled proportions `n_i / n`.
pub fn estimate_correlations(props: [f64; 3]) -> Result<CorrelationTriple> {
    let [p0, p1, p2] = props;
    let degenerate = || Error::DegenerateProportions(p0, p1, p2);
    if props.iter().any(|p| !p.is_finite() || *p < 0.0) || (p0 + p1 + p2 - 1.0).abs() > 1e-9 {
        return Err(degenerate());
    }
    if !(p0 > 0.0 && p0 < 1.0 && p2 > 0.0 && p2 < 1.0) {
        return Err(degenerate());
    }
    let middle = (p1 + 2.0 * p2) * p0 + (p1 + 2.0 * p0) * p2;
    if !(middle > 0.0) {
        return Err(degenerate());
    }
    let sd0 = (p0 * (1.0 - p0)).sqrt();
    let sd2 = (p2 * (1.0 - p2)).sqrt();
    let sdm = middle.sqrt();
    Ok(CorrelationTriple {
        rho_0_half: p0 * (p1 + 2.0 * p2) / (sd0 * sdm),
        rho_0_1: p0 * p2 / (sd0 * sd2),
        rho_half_1: p2 * (p1 + 2.0 * p0) / (sd2 * sdm),
    })
}

/// Null correlation of `Z_x` and `Z_y` under genotype proportions `props`
/// (`NN, NM, MM`): the correlation of the two score variables.
pub fn trend_null_correlation(props: [f64; 3], x: TrendScore, y: TrendScore) -> Result<f64> {
    let sx = x.scores();
    let sy = y.scores();
    let moment = |f: &dyn Fn(usize) -> f64| (0..3).map(|i| props[i] * f(i)).sum::<f64>();
    let mx = moment(&|i| sx[i]);
    let my = moment(&|i| sy[i]);
    let cov = moment(&|i| (sx[i] - mx) * (sy[i] - my));
    let vx = moment(&|i| (sx[i] - mx).powi(2));
    let vy = moment(&|i| (sy[i] - my).powi(2));
    if !(vx > 0.0 && vy > 0.0) {
        return Err(Error::DegenerateProportions(props[0], props[1], props[2]));
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Symmetric correlation matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix(Vec<Vec<f64>>);

impl CorrelationMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidMatrix(format!("row {i} has {} entries, expected {k}", row.len())));
            }
            if (row[i] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidMatrix(format!("diagonal entry {i} is {}", row[i])));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v.abs() > 1.0 + 1e-12 {
                    return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) = {v}")));
                }
                if (v - rows[j][i]).abs() > 1e-12 {
                    return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) is not symmetric")));
                }
            }
        }
        Ok(Self(rows))
    }

    /// Matrix with every off-diagonal entry equal to `rho`.
    pub fn equicorrelated(k: usize, rho: f64) -> Result<Self> {
        Self::new(
            (0..k)
                .map(|i| (0..k).map(|j| if i == j { 1.0 } else { rho }).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    /// Off-diagonal pair with the smallest correlation (first in row-major
    /// order on ties), or `None` for a 1×1 matrix.
    pub fn extreme_pair(&self) -> Option<(usize, usize)> {
        let k = self.dim();
        let mut best: Option<(usize, usize)> = None;
        for i in 0..k {
            for j in i + 1..k {
                if best.is_none_or(|(s, t)| self.0[i][j] < self.0[s][t]) {
                    best = Some((i, j));
                }
            }
        }
        best
    }

    /// Same matrix with members reordered so that new member `i` is old
    /// member `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self(
            perm.iter()
                .map(|&i| perm.iter().map(|&j| self.0[i][j]).collect())
                .collect(),
        )
    }
}

/// Extreme-pair MERT `(z_s + z_t) / √(2(1 + ρ_st))`.
pub fn mert_pair(zs: f64, zt: f64, rho_st: f64) -> Result<f64> {
    if !(rho_st > -1.0 && rho_st <= 1.0) {
        return Err(Error::CorrelationOutOfRange(rho_st));
    }
    Ok((zs + zt) / (2.0 * (1.0 + rho_st)).sqrt())
}

/// Checks that `(s, t)` attains the minimum correlation and that
/// `ρ_si + ρ_it ≥ 1 + ρ_st` holds for every member `i`, which makes the
/// pair MERT the MERT of the whole family.
pub fn check_extreme_pair_condition(rho: &CorrelationMatrix, s: usize, t: usize) -> Result<bool> {
    let k = rho.dim();
    if s >= k || t >= k || s == t {
        return Err(Error::InvalidArgument(format!("({s}, {t}) is not a pair of distinct members")));
    }
    let rho_st = rho.get(s, t);
    for i in 0..k {
        for j in i + 1..k {
            if rho.get(i, j) < rho_st - 1e-12 {
                return Err(Error::NotExtremePair { s, t });
            }
        }
    }
    Ok((0..k)
        .filter(|&i| i != s && i != t)
        .all(|i| rho.get(s, i) + rho.get(i, t) >= 1.0 + rho_st - 1e-12))
}

/// Asymptotic relative efficiency of the pair MERT against either extreme
/// optimal test: `(1 + ρ_st) / 2`.
pub fn mert_are(rho_st: f64) -> f64 {
    (1.0 + rho_st) / 2.0
}

/// Member whose minimum ARE `min_i ρ_ij²` over the family is largest, with
/// that minimum. Ties go to the lowest index.
pub fn maximin_member(rho: &CorrelationMatrix) -> (usize, f64) {
    let k = rho.dim();
    let mut best = (0, f64::NEG_INFINITY);
    for j in 0..k {
        let worst = (0..k).map(|i| rho.get(i, j).powi(2)).fold(f64::INFINITY, f64::min);
        if worst > best.1 {
            best = (j, worst);
        }
    }
    best
}

/// Advice on choosing between MERT and a maximum test from the extreme-pair
/// correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recommendation {
    /// `ρ_st ≥ 0.75`: MERT has power similar to the maximum tests.
    Mert,
    /// `ρ_st < 0.50`: the maximum tests are noticeably more powerful.
    Max,
    /// In between: prefer a maximum test, MERT is not far behind.
    MaxWithNote,
}

impl Recommendation {
    pub fn note(&self) -> &'static str {
        match self {
            Self::Mert => "MERT: extreme-pair correlation >= 0.75, MERT and MAX have similar power",
            Self::Max => "MAX: extreme-pair correlation < 0.50, MAX is noticeably more powerful",
            Self::MaxWithNote => "MAX (MERT acceptable): extreme-pair correlation between 0.50 and 0.75",
        }
    }
}

pub fn recommend_robust_test(rho_st: f64) -> Recommendation {
    if rho_st >= 0.75 {
        Recommendation::Mert
    } else if rho_st < 0.5 {
        Recommendation::Max
    } else {
        Recommendation::MaxWithNote
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RobustKind {
    Mert,
    MertRecAdd,
    Max2,
    Max2RecAdd,
    Max3,
    MaxGrid,
}

/// A robust statistic with its constituents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustStatistic {
    pub value: f64,
    /// Signed constituent statistics in family order.
    pub components: Vec<f64>,
    /// Estimated extreme-pair correlation, for MERT kinds.
    pub rho: Option<f64>,
    pub kind: RobustKind,
    pub sidedness: Sidedness,
}

fn z(t: &GenotypeTable, score: TrendScore) -> Result<f64> {
    Ok(trend_statistic(t, score)?.value)
}

/// `(Z_0 + Z_1) / √(2(1 + ρ̂_01))` with `ρ̂_01` from the pooled proportions.
/// The value is signed; `sidedness` is recorded for callers.
pub fn mert_statistic(t: &GenotypeTable) -> Result<RobustStatistic> {
    let z0 = z(t, TrendScore::RECESSIVE)?;
    let z1 = z(t, TrendScore::DOMINANT)?;
    let rho = estimate_correlations(t.pooled_proportions())?.rho_0_1;
    Ok(RobustStatistic {
        value: mert_pair(z0, z1, rho)?,
        components: vec![z0, z1],
        rho: Some(rho),
        kind: RobustKind::Mert,
        sidedness: Sidedness::Two,
    })
}

/// Pair MERT for the recessive/additive subfamily, `(Z_0 + Z_1/2)` scaled by
/// their estimated null correlation at the pooled proportions.
pub fn mert_rec_add(t: &GenotypeTable) -> Result<RobustStatistic> {
    let z0 = z(t, TrendScore::RECESSIVE)?;
    let zh = z(t, TrendScore::ADDITIVE)?;
    let rho = trend_null_correlation(t.pooled_proportions(), TrendScore::RECESSIVE, TrendScore::ADDITIVE)?;
    Ok(RobustStatistic {
        value: mert_pair(z0, zh, rho)?,
        components: vec![z0, zh],
        rho: Some(rho),
        kind: RobustKind::MertRecAdd,
        sidedness: Sidedness::Two,
    })
}

fn max_of(kind: RobustKind, components: Vec<f64>, sidedness: Sidedness) -> RobustStatistic {
    let value = components
        .iter()
        .map(|&c| sidedness.decision(c))
        .fold(f64::NEG_INFINITY, f64::max);
    RobustStatistic {
        value,
        components,
        rho: None,
        kind,
        sidedness,
    }
}

/// `max(Z_0, Z_1)`, or of absolute values when two-sided.
pub fn max2(t: &GenotypeTable, sidedness: Sidedness) -> Result<RobustStatistic> {
    let comps = vec![z(t, TrendScore::RECESSIVE)?, z(t, TrendScore::DOMINANT)?];
    Ok(max_of(RobustKind::Max2, comps, sidedness))
}

/// `max(Z_0, Z_1/2)` for the recessive/additive subfamily.
pub fn max2_rec_add(t: &GenotypeTable, sidedness: Sidedness) -> Result<RobustStatistic> {
    let comps = vec![z(t, TrendScore::RECESSIVE)?, z(t, TrendScore::ADDITIVE)?];
    Ok(max_of(RobustKind::Max2RecAdd, comps, sidedness))
}

/// Choice of the middle member of MAX3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Max3Middle {
    /// `Z_1/2`, optimal for the additive model.
    #[default]
    Additive,
    /// The extreme-pair MERT `Z_01`.
    Mert,
}

/// `max(Z_0, Z_1/2, Z_1)`.
pub fn max3(t: &GenotypeTable, sidedness: Sidedness) -> Result<RobustStatistic> {
    max3_with(t, sidedness, Max3Middle::Additive)
}

pub fn max3_with(t: &GenotypeTable, sidedness: Sidedness, middle: Max3Middle) -> Result<RobustStatistic> {
    let z0 = z(t, TrendScore::RECESSIVE)?;
    let z1 = z(t, TrendScore::DOMINANT)?;
    let zm = match middle {
        Max3Middle::Additive => z(t, TrendScore::ADDITIVE)?,
        Max3Middle::Mert => {
            let rho = estimate_correlations(t.pooled_proportions())?.rho_0_1;
            mert_pair(z0, z1, rho)?
        }
    };
    Ok(max_of(RobustKind::Max3, vec![z0, zm, z1], sidedness))
}

/// Default grid `0, 0.1, …, 1` for [`max_grid`].
pub fn default_grid() -> Vec<TrendScore> {
    (0..=10).map(|i| TrendScore::new(f64::from(i) / 10.0).unwrap()).collect()
}

/// Maximum of `Z_x` over a finite grid of scores, approximating the maximum
/// over the whole family.
pub fn max_grid(t: &GenotypeTable, grid: &[TrendScore], sidedness: Sidedness) -> Result<RobustStatistic> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("score grid is empty".into()));
    }
    let comps = grid.iter().map(|&x| z(t, x)).collect::<Result<Vec<_>>>()?;
    Ok(max_of(RobustKind::MaxGrid, comps, sidedness))
}
