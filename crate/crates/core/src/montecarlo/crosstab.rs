//! Matched p-value cross-classification of two statistics.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::critical::NullReference;
use super::sampler::ScenarioSampler;
use super::scenario::Scenario;
use super::statistic::{Statistic, StatisticBattery};
use super::{derive_seed, replicate_map};

/// Upper bin edges: `< .01`, `[.01, .05)`, `[.05, .10)`, `≥ .10`.
pub const DEFAULT_BINS: [f64; 3] = [0.01, 0.05, 0.10];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossTabSettings {
    pub null_replicates: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for CrossTabSettings {
    fn default() -> Self {
        Self {
            null_replicates: 200_000,
            replicates: 5000,
            seed: 1,
        }
    }
}

/// Counts of replicates by (p-value bin of `stat_a`, p-value bin of
/// `stat_b`). Rows index `stat_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueCrossTab {
    pub scenario: String,
    pub stat_a: Statistic,
    pub stat_b: Statistic,
    pub bins: Vec<f64>,
    pub counts: Vec<Vec<u64>>,
    pub null_replicates: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl PValueCrossTab {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Mass strictly above the diagonal (`stat_a` in a smaller bin than
    /// `stat_b`, i.e. `stat_a` more significant).
    pub fn upper_triangle(&self) -> u64 {
        let k = self.counts.len();
        (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).map(|(i, j)| self.counts[i][j]).sum()
    }

    pub fn lower_triangle(&self) -> u64 {
        let k = self.counts.len();
        (0..k).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| self.counts[i][j]).sum()
    }

    /// Fraction of replicates whose `stat_a` p-value falls below bin edge
    /// `edge`.
    pub fn row_mass_below(&self, edge: usize) -> f64 {
        self.counts[..=edge].iter().flatten().sum::<u64>() as f64 / self.total() as f64
    }

    pub fn column_mass_below(&self, edge: usize) -> f64 {
        self.counts.iter().map(|row| row[..=edge].iter().sum::<u64>()).sum::<u64>() as f64 / self.total() as f64
    }
}

/// Bin index of `p`: the number of edges at or below it.
pub(crate) fn bin_of(bins: &[f64], p: f64) -> usize {
    bins.partition_point(|&edge| edge <= p)
}

/// Simulates a shared null reference for both statistics, then `replicates`
/// tables from `scenario`; each replicate's two empirical p-values are
/// binned and cross-classified.
pub fn pvalue_crosstab(
    scenario: &Scenario,
    stat_a: Statistic,
    stat_b: Statistic,
    battery_template: &StatisticBattery,
    bins: &[f64],
    settings: &CrossTabSettings,
) -> Result<PValueCrossTab> {
    if bins.is_empty()
        || bins.iter().any(|&b| !(b > 0.0 && b < 1.0))
        || bins.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::InvalidArgument(format!(
            "bins must be strictly increasing inside (0, 1), got {bins:?}"
        )));
    }
    if settings.replicates == 0 {
        return Err(Error::InvalidArgument("cross-tab needs at least one replicate".into()));
    }
    let stats = if stat_a == stat_b { vec![stat_a] } else { vec![stat_a, stat_b] };
    let battery = StatisticBattery::with_grid(stats, battery_template.sidedness(), battery_template.grid().to_vec())?;
    let (ia, ib) = (0, battery.len() - 1);

    let reference = NullReference::simulate(
        scenario,
        &battery,
        settings.null_replicates,
        derive_seed(settings.seed, "crosstab/null"),
    )?;
    let sampler = ScenarioSampler::new(scenario)?;
    let pairs = replicate_map(settings.replicates, derive_seed(settings.seed, "crosstab/replicates"), |rng| {
        let d = battery.decision_values(&sampler.draw(rng));
        (reference.pvalue(ia, d[ia]), reference.pvalue(ib, d[ib]))
    });

    let k = bins.len() + 1;
    let mut counts = vec![vec![0u64; k]; k];
    for (pa, pb) in pairs {
        counts[bin_of(bins, pa)][bin_of(bins, pb)] += 1;
    }
    Ok(PValueCrossTab {
        scenario: scenario.id.clone(),
        stat_a,
        stat_b,
        bins: bins.to_vec(),
        counts,
        null_replicates: settings.null_replicates,
        replicates: settings.replicates,
        seed: settings.seed,
    })
}
