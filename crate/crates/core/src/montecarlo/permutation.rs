//! Permutation p-values conditional on the genotype column totals.
//!
//! Shuffling case/control labels while keeping every subject's genotype
//! fixes `n0, n1, n2`, `r` and `s`; the case row is then multivariate
//! hypergeometric. The Monte Carlo version samples that law directly; the
//! exact version sums its probabilities over all case rows.

use rand::Rng;
use rand_distr::{Distribution, Hypergeometric};
use serde::{Deserialize, Serialize};

use crate::robust::{default_grid, Sidedness};
use crate::tables::GenotypeTable;
use crate::trend::TrendScore;
use crate::{Error, Result};

use super::replicate_map;
use super::statistic::{Evaluator, Statistic};

/// Statistic and decision settings for a permutation test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub statistic: Statistic,
    pub sidedness: Sidedness,
    /// Continuity correction added to each (observed or permuted) table
    /// before evaluation.
    pub correction: Option<f64>,
    pub grid: Vec<TrendScore>,
}

impl PermutationTest {
    pub fn new(statistic: Statistic, sidedness: Sidedness) -> Self {
        Self {
            statistic,
            sidedness,
            correction: None,
            grid: default_grid(),
        }
    }

    pub fn with_correction(mut self, delta: f64) -> Self {
        self.correction = Some(delta);
        self
    }

    /// Decision value on a table of raw counts.
    pub fn decision(&self, t: &GenotypeTable) -> Result<f64> {
        let table = match self.correction {
            Some(delta) => t.with_continuity_correction(delta)?,
            None => *t,
        };
        Evaluator::new(&table, self.sidedness, &self.grid).decision(self.statistic)
    }
}

/// Relative tolerance under which a permuted value counts as a tie.
const TIE_TOLERANCE: f64 = 1e-9;

/// True when `value` is at least as extreme as `observed`.
pub fn at_least_as_extreme(value: f64, observed: f64) -> bool {
    value >= observed - TIE_TOLERANCE * observed.abs().max(1.0)
}

struct Margins {
    columns: [u64; 3],
    cases: u64,
    total: u64,
}

fn margins(t: &GenotypeTable) -> Result<Margins> {
    if !t.is_integral() {
        return Err(Error::InvalidArgument("permutation tests need integer counts".into()));
    }
    let columns = t.column_totals().map(|c| c as u64);
    if columns.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateTable("all subjects share one genotype".into()));
    }
    Ok(Margins {
        columns,
        cases: t.case_total() as u64,
        total: t.total() as u64,
    })
}

fn observed(t: &GenotypeTable, test: &PermutationTest) -> Result<f64> {
    test.decision(t)
        .map_err(|e| Error::DegenerateTable(format!("observed {} cannot be evaluated: {e}", test.statistic)))
}

fn table_from_case_row(m: &Margins, case_row: [u64; 3]) -> GenotypeTable {
    let cases = case_row.map(|c| c as f64);
    let controls = [0, 1, 2].map(|i| (m.columns[i] - case_row[i]) as f64);
    GenotypeTable::new(cases, controls).expect("permuted rows keep the original margins")
}

fn hypergeometric<R: Rng + ?Sized>(population: u64, successes: u64, draws: u64, rng: &mut R) -> u64 {
    if draws == 0 || successes == 0 {
        0
    } else if successes == population {
        draws
    } else {
        Hypergeometric::new(population, successes, draws)
            .expect("parameters are consistent")
            .sample(rng)
    }
}

/// Monte Carlo permutation p-value `(1 + #{T* ≥ T}) / (1 + B)`.
pub fn permutation_pvalue(t: &GenotypeTable, test: &PermutationTest, replicates: usize, seed: u64) -> Result<f64> {
    let m = margins(t)?;
    let obs = observed(t, test)?;
    let hits = replicate_map(replicates, seed, |rng| {
        let a0 = hypergeometric(m.total, m.columns[0], m.cases, rng);
        let a1 = hypergeometric(m.total - m.columns[0], m.columns[1], m.cases - a0, rng);
        let permuted = table_from_case_row(&m, [a0, a1, m.cases - a0 - a1]);
        test.decision(&permuted).is_ok_and(|v| at_least_as_extreme(v, obs))
    });
    let count = hits.into_iter().filter(|&h| h).count();
    Ok((1 + count) as f64 / (1 + replicates) as f64)
}

/// Exact permutation p-value as a ratio of label assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactPValue {
    pub numerator: u128,
    pub denominator: u128,
}

impl ExactPValue {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * u128::from(n - i) / u128::from(i + 1);
    }
    c
}

/// Largest grand total accepted by [`exact_permutation_pvalue`].
pub const MAX_EXACT_TOTAL: u64 = 120;

/// Exact permutation p-value: the fraction of the `C(n, r)` case-label
/// assignments whose statistic is at least as extreme as the observed one.
pub fn exact_permutation_pvalue(t: &GenotypeTable, test: &PermutationTest) -> Result<ExactPValue> {
    let m = margins(t)?;
    if m.total > MAX_EXACT_TOTAL {
        return Err(Error::InvalidArgument(format!(
            "exact enumeration supports n <= {MAX_EXACT_TOTAL}, got {}",
            m.total
        )));
    }
    let obs = observed(t, test)?;
    let [n0, n1, n2] = m.columns;
    let r = m.cases;
    let mut numerator = 0u128;
    for a0 in r.saturating_sub(n1 + n2)..=n0.min(r) {
        for a1 in (r - a0).saturating_sub(n2)..=n1.min(r - a0) {
            let a2 = r - a0 - a1;
            let permuted = table_from_case_row(&m, [a0, a1, a2]);
            if test.decision(&permuted).is_ok_and(|v| at_least_as_extreme(v, obs)) {
                numerator += binomial(n0, a0) * binomial(n1, a1) * binomial(n2, a2);
            }
        }
    }
    Ok(ExactPValue {
        numerator,
        denominator: binomial(m.total, r),
    })
}
