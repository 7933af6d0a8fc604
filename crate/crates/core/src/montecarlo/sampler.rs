//! Genotype table samplers.
//!
//! Rows are drawn individual by individual through the inverse CDF of the
//! genotype distribution. This costs one uniform per subject but couples
//! draws across parameter values under a fixed stream, which keeps
//! simulated power monotone enough to calibrate penetrances by bisection.

use rand::Rng;

use crate::population::{CaseControlProbs, PenetranceModel, PopulationSpec};
use crate::tables::{GenotypeTable, DEFAULT_CORRECTION};
use crate::Result;

use super::scenario::{Scenario, Stratum};

/// Multinomial draw of `size` genotypes with probabilities `probs`.
pub fn sample_row<R: Rng + ?Sized>(probs: [f64; 3], size: u32, rng: &mut R) -> [u32; 3] {
    let c0 = probs[0];
    let c1 = probs[0] + probs[1];
    let mut counts = [0u32; 3];
    for _ in 0..size {
        let u: f64 = rng.random();
        let g = if u < c0 {
            0
        } else if u < c1 {
            1
        } else {
            2
        };
        counts[g] += 1;
    }
    counts
}

/// Independent multinomial case (size `r`) and control (size `s`) rows.
/// `r` and `s` must be positive.
pub fn sample_table<R: Rng + ?Sized>(probs: &CaseControlProbs, r: u32, s: u32, rng: &mut R) -> GenotypeTable {
    let cases = sample_row(probs.cases, r, rng);
    let controls = sample_row(probs.controls, s, rng);
    GenotypeTable::from_integer_rows(cases, controls)
}

/// Samples each stratum independently and sums the tables cellwise.
pub fn sample_strata<R: Rng + ?Sized>(strata: &[Stratum], rng: &mut R) -> GenotypeTable {
    let mut cases = [0u32; 3];
    let mut controls = [0u32; 3];
    for stratum in strata {
        let c = sample_row(stratum.probs.cases, stratum.cases, rng);
        let k = sample_row(stratum.probs.controls, stratum.controls, rng);
        for i in 0..3 {
            cases[i] += c[i];
            controls[i] += k[i];
        }
    }
    GenotypeTable::from_integer_rows(cases, controls)
}

/// One table from a two-population mixture with fixed stratum sizes.
/// `penetrance = None` samples under the null.
pub fn sample_mixture<R: Rng + ?Sized>(
    spec: &PopulationSpec,
    penetrance: Option<&PenetranceModel>,
    rng: &mut R,
) -> Result<GenotypeTable> {
    let (cases, controls) = match spec {
        PopulationSpec::Mixture { cases, controls, .. } => (cases[0] + cases[1], controls[0] + controls[1]),
        PopulationSpec::Hwe { .. } => {
            return Err(crate::Error::InvalidArgument("expected a mixture population".into()))
        }
    };
    let scenario = Scenario::new("mixture", *spec, penetrance.copied(), cases, controls, false)?;
    Ok(sample_strata(&scenario.strata()?, rng))
}

/// Prepared sampler for a scenario.
#[derive(Debug, Clone)]
pub(crate) struct ScenarioSampler {
    strata: Vec<Stratum>,
    correction: bool,
}

impl ScenarioSampler {
    pub(crate) fn new(scenario: &Scenario) -> Result<Self> {
        Ok(Self {
            strata: scenario.strata()?,
            correction: scenario.correction,
        })
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> GenotypeTable {
        let t = sample_strata(&self.strata, rng);
        if self.correction {
            t.with_continuity_correction(DEFAULT_CORRECTION)
                .expect("correction is a valid constant")
        } else {
            t
        }
    }
}
