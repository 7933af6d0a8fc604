use serde::{Deserialize, Serialize};

use crate::robust::{estimate_correlations, CorrelationTriple};
use crate::{Error, Result};

use super::replicate_map;
use super::sampler::ScenarioSampler;
use super::scenario::Scenario;

/// Replicate average of the closed-form correlations at `n_i / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCorrelations {
    pub mean: CorrelationTriple,
    /// Standard errors of the three means, in field order.
    pub se: [f64; 3],
    pub replicates: usize,
    /// Replicates whose proportions did not admit the formulas.
    pub errors: usize,
    pub seed: u64,
}

impl MeanCorrelations {
    pub fn error_rate(&self) -> f64 {
        self.errors as f64 / self.replicates as f64
    }
}

/// Simulates tables from `scenario` (with its continuity correction) and
/// averages `estimate_correlations(n_i / n)` over replicates where it is
/// defined.
pub fn mean_correlation_matrix(scenario: &Scenario, replicates: usize, seed: u64) -> Result<MeanCorrelations> {
    if replicates == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    let sampler = ScenarioSampler::new(scenario)?;
    let draws = replicate_map(replicates, seed, |rng| {
        estimate_correlations(sampler.draw(rng).pooled_proportions()).ok()
    });
    let valid: Vec<[f64; 3]> = draws.iter().flatten().map(|c| c.as_array()).collect();
    let errors = replicates - valid.len();
    if valid.is_empty() {
        return Err(Error::DegenerateProportions(f64::NAN, f64::NAN, f64::NAN));
    }
    let k = valid.len() as f64;
    let mut mean = [0.0; 3];
    for v in &valid {
        for i in 0..3 {
            mean[i] += v[i] / k;
        }
    }
    let mut se = [0.0; 3];
    if valid.len() > 1 {
        for i in 0..3 {
            let var = valid.iter().map(|v| (v[i] - mean[i]).powi(2)).sum::<f64>() / (k - 1.0);
            se[i] = (var / k).sqrt();
        }
    }
    Ok(MeanCorrelations {
        mean: CorrelationTriple {
            rho_0_half: mean[0],
            rho_0_1: mean[1],
            rho_half_1: mean[2],
        },
        se,
        replicates,
        errors,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::PopulationSpec;

    #[test]
    fn null_means_are_near_closed_form() {
        let s = Scenario::hwe("null", 0.5, None, 250, 250).unwrap();
        let m = mean_correlation_matrix(&s, 2000, 1).unwrap();
        assert_eq!(m.errors, 0);
        assert!((m.mean.rho_0_1 - 1.0 / 3.0).abs() < 0.01, "{m:?}");
        assert!((m.mean.rho_0_half - (2.0f64 / 3.0).sqrt()).abs() < 0.01, "{m:?}");
    }

    #[test]
    fn degenerate_proportions_are_counted() {
        // p tiny and no correction: MM is almost never observed
        let s = Scenario::new("rare", PopulationSpec::Hwe { p: 1e-4 }, None, 20, 20, false).unwrap();
        match mean_correlation_matrix(&s, 500, 2) {
            Ok(m) => assert!(m.error_rate() > 0.9, "{m:?}"),
            Err(e) => assert!(matches!(e, Error::DegenerateProportions(..))),
        }
    }
}
