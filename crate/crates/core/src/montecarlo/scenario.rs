use serde::{Deserialize, Serialize};

use crate::population::{
    case_control_probs, hwe_genotype_freqs, CaseControlProbs, PenetranceModel, PopulationSpec,
};
use crate::{Error, Result};

/// One simulation setting: where genotypes come from, how disease depends
/// on them, and how many cases and controls are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub population: PopulationSpec,
    /// `None` is the null hypothesis: case and control genotypes share the
    /// population distribution.
    pub penetrance: Option<PenetranceModel>,
    pub cases: u32,
    pub controls: u32,
    /// Add one half to every simulated cell before evaluating statistics.
    pub correction: bool,
}

/// Everything the null distribution of a statistic depends on. Critical
/// values are only reusable between scenarios with equal keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullKey {
    pub population: PopulationSpec,
    pub cases: u32,
    pub controls: u32,
    pub correction: bool,
}

/// Case/control probabilities and sizes for one sampling stratum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stratum {
    pub probs: CaseControlProbs,
    pub cases: u32,
    pub controls: u32,
}

impl Scenario {
    pub fn new(
        id: impl Into<String>,
        population: PopulationSpec,
        penetrance: Option<PenetranceModel>,
        cases: u32,
        controls: u32,
        correction: bool,
    ) -> Result<Self> {
        let scenario = Self {
            id: id.into(),
            population,
            penetrance,
            cases,
            controls,
            correction,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Single HWE population with allele frequency `p`.
    pub fn hwe(
        id: impl Into<String>,
        p: f64,
        penetrance: Option<PenetranceModel>,
        cases: u32,
        controls: u32,
    ) -> Result<Self> {
        Self::new(id, PopulationSpec::Hwe { p }, penetrance, cases, controls, true)
    }

    pub fn validate(&self) -> Result<()> {
        self.population.validate()?;
        if self.cases == 0 || self.controls == 0 {
            return Err(Error::InvalidScenario(format!(
                "{}: case and control counts must be positive",
                self.id
            )));
        }
        if let PopulationSpec::Mixture { cases, controls, .. } = self.population {
            if cases[0] + cases[1] != self.cases || controls[0] + controls[1] != self.controls {
                return Err(Error::InvalidScenario(format!(
                    "{}: mixture strata ({cases:?}, {controls:?}) do not sum to r = {}, s = {}",
                    self.id, self.cases, self.controls
                )));
            }
        }
        self.strata().map(|_| ())
    }

    pub fn is_null(&self) -> bool {
        self.penetrance.is_none_or(|f| f.is_null())
    }

    /// The same setting under the null hypothesis.
    pub fn null_counterpart(&self) -> Self {
        Self {
            id: format!("{}/null", self.id),
            penetrance: None,
            ..self.clone()
        }
    }

    pub fn null_key(&self) -> NullKey {
        NullKey {
            population: self.population,
            cases: self.cases,
            controls: self.controls,
            correction: self.correction,
        }
    }

    /// Expected pooled genotype proportions `n_i/n` under the null.
    pub fn expected_null_proportions(&self) -> Result<[f64; 3]> {
        let strata = self.null_counterpart().strata()?;
        let n: f64 = strata.iter().map(|s| f64::from(s.cases + s.controls)).sum();
        let mut props = [0.0; 3];
        for s in &strata {
            let w = f64::from(s.cases + s.controls) / n;
            for (p, g) in props.iter_mut().zip(s.probs.cases) {
                *p += w * g;
            }
        }
        Ok(props)
    }

    /// Sampling strata. Each stratum uses its own prevalence computed from
    /// the shared penetrances.
    pub fn strata(&self) -> Result<Vec<Stratum>> {
        let probs = |p: f64| -> Result<CaseControlProbs> {
            let g = hwe_genotype_freqs(p)?;
            match &self.penetrance {
                Some(f) => case_control_probs(f, &g),
                None => Ok(CaseControlProbs::null(&g)),
            }
        };
        Ok(match self.population {
            PopulationSpec::Hwe { p } => vec![Stratum {
                probs: probs(p)?,
                cases: self.cases,
                controls: self.controls,
            }],
            PopulationSpec::Mixture {
                p_a,
                p_b,
                cases,
                controls,
            } => vec![
                Stratum {
                    probs: probs(p_a)?,
                    cases: cases[0],
                    controls: controls[0],
                },
                Stratum {
                    probs: probs(p_b)?,
                    cases: cases[1],
                    controls: controls[1],
                },
            ],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{penetrances_for_model, GeneticModel};

    #[test]
    fn mixture_sizes_must_add_up() {
        let population = PopulationSpec::Mixture {
            p_a: 0.1,
            p_b: 0.4,
            cases: [250, 100],
            controls: [250, 100],
        };
        assert!(Scenario::new("ok", population, None, 350, 350, true).is_ok());
        assert!(matches!(
            Scenario::new("bad", population, None, 300, 350, true),
            Err(Error::InvalidScenario(_))
        ));
    }

    #[test]
    fn rejects_bad_frequency_and_sizes() {
        assert!(Scenario::hwe("x", 1.2, None, 10, 10).is_err());
        assert!(Scenario::hwe("x", 0.2, None, 0, 10).is_err());
    }

    #[test]
    fn null_counterpart_shares_key() {
        let f = penetrances_for_model(GeneticModel::Additive, 0.01, 0.03).unwrap();
        let alt = Scenario::hwe("add", 0.3, Some(f), 250, 250).unwrap();
        let null = alt.null_counterpart();
        assert!(null.is_null());
        assert!(!alt.is_null());
        assert_eq!(alt.null_key(), null.null_key());
        let strata = null.strata().unwrap();
        assert_eq!(strata.len(), 1);
        assert_eq!(strata[0].probs.cases, strata[0].probs.controls);
        let props = alt.expected_null_proportions().unwrap();
        assert!((props[0] - 0.49).abs() < 1e-12 && (props[2] - 0.09).abs() < 1e-12);
    }

    #[test]
    fn strata_use_their_own_prevalence() {
        let f = penetrances_for_model(GeneticModel::Dominant, 0.01, 0.05).unwrap();
        let population = PopulationSpec::Mixture {
            p_a: 0.1,
            p_b: 0.5,
            cases: [30, 20],
            controls: [150, 100],
        };
        let s = Scenario::new("mix", population, Some(f), 50, 250, true).unwrap();
        let strata = s.strata().unwrap();
        assert!(strata[0].probs.prevalence < strata[1].probs.prevalence);
        assert_eq!((strata[1].cases, strata[1].controls), (20, 100));
    }
}
