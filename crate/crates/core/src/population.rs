//! Penetrance models, genotype frequencies and the case/control genotype
//! probabilities they induce.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// Mode of inheritance constraining the heterozygote penetrance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneticModel {
    /// `f0 = f1`
    Recessive,
    /// `f1 = (f0 + f2) / 2`
    Additive,
    /// `f1 = f2`
    Dominant,
    /// Any ordered triple.
    Custom,
}

impl GeneticModel {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Recessive => "recessive",
            Self::Additive => "additive",
            Self::Dominant => "dominant",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for GeneticModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneticModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rec" | "recessive" => Ok(Self::Recessive),
            "add" | "additive" => Ok(Self::Additive),
            "dom" | "dominant" => Ok(Self::Dominant),
            "custom" | "other" => Ok(Self::Custom),
            _ => Err(Error::InvalidArgument(format!("unknown genetic model `{s}`"))),
        }
    }
}

/// Disease probabilities `(f0, f1, f2)` for genotypes `NN, NM, MM`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenetranceModel {
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub kind: GeneticModel,
}

impl PenetranceModel {
    /// Builds and validates an explicit penetrance triple.
    pub fn new(kind: GeneticModel, f0: f64, f1: f64, f2: f64) -> Result<Self> {
        let in_unit = |f: f64| f > 0.0 && f < 1.0;
        if !(in_unit(f0) && in_unit(f1) && in_unit(f2)) || f0 > f1 || f1 > f2 {
            return Err(Error::OrderViolation(f0, f1, f2));
        }
        let tol = 1e-12;
        let consistent = match kind {
            GeneticModel::Recessive => (f1 - f0).abs() <= tol,
            GeneticModel::Additive => (f1 - 0.5 * (f0 + f2)).abs() <= tol,
            GeneticModel::Dominant => (f2 - f1).abs() <= tol,
            GeneticModel::Custom => true,
        };
        if !consistent {
            return Err(Error::ModelMismatch {
                kind: kind.name(),
                f0,
                f1,
                f2,
            });
        }
        Ok(Self { f0, f1, f2, kind })
    }

    /// Constant penetrance `f0 = f1 = f2 = f`.
    pub fn null(f: f64) -> Result<Self> {
        Self::new(GeneticModel::Custom, f, f, f)
    }

    /// True when all three penetrances coincide.
    pub fn is_null(&self) -> bool {
        self.f0 == self.f1 && self.f1 == self.f2
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.f0, self.f1, self.f2]
    }
}

/// Derives `f1` from `f0`, `f2` and the mode of inheritance.
pub fn penetrances_for_model(kind: GeneticModel, f0: f64, f2: f64) -> Result<PenetranceModel> {
    if f2 < f0 {
        return Err(Error::OrderViolation(f0, f0, f2));
    }
    let f1 = match kind {
        GeneticModel::Recessive => f0,
        GeneticModel::Additive => 0.5 * (f0 + f2),
        GeneticModel::Dominant => f2,
        GeneticModel::Custom => {
            return Err(Error::InvalidArgument(
                "a custom model needs an explicit f1".into(),
            ))
        }
    };
    PenetranceModel::new(kind, f0, f1, f2)
}

/// Population genotype frequencies `(g0, g1, g2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenotypeFreqs(pub [f64; 3]);

impl GenotypeFreqs {
    pub fn new(g: [f64; 3]) -> Result<Self> {
        if g.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (g.iter().sum::<f64>() - 1.0).abs() > SUM_TOLERANCE
        {
            return Err(Error::InvalidArgument(format!(
                "genotype frequencies {g:?} are not a probability vector"
            )));
        }
        Ok(Self(g))
    }
}

/// Genotype frequencies `(q², 2pq, p²)` under Hardy-Weinberg equilibrium,
/// where `p` is the frequency of allele `M`.
pub fn hwe_genotype_freqs(p: f64) -> Result<GenotypeFreqs> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::FrequencyOutOfRange(p));
    }
    let q = 1.0 - p;
    Ok(GenotypeFreqs([q * q, 2.0 * p * q, p * p]))
}

/// Disease prevalence `D = Σ f_i g_i`.
pub fn prevalence(f: &PenetranceModel, g: &GenotypeFreqs) -> f64 {
    f.as_array().iter().zip(g.0).map(|(fi, gi)| fi * gi).sum()
}

/// Genotype distributions among cases and controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseControlProbs {
    pub cases: [f64; 3],
    pub controls: [f64; 3],
    pub prevalence: f64,
}

impl CaseControlProbs {
    /// Both rows equal the population frequencies.
    pub fn null(g: &GenotypeFreqs) -> Self {
        Self {
            cases: g.0,
            controls: g.0,
            prevalence: f64::NAN,
        }
    }
}

/// Bayes' rule: `p_i = f_i g_i / D`, `q_i = (1 - f_i) g_i / (1 - D)`.
pub fn case_control_probs(f: &PenetranceModel, g: &GenotypeFreqs) -> Result<CaseControlProbs> {
    let d = prevalence(f, g);
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::DegeneratePrevalence(d));
    }
    let fa = f.as_array();
    Ok(CaseControlProbs {
        cases: [0, 1, 2].map(|i| fa[i] * g.0[i] / d),
        controls: [0, 1, 2].map(|i| (1.0 - fa[i]) * g.0[i] / (1.0 - d)),
        prevalence: d,
    })
}

/// Source population of the sampled individuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PopulationSpec {
    /// A single population in Hardy-Weinberg equilibrium.
    Hwe { p: f64 },
    /// Two HWE strata with fixed per-stratum case and control counts.
    Mixture {
        p_a: f64,
        p_b: f64,
        cases: [u32; 2],
        controls: [u32; 2],
    },
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Hwe { p } => hwe_genotype_freqs(p).map(|_| ()),
            Self::Mixture {
                p_a,
                p_b,
                cases,
                controls,
            } => {
                hwe_genotype_freqs(p_a)?;
                hwe_genotype_freqs(p_b)?;
                if cases.contains(&0) || controls.contains(&0) {
                    return Err(Error::InvalidScenario(
                        "mixture strata need positive case and control counts".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Allele frequency of `M` in the pooled sample, weighting strata by
    /// their total sample size.
    pub fn pooled_allele_frequency(&self) -> f64 {
        match *self {
            Self::Hwe { p } => p,
            Self::Mixture {
                p_a,
                p_b,
                cases,
                controls,
            } => {
                let wa = f64::from(cases[0] + controls[0]);
                let wb = f64::from(cases[1] + controls[1]);
                (wa * p_a + wb * p_b) / (wa + wb)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn hwe_frequencies() {
        let cases = [(0.5, [0.25, 0.5, 0.25]), (0.1, [0.81, 0.18, 0.01]), (0.3, [0.49, 0.42, 0.09])];
        for (p, expected) in cases {
            let g = hwe_genotype_freqs(p).unwrap();
            for (a, b) in g.0.iter().zip(expected) {
                assert!(close(*a, b, 1e-12), "p={p}: {:?}", g.0);
            }
        }
        assert_eq!(hwe_genotype_freqs(1.2), Err(Error::FrequencyOutOfRange(1.2)));
        assert!(hwe_genotype_freqs(0.0).is_err());
    }

    #[test]
    fn prevalence_examples() {
        let g = hwe_genotype_freqs(0.3).unwrap();
        assert!(close(prevalence(&PenetranceModel::null(0.01).unwrap(), &g), 0.01, 1e-15));

        let f = PenetranceModel::new(GeneticModel::Recessive, 0.01, 0.01, 0.04).unwrap();
        let g = hwe_genotype_freqs(0.5).unwrap();
        assert!(close(prevalence(&f, &g), 0.0175, 1e-15));

        let f = PenetranceModel::new(GeneticModel::Dominant, 0.01, 0.019, 0.019).unwrap();
        let g = hwe_genotype_freqs(0.1).unwrap();
        assert!(close(prevalence(&f, &g), 0.01171, 1e-15));
    }

    #[test]
    fn case_control_examples() {
        let g = hwe_genotype_freqs(0.3).unwrap();
        let probs = case_control_probs(&PenetranceModel::null(0.01).unwrap(), &g).unwrap();
        for i in 0..3 {
            assert!(close(probs.cases[i], g.0[i], 1e-12));
            assert!(close(probs.controls[i], g.0[i], 1e-12));
        }

        let f = PenetranceModel::new(GeneticModel::Recessive, 0.01, 0.01, 0.04).unwrap();
        let probs = case_control_probs(&f, &hwe_genotype_freqs(0.5).unwrap()).unwrap();
        for (a, b) in probs.cases.iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert!(close(*a, b, 1e-12));
        }
        assert!(close(probs.controls.iter().sum::<f64>(), 1.0, 1e-12));
    }

    #[test]
    fn model_penetrances() {
        let rec = penetrances_for_model(GeneticModel::Recessive, 0.01, 0.04).unwrap();
        assert_eq!(rec.as_array(), [0.01, 0.01, 0.04]);
        let add = penetrances_for_model(GeneticModel::Additive, 0.01, 0.04).unwrap();
        assert!(close(add.f1, 0.025, 1e-15));
        let dom = penetrances_for_model(GeneticModel::Dominant, 0.01, 0.019).unwrap();
        assert_eq!(dom.as_array(), [0.01, 0.019, 0.019]);
        assert!(matches!(
            penetrances_for_model(GeneticModel::Additive, 0.04, 0.01),
            Err(Error::OrderViolation(..))
        ));
        assert!(matches!(
            PenetranceModel::new(GeneticModel::Dominant, 0.01, 0.015, 0.019),
            Err(Error::ModelMismatch { .. })
        ));
    }

    #[test]
    fn pooled_frequency_of_mixture() {
        let spec = PopulationSpec::Mixture {
            p_a: 0.1,
            p_b: 0.4,
            cases: [250, 100],
            controls: [250, 100],
        };
        spec.validate().unwrap();
        assert!(close(spec.pooled_allele_frequency(), (25.0 + 40.0) / 350.0, 1e-12));
    }

    fn penetrances() -> impl Strategy<Value = PenetranceModel> {
        (0.001f64..0.5, 0.0f64..1.0, 0.0f64..0.45).prop_map(|(f0, mix, extra)| {
            let f2 = f0 + extra;
            let f1 = f0 + mix * (f2 - f0);
            PenetranceModel::new(GeneticModel::Custom, f0, f1, f2).unwrap()
        })
    }

    proptest! {
        #[test]
        fn bayes_identities(f in penetrances(), p in 0.01f64..0.99) {
            let g = hwe_genotype_freqs(p).unwrap();
            prop_assert!((g.0[1] * g.0[1] - 4.0 * g.0[0] * g.0[2]).abs() < 1e-12);
            let probs = case_control_probs(&f, &g).unwrap();
            let d = probs.prevalence;
            prop_assert!((probs.cases.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((probs.controls.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..3 {
                prop_assert!((d * probs.cases[i] + (1.0 - d) * probs.controls[i] - g.0[i]).abs() < 1e-12);
            }
            // cases stochastically dominate controls in NN < NM < MM
            prop_assert!(probs.cases[0] <= probs.controls[0] + 1e-12);
            prop_assert!(probs.cases[2] >= probs.controls[2] - 1e-12);
        }
    }
}
