//! Cochran-Armitage trend statistics.
//!
//! `Z_x` uses genotype scores `(0, x, 1)`. The statistic is invariant to
//! increasing affine maps of the scores, so this one-parameter family covers
//! every ordered scoring of the three genotypes. `x = 0`, `1/2` and `1` are
//! the locally optimal choices under recessive, additive and dominant models.

use serde::{Deserialize, Serialize};

use crate::population::GeneticModel;
use crate::tables::GenotypeTable;
use crate::{Error, Result};

/// Score of the heterozygote; the homozygotes score 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TrendScore(f64);

impl TrendScore {
    pub const RECESSIVE: Self = Self(0.0);
    pub const ADDITIVE: Self = Self(0.5);
    pub const DOMINANT: Self = Self(1.0);

    pub fn new(x: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&x) {
            Ok(Self(x))
        } else {
            Err(Error::ScoreOutOfRange(x))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The full score vector `(0, x, 1)`.
    pub fn scores(self) -> [f64; 3] {
        [0.0, self.0, 1.0]
    }
}

/// A signed trend statistic together with the score that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendStatistic {
    pub value: f64,
    pub score: TrendScore,
}

/// Score that is optimal for a given mode of inheritance.
pub fn optimal_score(kind: GeneticModel) -> Result<TrendScore> {
    match kind {
        GeneticModel::Recessive => Ok(TrendScore::RECESSIVE),
        GeneticModel::Additive => Ok(TrendScore::ADDITIVE),
        GeneticModel::Dominant => Ok(TrendScore::DOMINANT),
        GeneticModel::Custom => Err(Error::InvalidArgument(
            "no optimal score is defined for a custom model".into(),
        )),
    }
}

/// `Z_x` for scores `(0, x, 1)`. Positive values mean the `M` allele is
/// enriched in cases.
pub fn trend_statistic(t: &GenotypeTable, score: TrendScore) -> Result<TrendStatistic> {
    Ok(TrendStatistic {
        value: trend_with_scores(t, score.scores())?,
        score,
    })
}

/// Trend statistic for an arbitrary score vector `(x0, x1, x2)`:
///
/// `Z = √n Σ x_i (s r_i − r s_i) / √(r s [n Σ x_i² n_i − (Σ x_i n_i)²])`
pub fn trend_with_scores(t: &GenotypeTable, x: [f64; 3]) -> Result<f64> {
    let cases = t.cases();
    let controls = t.controls();
    let cols = t.column_totals();
    let r = t.case_total();
    let s = t.control_total();
    let n = r + s;

    let mut numerator = 0.0;
    let mut first = 0.0;
    let mut second = 0.0;
    for i in 0..3 {
        numerator += x[i] * (s * cases[i] - r * controls[i]);
        first += x[i] * cols[i];
        second += x[i] * x[i] * cols[i];
    }
    let spread = n * second - first * first;
    // cancellation leaves O(eps) noise when all weight sits on one score
    if !(spread > 1e-12 * n * second) {
        return Err(Error::ZeroVariance);
    }
    Ok(n.sqrt() * numerator / (r * s * spread).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn symmetric() -> GenotypeTable {
        GenotypeTable::from_cells([10., 20., 30., 30., 20., 10.]).unwrap()
    }

    fn z(t: &GenotypeTable, x: f64) -> f64 {
        trend_statistic(t, TrendScore::new(x).unwrap()).unwrap().value
    }

    #[test]
    fn worked_example() {
        let t = symmetric();
        assert!((z(&t, 1.0) - 3.872983).abs() < 1e-5);
        assert!((z(&t, 0.0) - 3.872983).abs() < 1e-5);
        assert!((z(&t, 0.5) - 4.472136).abs() < 1e-5);
    }

    #[test]
    fn identical_rows_give_zero() {
        let t = GenotypeTable::from_cells([5., 7., 9., 5., 7., 9.]).unwrap();
        for x in [0.0, 0.3, 0.5, 1.0] {
            assert_eq!(z(&t, x), 0.0);
        }
    }

    #[test]
    fn zero_variance_is_an_error() {
        // only NN and NM observed: scores (0, 0, 1) put all weight on 0
        let t = GenotypeTable::from_cells([3., 4., 0., 5., 6., 0.]).unwrap();
        assert_eq!(trend_statistic(&t, TrendScore::RECESSIVE), Err(Error::ZeroVariance));
        assert!(trend_statistic(&t, TrendScore::ADDITIVE).is_ok());
        let t = GenotypeTable::from_cells([0., 4., 0., 0., 6., 0.]).unwrap();
        assert_eq!(trend_statistic(&t, TrendScore::ADDITIVE), Err(Error::ZeroVariance));
    }

    #[test]
    fn optimal_scores() {
        assert_eq!(optimal_score(GeneticModel::Recessive).unwrap().value(), 0.0);
        assert_eq!(optimal_score(GeneticModel::Additive).unwrap().value(), 0.5);
        assert_eq!(optimal_score(GeneticModel::Dominant).unwrap().value(), 1.0);
        assert!(TrendScore::new(1.5).is_err());
    }

    fn corrected_table() -> impl Strategy<Value = GenotypeTable> {
        prop::array::uniform6(0u32..80).prop_map(|c| {
            GenotypeTable::from_cells(c.map(|v| f64::from(v) + 0.5)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn affine_score_invariance(t in corrected_table(), x in 0.0f64..=1.0, a in -5.0f64..5.0, b in 0.01f64..10.0) {
            let base = z(&t, x);
            let shifted = trend_with_scores(&t, [a, a + b * x, a + b]).unwrap();
            prop_assert!((base - shifted).abs() < 1e-10 * (1.0 + base.abs()));
        }

        #[test]
        fn swapping_rows_negates(t in corrected_table(), x in 0.0f64..=1.0) {
            prop_assert!((z(&t, x) + z(&t.swapped(), x)).abs() < 1e-10);
        }

        #[test]
        fn continuous_in_score(t in corrected_table(), x in 0.0f64..=0.999) {
            let h = 1e-7;
            prop_assert!((z(&t, x) - z(&t, x + h)).abs() < 1e-4);
        }
    }
}
