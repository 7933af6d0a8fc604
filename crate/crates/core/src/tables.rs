//! 2×3 genotype counts and the derived 2×2 allele table.
//!
//! Genotypes are ordered `NN, NM, MM` where `M` is the putative risk allele.
//! Cells are stored as `f64` so that continuity-corrected tables (every cell
//! shifted by one half) are ordinary tables; raw data coming from files must
//! be integer-valued and is checked by [`GenotypeTable::from_counts`].

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default continuity correction added to every cell of a simulated table.
pub const DEFAULT_CORRECTION: f64 = 0.5;

/// Case and control genotype counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 6]", into = "[f64; 6]")]
pub struct GenotypeTable {
    cases: [f64; 3],
    controls: [f64; 3],
}

impl GenotypeTable {
    /// Builds a table from `(r0, r1, r2)` and `(s0, s1, s2)`.
    pub fn new(cases: [f64; 3], controls: [f64; 3]) -> Result<Self> {
        for (index, &value) in cases.iter().chain(controls.iter()).enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeCell { index, value });
            }
        }
        if cases.iter().sum::<f64>() <= 0.0 {
            return Err(Error::EmptyRow("case"));
        }
        if controls.iter().sum::<f64>() <= 0.0 {
            return Err(Error::EmptyRow("control"));
        }
        Ok(Self { cases, controls })
    }

    /// Builds a table from six cells in the order `r0, r1, r2, s0, s1, s2`.
    pub fn from_cells(cells: [f64; 6]) -> Result<Self> {
        Self::new(
            [cells[0], cells[1], cells[2]],
            [cells[3], cells[4], cells[5]],
        )
    }

    /// Builds a table from raw observed counts, which must be integers.
    pub fn from_counts(cells: [f64; 6]) -> Result<Self> {
        for (index, &value) in cells.iter().enumerate() {
            if value.is_finite() && value.fract() != 0.0 {
                return Err(Error::NonIntegerCell { index, value });
            }
        }
        Self::from_cells(cells)
    }

    /// Builds a table from integer counts, as produced by the samplers.
    pub(crate) fn from_integer_rows(cases: [u32; 3], controls: [u32; 3]) -> Self {
        debug_assert!(cases.iter().sum::<u32>() > 0 && controls.iter().sum::<u32>() > 0);
        Self {
            cases: cases.map(f64::from),
            controls: controls.map(f64::from),
        }
    }

    pub fn cases(&self) -> [f64; 3] {
        self.cases
    }

    pub fn controls(&self) -> [f64; 3] {
        self.controls
    }

    pub fn cells(&self) -> [f64; 6] {
        let [r0, r1, r2] = self.cases;
        let [s0, s1, s2] = self.controls;
        [r0, r1, r2, s0, s1, s2]
    }

    /// Number of cases, `r`.
    pub fn case_total(&self) -> f64 {
        self.cases.iter().sum()
    }

    /// Number of controls, `s`.
    pub fn control_total(&self) -> f64 {
        self.controls.iter().sum()
    }

    /// Genotype column totals `(n0, n1, n2)`.
    pub fn column_totals(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.cases[i] + self.controls[i])
    }

    /// Grand total `n`.
    pub fn total(&self) -> f64 {
        self.case_total() + self.control_total()
    }

    /// Pooled genotype proportions `n_i / n`.
    pub fn pooled_proportions(&self) -> [f64; 3] {
        let n = self.total();
        self.column_totals().map(|c| c / n)
    }

    /// True when every cell is a whole number.
    pub fn is_integral(&self) -> bool {
        self.cells().iter().all(|c| c.fract() == 0.0)
    }

    /// Swaps the roles of cases and controls.
    pub fn swapped(&self) -> Self {
        Self {
            cases: self.controls,
            controls: self.cases,
        }
    }

    /// Multiplies every cell by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.cases.map(|c| c * factor), self.controls.map(|c| c * factor))
    }

    /// Adds `delta` to every cell and recomputes the margins.
    pub fn with_continuity_correction(&self, delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "continuity correction must be nonnegative, got {delta}"
            )));
        }
        Ok(Self {
            cases: self.cases.map(|c| c + delta),
            controls: self.controls.map(|c| c + delta),
        })
    }

    /// Collapses genotypes to allele counts.
    pub fn to_allele_table(&self) -> AlleleTable {
        let [r0, r1, r2] = self.cases;
        let [s0, s1, s2] = self.controls;
        AlleleTable {
            case_n: 2.0 * r0 + r1,
            case_m: r1 + 2.0 * r2,
            control_n: 2.0 * s0 + s1,
            control_m: s1 + 2.0 * s2,
        }
    }
}

impl TryFrom<[f64; 6]> for GenotypeTable {
    type Error = Error;

    fn try_from(cells: [f64; 6]) -> Result<Self> {
        Self::from_cells(cells)
    }
}

impl From<GenotypeTable> for [f64; 6] {
    fn from(t: GenotypeTable) -> Self {
        t.cells()
    }
}

/// Adds `delta` (default one half) to every genotype count.
pub fn apply_continuity_correction(t: &GenotypeTable, delta: f64) -> Result<GenotypeTable> {
    t.with_continuity_correction(delta)
}

/// Allele counts derived from a genotype table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlleleTable {
    pub case_n: f64,
    pub case_m: f64,
    pub control_n: f64,
    pub control_m: f64,
}

impl AlleleTable {
    /// `2r`
    pub fn case_total(&self) -> f64 {
        self.case_n + self.case_m
    }

    /// `2s`
    pub fn control_total(&self) -> f64 {
        self.control_n + self.control_m
    }

    /// `2n0 + n1`
    pub fn n_total(&self) -> f64 {
        self.case_n + self.control_n
    }

    /// `n1 + 2n2`
    pub fn m_total(&self) -> f64 {
        self.case_m + self.control_m
    }

    /// `2n`
    pub fn total(&self) -> f64 {
        self.case_total() + self.control_total()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(cells: [f64; 6]) -> GenotypeTable {
        GenotypeTable::from_cells(cells).unwrap()
    }

    #[test]
    fn margins() {
        let t = table([10., 20., 30., 30., 20., 10.]);
        assert_eq!(t.case_total(), 60.0);
        assert_eq!(t.control_total(), 60.0);
        assert_eq!(t.total(), 120.0);

        let t = table([25., 50., 25., 25., 50., 25.]);
        assert_eq!(t.column_totals(), [50.0, 100.0, 50.0]);
    }

    #[test]
    fn rejects_empty_rows_and_negative_cells() {
        assert_eq!(
            GenotypeTable::from_cells([0., 0., 0., 1., 1., 1.]),
            Err(Error::EmptyRow("case"))
        );
        assert_eq!(
            GenotypeTable::from_cells([1., 1., 1., 0., 0., 0.]),
            Err(Error::EmptyRow("control"))
        );
        assert!(matches!(
            GenotypeTable::from_cells([1., -1., 1., 1., 1., 1.]),
            Err(Error::NegativeCell { index: 1, .. })
        ));
        assert!(matches!(
            GenotypeTable::from_counts([1., 1.5, 1., 1., 1., 1.]),
            Err(Error::NonIntegerCell { index: 1, .. })
        ));
    }

    #[test]
    fn allele_collapse() {
        let a = table([10., 20., 30., 30., 20., 10.]).to_allele_table();
        assert_eq!((a.case_n, a.case_m, a.control_n, a.control_m), (40., 80., 80., 40.));
        assert_eq!(a.total(), 240.0);

        let a = table([25., 50., 25., 25., 50., 25.]).to_allele_table();
        assert_eq!((a.case_n, a.case_m, a.control_n, a.control_m), (100., 100., 100., 100.));

        let a = table([1., 0., 0., 0., 0., 1.]).to_allele_table();
        assert_eq!((a.case_n, a.case_m, a.control_n, a.control_m), (2., 0., 0., 2.));
    }

    #[test]
    fn continuity_correction() {
        let t = table([0., 1., 2., 3., 0., 0.]);
        let c = apply_continuity_correction(&t, 0.5).unwrap();
        assert_eq!(c.cells(), [0.5, 1.5, 2.5, 3.5, 0.5, 0.5]);
        assert_eq!(apply_continuity_correction(&t, 0.0).unwrap(), t);

        let t = table([10., 20., 30., 30., 20., 10.]);
        assert_eq!(apply_continuity_correction(&t, DEFAULT_CORRECTION).unwrap().total(), 123.0);
        assert!(t.with_continuity_correction(-0.1).is_err());
    }

    fn integer_table() -> impl Strategy<Value = GenotypeTable> {
        (
            prop::array::uniform3(0u32..50),
            prop::array::uniform3(0u32..50),
        )
            .prop_filter("rows must be nonempty", |(c, k)| {
                c.iter().sum::<u32>() > 0 && k.iter().sum::<u32>() > 0
            })
            .prop_map(|(c, k)| GenotypeTable::from_integer_rows(c, k))
    }

    proptest! {
        #[test]
        fn correction_is_additive(t in integer_table(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
            let once = t.with_continuity_correction(a + b).unwrap();
            let twice = t.with_continuity_correction(a).unwrap().with_continuity_correction(b).unwrap();
            for (x, y) in once.cells().iter().zip(twice.cells()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn integer_tables_give_even_allele_totals(t in integer_table()) {
            let a = t.to_allele_table();
            for v in [a.case_n, a.case_m, a.control_n, a.control_m] {
                prop_assert_eq!(v.fract(), 0.0);
            }
            prop_assert_eq!(a.total() % 2.0, 0.0);
            prop_assert_eq!(a.total(), 2.0 * t.total());
        }
    }
}
