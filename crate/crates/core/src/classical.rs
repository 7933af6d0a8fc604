//! Model-free chi-square statistics and their composites.
//!
//! `χ²_AA` is computed on the allele table derived from genotypes. It is
//! only a valid standalone test when cases and controls are in
//! Hardy-Weinberg equilibrium; here it mostly serves as a factor of `T_P`
//! and `T_MAX`, which have no usable asymptotic distribution and are judged
//! by simulation or permutation.

use serde::{Deserialize, Serialize};

use crate::tables::GenotypeTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompositeKind {
    Chi2TwoDf,
    AlleleAssociation,
    Hwd,
    Product,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeStatistic {
    pub value: f64,
    /// `(χ²_AA, χ²_HWD)` for the product and maximum.
    pub parts: Option<(f64, f64)>,
    pub kind: CompositeKind,
}

/// Pearson chi-square for the 2×3 table (2 df).
pub fn chisq_2df(t: &GenotypeTable) -> Result<f64> {
    let cols = t.column_totals();
    if cols.iter().any(|&c| c <= 0.0) {
        return Err(Error::ZeroMargin);
    }
    let n = t.total();
    let rows = [(t.cases(), t.case_total()), (t.controls(), t.control_total())];
    Ok(rows
        .iter()
        .flat_map(|(cells, total)| {
            (0..3).map(move |i| {
                let expected = total * cols[i] / n;
                (cells[i] - expected).powi(2) / expected
            })
        })
        .sum())
}

/// Allele-association chi-square on the derived 2×2 allele table.
pub fn chisq_allele(t: &GenotypeTable) -> Result<f64> {
    let [r0, r1, r2] = t.cases();
    let [s0, s1, s2] = t.controls();
    let [n0, n1, n2] = t.column_totals();
    let (r, s, n) = (t.case_total(), t.control_total(), t.total());
    let n_alleles = 2.0 * n0 + n1;
    let m_alleles = n1 + 2.0 * n2;
    if n_alleles <= 0.0 || m_alleles <= 0.0 {
        return Err(Error::ZeroMargin);
    }
    let det = (2.0 * r0 + r1) * (s1 + 2.0 * s2) - (2.0 * s0 + s1) * (r1 + 2.0 * r2);
    Ok(2.0 * n * det * det / (4.0 * r * s * n_alleles * m_alleles))
}

/// Hardy-Weinberg disequilibrium chi-square on one genotype row (cases).
pub fn chisq_hwd(row: [f64; 3]) -> Result<f64> {
    let r: f64 = row.iter().sum();
    if r <= 0.0 {
        return Err(Error::EmptyRow("case"));
    }
    let p = (row[1] + 2.0 * row[2]) / (2.0 * r);
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::MonomorphicSample);
    }
    let q = 1.0 - p;
    let expected = [r * q * q, 2.0 * r * p * q, r * p * p];
    Ok(row.iter().zip(expected).map(|(o, e)| (o - e).powi(2) / e).sum())
}

fn parts(t: &GenotypeTable) -> Result<(f64, f64)> {
    Ok((chisq_allele(t)?, chisq_hwd(t.cases())?))
}

/// Product test `T_P = χ²_AA · χ²_HWD`.
pub fn product_test(t: &GenotypeTable) -> Result<CompositeStatistic> {
    let (aa, hwd) = parts(t)?;
    Ok(CompositeStatistic {
        value: aa * hwd,
        parts: Some((aa, hwd)),
        kind: CompositeKind::Product,
    })
}

/// `T_MAX = max(χ²_AA, χ²_HWD)`.
pub fn tmax(t: &GenotypeTable) -> Result<CompositeStatistic> {
    let (aa, hwd) = parts(t)?;
    Ok(CompositeStatistic {
        value: aa.max(hwd),
        parts: Some((aa, hwd)),
        kind: CompositeKind::Max,
    })
}
