//! Robust association tests for case-control genotype data.
//!
//! The crate covers the 2×3 genotype table and its allele collapse, the
//! Cochran-Armitage trend family `Z_x` with scores `(0, x, 1)`, the maximin
//! efficiency robust test (MERT) and maximum statistics built on that
//! family, the model-free chi-square composites (2-df Pearson, allele
//! association, Hardy-Weinberg disequilibrium, product and maximum), and a
//! reproducible Monte Carlo engine for critical values, size and power.

pub mod classical;
mod error;
pub mod montecarlo;
pub mod population;
pub mod robust;
pub mod tables;
pub mod trend;

pub use error::{Error, Result};
pub use population::{
    CaseControlProbs, GeneticModel, GenotypeFreqs, PenetranceModel, PopulationSpec,
};
pub use tables::{AlleleTable, GenotypeTable};
pub use trend::{TrendScore, TrendStatistic};
