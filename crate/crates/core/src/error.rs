use thiserror::Error;

/// Errors raised while building tables, models or evaluating statistics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cell {index} is negative or not finite ({value})")]
    NegativeCell { index: usize, value: f64 },
    #[error("cell {index} is not an integer ({value})")]
    NonIntegerCell { index: usize, value: f64 },
    #[error("the {0} row has no observations")]
    EmptyRow(&'static str),
    #[error("allele frequency {0} is outside (0, 1)")]
    FrequencyOutOfRange(f64),
    #[error("penetrances must satisfy 0 < f0 <= f1 <= f2 < 1, got ({0}, {1}, {2})")]
    OrderViolation(f64, f64, f64),
    #[error("penetrance ({f0}, {f1}, {f2}) is inconsistent with the {kind} model")]
    ModelMismatch {
        kind: &'static str,
        f0: f64,
        f1: f64,
        f2: f64,
    },
    #[error("prevalence {0} is not inside (0, 1)")]
    DegeneratePrevalence(f64),
    #[error("trend score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("trend statistic has zero variance for these scores")]
    ZeroVariance,
    #[error("genotype proportions ({0}, {1}, {2}) do not admit the correlation formulas")]
    DegenerateProportions(f64, f64, f64),
    #[error("correlation {0} is outside (-1, 1]")]
    CorrelationOutOfRange(f64),
    #[error("({s}, {t}) is not the pair with minimum correlation")]
    NotExtremePair { s: usize, t: usize },
    #[error("invalid correlation matrix: {0}")]
    InvalidMatrix(String),
    #[error("correlation matrix is not positive semidefinite")]
    NotPsd,
    #[error("a margin of the table is zero")]
    ZeroMargin,
    #[error("the case sample is monomorphic")]
    MonomorphicSample,
    #[error("permutation reference is degenerate: {0}")]
    DegenerateTable(String),
    #[error("critical values were estimated for a different scenario ({0})")]
    MismatchedScenario(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
