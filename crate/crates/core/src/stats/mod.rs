//! Numerical kernel: balanced two-factor ANOVA with replication, dummy
//! variable least squares with diagnostics, and F / Student-t tails.

mod anova;
mod linalg;
mod ols;
pub mod special;

use thiserror::Error;

pub use anova::{two_way_anova, AnovaRow, AnovaTable, FactorialSample};
pub use linalg::{invert, solve};
pub use ols::{adjusted_r2, ols_dummy_fit, CoefStat, DummyDesign, OlsFit, RegressionSummary};
pub use special::{f_cdf, f_tail, ln_beta, ln_gamma, regularized_beta, t_tail_two_sided};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error(
        "factorial design needs at least 2 levels per factor and 2 replicates, got {a}x{b}x{r}"
    )]
    TooSmallDesign { a: usize, b: usize, r: usize },
    #[error("unbalanced sample: expected {expected} values, got {actual}")]
    Unbalanced { expected: usize, actual: usize },
    #[error("non-finite observation at position {0}")]
    NonFinite(usize),
    #[error("period {0} has no observations; the dummy design is rank deficient")]
    RankDeficient(usize),
    #[error("need more observations than parameters (n = {n}, parameters = {parameters})")]
    TooFewObservations { n: usize, parameters: usize },
    #[error("period index {index} outside 1..={period_count}")]
    PeriodOutOfRange { index: usize, period_count: usize },
    #[error("{values} values but the design has {rows} rows")]
    LengthMismatch { values: usize, rows: usize },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("continued fraction did not converge within {0} iterations")]
    NonConvergence(usize),
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
