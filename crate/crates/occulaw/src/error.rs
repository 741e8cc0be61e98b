use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("state count {m} is below the minimum of 2")]
    TooSmall { m: usize },

    #[error("off-diagonal entry ({i},{j}) = {value} must be strictly positive")]
    NonPositiveOffDiagonal { i: usize, j: usize, value: f64 },

    #[error(
        "row {i}: supplied diagonal {supplied} is off the negative off-diagonal sum {expected} by more than 1e-9"
    )]
    RowSumViolation {
        i: usize,
        supplied: f64,
        expected: f64,
    },

    #[error("linear solve failed: {0}")]
    SingularSolve(String),

    #[error("generator is not numerically diagonalizable (fast path unavailable)")]
    NotDiagonalizable,

    #[error("bad index range: i = {i} must satisfy 1 <= i <= j = {j}")]
    BadRange { i: u64, j: u64 },

    #[error("kernel-product fast path requires i > burn-in threshold {threshold}, got i = {i}")]
    BeforeBurnIn { i: u64, threshold: u64 },

    #[error("zeta = {zeta} must be strictly greater than 1")]
    ZetaNotGreaterThanOne { zeta: f64 },

    #[error("total degree {degree} exceeds the configured cap {cap}")]
    DegreeOverflow { degree: u32, cap: u32 },

    #[error("theta entries must be strictly positive, got {value} at index {index}")]
    NonPositiveTheta { index: usize, value: f64 },

    #[error("exact-law budget exceeded: estimated {estimated} state updates > budget {budget}")]
    BudgetExceeded { estimated: u128, budget: u128 },

    #[error("point is not on the simplex: {0}")]
    NotSimplexPoint(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag for CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "not_square",
            Error::TooSmall { .. } => "too_small",
            Error::NonPositiveOffDiagonal { .. } => "non_positive_off_diagonal",
            Error::RowSumViolation { .. } => "row_sum_violation",
            Error::SingularSolve(_) => "singular_solve",
            Error::NotDiagonalizable => "not_diagonalizable",
            Error::BadRange { .. } => "bad_range",
            Error::BeforeBurnIn { .. } => "before_burn_in",
            Error::ZetaNotGreaterThanOne { .. } => "zeta_not_greater_than_one",
            Error::DegreeOverflow { .. } => "degree_overflow",
            Error::NonPositiveTheta { .. } => "non_positive_theta",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::NotSimplexPoint(_) => "not_simplex_point",
            Error::Invalid(_) => "invalid",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
