use std::fmt;

use thiserror::Error;

/// One (source color, source point, digit) triple that produced a point of
/// an image cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub source_color: usize,
    pub source_point: Vec<i64>,
    pub digit: Vec<i64>,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "color {} point {:?} digit {:?}",
            self.source_color, self.source_point, self.digit
        )
    }
}

/// A single problem found while validating a system spec file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaViolation {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subgroup is not of full rank (rank {rank}, dimension {dim})")]
    NotFullRank { rank: usize, dim: usize },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("unions are not disjoint: point {point:?} of color {color} produced by {first} and by {second}")]
    DisjointnessViolation {
        color: usize,
        point: Vec<i64>,
        first: Provenance,
        second: Provenance,
    },

    #[error("budget exceeded in {what}: limit {limit}")]
    BudgetExceeded { what: &'static str, limit: usize },

    #[error("substitution matrix is not primitive")]
    NotPrimitive,

    #[error("vector {0:?} is not in L'")]
    NotInLprime(Vec<i64>),

    #[error("shift {0:?} is not a difference of two points of one color")]
    NotAlmostPeriod(Vec<i64>),

    #[error("attractors not converged (gap {gap} exceeds {threshold})")]
    NotConverged { gap: f64, threshold: f64 },

    #[error("set map is not contracting: {0}")]
    NonContraction(String),

    #[error("window too small: {size} points, minimum {minimum}")]
    WindowTooSmall { size: usize, minimum: usize },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{} schema violation(s): {}", .0.len(), join_violations(.0))]
    Schema(Vec<SchemaViolation>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[SchemaViolation]) -> String {
    v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
