use thiserror::Error;

/// Errors raised by the numerical and identification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("A0 is singular (numerical rank {rank} < {n})")]
    SingularA0 { rank: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    Dimensions(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("count condition fails; non-redundancy check needs q_j = n - j for every column")]
    PreconditionCountFailure,

    #[error(
        "restrictions are infeasible at this point: column {column} admits no unit null vector"
    )]
    Infeasible { column: usize },

    #[error("point is not in the restricted set (residual {residual:e} > {tolerance:e})")]
    NotInR { residual: f64, tolerance: f64 },

    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Errors from reading restriction-spec documents and matrix files.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("line {line}: expected {expected} cells/rows, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: unknown block `{name}`")]
    UnknownBlock { line: usize, name: String },

    #[error("line {line}: block `{name}` declared more than once")]
    DuplicateBlock { line: usize, name: String },

    #[error("line {line}: the constant row cannot be restricted")]
    ConstantRestricted { line: usize },

    #[error("spec declares no blocks")]
    NoBlocks,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
