use thiserror::Error;

/// Errors raised by the measurement-theory routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not an orthogonal projection (max deviation {deviation:.3e})")]
    NotProjection { deviation: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid spectral data: {0}")]
    InvalidSpectrum(String),

    #[error("conditioning event has probability {probability:.3e}")]
    ZeroConditionProbability { probability: f64 },

    #[error("pre- and postselected states are orthogonal (overlap {overlap:.3e})")]
    OrthogonalSelection { overlap: f64 },

    #[error("postselected eigenvalue is degenerate (rank {rank})")]
    DegeneratePostselection { rank: usize },

    #[error("{value} is not a spectral value of the observable")]
    UnknownOutcome { value: f64 },

    #[error("outcome map is undefined on meter value {value}")]
    UnmappedOutcome { value: f64 },

    #[error("POVM has no element for outcome ({a}, {b})")]
    OutcomeCoverage { a: f64, b: f64 },

    #[error("state is not an eigenstate of either observable")]
    NotEigenstate,

    #[error("operation requires dimension {expected}, got {found}")]
    WrongDimension { expected: usize, found: usize },

    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),

    #[error("malformed matrix data: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
