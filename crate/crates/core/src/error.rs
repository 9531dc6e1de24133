use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not symmetric (residual {residual:.3e})")]
    NotSymmetric { residual: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },
    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },
    #[error("non-finite entry")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("mode family is not orthonormal (Gram deviation {deviation:.3e})")]
    ModesNotOrthonormal { deviation: f64 },
    #[error("coefficient fit is ill-conditioned")]
    FitIllConditioned,
    #[error("required generator eigenvalues unreachable (residual {residual:.3e})")]
    SpectrumUnreachable { residual: f64 },
    #[error("probe condition violated: {0}")]
    ConditionViolated(String),
    #[error("generator has fewer than two idler modes")]
    NoIdlerModes,
    #[error("state is not diagonal in the generator eigenbasis")]
    StateNotEigenbasisDiagonal,
    #[error("variance-optimal counting condition not verified")]
    ConditionNotVerified,
    #[error("truncated tail {deficit:.3e} exceeds tolerance; increase the cutoff")]
    TailTooLarge { deficit: f64 },
    #[error("oracle supports at most 3 modes, got {0}")]
    TooManyModes(usize),
    #[error("quadrature grid too coarse (change {change:.3e} on refinement)")]
    GridTooCoarse { change: f64 },
    #[error("regularization poor: overlap {overlap:.3e}")]
    RegularizationPoor { overlap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
