use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-invertible cocycle value")]
    NonInvertible,
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("matrix is not symplectic (residual {0:e})")]
    NotSymplectic(f64),
    #[error("matrix is not diagonalizable: {0}")]
    NonDiagonalizable(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("inadmissible word {0:?}")]
    InadmissibleWord(String),
    #[error("invalid subshift: {0}")]
    InvalidShift(String),
    #[error("transition matrix is not primitive")]
    NotPrimitive,
    #[error("point is not periodic")]
    NotPeriodic,
    #[error("points are not on a common {0} set")]
    NotOnCommonLeaf(&'static str),
    #[error("cocycle is neither dominated nor locally constant")]
    NotDominated,
    #[error("misaligned exit time {0}")]
    MisalignedExit(i64),
    #[error("splitting extension failed: {0}")]
    SplittingExtensionFailed(String),
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("no invariant two-dimensional block: {0}")]
    NoRotationBlock(String),
    #[error("generators are not simultaneously block-diagonal: {0}")]
    NotBlockDiagonal(String),
    #[error("orientation-reversing circle map (det {0})")]
    OrientationReversing(f64),
    #[error("real spectrum: no complex eigenvalue pair")]
    RealSpectrum,
    #[error("epsilon {eps:e} exceeds closing threshold {eps0:e}")]
    EpsilonTooLarge { eps: f64, eps0: f64 },
    #[error("toral automorphism is not hyperbolic")]
    NotHyperbolic,
    #[error("invalid toral automorphism: {0}")]
    InvalidAutomorphism(String),
    #[error("roof difference does not vanish on the periodic orbit (window {0:?})")]
    SupportViolation(String),
    #[error("iteration cap {0} reached")]
    IterationCap(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
