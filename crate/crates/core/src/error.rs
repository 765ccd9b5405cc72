use thiserror::Error;

/// Errors raised by the state-space geometry and phase machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not hermitian: max |A - A^dagger| = {residual:.3e}")]
    NotHermitian { residual: f64 },

    #[error("state is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },

    #[error("zero vector cannot represent a state")]
    ZeroState,

    #[error("matrix is not a rank-one projector: {reason}")]
    NotProjector { reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is too small, need at least 2")]
    DimensionTooSmall(usize),

    #[error("state lies outside the chart: |psi^0| = {modulus:.3e}")]
    OutsideChart { modulus: f64 },

    #[error("time {t} outside curve domain [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },

    #[error("need {needed} samples around the evaluation point, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("vanishing overlap between consecutive states at index {index}")]
    ZeroOverlap { index: usize },

    #[error("geodesic frame needs 0 < L < pi/2, got L = {length}")]
    FrameWindow { length: f64 },

    #[error("least-squares fit is rank deficient: {0}")]
    RankDeficient(String),

    #[error("threshold undefined: {0}")]
    ThresholdUndefined(String),

    #[error("integration did not converge: change {change:.3e} after {steps} steps")]
    NotConverged { change: f64, steps: usize },

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
