use thiserror::Error;

use crate::charfun::TwistedPdReport;

#[derive(Error, Debug)]
pub enum Error {
    #[error("empty phase space: need n + s >= 1")]
    EmptyPhaseSpace,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not antisymmetric (max |A + A^T| = {residual:.3e})")]
    NotAntisymmetric { residual: f64 },

    #[error("matrix is not symmetric (max |A - A^T| = {residual:.3e})")]
    NotSymmetric { residual: f64 },

    #[error("antisymmetric form has odd rank {rank}")]
    OddRank { rank: usize },

    #[error("characteristic function not normalized: chi(0) = {value}")]
    NotNormalized { value: String },

    #[error("characteristic function exceeds unit modulus at a sample point: |chi| = {modulus}")]
    ModulusExceeded { modulus: f64 },

    #[error("spaces do not match: {context}")]
    SpaceMismatch { context: String },

    #[error("complete positivity violated (min eigenvalue {min_eigenvalue:.6e})")]
    NotCompletelyPositive {
        min_eigenvalue: f64,
        report: Box<TwistedPdReport>,
    },

    #[error("matrix is not symplectic (max residual {residual:.3e})")]
    NotSymplectic { residual: f64 },

    #[error("sampling policy draws no points")]
    EmptySamplingPolicy,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fock truncation too small: tail mass {tail:.3e} at cutoff {cutoff}")]
    TruncationTooSmall { tail: f64, cutoff: usize },

    #[error("density matrix not normalized: trace = {trace}")]
    BadDensity { trace: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
