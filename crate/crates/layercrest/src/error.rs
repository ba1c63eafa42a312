use thiserror::Error;

/// Unified error type for the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Configuration rejected before any numerics ran.
    #[error("invalid configuration: {context}")]
    InvalidConfig { context: String },

    /// Weight is non-positive somewhere on the closed domain.
    #[error("weight must be positive on the closed domain: {context}")]
    NonPositiveWeight { context: String },

    /// A query point lies outside the domain (or outside its closure).
    #[error("point outside domain: {context}")]
    OutsideDomain { context: String },

    /// A collar operation (reflection, closest-point frame) was requested
    /// beyond the tubular-neighbourhood reach of the boundary.
    #[error("point outside boundary collar: {context}")]
    OutsideCollar { context: String },

    /// Mesh generation could not satisfy its quality/size contract.
    #[error("mesh generation failed: {context}")]
    Mesh { context: String },

    /// An iterative linear solve stagnated or diverged.
    #[error("linear solver failed: {context}")]
    Solver { context: String },

    /// Concentration heights left the asymptotic regime (ε·d too large).
    #[error("outside asymptotic regime: {context}")]
    OutsideRegime { context: String },

    /// The nonlinear fixed-point iteration did not contract.
    #[error("fixed-point iteration failed: {context}")]
    Contraction { context: String },

    /// The damped Newton iteration failed to reach its residual target.
    #[error("Newton solve failed: {context}")]
    Newton { context: String },

    /// A critical-point search could not certify its result.
    #[error("critical-point search failed: {context}")]
    Search { context: String },

    /// Two reports cannot be compared (schema or shape mismatch).
    #[error("report mismatch: {context}")]
    ReportMismatch { context: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(context: impl Into<String>) -> Self {
        Error::InvalidConfig { context: context.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
