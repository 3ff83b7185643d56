use thiserror::Error;

/// Errors raised by the game solvers, the simulator and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible domain (mean interval,
    /// dimension mismatch, unsupported rule for the answer space...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The alternative set of the queried answers is empty over the model box.
    #[error("alternative set is empty: {0}")]
    Infeasible(String),

    /// An iterative solver stopped before reaching its tolerance.
    #[error("solver tolerance not met: best value {best:.6e}, gap {gap:.3e}")]
    ToleranceNotMet { best: f64, gap: f64 },

    /// The problem value is (numerically) zero at this model.
    #[error("problem is not identifiable at this model (value {0:.3e})")]
    NonIdentifiable(f64),

    /// A grid or cover would exceed the configured size cap.
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    /// A runtime invariant or pre-flight check failed.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
