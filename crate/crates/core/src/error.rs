use thiserror::Error;

use crate::quadrature::QuadratureError;

/// Errors produced by the analytic pipelines and the time-domain oracle.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("singular evaluation at nu = {nu}: {what}")]
    Singular { nu: f64, what: String },

    #[error(transparent)]
    Quadrature(#[from] QuadratureError),

    #[error("root polishing did not converge; residuals {residuals:?}")]
    RootPolish { residuals: Vec<f64> },

    #[error("degenerate roots: minimum separation {separation:e} relative to scale {scale}")]
    DegenerateRoots { separation: f64, scale: f64 },

    #[error("normalization inconsistent: |Im K| / |K| = {ratio:e}")]
    Normalization { ratio: f64 },

    #[error("signal modes {first} and {second} overlap in time (gap {gap}, required {required})")]
    OverlappingModes {
        first: usize,
        second: usize,
        gap: f64,
        required: f64,
    },

    #[error("level {level} is not attained at nu = 0 (peak {peak})")]
    LevelNotAttained { level: f64, peak: f64 },

    #[error("no crossing of level {level} in [{lo}, {hi}]")]
    NoCrossing { level: f64, lo: f64, hi: f64 },

    #[error("integrator unstable at t = {time}: excitation grew from {from:e} to {to:e}")]
    Unstable { time: f64, from: f64, to: f64 },

    #[error("schedule: {0}")]
    Schedule(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
