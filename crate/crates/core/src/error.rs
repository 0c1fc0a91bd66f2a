use thiserror::Error;

/// Errors produced by the device models, the pixel assembler, the transient
/// solver and the experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resistance {target:.4e} ohm outside reachable range [{low:.4e}, {high:.4e}] ohm")]
    OutOfRange { target: f64, low: f64, high: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error(
        "operating-point solve did not converge (vpd = {vpd:.6e} V, node bracket [{lo:.6e}, {hi:.6e}] V)"
    )]
    OperatingPoint { vpd: f64, lo: f64, hi: f64 },

    #[error("step underflow at t = {t:.6e} s (step {step:.3e} s < min_step); last state vpd = {vpd:.6e} V, gap = {gap:.6e} nm")]
    StepUnderflow { t: f64, step: f64, vpd: f64, gap: f64 },

    #[error("solution diverged at t = {t:.6e} s: {detail}")]
    Divergence { t: f64, detail: String },

    #[error("undefined gain factor: zero baseline drop (vrst = vpd1 = {0:.6e} V)")]
    UndefinedGain(f64),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("config line {line}, key `{key}`: {message}")]
    Config { line: usize, key: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl SimError {
    /// Whether the error comes from bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SimError::InvalidInput(_) | SimError::OutOfRange { .. } | SimError::Unsupported(_) | SimError::Config { .. } | SimError::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(SimError::InvalidInput(format!("{name} is not finite ({value})")))
    }
}
