use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("mode density is not normalized: integral = {norm}")]
    Normalization { norm: f64 },

    #[error("Fock cutoff {cutoff} leaks {leakage:e} probability; need cutoff >= {required}")]
    Cutoff {
        cutoff: usize,
        required: usize,
        leakage: f64,
    },

    #[error("quadrature did not converge: error estimate {achieved:e} exceeds tolerance {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("integration failed at t = {time:e} s: {reason}")]
    Integration { time: f64, reason: String },

    #[error("ground state did not converge after {steps} steps (energy change rate {delta:e})")]
    GroundState { steps: usize, delta: f64 },

    #[error("at grid cell t_hold = {t_hold}, phi = {phi}: {source}")]
    GridCell {
        t_hold: f64,
        phi: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {value}")))
    }
}

pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be non-negative, got {value}")))
    }
}
