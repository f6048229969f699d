use thiserror::Error;

/// Which end of an admissible interval a value fell off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Below,
    Above,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Below => f.write_str("below"),
            Side::Above => f.write_str("above"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {what} = {value} is {side} the admissible range ({lo}, {hi})")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
        side: Side,
    },

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("level error: alpha = {alpha} is outside the admissible interval ({lo}, {hi})")]
    Level { alpha: f64, lo: f64, hi: f64 },

    #[error("capacity error: m = {m} exceeds the exact-risk cap of {cap}")]
    Capacity { m: usize, cap: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("solver error: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite, got {x}")))
    }
}

pub(crate) fn check_unit_closed(name: &str, t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in [0, 1], got {t}")))
    }
}

pub(crate) fn check_unit_open(name: &str, t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in (0, 1), got {t}")))
    }
}
