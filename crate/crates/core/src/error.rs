use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpvError {
    /// A numeric argument is outside the domain of the operation.
    #[error("domain error: {name} = {value} ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("causality violation: receive time {recv_ps} ps precedes send time {send_ps} ps")]
    Causality { send_ps: i64, recv_ps: i64 },

    #[error("explicit bit table for n = {n} needs 2^{n} bits; use the keyed backend for n > {max}")]
    Capacity { n: u32, max: u32 },

    #[error("input width mismatch: function takes {expected} bits, got a {got}-bit value")]
    Width { expected: u32, got: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, QpvError>;

pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> QpvError {
    QpvError::Domain {
        name,
        value,
        reason,
    }
}

/// Checks `lo <= value <= hi` and finiteness.
pub(crate) fn check_closed(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(domain(name, value, "outside the closed admissible range"))
    }
}

/// Checks `lo < value < hi`.
pub(crate) fn check_open(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if value.is_finite() && value > lo && value < hi {
        Ok(value)
    } else {
        Err(domain(name, value, "outside the open admissible range"))
    }
}
