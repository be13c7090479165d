use thiserror::Error;

use crate::fdsolver::StabilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A query point lies outside the region where the quantity is defined.
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("explicit scheme unstable: {0}")]
    Unstable(StabilityReport),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        Error::Domain {
            what,
            value,
            lo,
            hi,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

/// Checks `lo <= value <= hi` with a relative slack for values computed from
/// node arithmetic (e.g. `30.0 * 0.01` landing a hair past `0.3`).
pub(crate) fn check_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    let slack = 1e-12 * (hi - lo).abs().max(1.0);
    if value.is_nan() || value < lo - slack || value > hi + slack {
        return Err(Error::domain(what, value, lo, hi));
    }
    Ok(())
}
