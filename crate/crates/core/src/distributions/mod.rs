//! Probability kernels used by the seasonal and per-cyclone models.
//!
//! Everything here is pure: densities are evaluated in log space and
//! sampling only touches the caller-owned random stream.

mod family;
pub(crate) mod gev;

pub use family::Family;
pub use gev::{gev_cdf, gev_logpdf, gev_quantile, gev_sample, gev_t, GevParams};

use thiserror::Error;

/// Below this magnitude the shape parameter is treated as exactly zero.
pub const XI_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("argument {value} outside domain: {reason}")]
    Domain { value: f64, reason: &'static str },
}
