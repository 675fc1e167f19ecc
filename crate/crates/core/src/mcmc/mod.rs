//! Adaptive random-walk Metropolis-within-Gibbs sampling.
//!
//! Parameters are updated block by block. A random-walk block proposes a
//! Gaussian step on the unconstrained scale of its parameters; an exact
//! block delegates to a model-supplied conditional draw. Step scales and
//! proposal covariances adapt during burn-in only.

mod adapt;
mod chain;
mod diagnostics;
mod sampler;
mod summary;

pub use adapt::{StepAdapter, Welford};
pub use chain::{BlockStats, ChainMeta, PosteriorChain};
pub use diagnostics::{
    autocorrelation, diagnostics, effective_sample_size, geweke_z, split_rhat, DiagnosticsReport,
    ParamDiagnostics, MIN_DIAGNOSTIC_SAMPLES,
};
pub use sampler::{run_chains, run_metropolis_within_gibbs, Block, BlockUpdate, ExactUpdate, SamplerConfig};
pub use summary::{posterior_summary, ParamSummary};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum McmcError {
    #[error("log posterior is not finite at the initial point ({0})")]
    NonFiniteInitial(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter spec: {0}")]
    InvalidSpec(String),
    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),
    #[error("chain too short for diagnostics: {n} samples, need at least {min}")]
    TooShort { n: usize, min: usize },
    #[error("chain file: {0}")]
    Format(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Domain of a parameter. Positive and bounded parameters are sampled on
/// log and scaled-logit scales respectively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    Real,
    Positive,
    Bounded { lo: f64, hi: f64 },
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl Support {
    /// Strict membership; bounded endpoints are excluded.
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Support::Real => x.is_finite(),
            Support::Positive => x > 0.0 && x.is_finite(),
            Support::Bounded { lo, hi } => x > lo && x < hi,
        }
    }

    pub fn to_unconstrained(&self, x: f64) -> f64 {
        match *self {
            Support::Real => x,
            Support::Positive => x.ln(),
            Support::Bounded { lo, hi } => {
                let p = (x - lo) / (hi - lo);
                (p / (1.0 - p)).ln()
            }
        }
    }

    pub fn from_unconstrained(&self, u: f64) -> f64 {
        match *self {
            Support::Real => u,
            Support::Positive => u.exp(),
            Support::Bounded { lo, hi } => {
                let p = 1.0 / (1.0 + (-u).exp());
                lo + (hi - lo) * p
            }
        }
    }

    /// `ln |dx/du|`.
    pub fn ln_jacobian(&self, u: f64) -> f64 {
        match *self {
            Support::Real => 0.0,
            Support::Positive => u,
            Support::Bounded { lo, hi } => (hi - lo).ln() - softplus(-u) - softplus(u),
        }
    }

    /// `dx/du`, for delta-method transforms.
    pub fn dx_du(&self, u: f64) -> f64 {
        self.ln_jacobian(u).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub support: Support,
    pub initial: f64,
    /// Initial random-walk step on the unconstrained scale.
    pub step: f64,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, support: Support, initial: f64, step: f64) -> Self {
        Self {
            name: name.into(),
            support,
            initial,
            step,
        }
    }

    pub fn validate(&self) -> Result<(), McmcError> {
        if let Support::Bounded { lo, hi } = self.support {
            if !(lo < hi) {
                return Err(McmcError::InvalidSpec(format!(
                    "{}: bounds need lo < hi, got ({lo}, {hi})",
                    self.name
                )));
            }
        }
        if !self.support.contains(self.initial) {
            return Err(McmcError::InvalidSpec(format!(
                "{}: initial value {} outside support {:?}",
                self.name, self.initial, self.support
            )));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(McmcError::InvalidSpec(format!(
                "{}: step size must be positive, got {}",
                self.name, self.step
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transforms_round_trip() {
        let supports = [
            Support::Real,
            Support::Positive,
            Support::Bounded { lo: -0.5, hi: 0.5 },
            Support::Bounded { lo: 0.0, hi: 70.0 },
        ];
        for s in supports {
            for x in [0.1, 0.3, 0.45, 12.0] {
                if !s.contains(x) {
                    continue;
                }
                let u = s.to_unconstrained(x);
                assert!((s.from_unconstrained(u) - x).abs() < 1e-12);
                // numerical derivative of the inverse map
                let h = 1e-6;
                let d = (s.from_unconstrained(u + h) - s.from_unconstrained(u - h)) / (2.0 * h);
                assert!((d.ln() - s.ln_jacobian(u)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn jacobian_finite_far_out() {
        let s = Support::Bounded { lo: -1.0, hi: 1.0 };
        assert!(s.ln_jacobian(800.0).is_finite());
        assert!(s.ln_jacobian(-800.0).is_finite());
    }
}
