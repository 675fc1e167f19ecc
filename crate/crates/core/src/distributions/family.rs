use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma as ln_gamma_approx;

use super::DistError;

/// The standard families appearing in the models and their priors.
///
/// Negative binomial is parameterized by a real `r > 0` and success
/// probability `p`, with mean `r (1 - p) / p`; setting `p = r / (r + lambda)`
/// gives mean `lambda` and variance `lambda (1 + lambda / r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Lognormal { mu: f64, sigma: f64 },
    NegativeBinomial { r: f64, p: f64 },
    Poisson { lambda: f64 },
    Binomial { n: u64, theta: f64 },
    /// Parameterized by variance.
    Normal { mean: f64, var: f64 },
    Beta { a: f64, b: f64 },
    Gamma { shape: f64, rate: f64 },
    InverseGamma { shape: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
}

fn positive(name: &str, v: f64) -> Result<(), DistError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(DistError::InvalidParams(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<(), DistError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(DistError::InvalidParams(format!("{name} must be finite, got {v}")))
    }
}

fn probability(name: &str, v: f64) -> Result<(), DistError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(DistError::InvalidParams(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// `ln Γ(x)`, exact at the empty-product points `x = 1` and `x = 2`.
#[inline]
fn ln_gamma(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        0.0
    } else {
        ln_gamma_approx(x)
    }
}

/// `k ln q` with the convention `0 ln 0 = 0`.
#[inline]
fn xlogy(k: f64, q: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * q.ln()
    }
}

impl Family {
    pub fn validate(&self) -> Result<(), DistError> {
        match *self {
            Family::Lognormal { mu, sigma } => {
                finite("lognormal mu", mu)?;
                positive("lognormal sigma", sigma)
            }
            Family::NegativeBinomial { r, p } => {
                positive("negative binomial r", r)?;
                if p > 0.0 && p <= 1.0 {
                    Ok(())
                } else {
                    Err(DistError::InvalidParams(format!(
                        "negative binomial p must lie in (0, 1], got {p}"
                    )))
                }
            }
            Family::Poisson { lambda } => {
                if lambda >= 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(DistError::InvalidParams(format!(
                        "Poisson rate must be non-negative, got {lambda}"
                    )))
                }
            }
            Family::Binomial { theta, .. } => probability("binomial theta", theta),
            Family::Normal { mean, var } => {
                finite("normal mean", mean)?;
                positive("normal variance", var)
            }
            Family::Beta { a, b } => {
                positive("beta a", a)?;
                positive("beta b", b)
            }
            Family::Gamma { shape, rate } => {
                positive("gamma shape", shape)?;
                positive("gamma rate", rate)
            }
            Family::InverseGamma { shape, scale } => {
                positive("inverse gamma shape", shape)?;
                positive("inverse gamma scale", scale)
            }
            Family::Uniform { lo, hi } => {
                finite("uniform lo", lo)?;
                finite("uniform hi", hi)?;
                if lo < hi {
                    Ok(())
                } else {
                    Err(DistError::InvalidParams(format!(
                        "uniform bounds need lo < hi, got ({lo}, {hi})"
                    )))
                }
            }
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            Family::NegativeBinomial { .. } | Family::Poisson { .. } | Family::Binomial { .. }
        )
    }

    /// Log mass (discrete families) or log density (continuous families).
    ///
    /// Points outside the support give `-inf`. Discrete families reject
    /// non-integer arguments with a domain error.
    pub fn ln_density(&self, x: f64) -> Result<f64, DistError> {
        self.validate()?;
        if x.is_nan() {
            return Err(DistError::Domain {
                value: x,
                reason: "NaN argument",
            });
        }
        if self.is_discrete() && x.fract() != 0.0 {
            return Err(DistError::Domain {
                value: x,
                reason: "count families need integer arguments",
            });
        }
        Ok(self.ln_density_unchecked(x))
    }

    pub(crate) fn ln_density_unchecked(&self, x: f64) -> f64 {
        const NEG_INF: f64 = f64::NEG_INFINITY;
        match *self {
            Family::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    return NEG_INF;
                }
                let lx = x.ln();
                let z = (lx - mu) / sigma;
                -lx - sigma.ln() - 0.5 * (2.0 * PI).ln() - 0.5 * z * z
            }
            Family::NegativeBinomial { r, p } => {
                if x < 0.0 {
                    return NEG_INF;
                }
                ln_gamma(x + r) - ln_gamma(r) - ln_gamma(x + 1.0) + r * p.ln() + xlogy(x, 1.0 - p)
            }
            Family::Poisson { lambda } => {
                if x < 0.0 {
                    return NEG_INF;
                }
                xlogy(x, lambda) - lambda - ln_gamma(x + 1.0)
            }
            Family::Binomial { n, theta } => {
                let n = n as f64;
                if x < 0.0 || x > n {
                    return NEG_INF;
                }
                ln_gamma(n + 1.0) - ln_gamma(x + 1.0) - ln_gamma(n - x + 1.0)
                    + xlogy(x, theta)
                    + xlogy(n - x, 1.0 - theta)
            }
            Family::Normal { mean, var } => {
                let d = x - mean;
                -0.5 * (2.0 * PI * var).ln() - 0.5 * d * d / var
            }
            Family::Beta { a, b } => {
                if !(0.0..=1.0).contains(&x) {
                    return NEG_INF;
                }
                ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
                    + xlogy(a - 1.0, x)
                    + xlogy(b - 1.0, 1.0 - x)
            }
            Family::Gamma { shape, rate } => {
                if x <= 0.0 {
                    return NEG_INF;
                }
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
            Family::InverseGamma { shape, scale } => {
                if x <= 0.0 {
                    return NEG_INF;
                }
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
            }
            Family::Uniform { lo, hi } => {
                if x < lo || x > hi {
                    NEG_INF
                } else {
                    -(hi - lo).ln()
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Family::Lognormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Family::NegativeBinomial { r, p } => r * (1.0 - p) / p,
            Family::Poisson { lambda } => lambda,
            Family::Binomial { n, theta } => n as f64 * theta,
            Family::Normal { mean, .. } => mean,
            Family::Beta { a, b } => a / (a + b),
            Family::Gamma { shape, rate } => shape / rate,
            Family::InverseGamma { shape, scale } => {
                if shape > 1.0 {
                    scale / (shape - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Family::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Family::Lognormal { mu, sigma } => {
                let s2 = sigma * sigma;
                s2.exp_m1() * (2.0 * mu + s2).exp()
            }
            Family::NegativeBinomial { r, p } => r * (1.0 - p) / (p * p),
            Family::Poisson { lambda } => lambda,
            Family::Binomial { n, theta } => n as f64 * theta * (1.0 - theta),
            Family::Normal { var, .. } => var,
            Family::Beta { a, b } => a * b / ((a + b) * (a + b) * (a + b + 1.0)),
            Family::Gamma { shape, rate } => shape / (rate * rate),
            Family::InverseGamma { shape, scale } => {
                if shape > 2.0 {
                    scale * scale / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0))
                } else {
                    f64::INFINITY
                }
            }
            Family::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
        }
    }

    /// One draw; counts are returned as integral `f64`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, DistError> {
        self.validate()?;
        Ok(self.sample_unchecked(rng))
    }

    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Family::Lognormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp()
            }
            Family::NegativeBinomial { r, p } => {
                if p >= 1.0 {
                    return 0.0;
                }
                // gamma-Poisson mixture
                let rate = Gamma::new(r, (1.0 - p) / p)
                    .expect("validated gamma")
                    .sample(rng);
                poisson_draw(rate, rng)
            }
            Family::Poisson { lambda } => poisson_draw(lambda, rng),
            Family::Binomial { n, theta } => Binomial::new(n, theta)
                .expect("validated binomial")
                .sample(rng) as f64,
            Family::Normal { mean, var } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + var.sqrt() * z
            }
            Family::Beta { a, b } => Beta::new(a, b).expect("validated beta").sample(rng),
            Family::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate)
                .expect("validated gamma")
                .sample(rng),
            Family::InverseGamma { shape, scale } => {
                1.0 / Gamma::new(shape, 1.0 / scale)
                    .expect("validated gamma")
                    .sample(rng)
            }
            Family::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

fn poisson_draw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else {
        Poisson::new(lambda).expect("positive rate").sample(rng)
    }
}
