use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use super::{DistError, XI_ZERO_TOL};

/// Location, scale and shape of a generalized extreme value distribution.
///
/// Shape `xi < 0` gives the reverse-Weibull type with upper endpoint
/// `mu - sigma / xi`; `xi > 0` the Fréchet type bounded below at the same
/// expression; `xi == 0` the Gumbel type on the whole real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self, DistError> {
        let p = Self { mu, sigma, xi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DistError> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(DistError::InvalidParams(format!(
                "GEV scale must be positive and finite, got {}",
                self.sigma
            )));
        }
        if !self.mu.is_finite() || !self.xi.is_finite() {
            return Err(DistError::InvalidParams(format!(
                "GEV location and shape must be finite, got mu={} xi={}",
                self.mu, self.xi
            )));
        }
        Ok(())
    }

    #[inline]
    fn is_gumbel(&self) -> bool {
        self.xi.abs() < XI_ZERO_TOL
    }

    /// Finite endpoint of the support, if any: `(lower, upper)`.
    pub fn support(&self) -> (f64, f64) {
        if self.is_gumbel() {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else if self.xi < 0.0 {
            (f64::NEG_INFINITY, self.mu - self.sigma / self.xi)
        } else {
            (self.mu - self.sigma / self.xi, f64::INFINITY)
        }
    }

    /// `ln t(x)`, or `None` when `x` is outside the support.
    #[inline]
    fn ln_t(&self, x: f64) -> Option<f64> {
        let z = (x - self.mu) / self.sigma;
        if self.is_gumbel() {
            Some(-z)
        } else {
            let s = self.xi * z;
            if s <= -1.0 || s.is_nan() {
                None
            } else {
                Some(-s.ln_1p() / self.xi)
            }
        }
    }
}

/// `t(x)`: `(1 + xi (x - mu) / sigma)^(-1/xi)`, or `exp(-(x - mu) / sigma)`
/// in the Gumbel case.
pub fn gev_t(x: f64, p: &GevParams) -> Result<f64, DistError> {
    p.validate()?;
    p.ln_t(x).map(f64::exp).ok_or(DistError::Domain {
        value: x,
        reason: "1 + xi (x - mu) / sigma must be positive",
    })
}

/// Log density `-ln sigma + (xi + 1) ln t(x) - t(x)`; `-inf` off the support.
pub fn gev_logpdf(x: f64, p: &GevParams) -> Result<f64, DistError> {
    p.validate()?;
    Ok(logpdf_unchecked(x, p))
}

/// Hot-loop variant for callers that have already validated `p`.
#[inline]
pub(crate) fn logpdf_unchecked(x: f64, p: &GevParams) -> f64 {
    match p.ln_t(x) {
        Some(lt) => {
            let v = -p.sigma.ln() + (p.xi + 1.0) * lt - lt.exp();
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        }
        None => f64::NEG_INFINITY,
    }
}

pub fn gev_cdf(x: f64, p: &GevParams) -> Result<f64, DistError> {
    p.validate()?;
    if x.is_nan() {
        return Err(DistError::Domain {
            value: x,
            reason: "NaN has no probability",
        });
    }
    Ok(match p.ln_t(x) {
        Some(lt) => (-lt.exp()).exp(),
        // off-support: below the lower endpoint for xi > 0, above the upper for xi < 0
        None if p.xi > 0.0 => 0.0,
        None => 1.0,
    })
}

pub fn gev_quantile(u: f64, p: &GevParams) -> Result<f64, DistError> {
    p.validate()?;
    if !(u > 0.0 && u < 1.0) {
        return Err(DistError::Domain {
            value: u,
            reason: "quantile level must lie in (0, 1)",
        });
    }
    Ok(quantile_unchecked(u, p))
}

#[inline]
pub(crate) fn quantile_unchecked(u: f64, p: &GevParams) -> f64 {
    let ln_y = (-u.ln()).ln();
    if p.is_gumbel() {
        p.mu - p.sigma * ln_y
    } else {
        p.mu + p.sigma * (-p.xi * ln_y).exp_m1() / p.xi
    }
}

/// Inverse-CDF draw.
pub fn gev_sample<R: Rng + ?Sized>(p: &GevParams, rng: &mut R) -> Result<f64, DistError> {
    p.validate()?;
    let u: f64 = rng.sample(Open01);
    Ok(quantile_unchecked(u, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gp(mu: f64, sigma: f64, xi: f64) -> GevParams {
        GevParams::new(mu, sigma, xi).unwrap()
    }

    #[test]
    fn t_trivial_points() {
        assert_eq!(gev_t(0.0, &gp(0.0, 1.0, 0.0)).unwrap(), 1.0);
        assert_eq!(gev_t(2.5, &gp(2.5, 0.7, 0.5)).unwrap(), 1.0);
    }

    #[test]
    fn t_small_shape_matches_series() {
        // (1 + xi z)^(-1/xi) = e^{-z} (1 + xi z^2 / 2 + O(xi^2))
        let xi = 1e-9;
        let z: f64 = 1.0;
        let series = (-z).exp() * (1.0 + xi * z * z / 2.0);
        let got = gev_t(1.0, &gp(0.0, 1.0, xi)).unwrap();
        assert!(((got - series) / series).abs() < 1e-6);
        let gumbel = gev_t(1.0, &gp(0.0, 1.0, 0.0)).unwrap();
        assert!(((got - gumbel) / gumbel).abs() < 1e-6);
    }

    #[test]
    fn t_off_support_is_domain_error() {
        let err = gev_t(3.0, &gp(0.0, 1.0, -0.5)).unwrap_err();
        assert!(matches!(err, DistError::Domain { .. }));
    }

    #[test]
    fn logpdf_values() {
        assert_eq!(gev_logpdf(0.0, &gp(0.0, 1.0, 0.0)).unwrap(), -1.0);
        assert_eq!(
            gev_logpdf(3.0, &gp(0.0, 1.0, -0.5)).unwrap(),
            f64::NEG_INFINITY
        );
        // density vanishes at the reverse-Weibull endpoint when xi > -1
        assert_eq!(
            gev_logpdf(2.0, &gp(0.0, 1.0, -0.5)).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn logpdf_matches_cdf_central_difference() {
        let p = gp(0.2, 1.3, -0.3);
        let x = 0.7;
        let h = 1e-5;
        let deriv = (gev_cdf(x + h, &p).unwrap() - gev_cdf(x - h, &p).unwrap()) / (2.0 * h);
        let pdf = gev_logpdf(x, &p).unwrap().exp();
        assert!((pdf - deriv).abs() < 1e-6, "{pdf} vs {deriv}");
    }

    #[test]
    fn invalid_scale_rejected() {
        let p = GevParams {
            mu: 0.0,
            sigma: 0.0,
            xi: 0.1,
        };
        assert!(matches!(
            gev_logpdf(0.0, &p),
            Err(DistError::InvalidParams(_))
        ));
        assert!(gev_cdf(0.0, &p).is_err());
        assert!(GevParams::new(0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn cdf_limits_and_clamping() {
        assert!((gev_cdf(0.0, &gp(0.0, 1.0, 0.0)).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(gev_cdf(1e300, &gp(0.0, 1.0, 0.0)).unwrap(), 1.0);
        assert_eq!(gev_cdf(f64::INFINITY, &gp(0.0, 1.0, 0.4)).unwrap(), 1.0);
        assert_eq!(gev_cdf(-5.0, &gp(0.0, 1.0, 0.4)).unwrap(), 0.0);
        assert_eq!(gev_cdf(5.0, &gp(0.0, 1.0, -0.4)).unwrap(), 1.0);
    }

    #[test]
    fn quantile_inverse_identity() {
        assert_eq!(
            gev_quantile((-1.0f64).exp(), &gp(0.0, 1.0, 0.0)).unwrap(),
            0.0
        );
        for p in [gp(0.0, 1.0, 0.0), gp(1.0, 2.0, 0.3), gp(-1.0, 0.5, -0.4)] {
            for k in 1..100 {
                let u = k as f64 / 100.0;
                let x = gev_quantile(u, &p).unwrap();
                assert!((gev_cdf(x, &p).unwrap() - u).abs() < 1e-12);
            }
        }
        assert!(gev_quantile(0.0, &gp(0.0, 1.0, 0.0)).is_err());
        assert!(gev_quantile(1.0, &gp(0.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn quantile_matches_bisection() {
        let p = gp(2.0, 0.5, -0.2);
        let (mut lo, mut hi) = (-10.0, p.support().1);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gev_cdf(mid, &p).unwrap() < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = gev_quantile(0.5, &p).unwrap();
        assert!((q - 0.5 * (lo + hi)).abs() < 1e-9);
    }

    #[test]
    fn sampling_respects_support_and_seed() {
        let p = gp(0.0, 1.0, -0.5);
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x = gev_sample(&p, &mut a).unwrap();
            assert_eq!(x.to_bits(), gev_sample(&p, &mut b).unwrap().to_bits());
            assert!(x <= 2.0);
        }
    }
}
