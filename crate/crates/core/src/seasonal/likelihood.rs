use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use super::{SeasonalData, SeasonalError, SeasonalModel, SeasonalModelParams};
use crate::distributions::Family;

fn check_group(params: &SeasonalModelParams, data: &SeasonalData) -> Result<(), SeasonalError> {
    params.validate()?;
    if params.group != data.group {
        return Err(SeasonalError::WrongGroup {
            season: data.seasons.first().map_or(0, |s| s.season),
            expected: params.group,
            found: data.group,
        });
    }
    if let Some(s) = data.seasons.iter().find(|s| s.x.len() != params.beta.len()) {
        return Err(SeasonalError::DimensionMismatch {
            expected: params.beta.len(),
            got: s.x.len(),
        });
    }
    Ok(())
}

/// `ln (1 - (1 - theta)^n)`, the probability that some storm does damage.
#[inline]
pub(crate) fn ln_any_damage(theta: f64, n: u32) -> f64 {
    (-(f64::from(n) * (-theta).ln_1p()).exp_m1()).ln()
}

pub(crate) fn frequency_term(p: &SeasonalModelParams, n: u32, x: &[f64]) -> f64 {
    let lambda = p.rate(x);
    let family = match p.r {
        Some(r) => Family::NegativeBinomial {
            r,
            p: r / (r + lambda),
        },
        None => Family::Poisson { lambda },
    };
    family.ln_density_unchecked(f64::from(n))
}

pub(crate) fn landfall_term(theta: f64, n: u32, l: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    Family::Binomial {
        n: u64::from(n),
        theta,
    }
    .ln_density_unchecked(f64::from(l))
}

pub(crate) fn damage_term(p: &SeasonalModelParams, n: u32, d: f64) -> f64 {
    if n == 0 {
        0.0
    } else if d == 0.0 {
        f64::from(n) * (-p.theta).ln_1p()
    } else {
        ln_any_damage(p.theta, n)
            + Family::Lognormal {
                mu: p.mu_dam,
                sigma: p.sigma_dam,
            }
            .ln_density_unchecked(d)
    }
}

/// Storm-count log-likelihood over all seasons.
pub fn frequency_log_likelihood(
    params: &SeasonalModelParams,
    data: &SeasonalData,
) -> Result<f64, SeasonalError> {
    check_group(params, data)?;
    Ok(data.seasons.iter().map(|s| frequency_term(params, s.n, &s.x)).sum())
}

/// Damaging-storm count log-likelihood, `Binomial(L; N, theta)`.
pub fn landfall_log_likelihood(
    params: &SeasonalModelParams,
    data: &SeasonalData,
) -> Result<f64, SeasonalError> {
    check_group(params, data)?;
    Ok(data.seasons.iter().map(|s| landfall_term(params.theta, s.n, s.l)).sum())
}

/// Zero-inflated lognormal damage log-likelihood. A season with `N = n`
/// storms has `P(D = 0) = (1 - theta)^n`; positive damage carries weight
/// `1 - (1 - theta)^n` times the lognormal density.
pub fn damage_log_likelihood(
    params: &SeasonalModelParams,
    data: &SeasonalData,
) -> Result<f64, SeasonalError> {
    check_group(params, data)?;
    Ok(data.seasons.iter().map(|s| damage_term(params, s.n, s.d)).sum())
}

/// Sum of the count, damaging-count and damage terms.
pub fn seasonal_log_likelihood(
    params: &SeasonalModelParams,
    data: &SeasonalData,
) -> Result<f64, SeasonalError> {
    check_group(params, data)?;
    Ok(log_likelihood_unchecked(params, data))
}

pub(crate) fn log_likelihood_unchecked(p: &SeasonalModelParams, data: &SeasonalData) -> f64 {
    data.seasons
        .iter()
        .map(|s| frequency_term(p, s.n, &s.x) + landfall_term(p.theta, s.n, s.l) + damage_term(p, s.n, s.d))
        .sum()
}

/// Log prior density on the stored scale (`sigma_dam`, not its precision).
pub fn log_prior(model: &SeasonalModel, p: &SeasonalModelParams) -> f64 {
    let pr = &model.prior;
    if !(p.theta > 0.0 && p.theta < 1.0) || !(p.sigma_dam > 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut lp = 0.0;
    let beta_norm = -0.5 * (2.0 * PI * pr.beta_var).ln();
    for b in &p.beta {
        lp += beta_norm - 0.5 * b * b / pr.beta_var;
    }
    if let Some(r) = p.r {
        if !(r > 0.0 && r < pr.r_max) {
            return f64::NEG_INFINITY;
        }
        lp -= pr.r_max.ln();
    }
    lp += ln_gamma(pr.theta_a + pr.theta_b) - ln_gamma(pr.theta_a) - ln_gamma(pr.theta_b)
        + (pr.theta_a - 1.0) * p.theta.ln()
        + (pr.theta_b - 1.0) * (-p.theta).ln_1p();
    let dm = p.mu_dam - pr.mu_mean;
    lp += -0.5 * (2.0 * PI * pr.mu_var).ln() - 0.5 * dm * dm / pr.mu_var;
    // tau = sigma^-2 ~ Gamma(shape, rate); |d tau / d sigma| = 2 sigma^-3
    let tau = 1.0 / (p.sigma_dam * p.sigma_dam);
    lp += pr.tau_shape * pr.tau_rate.ln() - ln_gamma(pr.tau_shape) + (pr.tau_shape - 1.0) * tau.ln()
        - pr.tau_rate * tau
        + std::f64::consts::LN_2
        - 3.0 * p.sigma_dam.ln();
    lp
}

pub fn seasonal_log_posterior(
    model: &SeasonalModel,
    params: &SeasonalModelParams,
    data: &SeasonalData,
) -> Result<f64, SeasonalError> {
    let ll = seasonal_log_likelihood(params, data)?;
    Ok(ll + log_prior(model, params))
}

/// Log posterior of a chain row, with `-inf` off the support.
pub(crate) fn row_log_posterior(model: &SeasonalModel, data: &SeasonalData, row: &[f64]) -> f64 {
    let p = SeasonalModelParams::from_row(model.group, &model.layout(), row);
    let prior = log_prior(model, &p);
    if !prior.is_finite() {
        return f64::NEG_INFINITY;
    }
    let ll = log_likelihood_unchecked(&p, data);
    if ll.is_nan() {
        f64::NEG_INFINITY
    } else {
        ll + prior
    }
}
