//! Storm-level hierarchical GEV model.
//!
//! For a damaging storm with standardized mean latitude `z2`:
//!
//! ```text
//! z1 | z2          ~ GEV(a0 + a1 z2,                    s_z1, xi_z1)
//! x1 | z1, z2      ~ GEV(b0 + b1 z1 + b2 z2,            s_x1, xi_x1)
//! x2 | x1, z1, z2  ~ GEV(g0 + g1 x1 + g2 z1 + g3 z2,    s_x2, xi_x2)
//! ```
//!
//! `z1` is standardized log minimum pressure, `x1` log maximum wind (kt),
//! `x2` log damage (USD).

mod bayes;
mod mle;
mod predict;

pub use bayes::{fit_bayes, sample_cyclone_posterior, CycloneFit};
pub use mle::{fit_mle, moment_initializer, ConvergenceReport, MleFit, MleOptions, StartReport};
pub use predict::{
    delta_from_alpha, delta_score, predict_cyclone, rarity, score_storm, synthetic_storms,
    CyclonePredictive, DeltaScore, MarginalScore, NaturalDraws, Rarity, StormScore, Tail,
    MIN_SCORE_DRAWS,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::distributions::gev::logpdf_unchecked;
use crate::distributions::GevParams;
use crate::ingest::{IngestError, SeasonWindow, Standardizer, StormRecord};
use crate::mcmc::{McmcError, Support};

#[derive(Debug, Error)]
pub enum CycloneError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Mcmc(#[from] McmcError),
    #[error("storm {0} has no damage value (x2); only damaging storms enter the fit")]
    Incomplete(String),
    #[error("need at least {min} complete storms, got {n}")]
    TooFewStorms { n: usize, min: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no optimizer start converged for the {equation} equation")]
    NoConvergence { equation: &'static str, report: Box<ConvergenceReport> },
    #[error("need at least {min} predictive draws, got {n}")]
    TooFewDraws { n: usize, min: usize },
    #[error("chain does not match the model: {0}")]
    ChainMismatch(String),
}

pub const MIN_STORMS: usize = 30;

pub const PARAM_NAMES: [&str; 15] = [
    "alpha0", "alpha1", "sigma_z1", "xi_z1", "beta0", "beta1", "beta2", "sigma_x1", "xi_x1", "gamma0", "gamma1",
    "gamma2", "gamma3", "sigma_x2", "xi_x2",
];

/// One of the three conditional GEV equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Z1,
    X1,
    X2,
}

impl Equation {
    pub const ALL: [Equation; 3] = [Equation::Z1, Equation::X1, Equation::X2];

    /// Parameter indices `[location coefficients.., sigma, xi]`.
    pub fn indices(self) -> std::ops::Range<usize> {
        match self {
            Equation::Z1 => 0..4,
            Equation::X1 => 4..9,
            Equation::X2 => 9..15,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Equation::Z1 => "z1",
            Equation::X1 => "x1",
            Equation::X2 => "x2",
        }
    }

    /// Response and location covariates (after the intercept) for a storm.
    #[inline]
    fn response(self, o: &CycloneObservation) -> (f64, [f64; 3]) {
        match self {
            Equation::Z1 => (o.z1, [o.z2, 0.0, 0.0]),
            Equation::X1 => (o.x1, [o.z1, o.z2, 0.0]),
            Equation::X2 => (o.x2.unwrap_or(f64::NAN), [o.x1, o.z1, o.z2]),
        }
    }

    fn n_covariates(self) -> usize {
        self.indices().len() - 3
    }
}

/// A damaging storm on the model scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycloneObservation {
    pub id: String,
    pub z1: f64,
    pub z2: f64,
    pub x1: f64,
    /// `ln` damage; present iff damage > 0.
    pub x2: Option<f64>,
}

/// Training-window standardizations of `ln minCP` (`z1`) and mean latitude (`z2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycloneTransforms {
    pub log_pressure: Standardizer,
    pub latitude: Standardizer,
}

impl CycloneTransforms {
    pub fn z1(&self, min_pressure_mb: f64) -> f64 {
        self.log_pressure.apply(min_pressure_mb.ln())
    }

    pub fn pressure(&self, z1: f64) -> f64 {
        self.log_pressure.invert(z1).exp()
    }

    pub fn z2(&self, latitude: f64) -> f64 {
        self.latitude.apply(latitude)
    }
}

/// Damaging storms with a recorded pressure, in the model's scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycloneDataset {
    pub observations: Vec<CycloneObservation>,
    pub transforms: CycloneTransforms,
    /// Damaging storms dropped for lack of a pressure value.
    pub skipped: Vec<String>,
}

impl CycloneDataset {
    /// Selects damaging storms (optionally within `window`) and fits the
    /// standardizations on them.
    pub fn from_records(records: &[StormRecord], window: Option<SeasonWindow>) -> Result<Self, CycloneError> {
        let mut skipped = Vec::new();
        let mut kept = Vec::new();
        for r in records {
            if !r.is_damaging() || window.is_some_and(|w| !w.contains(r.season)) {
                continue;
            }
            match r.min_central_pressure {
                Some(p) => kept.push((r, p)),
                None => skipped.push(r.id.clone()),
            }
        }
        let lp: Vec<f64> = kept.iter().map(|(_, p)| p.ln()).collect();
        let lat: Vec<f64> = kept.iter().map(|(r, _)| r.mean_latitude).collect();
        let transforms = CycloneTransforms {
            log_pressure: Standardizer::fit(&lp)?,
            latitude: Standardizer::fit(&lat)?,
        };
        let observations = kept
            .iter()
            .map(|(r, p)| CycloneObservation {
                id: r.id.clone(),
                z1: transforms.z1(*p),
                z2: transforms.z2(r.mean_latitude),
                x1: r.max_wind_speed.ln(),
                x2: Some(r.damage_usd_2019.ln()),
            })
            .collect();
        Ok(Self {
            observations,
            transforms,
            skipped,
        })
    }
}

/// The 15 parameters in the order of [`PARAM_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycloneModelParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub sigma_z1: f64,
    pub xi_z1: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub sigma_x1: f64,
    pub xi_x1: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub sigma_x2: f64,
    pub xi_x2: f64,
}

impl CycloneModelParams {
    pub fn from_slice(v: &[f64]) -> Self {
        assert_eq!(v.len(), 15, "cyclone parameter vector has 15 entries");
        Self {
            alpha0: v[0],
            alpha1: v[1],
            sigma_z1: v[2],
            xi_z1: v[3],
            beta0: v[4],
            beta1: v[5],
            beta2: v[6],
            sigma_x1: v[7],
            xi_x1: v[8],
            gamma0: v[9],
            gamma1: v[10],
            gamma2: v[11],
            gamma3: v[12],
            sigma_x2: v[13],
            xi_x2: v[14],
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.alpha0,
            self.alpha1,
            self.sigma_z1,
            self.xi_z1,
            self.beta0,
            self.beta1,
            self.beta2,
            self.sigma_x1,
            self.xi_x1,
            self.gamma0,
            self.gamma1,
            self.gamma2,
            self.gamma3,
            self.sigma_x2,
            self.xi_x2,
        ]
    }

    pub fn validate(&self, prior: &CyclonePrior) -> Result<(), CycloneError> {
        let v = self.to_vec();
        for (i, s) in prior.supports().iter().enumerate() {
            if !s.contains(v[i]) {
                return Err(CycloneError::InvalidParams(format!(
                    "{} = {} outside {:?}",
                    PARAM_NAMES[i], v[i], s
                )));
            }
        }
        Ok(())
    }

    pub fn z1_gev(&self, z2: f64) -> GevParams {
        GevParams {
            mu: self.alpha0 + self.alpha1 * z2,
            sigma: self.sigma_z1,
            xi: self.xi_z1,
        }
    }

    pub fn x1_gev(&self, z1: f64, z2: f64) -> GevParams {
        GevParams {
            mu: self.beta0 + self.beta1 * z1 + self.beta2 * z2,
            sigma: self.sigma_x1,
            xi: self.xi_x1,
        }
    }

    pub fn x2_gev(&self, x1: f64, z1: f64, z2: f64) -> GevParams {
        GevParams {
            mu: self.gamma0 + self.gamma1 * x1 + self.gamma2 * z1 + self.gamma3 * z2,
            sigma: self.sigma_x2,
            xi: self.xi_x2,
        }
    }
}

/// Prior hyperparameters. Location coefficients are normal with the given
/// variances, scales inverse-gamma `(shape, scale)`, shapes uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclonePrior {
    pub alpha_var: f64,
    pub beta_var: f64,
    pub gamma_var: f64,
    pub sigma_z1: (f64, f64),
    pub sigma_x1: (f64, f64),
    pub sigma_x2: (f64, f64),
    pub xi_z1: (f64, f64),
    pub xi_x1: (f64, f64),
    pub xi_x2: (f64, f64),
}

impl Default for CyclonePrior {
    fn default() -> Self {
        Self {
            alpha_var: 100.0,
            beta_var: 100.0,
            gamma_var: 1000.0,
            sigma_z1: (1.0, 1.0),
            sigma_x1: (1.0, 1.0),
            sigma_x2: (2.0, 3.0),
            xi_z1: (-1.0, 1.0),
            xi_x1: (-0.5, 0.5),
            xi_x2: (-0.5, 0.5),
        }
    }
}

fn ln_normal(x: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - 0.5 * x * x / var
}

fn ln_inv_gamma(x: f64, (shape, scale): (f64, f64)) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

fn ln_uniform(x: f64, (lo, hi): (f64, f64)) -> f64 {
    if x > lo && x < hi {
        -(hi - lo).ln()
    } else {
        f64::NEG_INFINITY
    }
}

impl CyclonePrior {
    pub fn supports(&self) -> [Support; 15] {
        let b = |(lo, hi): (f64, f64)| Support::Bounded { lo, hi };
        let (r, p) = (Support::Real, Support::Positive);
        [
            r,
            r,
            p,
            b(self.xi_z1),
            r,
            r,
            r,
            p,
            b(self.xi_x1),
            r,
            r,
            r,
            r,
            p,
            b(self.xi_x2),
        ]
    }

    pub fn validate(&self) -> Result<(), CycloneError> {
        let ok = [self.alpha_var, self.beta_var, self.gamma_var]
            .iter()
            .chain([self.sigma_z1, self.sigma_x1, self.sigma_x2].iter().flat_map(|(a, b)| [a, b]))
            .all(|v| *v > 0.0 && v.is_finite())
            && [self.xi_z1, self.xi_x1, self.xi_x2].iter().all(|(lo, hi)| lo < hi);
        if ok {
            Ok(())
        } else {
            Err(CycloneError::InvalidParams(format!("bad prior hyperparameters {self:?}")))
        }
    }

    /// Log prior density of one equation's parameter block.
    pub fn ln_density_block(&self, eq: Equation, block: &[f64]) -> f64 {
        let (var, ig, xi) = match eq {
            Equation::Z1 => (self.alpha_var, self.sigma_z1, self.xi_z1),
            Equation::X1 => (self.beta_var, self.sigma_x1, self.xi_x1),
            Equation::X2 => (self.gamma_var, self.sigma_x2, self.xi_x2),
        };
        let k = block.len();
        let loc: f64 = block[..k - 2].iter().map(|&c| ln_normal(c, var)).sum();
        loc + ln_inv_gamma(block[k - 2], ig) + ln_uniform(block[k - 1], xi)
    }

    pub fn ln_density(&self, params: &[f64]) -> f64 {
        Equation::ALL
            .iter()
            .map(|&eq| self.ln_density_block(eq, &params[eq.indices()]))
            .sum()
    }
}

/// Log-likelihood of one equation given its parameter block
/// `[intercept, slopes.., sigma, xi]`. Observations must be complete.
pub(crate) fn equation_loglik(eq: Equation, block: &[f64], obs: &[CycloneObservation]) -> f64 {
    let k = eq.n_covariates();
    let sigma = block[k + 1];
    let xi = block[k + 2];
    if !(sigma > 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut total = 0.0;
    for o in obs {
        let (y, cov) = eq.response(o);
        let mut mu = block[0];
        for j in 0..k {
            mu += block[1 + j] * cov[j];
        }
        let v = logpdf_unchecked(y, &GevParams { mu, sigma, xi });
        if v == f64::NEG_INFINITY {
            return v;
        }
        total += v;
    }
    total
}

fn check_complete(obs: &[CycloneObservation]) -> Result<(), CycloneError> {
    match obs.iter().find(|o| o.x2.is_none()) {
        Some(o) => Err(CycloneError::Incomplete(o.id.clone())),
        None => Ok(()),
    }
}

/// Sum over storms of the three conditional GEV log densities; `-inf` if
/// any value falls outside its conditional support.
pub fn joint_loglik(params: &CycloneModelParams, obs: &[CycloneObservation]) -> Result<f64, CycloneError> {
    check_complete(obs)?;
    for (name, s) in [("sigma_z1", params.sigma_z1), ("sigma_x1", params.sigma_x1), ("sigma_x2", params.sigma_x2)] {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CycloneError::InvalidParams(format!("{name} must be positive, got {s}")));
        }
    }
    let v = params.to_vec();
    Ok(joint_loglik_unchecked(&v, obs))
}

pub(crate) fn joint_loglik_unchecked(v: &[f64], obs: &[CycloneObservation]) -> f64 {
    let mut total = 0.0;
    for eq in Equation::ALL {
        total += equation_loglik(eq, &v[eq.indices()], obs);
        if total == f64::NEG_INFINITY {
            break;
        }
    }
    total
}

/// What a cyclone chain file needs besides its samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycloneModel {
    pub transforms: CycloneTransforms,
    pub prior: CyclonePrior,
}
