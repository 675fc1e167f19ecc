//! Seasonal count and damage model for one intensity group.
//!
//! Per season: storm count `N` (negative binomial for the low group,
//! Poisson for the high group, log link on covariates), damaging-storm
//! count `L | N ~ Binomial(N, theta)`, and total damage `D`, which is zero
//! when `L = 0` and lognormal otherwise.

mod fit;
mod likelihood;
mod predict;

pub use fit::{fit_seasonal, sample_posterior, SeasonalFit, MIN_SEASONS};
pub use likelihood::{
    damage_log_likelihood, frequency_log_likelihood, landfall_log_likelihood, log_prior,
    seasonal_log_likelihood, seasonal_log_posterior,
};
pub use predict::{
    count_mass, expected_damage, log_damage_density, predict_season, predictive_check,
    simulate_seasons, synthetic_covariates, DensityBin, MarginalCheck, PredictiveCheck,
    PredictiveSample,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    CovariateIndex, CovariateRow, IngestError, IntensityGroup, SeasonObservation, Standardizer,
};
use crate::mcmc::McmcError;

#[derive(Debug, Error)]
pub enum SeasonalError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Mcmc(#[from] McmcError),
    #[error("season {season} belongs to the {found} group, model is for {expected}")]
    WrongGroup {
        season: i32,
        expected: IntensityGroup,
        found: IntensityGroup,
    },
    #[error("season {season}: {reason}")]
    Inconsistent { season: i32, reason: String },
    #[error("need at least {min} seasons to fit, got {n}")]
    TooFewSeasons { n: usize, min: usize },
    #[error("covariate dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("chain does not match the model: {0}")]
    ChainMismatch(String),
}

/// Which covariates enter the log-rate, and how each is standardized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateDesign {
    pub columns: Vec<CovariateIndex>,
    pub standardizers: Vec<Standardizer>,
}

impl CovariateDesign {
    /// Standardizes each selected column with its mean and sd over `rows`.
    pub fn fit(rows: &[CovariateRow], columns: &[CovariateIndex]) -> Result<Self, SeasonalError> {
        let mut standardizers = Vec::with_capacity(columns.len());
        for &c in columns {
            let k = column_offset(c);
            let mut xs = Vec::with_capacity(rows.len());
            for r in rows {
                check_width(r)?;
                xs.push(r.values[k]);
            }
            let s = Standardizer::fit(&xs).map_err(|e| match e {
                IngestError::DegenerateSeries(m) => {
                    IngestError::DegenerateSeries(format!("covariate {}: {m}", c.label()))
                }
                other => other,
            })?;
            standardizers.push(s);
        }
        Ok(Self {
            columns: columns.to_vec(),
            standardizers,
        })
    }

    /// Selected columns used as-is (mean 0, sd 1).
    pub fn identity(columns: &[CovariateIndex]) -> Self {
        Self {
            columns: columns.to_vec(),
            standardizers: vec![Standardizer { mean: 0.0, sd: 1.0 }; columns.len()],
        }
    }

    /// Number of coefficients, intercept included.
    pub fn dim(&self) -> usize {
        1 + self.columns.len()
    }

    /// Design row `[1, z_1, ..]` for a raw covariate row.
    pub fn row(&self, r: &CovariateRow) -> Result<Vec<f64>, SeasonalError> {
        check_width(r)?;
        let mut x = Vec::with_capacity(self.dim());
        x.push(1.0);
        for (c, s) in self.columns.iter().zip(&self.standardizers) {
            x.push(s.apply(r.values[column_offset(*c)]));
        }
        Ok(x)
    }

    pub fn coefficient_names(&self) -> Vec<String> {
        std::iter::once("beta_intercept".to_string())
            .chain(self.columns.iter().map(|c| format!("beta_{}", c.label())))
            .collect()
    }
}

fn column_offset(c: CovariateIndex) -> usize {
    1 + CovariateIndex::ALL
        .iter()
        .position(|&x| x == c)
        .expect("every index is listed")
}

fn check_width(r: &CovariateRow) -> Result<(), SeasonalError> {
    let expected = 1 + CovariateIndex::ALL.len();
    if r.values.len() != expected {
        return Err(SeasonalError::DimensionMismatch {
            expected,
            got: r.values.len(),
        });
    }
    Ok(())
}

/// Prior hyperparameters. Defaults are vague: `beta ~ N(0, 1e5 I)`,
/// `theta ~ Beta(1, 1)`, `mu ~ N(0, 1e5)`, `1/sigma^2 ~ Gamma(1, 1)`,
/// `r ~ U(0, 70)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalPrior {
    pub beta_var: f64,
    pub theta_a: f64,
    pub theta_b: f64,
    pub mu_mean: f64,
    pub mu_var: f64,
    /// Gamma shape and rate for the damage precision.
    pub tau_shape: f64,
    pub tau_rate: f64,
    pub r_max: f64,
}

impl Default for SeasonalPrior {
    fn default() -> Self {
        Self {
            beta_var: 1e5,
            theta_a: 1.0,
            theta_b: 1.0,
            mu_mean: 0.0,
            mu_var: 1e5,
            tau_shape: 1.0,
            tau_rate: 1.0,
            r_max: 70.0,
        }
    }
}

impl SeasonalPrior {
    pub fn validate(&self) -> Result<(), SeasonalError> {
        let vals = [
            ("beta_var", self.beta_var),
            ("theta_a", self.theta_a),
            ("theta_b", self.theta_b),
            ("mu_var", self.mu_var),
            ("tau_shape", self.tau_shape),
            ("tau_rate", self.tau_rate),
            ("r_max", self.r_max),
        ];
        for (name, v) in vals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SeasonalError::InvalidParams(format!(
                    "prior {name} must be positive, got {v}"
                )));
            }
        }
        if !self.mu_mean.is_finite() {
            return Err(SeasonalError::InvalidParams("prior mu_mean must be finite".into()));
        }
        Ok(())
    }
}

/// Everything needed to interpret a seasonal chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalModel {
    pub group: IntensityGroup,
    pub design: CovariateDesign,
    pub prior: SeasonalPrior,
}

/// Positions of the parameters in a chain row:
/// `beta.., [r], theta, mu_dam, sigma_dam`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub q: usize,
    pub r: Option<usize>,
    pub theta: usize,
    pub mu: usize,
    pub sigma: usize,
}

impl ParamLayout {
    pub fn new(group: IntensityGroup, q: usize) -> Self {
        let r = (group == IntensityGroup::Low).then_some(q);
        let theta = q + usize::from(r.is_some());
        Self {
            q,
            r,
            theta,
            mu: theta + 1,
            sigma: theta + 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma + 1
    }
}

impl SeasonalModel {
    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(self.group, self.design.dim())
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = self.design.coefficient_names();
        if self.group == IntensityGroup::Low {
            names.push("r".into());
        }
        names.extend(["theta", "mu_dam", "sigma_dam"].map(String::from));
        names
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalModelParams {
    pub group: IntensityGroup,
    pub beta: Vec<f64>,
    /// Over-dispersion; present exactly for the low group.
    pub r: Option<f64>,
    pub theta: f64,
    pub mu_dam: f64,
    pub sigma_dam: f64,
}

impl SeasonalModelParams {
    pub fn validate(&self) -> Result<(), SeasonalError> {
        let bad = |m: String| Err(SeasonalError::InvalidParams(m));
        match (self.group, self.r) {
            (IntensityGroup::Low, None) => return bad("low group needs r".into()),
            (IntensityGroup::High, Some(_)) => return bad("high group has no r".into()),
            (_, Some(r)) if !(r > 0.0 && r.is_finite()) => {
                return bad(format!("r must be positive, got {r}"))
            }
            _ => {}
        }
        if self.beta.is_empty() || self.beta.iter().any(|b| !b.is_finite()) {
            return bad("beta must be non-empty and finite".into());
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0, 1], got {}", self.theta));
        }
        if !self.mu_dam.is_finite() || !(self.sigma_dam > 0.0 && self.sigma_dam.is_finite()) {
            return bad(format!(
                "need finite mu_dam and positive sigma_dam, got ({}, {})",
                self.mu_dam, self.sigma_dam
            ));
        }
        Ok(())
    }

    /// Reads one chain row.
    pub fn from_row(group: IntensityGroup, layout: &ParamLayout, row: &[f64]) -> Self {
        Self {
            group,
            beta: row[..layout.q].to_vec(),
            r: layout.r.map(|i| row[i]),
            theta: row[layout.theta],
            mu_dam: row[layout.mu],
            sigma_dam: row[layout.sigma],
        }
    }

    pub fn to_row(&self) -> Vec<f64> {
        let mut v = self.beta.clone();
        v.extend(self.r);
        v.extend([self.theta, self.mu_dam, self.sigma_dam]);
        v
    }

    /// `exp(x . beta)`.
    pub fn rate(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>().exp()
    }

    /// Mean of a lognormal damage draw, `exp(mu + sigma^2 / 2)`.
    pub fn expected_damage(&self) -> f64 {
        (self.mu_dam + 0.5 * self.sigma_dam * self.sigma_dam).exp()
    }
}

/// One season reduced to what the likelihood needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSeason {
    pub season: i32,
    pub n: u32,
    pub l: u32,
    pub d: f64,
    pub x: Vec<f64>,
}

/// Seasons of one group with design rows attached.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalData {
    pub group: IntensityGroup,
    pub seasons: Vec<PreparedSeason>,
}

impl SeasonalData {
    pub fn prepare(
        group: IntensityGroup,
        design: &CovariateDesign,
        observations: &[SeasonObservation],
    ) -> Result<Self, SeasonalError> {
        let mut seasons = Vec::with_capacity(observations.len());
        for o in observations {
            if o.group != group {
                return Err(SeasonalError::WrongGroup {
                    season: o.season,
                    expected: group,
                    found: o.group,
                });
            }
            check_observation(o.season, o.n_storms, o.n_damaging, o.total_damage_usd)?;
            seasons.push(PreparedSeason {
                season: o.season,
                n: o.n_storms,
                l: o.n_damaging,
                d: o.total_damage_usd,
                x: design.row(&o.covariates)?,
            });
        }
        Ok(Self { group, seasons })
    }

    pub fn empty(group: IntensityGroup) -> Self {
        Self {
            group,
            seasons: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.seasons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seasons.is_empty()
    }
}

fn check_observation(season: i32, n: u32, l: u32, d: f64) -> Result<(), SeasonalError> {
    let reason = if l > n {
        Some(format!("{l} damaging storms out of {n}"))
    } else if !(d >= 0.0 && d.is_finite()) {
        Some(format!("damage {d} is not a finite non-negative amount"))
    } else if d > 0.0 && l == 0 {
        Some(format!("damage {d} with no damaging storm"))
    } else if d == 0.0 && l > 0 {
        Some(format!("{l} damaging storms but zero damage"))
    } else {
        None
    };
    match reason {
        Some(reason) => Err(SeasonalError::Inconsistent { season, reason }),
        None => Ok(()),
    }
}
