use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{CycloneError, CycloneModelParams, CycloneObservation, CycloneTransforms, PARAM_NAMES};
use crate::distributions::gev::quantile_unchecked;
use crate::distributions::GevParams;
use crate::mcmc::PosteriorChain;
use crate::par::{self, Execution};
use crate::rng::{self, StreamId};
use crate::stats;

/// Attempts per stage before a predictive draw is rejected.
const MAX_ATTEMPTS: u32 = 100;

pub const MIN_SCORE_DRAWS: usize = 1000;

fn gev_draw<R: Rng + ?Sized>(p: &GevParams, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    quantile_unchecked(u, p)
}

/// Generates storms at fixed parameters with `z2 ~ N(0, 1)`.
pub fn synthetic_storms(params: &CycloneModelParams, n: usize, seed: u64) -> Vec<CycloneObservation> {
    let mut r = rng::stream(seed, StreamId::SYNTHETIC + 2);
    (0..n)
        .map(|i| {
            let z2: f64 = r.sample(StandardNormal);
            let z1 = gev_draw(&params.z1_gev(z2), &mut r);
            let x1 = gev_draw(&params.x1_gev(z1, z2), &mut r);
            let x2 = gev_draw(&params.x2_gev(x1, z1, z2), &mut r);
            CycloneObservation {
                id: format!("SYN{i:05}"),
                z1,
                z2,
                x1,
                x2: Some(x2),
            }
        })
        .collect()
}

/// Predictive draws on the model scale for one storm latitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclonePredictive {
    pub z2: f64,
    pub z1: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// Stage draws repeated because the value (or its natural-unit image)
    /// was not finite.
    pub resampled: u64,
    /// Draws dropped after exhausting the attempts at some stage.
    pub rejected: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalDraws {
    pub min_pressure_mb: Vec<f64>,
    pub max_wind_kt: Vec<f64>,
    pub damage_usd: Vec<f64>,
}

impl CyclonePredictive {
    pub fn len(&self) -> usize {
        self.z1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z1.is_empty()
    }

    pub fn natural(&self, t: &CycloneTransforms) -> NaturalDraws {
        NaturalDraws {
            min_pressure_mb: self.z1.iter().map(|&z| t.pressure(z)).collect(),
            max_wind_kt: self.x1.iter().map(|x| x.exp()).collect(),
            damage_usd: self.x2.iter().map(|x| x.exp()).collect(),
        }
    }
}

enum Draw {
    Ok([f64; 3], u64),
    Rejected(u64),
}

fn staged<R: Rng + ?Sized>(
    p: &GevParams,
    ok: impl Fn(f64) -> bool,
    rng: &mut R,
    resampled: &mut u64,
) -> Option<f64> {
    for attempt in 0..MAX_ATTEMPTS {
        let v = gev_draw(p, rng);
        if v.is_finite() && ok(v) {
            return Some(v);
        }
        if attempt + 1 < MAX_ATTEMPTS {
            *resampled += 1;
        }
    }
    None
}

/// Posterior predictive draws of `(z1, x1, x2)` at standardized latitude
/// `z2`. Each draw takes a uniformly chosen chain row and simulates the
/// three stages in order.
pub fn predict_cyclone(
    chain: &PosteriorChain,
    transforms: &CycloneTransforms,
    z2: f64,
    n_draws: usize,
    seed: u64,
    exec: Execution,
) -> Result<CyclonePredictive, CycloneError> {
    if chain.names.iter().map(String::as_str).ne(PARAM_NAMES) {
        return Err(CycloneError::ChainMismatch(format!(
            "columns {:?}, expected {:?}",
            chain.names, PARAM_NAMES
        )));
    }
    if chain.is_empty() {
        return Err(CycloneError::ChainMismatch("chain has no samples".into()));
    }
    let draws = par::draw_chunked(exec, n_draws, seed, StreamId::PREDICT, |r, _| {
        let p = CycloneModelParams::from_slice(chain.row(r.random_range(0..chain.len())));
        let mut resampled = 0;
        let z1 = staged(&p.z1_gev(z2), |v| transforms.pressure(v).is_finite(), r, &mut resampled);
        let Some(z1) = z1 else {
            return Draw::Rejected(resampled);
        };
        let Some(x1) = staged(&p.x1_gev(z1, z2), |v| v.exp().is_finite(), r, &mut resampled) else {
            return Draw::Rejected(resampled);
        };
        match staged(&p.x2_gev(x1, z1, z2), |v| v.exp().is_finite(), r, &mut resampled) {
            Some(x2) => Draw::Ok([z1, x1, x2], resampled),
            None => Draw::Rejected(resampled),
        }
    });
    let mut out = CyclonePredictive {
        z2,
        z1: Vec::with_capacity(n_draws),
        x1: Vec::with_capacity(n_draws),
        x2: Vec::with_capacity(n_draws),
        resampled: 0,
        rejected: 0,
    };
    for d in draws {
        match d {
            Draw::Ok([a, b, c], k) => {
                out.z1.push(a);
                out.x1.push(b);
                out.x2.push(c);
                out.resampled += k;
            }
            Draw::Rejected(k) => {
                out.rejected += 1;
                out.resampled += k;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaScore {
    /// Mid-rank percentile of the truth among the draws.
    pub alpha: f64,
    /// `2 min(alpha, 1 - alpha)`.
    pub delta: f64,
}

pub fn delta_from_alpha(alpha: f64) -> f64 {
    2.0 * alpha.min(1.0 - alpha)
}

pub fn delta_score(draws: &[f64], truth: f64) -> Result<DeltaScore, CycloneError> {
    if draws.len() < MIN_SCORE_DRAWS {
        return Err(CycloneError::TooFewDraws {
            n: draws.len(),
            min: MIN_SCORE_DRAWS,
        });
    }
    let alpha = stats::mid_rank_cdf(&stats::sorted(draws), truth);
    Ok(DeltaScore {
        alpha,
        delta: delta_from_alpha(alpha),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rarity {
    pub tail: Tail,
    pub tail_probability: f64,
    /// `1 / tail_probability`; `None` when no draw is as extreme.
    pub return_period: Option<f64>,
    /// Delta-method Monte Carlo standard error of the return period.
    pub return_period_se: Option<f64>,
    /// With `n` draws, a tail probability of zero means rarer than one in `n`.
    pub at_least: f64,
}

/// Return period of an observation at percentile `alpha` among `n_draws`.
pub fn rarity(alpha: f64, n_draws: usize) -> Rarity {
    let (tail, p) = if alpha <= 0.5 {
        (Tail::Lower, alpha)
    } else {
        (Tail::Upper, 1.0 - alpha)
    };
    let n = n_draws.max(1) as f64;
    let (rp, se) = if p > 0.0 {
        let se_p = (p * (1.0 - p) / n).sqrt();
        (Some(1.0 / p), Some(se_p / (p * p)))
    } else {
        (None, None)
    };
    Rarity {
        tail,
        tail_probability: p,
        return_period: rp,
        return_period_se: se,
        at_least: n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalScore {
    pub truth: f64,
    pub alpha: f64,
    pub delta: f64,
    pub lower: f64,
    pub upper: f64,
    /// Truth within the central 95% predictive interval.
    pub inside: bool,
    pub rarity: Rarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StormScore {
    pub min_pressure: MarginalScore,
    pub max_wind: MarginalScore,
    pub damage: MarginalScore,
}

fn marginal_score(draws: &[f64], truth: f64) -> Result<MarginalScore, CycloneError> {
    let d = delta_score(draws, truth)?;
    let s = stats::sorted(draws);
    let lower = stats::quantile_sorted(&s, 0.025);
    let upper = stats::quantile_sorted(&s, 0.975);
    Ok(MarginalScore {
        truth,
        alpha: d.alpha,
        delta: d.delta,
        lower,
        upper,
        inside: lower <= truth && truth <= upper,
        rarity: rarity(d.alpha, draws.len()),
    })
}

/// Scores observed `(minCP mb, maxWS kt, damage USD)` against natural-unit draws.
pub fn score_storm(draws: &NaturalDraws, truth: (f64, f64, f64)) -> Result<StormScore, CycloneError> {
    Ok(StormScore {
        min_pressure: marginal_score(&draws.min_pressure_mb, truth.0)?,
        max_wind: marginal_score(&draws.max_wind_kt, truth.1)?,
        damage: marginal_score(&draws.damage_usd, truth.2)?,
    })
}
