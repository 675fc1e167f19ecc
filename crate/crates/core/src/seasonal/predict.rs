use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{CovariateDesign, SeasonalError, SeasonalModel, SeasonalModelParams};
use crate::distributions::Family;
use crate::ingest::{CovariateRow, IntensityGroup, SeasonObservation};
use crate::mcmc::PosteriorChain;
use crate::par::{self, Execution};
use crate::rng::{self, StreamId};
use crate::stats;

/// One `(N, L, D)` draw for a season with design row `x`.
fn draw_season<R: Rng + ?Sized>(p: &SeasonalModelParams, x: &[f64], rng: &mut R) -> (u32, u32, f64) {
    let lambda = p.rate(x);
    let freq = match p.r {
        Some(r) => Family::NegativeBinomial {
            r,
            p: r / (r + lambda),
        },
        None => Family::Poisson { lambda },
    };
    let n = freq.sample_unchecked(rng) as u32;
    let l = if n == 0 || p.theta <= 0.0 {
        0
    } else {
        Family::Binomial {
            n: u64::from(n),
            theta: p.theta,
        }
        .sample_unchecked(rng) as u32
    };
    let d = if l == 0 {
        0.0
    } else {
        Family::Lognormal {
            mu: p.mu_dam,
            sigma: p.sigma_dam,
        }
        .sample_unchecked(rng)
    };
    (n, l, d)
}

/// Simulates one observation per covariate row from fixed parameters.
pub fn simulate_seasons(
    params: &SeasonalModelParams,
    design: &CovariateDesign,
    rows: &[CovariateRow],
    seed: u64,
) -> Result<Vec<SeasonObservation>, SeasonalError> {
    params.validate()?;
    if params.beta.len() != design.dim() {
        return Err(SeasonalError::DimensionMismatch {
            expected: design.dim(),
            got: params.beta.len(),
        });
    }
    let mut r = rng::stream(seed, StreamId::SYNTHETIC);
    rows.iter()
        .map(|row| {
            let x = design.row(row)?;
            let (n, l, d) = draw_season(params, &x, &mut r);
            Ok(SeasonObservation {
                season: row.season,
                group: params.group,
                n_storms: n,
                n_damaging: l,
                total_damage_usd: d,
                covariates: row.clone(),
            })
        })
        .collect()
}

/// Plausible raw covariate rows for `n` consecutive seasons.
pub fn synthetic_covariates(first_season: i32, n: usize, seed: u64) -> Vec<CovariateRow> {
    let mut r = rng::stream(seed, StreamId::SYNTHETIC + 1);
    // (mean, sd) per index, roughly the scale of the observed series
    let scales = [(0.0, 0.2), (0.0, 1.0), (0.0, 1.0), (0.0, 0.8), (28.0, 0.4), (80.0, 50.0)];
    (0..n)
        .map(|i| {
            let mut values = vec![1.0];
            for (m, s) in scales {
                let z: f64 = r.sample(StandardNormal);
                values.push(m + s * z);
            }
            CovariateRow {
                season: first_season + i as i32,
                values,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSample {
    pub season: i32,
    pub group: IntensityGroup,
    pub n: Vec<u32>,
    pub l: Vec<u32>,
    pub d: Vec<f64>,
}

impl PredictiveSample {
    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    pub fn p_zero_damage(&self) -> f64 {
        self.d.iter().filter(|&&d| d == 0.0).count() as f64 / self.d.len().max(1) as f64
    }
}

fn check_chain(chain: &PosteriorChain, model: &SeasonalModel) -> Result<(), SeasonalError> {
    let want = model.parameter_names();
    if chain.names != want {
        return Err(SeasonalError::ChainMismatch(format!(
            "columns {:?}, model expects {:?}",
            chain.names, want
        )));
    }
    if chain.is_empty() {
        return Err(SeasonalError::ChainMismatch("chain has no samples".into()));
    }
    Ok(())
}

/// Posterior predictive draws for one season. Each draw picks a chain row
/// uniformly, then simulates `N`, `L | N` and `D | L`.
pub fn predict_season(
    chain: &PosteriorChain,
    model: &SeasonalModel,
    covariates: &CovariateRow,
    n_draws: usize,
    seed: u64,
    exec: Execution,
) -> Result<PredictiveSample, SeasonalError> {
    check_chain(chain, model)?;
    let x = model.design.row(covariates)?;
    let layout = model.layout();
    let draws = par::draw_chunked(exec, n_draws, seed, StreamId::PREDICT, |r, _| {
        let j = r.random_range(0..chain.len());
        let p = SeasonalModelParams::from_row(model.group, &layout, chain.row(j));
        draw_season(&p, &x, r)
    });
    let mut out = PredictiveSample {
        season: covariates.season,
        group: model.group,
        n: Vec::with_capacity(n_draws),
        l: Vec::with_capacity(n_draws),
        d: Vec::with_capacity(n_draws),
    };
    for (n, l, d) in draws {
        out.n.push(n);
        out.l.push(l);
        out.d.push(d);
    }
    Ok(out)
}

/// `exp(mu_dam + sigma_dam^2 / 2)` for every chain row.
pub fn expected_damage(chain: &PosteriorChain, model: &SeasonalModel) -> Result<Vec<f64>, SeasonalError> {
    check_chain(chain, model)?;
    let layout = model.layout();
    Ok(chain
        .rows()
        .map(|row| SeasonalModelParams::from_row(model.group, &layout, row).expected_damage())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalCheck {
    pub observed: f64,
    /// Mid-rank empirical percentile of the observation among the draws.
    pub percentile: f64,
    pub lower: f64,
    pub upper: f64,
    /// Observation within the central 95% draw interval.
    pub inside: bool,
}

fn marginal(draws: &[f64], observed: f64) -> MarginalCheck {
    let s = stats::sorted(draws);
    let lower = stats::quantile_sorted(&s, 0.025);
    let upper = stats::quantile_sorted(&s, 0.975);
    MarginalCheck {
        observed,
        percentile: stats::mid_rank_cdf(&s, observed),
        lower,
        upper,
        inside: lower <= observed && observed <= upper,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveCheck {
    pub season: i32,
    pub n: MarginalCheck,
    pub l: MarginalCheck,
    /// Over all damage draws, zeros included.
    pub d: MarginalCheck,
    /// Over the positive damage draws; only when the observed damage is positive.
    pub d_positive: Option<MarginalCheck>,
    pub p_zero_damage: f64,
    pub observed_zero_damage: bool,
}

pub fn predictive_check(pred: &PredictiveSample, observed: &SeasonObservation) -> PredictiveCheck {
    let n: Vec<f64> = pred.n.iter().map(|&v| f64::from(v)).collect();
    let l: Vec<f64> = pred.l.iter().map(|&v| f64::from(v)).collect();
    let od = observed.total_damage_usd;
    let d_positive = if od > 0.0 {
        let pos: Vec<f64> = pred.d.iter().copied().filter(|&d| d > 0.0).collect();
        (!pos.is_empty()).then(|| marginal(&pos, od))
    } else {
        None
    };
    PredictiveCheck {
        season: observed.season,
        n: marginal(&n, f64::from(observed.n_storms)),
        l: marginal(&l, f64::from(observed.n_damaging)),
        d: marginal(&pred.d, od),
        d_positive,
        p_zero_damage: pred.p_zero_damage(),
        observed_zero_damage: od == 0.0,
    }
}

/// Probability mass at `0..=max(draws)`.
pub fn count_mass(draws: &[u32]) -> Vec<(u32, f64)> {
    let max = draws.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max as usize + 1];
    for &v in draws {
        counts[v as usize] += 1;
    }
    let total = draws.len().max(1) as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (k as u32, c as f64 / total))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBin {
    pub lo: f64,
    pub hi: f64,
    pub density: f64,
}

/// Histogram density of `ln D` over the positive draws, integrating to one.
pub fn log_damage_density(draws: &[f64], bins: usize) -> Vec<DensityBin> {
    let logs: Vec<f64> = draws.iter().filter(|&&d| d > 0.0).map(|d| d.ln()).collect();
    if logs.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in &logs {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let total = logs.len() as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| DensityBin {
            lo: lo + k as f64 * width,
            hi: lo + (k + 1) as f64 * width,
            density: c as f64 / (total * width),
        })
        .collect()
}
