use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::adapt::{StepAdapter, Welford};
use super::chain::{BlockStats, PosteriorChain};
use super::{McmcError, ParameterSpec};
use crate::par::{self, Execution};
use crate::rng::{self, StreamId};

/// A model-supplied update of some coordinates, e.g. a conjugate
/// full-conditional draw. Works on the natural (constrained) scale.
pub trait ExactUpdate: Send + Sync {
    /// Updates `state` in place; returns whether the state moved
    /// (always `true` for a plain Gibbs draw).
    fn update(&self, state: &mut [f64], rng: &mut ChaCha8Rng) -> bool;
}

#[derive(Clone)]
pub enum BlockUpdate {
    RandomWalk,
    Exact(Arc<dyn ExactUpdate>),
}

impl std::fmt::Debug for BlockUpdate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockUpdate::RandomWalk => f.write_str("RandomWalk"),
            BlockUpdate::Exact(_) => f.write_str("Exact"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    pub name: String,
    pub indices: Vec<usize>,
    pub update: BlockUpdate,
}

impl Block {
    pub fn random_walk(name: impl Into<String>, indices: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            indices,
            update: BlockUpdate::RandomWalk,
        }
    }

    pub fn exact(name: impl Into<String>, indices: Vec<usize>, u: Arc<dyn ExactUpdate>) -> Self {
        Self {
            name: name.into(),
            indices,
            update: BlockUpdate::Exact(u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Total iterations, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Iterations per adaptation window.
    pub adapt_window: usize,
    pub target_acceptance: f64,
    /// Learn a proposal covariance for multi-parameter random-walk blocks.
    pub adapt_covariance: bool,
}

impl SamplerConfig {
    /// `iterations` total with 20% burn-in.
    pub fn new(iterations: usize, thin: usize, seed: u64) -> Self {
        Self {
            iterations,
            burn_in: iterations / 5,
            thin,
            seed,
            adapt_window: 100,
            target_acceptance: 0.20,
            adapt_covariance: true,
        }
    }

    fn validate(&self) -> Result<(), McmcError> {
        if self.burn_in >= self.iterations {
            return Err(McmcError::InvalidConfig(format!(
                "burn-in {} leaves no samples out of {} iterations",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 || self.adapt_window == 0 {
            return Err(McmcError::InvalidConfig("thin and adapt_window must be >= 1".into()));
        }
        if !(0.0 < self.target_acceptance && self.target_acceptance < 1.0) {
            return Err(McmcError::InvalidConfig(format!(
                "target acceptance {} outside (0, 1)",
                self.target_acceptance
            )));
        }
        Ok(())
    }
}

struct RwBlock {
    chol: DMatrix<f64>,
    adapter: StepAdapter,
    window_accepts: usize,
    welford: Welford,
    empirical: bool,
}

const COV_MIN_SAMPLES: usize = 200;

fn block_cholesky(cov: &[f64], d: usize) -> Option<DMatrix<f64>> {
    let mut m = DMatrix::from_row_slice(d, d, cov);
    let ridge = 1e-10 * (0..d).map(|i| m[(i, i)]).fold(0.0, f64::max).max(1e-300);
    for i in 0..d {
        m[(i, i)] += ridge;
    }
    m.cholesky().map(|c| c.l())
}

/// Runs one chain. Stored samples are the post-burn-in iterations whose
/// offset from the end of burn-in is a multiple of `thin`.
pub fn run_metropolis_within_gibbs<F>(
    logpost: &F,
    specs: &[ParameterSpec],
    blocks: &[Block],
    config: &SamplerConfig,
) -> Result<PosteriorChain, McmcError>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    config.validate()?;
    for s in specs {
        s.validate()?;
    }
    let dim = specs.len();
    let blocks: Vec<Block> = if blocks.is_empty() {
        vec![Block::random_walk("all", (0..dim).collect())]
    } else {
        blocks.to_vec()
    };
    let mut seen = vec![0u8; dim];
    for b in &blocks {
        for &i in &b.indices {
            if i >= dim {
                return Err(McmcError::DimensionMismatch {
                    expected: dim,
                    got: i + 1,
                });
            }
            seen[i] += 1;
        }
    }
    if let Some(i) = seen.iter().position(|&c| c != 1) {
        return Err(McmcError::InvalidConfig(format!(
            "parameter {} must belong to exactly one block",
            specs[i].name
        )));
    }

    let supports: Vec<_> = specs.iter().map(|s| s.support).collect();
    let mut x: Vec<f64> = specs.iter().map(|s| s.initial).collect();
    let mut u: Vec<f64> = specs.iter().map(|s| s.support.to_unconstrained(s.initial)).collect();
    let mut lp = logpost(&x);
    if !lp.is_finite() {
        return Err(McmcError::NonFiniteInitial(lp));
    }

    let mut rw: Vec<Option<RwBlock>> = blocks
        .iter()
        .map(|b| match b.update {
            BlockUpdate::RandomWalk => {
                let d = b.indices.len();
                let mut chol = DMatrix::zeros(d, d);
                for (k, &i) in b.indices.iter().enumerate() {
                    chol[(k, k)] = specs[i].step;
                }
                Some(RwBlock {
                    chol,
                    adapter: StepAdapter::new(1.0, config.target_acceptance),
                    window_accepts: 0,
                    welford: Welford::new(d),
                    empirical: false,
                })
            }
            BlockUpdate::Exact(_) => None,
        })
        .collect();

    let mut stats: Vec<BlockStats> = blocks
        .iter()
        .map(|b| BlockStats::new(&b.name, matches!(b.update, BlockUpdate::Exact(_))))
        .collect();

    let mut r = rng::stream(config.seed, StreamId::SAMPLER);
    let n_keep = (config.iterations - config.burn_in).div_ceil(config.thin);
    let mut samples = Vec::with_capacity(n_keep * dim);
    let mut lps = Vec::with_capacity(n_keep);
    let cov_start = config.burn_in / 4;

    let mut prop_u = u.clone();
    let mut prop_x = x.clone();

    for t in 0..config.iterations {
        let burning = t < config.burn_in;
        for (bi, block) in blocks.iter().enumerate() {
            let accepted = match &block.update {
                BlockUpdate::Exact(upd) => {
                    let moved = upd.update(&mut x, &mut r);
                    for &i in &block.indices {
                        u[i] = supports[i].to_unconstrained(x[i]);
                    }
                    lp = logpost(&x);
                    moved
                }
                BlockUpdate::RandomWalk => {
                    let st = rw[bi].as_mut().expect("random-walk state");
                    let d = block.indices.len();
                    let z = DVector::from_iterator(d, (0..d).map(|_| r.sample::<f64, _>(StandardNormal)));
                    let step = &st.chol * z * st.adapter.scale();
                    let mut ln_jac = 0.0;
                    let mut inside = true;
                    for (k, &i) in block.indices.iter().enumerate() {
                        prop_u[i] = u[i] + step[k];
                        prop_x[i] = supports[i].from_unconstrained(prop_u[i]);
                        inside &= supports[i].contains(prop_x[i]);
                        ln_jac += supports[i].ln_jacobian(prop_u[i]) - supports[i].ln_jacobian(u[i]);
                    }
                    let mut acc = false;
                    if inside {
                        let lp_new = logpost(&prop_x);
                        let log_ratio = lp_new - lp + ln_jac;
                        if log_ratio.is_finite() || log_ratio == f64::INFINITY {
                            let v: f64 = r.random();
                            if log_ratio >= 0.0 || v.ln() < log_ratio {
                                acc = true;
                                lp = lp_new;
                            }
                        }
                    }
                    for &i in &block.indices {
                        if acc {
                            u[i] = prop_u[i];
                            x[i] = prop_x[i];
                        } else {
                            prop_u[i] = u[i];
                            prop_x[i] = x[i];
                        }
                    }
                    if burning {
                        st.window_accepts += usize::from(acc);
                        if t >= cov_start && config.adapt_covariance && d > 1 {
                            let ub: Vec<f64> = block.indices.iter().map(|&i| u[i]).collect();
                            st.welford.push(&ub);
                        }
                        if (t + 1) % config.adapt_window == 0 {
                            let rate = st.window_accepts as f64 / config.adapt_window as f64;
                            st.window_accepts = 0;
                            st.adapter.update(rate);
                            if config.adapt_covariance
                                && d > 1
                                && st.welford.count() >= COV_MIN_SAMPLES.max(20 * d)
                            {
                                if let Some(l) = block_cholesky(&st.welford.covariance(), d) {
                                    st.chol = l;
                                    if !st.empirical {
                                        st.empirical = true;
                                        st.adapter.log_scale = (2.38 / (d as f64).sqrt()).ln();
                                    }
                                }
                            }
                            stats[bi].adaptation_trace.push((t, st.adapter.log_scale));
                        }
                    }
                    acc
                }
            };
            let s = &mut stats[bi];
            if burning {
                s.burn_in_proposed += 1;
                s.burn_in_accepted += u64::from(accepted);
            } else {
                s.proposed += 1;
                s.accepted += u64::from(accepted);
            }
        }
        // keep the proposal scratch in sync after exact updates
        prop_u.copy_from_slice(&u);
        prop_x.copy_from_slice(&x);
        if !burning && (t - config.burn_in).is_multiple_of(config.thin) {
            samples.extend_from_slice(&x);
            lps.push(lp);
        }
    }

    for (bi, st) in rw.iter().enumerate() {
        if let Some(st) = st {
            let d = st.chol.nrows();
            stats[bi].scale = st.adapter.scale();
            stats[bi].proposal_sd = (0..d)
                .map(|k| {
                    (0..d).map(|j| st.chol[(k, j)].powi(2)).sum::<f64>().sqrt() * st.adapter.scale()
                })
                .collect();
        }
    }

    Ok(PosteriorChain {
        names: specs.iter().map(|s| s.name.clone()).collect(),
        supports,
        samples,
        log_posterior: lps,
        blocks: stats,
        config: config.clone(),
    })
}

/// Independent chains with seeds derived from `config.seed`.
pub fn run_chains<F>(
    n_chains: usize,
    logpost: &F,
    specs: &[ParameterSpec],
    blocks: &[Block],
    config: &SamplerConfig,
    exec: Execution,
) -> Result<Vec<PosteriorChain>, McmcError>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    par::map_indexed(exec, n_chains, |k| {
        let mut c = config.clone();
        c.seed = rng::derive_seed(config.seed, StreamId::CHAINS + k as u64);
        run_metropolis_within_gibbs(logpost, specs, blocks, &c)
    })
    .into_iter()
    .collect()
}
