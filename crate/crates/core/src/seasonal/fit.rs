use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use std::sync::Arc;

use super::likelihood::row_log_posterior;
use super::{CovariateDesign, SeasonalData, SeasonalError, SeasonalModel, SeasonalPrior};
use crate::ingest::{CovariateIndex, CovariateRow, IntensityGroup, SeasonObservation};
use crate::mcmc::{
    diagnostics, run_metropolis_within_gibbs, Block, DiagnosticsReport, ExactUpdate, ParameterSpec,
    PosteriorChain, SamplerConfig, Support,
};
use crate::stats;

pub const MIN_SEASONS: usize = 10;

#[derive(Debug, Clone)]
pub struct SeasonalFit {
    pub model: SeasonalModel,
    pub chain: PosteriorChain,
    /// Absent when the chain is too short to diagnose.
    pub diagnostics: Option<DiagnosticsReport>,
}

/// Conjugate `theta` draw by data augmentation. Each positive-damage
/// season's weight `1 - (1 - theta)^N` is the probability that a latent
/// `K ~ Binomial(N, theta)` is at least one; given the latent counts the
/// full conditional of `theta` is beta.
struct ThetaUpdate {
    idx: usize,
    a: f64,
    b: f64,
    positive_n: Vec<u32>,
}

/// `K ~ Binomial(n, theta)` conditioned on `K >= 1`, by inversion.
fn truncated_binomial<R: Rng + ?Sized>(n: u32, theta: f64, rng: &mut R) -> u32 {
    let ln_q = (-theta).ln_1p();
    let total = -(f64::from(n) * ln_q).exp_m1();
    let target = rng.random::<f64>() * total;
    // pmf(1) = n theta (1 - theta)^(n - 1), then the usual ratio recursion
    let mut pmf = f64::from(n) * theta * (f64::from(n - 1) * ln_q).exp();
    let mut acc = 0.0;
    for k in 1..n {
        acc += pmf;
        if target < acc {
            return k;
        }
        pmf *= f64::from(n - k) / f64::from(k + 1) * theta / (1.0 - theta);
    }
    n
}

impl ExactUpdate for ThetaUpdate {
    fn update(&self, state: &mut [f64], rng: &mut ChaCha8Rng) -> bool {
        let theta = state[self.idx];
        let (mut a, mut b) = (self.a, self.b);
        for &n in &self.positive_n {
            let k = truncated_binomial(n, theta, rng);
            a += f64::from(k);
            b += f64::from(n - k);
        }
        let draw: f64 = Beta::new(a, b).expect("positive beta shapes").sample(rng);
        if draw > 0.0 && draw < 1.0 {
            state[self.idx] = draw;
        }
        true
    }
}

/// Gibbs sweep over the lognormal parameters: `mu | tau` normal, then
/// `tau = sigma^-2 | mu` gamma.
struct DamageUpdate {
    mu_idx: usize,
    sigma_idx: usize,
    log_damages: Vec<f64>,
    prior: SeasonalPrior,
}

impl ExactUpdate for DamageUpdate {
    fn update(&self, state: &mut [f64], rng: &mut ChaCha8Rng) -> bool {
        let m = self.log_damages.len() as f64;
        let sigma = state[self.sigma_idx];
        let tau = 1.0 / (sigma * sigma);
        let sum: f64 = self.log_damages.iter().sum();
        let prec = 1.0 / self.prior.mu_var + m * tau;
        let mean = (self.prior.mu_mean / self.prior.mu_var + tau * sum) / prec;
        let z: f64 = rng.sample(StandardNormal);
        let mu = mean + z / prec.sqrt();

        let ss: f64 = self.log_damages.iter().map(|y| (y - mu) * (y - mu)).sum();
        let shape = self.prior.tau_shape + 0.5 * m;
        let rate = self.prior.tau_rate + 0.5 * ss;
        let tau = Gamma::new(shape, 1.0 / rate).expect("positive gamma").sample(rng);
        state[self.mu_idx] = mu;
        state[self.sigma_idx] = 1.0 / tau.sqrt();
        true
    }
}

/// Runs the sampler for `model` on prepared data. Empty data samples the prior.
pub fn sample_posterior(
    model: &SeasonalModel,
    data: &SeasonalData,
    config: &SamplerConfig,
) -> Result<PosteriorChain, SeasonalError> {
    model.prior.validate()?;
    if data.group != model.group {
        return Err(SeasonalError::WrongGroup {
            season: data.seasons.first().map_or(0, |s| s.season),
            expected: model.group,
            found: data.group,
        });
    }
    let q = model.design.dim();
    if let Some(s) = data.seasons.iter().find(|s| s.x.len() != q) {
        return Err(SeasonalError::DimensionMismatch {
            expected: q,
            got: s.x.len(),
        });
    }
    let layout = model.layout();
    let prior = &model.prior;
    let names = model.parameter_names();

    let total_n: f64 = data.seasons.iter().map(|s| f64::from(s.n)).sum();
    let total_l: f64 = data.seasons.iter().map(|s| f64::from(s.l)).sum();
    let zero_n: f64 = data
        .seasons
        .iter()
        .filter(|s| s.d == 0.0)
        .map(|s| f64::from(s.n))
        .sum();
    let log_damages: Vec<f64> = data.seasons.iter().filter(|s| s.d > 0.0).map(|s| s.d.ln()).collect();
    let positive_n: Vec<u32> = data.seasons.iter().filter(|s| s.d > 0.0).map(|s| s.n).collect();

    let mean_n = if data.is_empty() { 1.0 } else { total_n / data.len() as f64 };
    let beta_step = 1.0 / total_n.max(1.0).sqrt();
    let mut specs = Vec::with_capacity(layout.dim());
    for (j, name) in names[..q].iter().enumerate() {
        let init = if j == 0 { mean_n.max(0.1).ln() } else { 0.0 };
        specs.push(ParameterSpec::new(name, Support::Real, init, beta_step));
    }
    if layout.r.is_some() {
        specs.push(ParameterSpec::new(
            "r",
            Support::Bounded {
                lo: 0.0,
                hi: prior.r_max,
            },
            (prior.r_max / 14.0).min(5.0),
            0.5,
        ));
    }
    let theta0 = ((prior.theta_a + total_l) / (prior.theta_a + prior.theta_b + total_n)).clamp(0.01, 0.99);
    specs.push(ParameterSpec::new(
        "theta",
        Support::Bounded { lo: 0.0, hi: 1.0 },
        theta0,
        0.1,
    ));
    let (mu0, sigma0) = match log_damages.len() {
        0 => (prior.mu_mean, 1.0),
        1 => (log_damages[0], 1.0),
        _ => {
            let s = stats::sd(&log_damages);
            (stats::mean(&log_damages), if s > 0.0 { s } else { 1.0 })
        }
    };
    specs.push(ParameterSpec::new("mu_dam", Support::Real, mu0, 0.1));
    specs.push(ParameterSpec::new("sigma_dam", Support::Positive, sigma0, 0.1));

    let mut blocks = vec![Block::random_walk("beta", (0..q).collect())];
    if let Some(ri) = layout.r {
        blocks.push(Block::random_walk("r", vec![ri]));
    }
    blocks.push(Block::exact(
        "theta",
        vec![layout.theta],
        Arc::new(ThetaUpdate {
            idx: layout.theta,
            a: prior.theta_a + total_l,
            b: prior.theta_b + (total_n - total_l) + zero_n,
            positive_n,
        }),
    ));
    blocks.push(Block::exact(
        "damage",
        vec![layout.mu, layout.sigma],
        Arc::new(DamageUpdate {
            mu_idx: layout.mu,
            sigma_idx: layout.sigma,
            log_damages,
            prior: prior.clone(),
        }),
    ));

    let logpost = |row: &[f64]| row_log_posterior(model, data, row);
    Ok(run_metropolis_within_gibbs(&logpost, &specs, &blocks, config)?)
}

/// Fits one group: standardizes the selected covariates over the training
/// seasons, then samples the posterior.
pub fn fit_seasonal(
    group: IntensityGroup,
    observations: &[SeasonObservation],
    columns: &[CovariateIndex],
    prior: &SeasonalPrior,
    config: &SamplerConfig,
) -> Result<SeasonalFit, SeasonalError> {
    if observations.len() < MIN_SEASONS {
        return Err(SeasonalError::TooFewSeasons {
            n: observations.len(),
            min: MIN_SEASONS,
        });
    }
    let rows: Vec<CovariateRow> = observations.iter().map(|o| o.covariates.clone()).collect();
    let design = CovariateDesign::fit(&rows, columns)?;
    let model = SeasonalModel {
        group,
        design,
        prior: prior.clone(),
    };
    let data = SeasonalData::prepare(group, &model.design, observations)?;
    let chain = sample_posterior(&model, &data, config)?;
    let diagnostics = diagnostics(&[&chain]).ok();
    Ok(SeasonalFit {
        model,
        chain,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seasonal::{simulate_seasons, synthetic_covariates, SeasonalModelParams};

    fn truth(group: IntensityGroup) -> SeasonalModelParams {
        match group {
            IntensityGroup::Low => SeasonalModelParams {
                group,
                beta: vec![1.8, 0.2, -0.15],
                r: Some(8.0),
                theta: 0.142,
                mu_dam: 18.29,
                sigma_dam: 1.8,
            },
            IntensityGroup::High => SeasonalModelParams {
                group,
                beta: vec![0.9, 0.25, -0.1],
                r: None,
                theta: 0.39,
                mu_dam: 21.12,
                sigma_dam: 1.2,
            },
        }
    }

    const COLS: [CovariateIndex; 2] = [CovariateIndex::Amo, CovariateIndex::Nino34];

    #[test]
    fn truncated_binomial_matches_conditional_pmf() {
        let mut r = crate::rng::stream(3, 0);
        let (n, theta) = (6u32, 0.142);
        let reps = 200_000;
        let mut counts = [0usize; 7];
        for _ in 0..reps {
            counts[truncated_binomial(n, theta, &mut r) as usize] += 1;
        }
        assert_eq!(counts[0], 0);
        let norm = 1.0 - (1.0f64 - theta).powi(6);
        let mut choose = 1.0;
        for k in 1..=6usize {
            choose *= (n as f64 - k as f64 + 1.0) / k as f64;
            let p = choose * theta.powi(k as i32) * (1.0 - theta).powi(6 - k as i32) / norm;
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((counts[k] as f64 / reps as f64 - p).abs() < 4.0 * se + 1e-6, "k {k}");
        }
        assert_eq!(truncated_binomial(1, 0.3, &mut r), 1);
    }

    #[test]
    fn prior_only_run_recovers_theta_prior() {
        let model = SeasonalModel {
            group: IntensityGroup::High,
            design: CovariateDesign::identity(&COLS),
            prior: SeasonalPrior::default(),
        };
        let chain = sample_posterior(&model, &SeasonalData::empty(IntensityGroup::High), &SamplerConfig::new(20_000, 1, 5))
            .unwrap();
        let th = chain.column(model.layout().theta);
        // Beta(1, 1): mean 0.5, sd 1/sqrt(12); near-independent draws
        let se = (1.0f64 / 12.0).sqrt() / (th.len() as f64).sqrt();
        assert!((stats::mean(&th) - 0.5).abs() < 4.0 * se);
        // 1/sigma^2 ~ Gamma(1, 1) has mean 1
        let tau: Vec<f64> = chain.column(model.layout().sigma).iter().map(|s| 1.0 / (s * s)).collect();
        assert!((stats::mean(&tau) - 1.0).abs() < 0.05);
    }

    #[test]
    fn too_few_seasons() {
        let rows = synthetic_covariates(1990, 5, 1);
        let model = SeasonalModel {
            group: IntensityGroup::High,
            design: CovariateDesign::fit(&rows, &COLS).unwrap(),
            prior: SeasonalPrior::default(),
        };
        let obs = simulate_seasons(&truth(IntensityGroup::High), &model.design, &rows, 3).unwrap();
        let e = fit_seasonal(IntensityGroup::High, &obs, &COLS, &SeasonalPrior::default(), &SamplerConfig::new(1000, 1, 1));
        assert!(matches!(e, Err(SeasonalError::TooFewSeasons { n: 5, min: 10 })));
    }

    #[test]
    fn recovers_synthetic_parameters() {
        for group in [IntensityGroup::Low, IntensityGroup::High] {
            let rows = synthetic_covariates(1960, 60, 11);
            let design = CovariateDesign::fit(&rows, &COLS).unwrap();
            let p = truth(group);
            let obs = simulate_seasons(&p, &design, &rows, 21).unwrap();
            let fit = fit_seasonal(group, &obs, &COLS, &SeasonalPrior::default(), &SamplerConfig::new(60_000, 5, 4))
                .unwrap();
            let want = p.to_row();
            let mut inside = 0;
            for (j, w) in want.iter().enumerate() {
                let col = fit.chain.column(j);
                let z = (stats::mean(&col) - w) / stats::sd(&col);
                inside += usize::from(z.abs() < 3.0);
            }
            assert!(inside + 1 >= want.len(), "{group}: {inside}/{}", want.len());
            let d = fit.diagnostics.as_ref().unwrap();
            let theta = &d.parameters[fit.model.layout().theta];
            assert!(theta.ess > 1000.0);
            for b in &fit.chain.blocks {
                if !b.exact {
                    let rate = b.acceptance_rate();
                    assert!((0.1..0.4).contains(&rate), "{}: {rate}", b.name);
                }
            }
        }
    }

    #[test]
    fn r_stays_in_prior_support() {
        let rows = synthetic_covariates(1960, 30, 2);
        let design = CovariateDesign::fit(&rows, &COLS).unwrap();
        // nearly Poisson counts push r toward its upper bound
        let mut p = truth(IntensityGroup::Low);
        p.r = Some(69.0);
        let obs = simulate_seasons(&p, &design, &rows, 8).unwrap();
        let fit = fit_seasonal(IntensityGroup::Low, &obs, &COLS, &SeasonalPrior::default(), &SamplerConfig::new(20_000, 2, 3))
            .unwrap();
        let r = fit.chain.column(fit.model.layout().r.unwrap());
        assert!(r.iter().all(|&v| v > 0.0 && v < 70.0));
    }
}
