use super::mle::{fit_mle, moment_initializer, MleOptions};
use super::{
    check_complete, joint_loglik_unchecked, CycloneError, CycloneObservation, CyclonePrior, Equation, MIN_STORMS,
    PARAM_NAMES,
};
use crate::mcmc::{diagnostics, run_metropolis_within_gibbs, Block, DiagnosticsReport, ParameterSpec, PosteriorChain, SamplerConfig};

#[derive(Debug, Clone)]
pub struct CycloneFit {
    pub chain: PosteriorChain,
    pub diagnostics: Option<DiagnosticsReport>,
}

/// Random-walk Metropolis within Gibbs with one block per equation. Starts
/// from a short MLE run whose curvature also sets the initial step sizes.
pub fn fit_bayes(
    obs: &[CycloneObservation],
    prior: &CyclonePrior,
    config: &SamplerConfig,
) -> Result<CycloneFit, CycloneError> {
    check_complete(obs)?;
    if obs.len() < MIN_STORMS {
        return Err(CycloneError::TooFewStorms {
            n: obs.len(),
            min: MIN_STORMS,
        });
    }
    let opts = MleOptions {
        starts: 4,
        seed: config.seed,
        ..MleOptions::default()
    };
    let (init, steps) = match fit_mle(obs, prior, &opts) {
        Ok(m) => {
            let steps = m
                .unconstrained_covariance
                .as_ref()
                .map(|c| (0..15).map(|i| c[i * 15 + i].sqrt()).collect())
                .unwrap_or_else(|| vec![0.05; 15]);
            (m.params.to_vec(), steps)
        }
        Err(CycloneError::NoConvergence { .. }) => (moment_initializer(obs, prior)?, vec![0.05; 15]),
        Err(e) => return Err(e),
    };
    let chain = sample_cyclone_posterior(obs, prior, config, &init, &steps)?;
    let diagnostics = diagnostics(&[&chain]).ok();
    Ok(CycloneFit { chain, diagnostics })
}

/// The sampler behind [`fit_bayes`] with explicit start and steps (on the
/// unconstrained scale). With no observations it samples the prior.
pub fn sample_cyclone_posterior(
    obs: &[CycloneObservation],
    prior: &CyclonePrior,
    config: &SamplerConfig,
    init: &[f64],
    steps: &[f64],
) -> Result<PosteriorChain, CycloneError> {
    check_complete(obs)?;
    prior.validate()?;
    let supports = prior.supports();
    let specs: Vec<ParameterSpec> = (0..15)
        .map(|i| ParameterSpec::new(PARAM_NAMES[i], supports[i], init[i], steps[i]))
        .collect();
    let blocks: Vec<Block> = Equation::ALL
        .iter()
        .map(|eq| Block::random_walk(eq.name(), eq.indices().collect()))
        .collect();
    let logpost = |v: &[f64]| {
        let lp = prior.ln_density(v);
        if !lp.is_finite() {
            return f64::NEG_INFINITY;
        }
        lp + joint_loglik_unchecked(v, obs)
    };
    Ok(run_metropolis_within_gibbs(&logpost, &specs, &blocks, config)?)
}
