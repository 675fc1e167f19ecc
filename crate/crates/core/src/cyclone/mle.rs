use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::{
    check_complete, equation_loglik, joint_loglik_unchecked, CycloneError, CycloneModelParams, CycloneObservation,
    CyclonePrior, Equation, MIN_STORMS,
};
use crate::mcmc::Support;
use crate::optimize::{self, BfgsOptions, NelderMeadOptions};
use crate::par::{self, Execution};
use crate::rng::{self, StreamId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    /// Starts per equation; the first is the moment initializer itself.
    pub starts: usize,
    /// Relative jitter of the other starts around the initializer.
    pub jitter: f64,
    pub seed: u64,
    pub nelder_mead: NelderMeadOptions,
    pub bfgs: BfgsOptions,
    pub exec: Execution,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            starts: 12,
            jitter: 0.2,
            seed: 0,
            nelder_mead: NelderMeadOptions::default(),
            bfgs: BfgsOptions::default(),
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub equation: Equation,
    pub start: usize,
    pub neg_log_likelihood: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub starts: Vec<StartReport>,
    /// Euclidean norm of the log-likelihood gradient on the optimizer's scale,
    /// divided by the number of storms.
    pub scaled_gradient_norm: f64,
    pub hessian_singular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub params: CycloneModelParams,
    /// Delta-method standard errors; `None` when the Hessian is singular.
    pub standard_errors: Vec<Option<f64>>,
    pub log_likelihood: f64,
    pub n_storms: usize,
    pub report: ConvergenceReport,
    /// Covariance on the unconstrained scale, row-major 15 x 15.
    #[serde(skip)]
    pub unconstrained_covariance: Option<Vec<f64>>,
}

fn ols(y: &[f64], cols: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let n = y.len();
    let k = cols.len() + 1;
    let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] });
    let yv = DVector::from_column_slice(y);
    let coef = x
        .clone()
        .svd(true, true)
        .solve(&yv, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(k));
    let resid = &yv - &x * &coef;
    let s = (resid.norm_squared() / (n.saturating_sub(k).max(1)) as f64).sqrt();
    (coef.as_slice().to_vec(), s)
}

fn initial_xi((lo, hi): (f64, f64)) -> f64 {
    let mid = 0.5 * (lo + hi);
    if lo < -0.1 && -0.1 < hi {
        -0.1
    } else {
        mid
    }
}

/// Least-squares location coefficients with GEV scale and intercept matched
/// to the residual moments at a mildly negative shape.
pub fn moment_initializer(obs: &[CycloneObservation], prior: &CyclonePrior) -> Result<Vec<f64>, CycloneError> {
    check_complete(obs)?;
    let mut v = vec![0.0; 15];
    let bounds = [prior.xi_z1, prior.xi_x1, prior.xi_x2];
    for (e, eq) in Equation::ALL.into_iter().enumerate() {
        let (y, cols): (Vec<f64>, Vec<Vec<f64>>) = {
            let k = eq.n_covariates();
            let y = obs.iter().map(|o| eq.response(o).0).collect();
            let cols = (0..k).map(|j| obs.iter().map(|o| eq.response(o).1[j]).collect()).collect();
            (y, cols)
        };
        let (mut coef, s) = ols(&y, &cols);
        let xi = initial_xi(bounds[e]);
        let mut sigma = (s * 6f64.sqrt() / std::f64::consts::PI).max(1e-3);
        // GEV mean offset (Gamma(1 - xi) - 1) / xi; Euler's constant at xi = 0
        let offset = if xi.abs() < 1e-12 {
            0.577_215_664_901_532_9
        } else {
            (gamma(1.0 - xi) - 1.0) / xi
        };
        let intercept = coef[0];
        let r = eq.indices();
        let mut block = Vec::new();
        for _ in 0..40 {
            coef[0] = intercept - sigma * offset;
            block = coef.clone();
            block.extend([sigma, xi]);
            if equation_loglik(eq, &block, obs).is_finite() {
                break;
            }
            sigma *= 1.5;
        }
        v[r].copy_from_slice(&block);
    }
    Ok(v)
}

fn to_u(x: &[f64], s: &[Support]) -> Vec<f64> {
    x.iter().zip(s).map(|(v, s)| s.to_unconstrained(*v)).collect()
}

fn from_u(u: &[f64], s: &[Support]) -> Vec<f64> {
    u.iter().zip(s).map(|(v, s)| s.from_unconstrained(*v)).collect()
}

/// Pulls a value strictly inside a bounded support.
fn interior(x: f64, s: &Support) -> f64 {
    match *s {
        Support::Bounded { lo, hi } => x.clamp(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo)),
        Support::Positive => x.max(1e-8),
        Support::Real => x,
    }
}

struct EquationFit {
    u: Vec<f64>,
    value: f64,
    reports: Vec<StartReport>,
}

fn fit_equation(
    eq: Equation,
    obs: &[CycloneObservation],
    x0: &[f64],
    supports: &[Support],
    opts: &MleOptions,
) -> EquationFit {
    let objective = |u: &[f64]| {
        let x = from_u(u, supports);
        let ll = equation_loglik(eq, &x, obs);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };
    let eq_seed = rng::derive_seed(opts.seed, eq as u64);
    let runs = par::map_indexed(opts.exec, opts.starts.max(1), |k| {
        let start = if k == 0 {
            x0.to_vec()
        } else {
            let mut r = rng::stream(eq_seed, StreamId::MULTISTART + k as u64);
            let mut cand = x0.to_vec();
            for _ in 0..50 {
                cand = x0
                    .iter()
                    .zip(supports)
                    .map(|(v, s)| interior(v * (1.0 + opts.jitter * (2.0 * r.random::<f64>() - 1.0)), s))
                    .collect();
                if objective(&to_u(&cand, supports)).is_finite() {
                    break;
                }
                cand = x0.to_vec();
            }
            cand
        };
        let u0 = to_u(&start, supports);
        let steps: Vec<f64> = u0.iter().map(|v| 0.1 * v.abs().max(1.0)).collect();
        let nm = optimize::nelder_mead(objective, &u0, &steps, opts.nelder_mead);
        let polished = optimize::bfgs(objective, &nm.x, opts.bfgs);
        let (u, value) = if polished.value <= nm.value {
            (polished.x, polished.value)
        } else {
            (nm.x, nm.value)
        };
        let report = StartReport {
            equation: eq,
            start: k,
            neg_log_likelihood: value,
            evaluations: nm.evaluations + polished.evaluations,
            converged: value.is_finite() && (polished.converged || nm.converged),
        };
        (u, value, report)
    });
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut reports = Vec::with_capacity(runs.len());
    for (u, value, report) in runs {
        reports.push(report);
        if !value.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bu, bv)) => {
                if (value - bv).abs() <= 1e-9 * bv.abs().max(1.0) {
                    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
                    norm(&u) < norm(bu)
                } else {
                    value < *bv
                }
            }
        };
        if better {
            best = Some((u, value));
        }
    }
    let (u, value) = best.unwrap_or_else(|| (to_u(x0, supports), f64::INFINITY));
    EquationFit { u, value, reports }
}

/// Maximum-likelihood fit with multi-start simplex search and quasi-Newton
/// polish on log (scales) and scaled-logit (shapes) transforms. Shapes are
/// held inside the prior supports.
pub fn fit_mle(obs: &[CycloneObservation], prior: &CyclonePrior, opts: &MleOptions) -> Result<MleFit, CycloneError> {
    check_complete(obs)?;
    prior.validate()?;
    if obs.len() < MIN_STORMS {
        return Err(CycloneError::TooFewStorms {
            n: obs.len(),
            min: MIN_STORMS,
        });
    }
    let supports = prior.supports();
    let x0 = moment_initializer(obs, prior)?;
    let mut u = vec![0.0; 15];
    let mut starts = Vec::new();
    let mut grad_sq = 0.0;
    let mut hess = DMatrix::<f64>::zeros(15, 15);
    for eq in Equation::ALL {
        let r = eq.indices();
        let s = &supports[r.clone()];
        let fit = fit_equation(eq, obs, &x0[r.clone()], s, opts);
        let any_converged = fit.reports.iter().any(|s| s.converged);
        starts.extend(fit.reports);
        if !any_converged || !fit.value.is_finite() {
            return Err(CycloneError::NoConvergence {
                equation: eq.name(),
                report: Box::new(ConvergenceReport {
                    starts,
                    scaled_gradient_norm: f64::NAN,
                    hessian_singular: true,
                }),
            });
        }
        let objective = |uu: &[f64]| -equation_loglik(eq, &from_u(uu, s), obs);
        grad_sq += optimize::gradient(&objective, &fit.u).iter().map(|g| g * g).sum::<f64>();
        let h = optimize::hessian(&objective, &fit.u);
        hess.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(&h);
        u[r].copy_from_slice(&fit.u);
    }
    let x = from_u(&u, &supports);
    let cov = hess.clone().cholesky().map(|c| c.inverse());
    let (standard_errors, singular, cov_vec) = match cov {
        Some(c) if (0..15).all(|i| c[(i, i)] > 0.0 && c[(i, i)].is_finite()) => {
            let se = (0..15)
                .map(|i| Some(supports[i].dx_du(u[i]).abs() * c[(i, i)].sqrt()))
                .collect();
            let rm: Vec<f64> = (0..15).flat_map(|i| (0..15).map(move |j| (i, j))).map(|(i, j)| c[(i, j)]).collect();
            (se, false, Some(rm))
        }
        _ => (vec![None; 15], true, None),
    };
    Ok(MleFit {
        params: CycloneModelParams::from_slice(&x),
        standard_errors,
        log_likelihood: joint_loglik_unchecked(&x, obs),
        n_storms: obs.len(),
        report: ConvergenceReport {
            starts,
            scaled_gradient_norm: grad_sq.sqrt() / obs.len() as f64,
            hessian_singular: singular,
        },
        unconstrained_covariance: cov_vec,
    })
}
