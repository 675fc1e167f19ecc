use serde::{Deserialize, Serialize};

use super::chain::PosteriorChain;
use super::McmcError;
use crate::stats;

pub const MIN_DIAGNOSTIC_SAMPLES: usize = 100;

/// Lags reported in the autocorrelation summary.
const REPORT_LAGS: [usize; 4] = [1, 5, 10, 50];

fn autocov(xs: &[f64], mean: f64, lag: usize) -> f64 {
    let n = xs.len();
    if lag >= n {
        return 0.0;
    }
    xs[..n - lag]
        .iter()
        .zip(&xs[lag..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum::<f64>()
        / n as f64
}

/// Sample autocorrelation at lags `0..=max_lag`.
pub fn autocorrelation(xs: &[f64], max_lag: usize) -> Vec<f64> {
    let m = stats::mean(xs);
    let g0 = autocov(xs, m, 0);
    (0..=max_lag)
        .map(|k| if g0 > 0.0 { autocov(xs, m, k) / g0 } else { 0.0 })
        .collect()
}

/// Effective sample size from Geyer's initial monotone sequence: sums of
/// adjacent-lag autocorrelation pairs are accumulated while positive and
/// forced non-increasing. Returns `n` for a constant series.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    let n = xs.len();
    let m = stats::mean(xs);
    let g0 = autocov(xs, m, 0);
    if !(g0 > 0.0) {
        return n as f64;
    }
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = (autocov(xs, m, 2 * k) + autocov(xs, m, 2 * k + 1)) / g0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        k += 1;
    }
    n as f64 / tau.max(1.0 / n as f64)
}

/// Split-R-hat over the halves of every chain.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[c.len() - h..]]
        })
        .collect();
    let n = halves.iter().map(|h| h.len()).min().unwrap_or(0) as f64;
    let m = halves.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let means: Vec<f64> = halves.iter().map(|h| stats::mean(h)).collect();
    let w = halves
        .iter()
        .map(|h| stats::sd(h).powi(2))
        .sum::<f64>()
        / m;
    let grand = stats::mean(&means);
    let b = n * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (m - 1.0);
    if !(w > 0.0) {
        return 1.0;
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

/// Geweke z-score comparing the first 10% with the last 50% of a chain,
/// using autocorrelation-corrected standard errors.
pub fn geweke_z(xs: &[f64]) -> f64 {
    let n = xs.len();
    let a = &xs[..n / 10];
    let b = &xs[n - n / 2..];
    let se2 = |s: &[f64]| {
        let v = stats::sd(s).powi(2);
        v / effective_sample_size(s)
    };
    let denom = (se2(a) + se2(b)).sqrt();
    if !(denom > 0.0) {
        return 0.0;
    }
    (stats::mean(a) - stats::mean(b)) / denom
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub autocorrelation: Vec<(usize, f64)>,
    pub ess: f64,
    pub split_rhat: f64,
    pub geweke_z: f64,
    /// Every stored value identical; ESS/R-hat are placeholders.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n_chains: usize,
    pub n_samples: usize,
    pub parameters: Vec<ParamDiagnostics>,
    pub acceptance_rates: Vec<(String, f64)>,
}

/// Convergence report over one or more chains of the same model.
pub fn diagnostics(chains: &[&PosteriorChain]) -> Result<DiagnosticsReport, McmcError> {
    let first = chains
        .first()
        .ok_or_else(|| McmcError::InvalidConfig("no chains given".into()))?;
    for c in chains {
        if c.len() < MIN_DIAGNOSTIC_SAMPLES {
            return Err(McmcError::TooShort {
                n: c.len(),
                min: MIN_DIAGNOSTIC_SAMPLES,
            });
        }
        if c.names != first.names {
            return Err(McmcError::DimensionMismatch {
                expected: first.dim(),
                got: c.dim(),
            });
        }
    }
    let mut params = Vec::with_capacity(first.dim());
    for (j, name) in first.names.iter().enumerate() {
        let cols: Vec<Vec<f64>> = chains.iter().map(|c| c.column(j)).collect();
        let pooled: Vec<f64> = cols.iter().flatten().copied().collect();
        let min = pooled.iter().copied().fold(f64::INFINITY, f64::min);
        let max = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let degenerate = min == max;
        let (ess, rhat, gz) = if degenerate {
            (pooled.len() as f64, 1.0, 0.0)
        } else {
            let ess = cols.iter().map(|c| effective_sample_size(c)).sum();
            let gz = stats::mean(&cols.iter().map(|c| geweke_z(c)).collect::<Vec<_>>());
            (ess, split_rhat(&cols), gz)
        };
        let acf = autocorrelation(&cols[0], *REPORT_LAGS.iter().max().unwrap());
        params.push(ParamDiagnostics {
            name: name.clone(),
            mean: stats::mean(&pooled),
            sd: if degenerate { 0.0 } else { stats::sd(&pooled) },
            min,
            max,
            autocorrelation: REPORT_LAGS.iter().map(|&k| (k, acf[k])).collect(),
            ess,
            split_rhat: rhat,
            geweke_z: gz,
            degenerate,
        });
    }
    Ok(DiagnosticsReport {
        n_chains: chains.len(),
        n_samples: chains.iter().map(|c| c.len()).sum(),
        parameters: params,
        acceptance_rates: first
            .blocks
            .iter()
            .map(|b| (b.name.clone(), b.acceptance_rate()))
            .collect(),
    })
}
