use serde::{Deserialize, Serialize};

use super::chain::PosteriorChain;
use crate::stats;

/// Posterior mean, sample standard deviation and equal-tailed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// `level = 0` collapses the interval onto the median.
pub fn posterior_summary(chain: &PosteriorChain, level: f64) -> Vec<ParamSummary> {
    let tail = (1.0 - level.clamp(0.0, 1.0)) / 2.0;
    chain
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col = chain.column(j);
            let s = stats::sorted(&col);
            ParamSummary {
                name: name.clone(),
                mean: stats::mean(&col),
                sd: stats::sd(&col),
                median: stats::quantile_sorted(&s, 0.5),
                lower: stats::quantile_sorted(&s, tail),
                upper: stats::quantile_sorted(&s, 1.0 - tail),
                level,
            }
        })
        .collect()
}
