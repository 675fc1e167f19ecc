use serde::{Deserialize, Serialize};

use super::IngestError;

/// Affine map `(x - mean) / sd` fitted on a training series.
///
/// `sd` uses the sample (`n - 1`) convention. The fitted transform is stored
/// with model artifacts and reused unchanged at prediction time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub sd: f64,
}

impl Standardizer {
    pub fn fit(series: &[f64]) -> Result<Self, IngestError> {
        if series.len() < 2 {
            return Err(IngestError::DegenerateSeries(format!(
                "need at least two values to standardize, got {}",
                series.len()
            )));
        }
        let mean = crate::stats::mean(series);
        let sd = crate::stats::sd(series);
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(IngestError::DegenerateSeries(format!(
                "series has zero spread (sd = {sd})"
            )));
        }
        Ok(Self { mean, sd })
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }

    #[inline]
    pub fn invert(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }
}

/// Standardizes a series, returning the transformed values and the transform.
pub fn standardize(series: &[f64]) -> Result<(Vec<f64>, Standardizer), IngestError> {
    let s = Standardizer::fit(series)?;
    Ok((series.iter().map(|&x| s.apply(x)).collect(), s))
}
