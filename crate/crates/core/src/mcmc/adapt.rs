/// Robbins-Monro control of a block's log step scale toward a target
/// acceptance rate: `ln s += g_k (a_k - target)` with `g_k = 3 / sqrt(k)`
/// over successive windows `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepAdapter {
    pub log_scale: f64,
    pub target: f64,
    windows: u32,
}

impl StepAdapter {
    pub fn new(scale: f64, target: f64) -> Self {
        Self {
            log_scale: scale.ln(),
            target,
            windows: 0,
        }
    }

    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    /// Feeds one window's acceptance rate and returns the new scale.
    pub fn update(&mut self, window_rate: f64) -> f64 {
        self.windows += 1;
        let gain = (3.0 / f64::from(self.windows).sqrt()).min(1.0);
        self.log_scale += gain * (window_rate - self.target);
        self.scale()
    }

    pub fn windows(&self) -> u32 {
        self.windows
    }
}

/// Running mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim * dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        let d = self.mean.len();
        self.n += 1;
        let n = self.n as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl / n;
        }
        for i in 0..d {
            let di2 = x[i] - self.mean[i];
            for j in 0..d {
                self.m2[i * d + j] += delta[j] * di2;
            }
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Sample covariance, row-major.
    pub fn covariance(&self) -> Vec<f64> {
        let denom = (self.n.max(2) - 1) as f64;
        self.m2.iter().map(|v| v / denom).collect()
    }
}
