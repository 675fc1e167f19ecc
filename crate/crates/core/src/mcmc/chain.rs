use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::sampler::SamplerConfig;
use super::{McmcError, Support};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    pub name: String,
    pub exact: bool,
    pub accepted: u64,
    pub proposed: u64,
    pub burn_in_accepted: u64,
    pub burn_in_proposed: u64,
    /// Final multiplicative step scale (random-walk blocks).
    pub scale: f64,
    /// Final per-coordinate proposal standard deviation, unconstrained scale.
    pub proposal_sd: Vec<f64>,
    /// `(iteration, ln scale)` after each adaptation window.
    #[serde(skip)]
    pub adaptation_trace: Vec<(usize, f64)>,
}

impl BlockStats {
    pub(crate) fn new(name: &str, exact: bool) -> Self {
        Self {
            name: name.to_string(),
            exact,
            accepted: 0,
            proposed: 0,
            burn_in_accepted: 0,
            burn_in_proposed: 0,
            scale: 1.0,
            proposal_sd: Vec::new(),
            adaptation_trace: Vec::new(),
        }
    }

    /// Post-burn-in acceptance rate.
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Stored post-burn-in draws, one row per kept iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    pub names: Vec<String>,
    pub supports: Vec<Support>,
    /// Row-major `len() x dim()`.
    pub samples: Vec<f64>,
    pub log_posterior: Vec<f64>,
    pub blocks: Vec<BlockStats>,
    pub config: SamplerConfig,
}

/// JSON sidecar written next to a chain CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub names: Vec<String>,
    pub supports: Vec<Support>,
    pub seed: u64,
    pub config: SamplerConfig,
    pub blocks: Vec<BlockStats>,
    pub acceptance_rates: Vec<(String, f64)>,
    /// Model-specific payload (group, standardizers, dataset hash, ...).
    #[serde(default)]
    pub model: serde_json::Value,
}

impl PosteriorChain {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        if self.names.is_empty() {
            0
        } else {
            self.samples.len() / self.dim()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.samples[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.dim().max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn acceptance_rate(&self, block: usize) -> f64 {
        self.blocks[block].acceptance_rate()
    }

    pub fn meta(&self, model: serde_json::Value) -> ChainMeta {
        ChainMeta {
            names: self.names.clone(),
            supports: self.supports.clone(),
            seed: self.config.seed,
            config: self.config.clone(),
            blocks: self.blocks.clone(),
            acceptance_rates: self
                .blocks
                .iter()
                .map(|b| (b.name.clone(), b.acceptance_rate()))
                .collect(),
            model,
        }
    }

    /// Columnar CSV: one header row of parameter names plus `log_posterior`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), McmcError> {
        let mut header = self.names.join(",");
        header.push_str(",log_posterior\n");
        w.write_all(header.as_bytes())?;
        let mut line = String::new();
        for (row, lp) in self.rows().zip(&self.log_posterior) {
            line.clear();
            for v in row {
                line.push_str(&format!("{v:?},"));
            }
            line.push_str(&format!("{lp:?}\n"));
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, meta: &ChainMeta) -> Result<Self, McmcError> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr
            .headers()
            .map_err(|e| McmcError::Format(e.to_string()))?
            .clone();
        let d = meta.names.len();
        let names: Vec<&str> = headers.iter().collect();
        if names.len() != d + 1
            || names[..d] != meta.names.iter().map(String::as_str).collect::<Vec<_>>()[..]
            || names[d] != "log_posterior"
        {
            return Err(McmcError::Format(format!(
                "CSV columns {names:?} do not match sidecar names {:?}",
                meta.names
            )));
        }
        let mut samples = Vec::new();
        let mut lps = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| McmcError::Format(e.to_string()))?;
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| McmcError::Format(format!("bad number {field:?}")))?;
                if j < d {
                    samples.push(v);
                } else {
                    lps.push(v);
                }
            }
        }
        Ok(Self {
            names: meta.names.clone(),
            supports: meta.supports.clone(),
            samples,
            log_posterior: lps,
            blocks: meta.blocks.clone(),
            config: meta.config.clone(),
        })
    }

    /// Builds a chain from explicit rows (test fixtures, point masses).
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Self {
        let d = names.len();
        let samples: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        debug_assert_eq!(samples.len(), rows.len() * d);
        Self {
            supports: vec![Support::Real; d],
            names,
            log_posterior: vec![0.0; rows.len()],
            samples,
            blocks: Vec::new(),
            config: SamplerConfig::new(rows.len().max(1) * 5 / 4 + 1, 1, 0),
        }
    }
}
