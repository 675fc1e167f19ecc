//! Ingestion of best-track, climate-index and damage inputs.

pub mod covariates;
pub mod damage;
pub mod dataset;
pub mod hurdat2;
pub mod standardize;
pub mod storm;

pub use covariates::{build_covariates, CovariateIndex, CovariateRow, CovariateSet};
pub use damage::DamageTable;
pub use dataset::{
    build_season_observations, ingest, Dataset, IngestSummary, SeasonObservation, SeasonWindow,
    FIRST_SEASON,
};
pub use hurdat2::{parse_hurdat2, write_hurdat2, HurdatError, HurdatErrorKind, Storm, TrackPoint};
pub use standardize::{standardize, Standardizer};
pub use storm::{summarize_storm, IntensityGroup, SaffirSimpson, StormRecord};

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("HURDAT2 {0}")]
    Hurdat(#[from] HurdatError),
    #[error("{file}: line {line}: {message}")]
    Csv {
        file: String,
        line: u64,
        message: String,
    },
    #[error("{file}: expected header {expected:?}, found {found:?}")]
    BadHeader {
        file: String,
        expected: String,
        found: String,
    },
    #[error("missing covariate series: {}", .0.join(", "))]
    MissingIndices(Vec<String>),
    #[error("{series} has no value for {year}-{month:02}")]
    MissingMonth {
        series: &'static str,
        year: i32,
        month: u8,
    },
    #[error("duplicate damage rows for {name} {year} (lines {first_line} and {second_line})")]
    DuplicateDamage {
        name: String,
        year: i32,
        first_line: u64,
        second_line: u64,
    },
    #[error("storm {0} has an empty track")]
    EmptyTrack(String),
    #[error("{0}")]
    DegenerateSeries(String),
    #[error("{0}")]
    Invalid(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl IngestError {
    pub(crate) fn csv(source: &str, e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line());
        IngestError::Csv {
            file: source.to_string(),
            line,
            message: e.to_string(),
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        IngestError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    }
}
