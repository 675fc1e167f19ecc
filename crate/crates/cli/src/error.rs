use hurricast_core::cyclone::CycloneError;
use hurricast_core::ingest::IngestError;
use hurricast_core::mcmc::McmcError;
use hurricast_core::seasonal::SeasonalError;
use serde::Serialize;
use thiserror::Error;

/// Exit code for bad or inconsistent inputs.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for fits or diagnostics that fail numerically.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

#[derive(Serialize)]
struct Payload<'a> {
    error: &'static str,
    message: &'a str,
    exit_code: i32,
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        let (error, message) = match self {
            CliError::Input(m) => ("input", m),
            CliError::Numerical(m) => ("numerical", m),
        };
        serde_json::to_string(&Payload {
            error,
            message,
            exit_code: self.exit_code(),
        })
        .expect("error payload serializes")
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<McmcError> for CliError {
    fn from(e: McmcError) -> Self {
        match e {
            McmcError::TooShort { .. } | McmcError::NonFiniteInitial(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SeasonalError> for CliError {
    fn from(e: SeasonalError) -> Self {
        match e {
            SeasonalError::Mcmc(m) => m.into(),
            SeasonalError::InvalidParams(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<CycloneError> for CliError {
    fn from(e: CycloneError) -> Self {
        match e {
            CycloneError::Mcmc(m) => m.into(),
            CycloneError::NoConvergence { .. } | CycloneError::InvalidParams(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("JSON: {e}"))
    }
}
