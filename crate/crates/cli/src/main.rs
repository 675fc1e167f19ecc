//! `hurricast`: batch front end for ingestion, fitting, prediction,
//! scoring and diagnostics. Every artifact gets a sibling manifest.

mod commands;
mod config;
mod error;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use error::CliError;

/// Relative input paths resolve against this directory when it is set.
pub const DATA_ROOT_ENV: &str = "HURRICAST_DATA_ROOT";

#[derive(Debug, Parser)]
#[command(name = "hurricast", version, about = "Seasonal and per-storm Atlantic cyclone models")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Root seed; every stage derives its own stream from it.
    #[arg(long, global = true, default_value_t = 2019)]
    pub seed: u64,
    /// key=value file whose entries override flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Disable internal parallelism.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse HURDAT2, covariates and damages into a canonical dataset.
    Ingest(IngestArgs),
    /// Fit the seasonal count/damage model for one intensity group.
    FitSeasonal(FitSeasonalArgs),
    /// Posterior predictive draws for one season.
    PredictSeason(PredictSeasonArgs),
    /// Fit the per-storm GEV model.
    FitCyclone(FitCycloneArgs),
    /// Posterior predictive draws for a storm at a given latitude.
    PredictCyclone(PredictCycloneArgs),
    /// Score an observed storm against cyclone predictive draws.
    Score(ScoreArgs),
    /// Convergence diagnostics for one or more chains.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub hurdat2: PathBuf,
    /// Directory holding amo.csv, soi.csv, nao.csv, nino34.csv, sst.csv, ssn.csv.
    #[arg(long)]
    pub covariates: PathBuf,
    #[arg(long)]
    pub damages: PathBuf,
    /// storm_id,damage_usd_2019 rows that bypass the name join.
    #[arg(long)]
    pub overrides: Option<PathBuf>,
    #[arg(long)]
    pub first: Option<i32>,
    #[arg(long)]
    pub last: Option<i32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitSeasonalArgs {
    #[arg(long)]
    pub group: hurricast_core::ingest::IntensityGroup,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    /// Comma-separated covariate subset (amo,soi,nao,nino34,sst,ssn).
    #[arg(long, default_value = "amo,soi,nao,nino34,sst,ssn")]
    pub indices: String,
    /// First training season.
    #[arg(long)]
    pub first: Option<i32>,
    /// Last training season.
    #[arg(long)]
    pub through: Option<i32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictSeasonArgs {
    #[arg(long)]
    pub chain: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub year: i32,
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    /// Equal-width bins for the log-damage density table.
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Mle,
    Bayes,
}

#[derive(Debug, Args)]
pub struct FitCycloneArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Bayes)]
    pub method: Method,
    #[arg(long, default_value_t = 100_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    /// Optimizer starts per equation.
    #[arg(long, default_value_t = 12)]
    pub starts: usize,
    #[arg(long)]
    pub first: Option<i32>,
    #[arg(long)]
    pub last: Option<i32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictCycloneArgs {
    #[arg(long)]
    pub chain: PathBuf,
    /// Mean track latitude in degrees north.
    #[arg(long, allow_negative_numbers = true)]
    pub latitude: f64,
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub predictive: PathBuf,
    /// minCP (mb), maxWS (kt), damage (USD).
    #[arg(long)]
    pub truth: String,
    /// Storm label for the output row.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub chain: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `--config` value and subcommand name, found before clap runs so that
/// config entries can also supply required flags.
fn prescan(args: &[OsString]) -> (Option<PathBuf>, Option<String>) {
    let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let mut config = None;
    let mut sub = None;
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        } else if a == "--config" {
            config = it.next().map(PathBuf::from);
        } else if sub.is_none() && names.iter().any(|n| *n == a) {
            sub = Some(a.into_owned());
        }
    }
    (config, sub)
}

fn load(args: Vec<OsString>) -> Result<Cli, ExitCode> {
    let fail = |e: CliError| {
        eprintln!("{}", e.to_json());
        ExitCode::from(e.exit_code() as u8)
    };
    let args = match prescan(&args) {
        (Some(path), Some(sub)) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| fail(CliError::input(format!("{}: {e}", path.display()))))?;
            let entries = config::parse(&text, &path.display().to_string()).map_err(fail)?;
            config::apply::<Cli>(args, &sub, &entries).map_err(fail)?
        }
        _ => args,
    };
    Cli::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = e.print();
            ExitCode::SUCCESS
        } else {
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            fail(CliError::input(first))
        }
    })
}

fn main() -> ExitCode {
    let cli = match load(std::env::args_os().collect()) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
