//! The `nsmooth` command line tool as a library, so tests can drive it
//! without a subprocess.

use std::fmt;
use std::path::Path;

use serde_json::json;

pub mod commands;
pub mod config;
pub mod output;

use config::{ConfigError, RunConfig};

/// Version of the report.json layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Clarke verdict, hull and stability radius at one point.
    Probe,
    /// Clarke against Grove-Shiohama for a distance function over a grid.
    Scan,
    /// Smoothing error against its bound over an epsilon ladder.
    Smooth,
    /// Smoothed fibration search for a circle-valued map.
    Fibrate,
    /// The level-set checks around a regular value.
    Reeb,
    /// A reduced invariant suite.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Probe => "probe",
            Command::Scan => "scan",
            Command::Smooth => "smooth",
            Command::Fibrate => "fibrate",
            Command::Reeb => "reeb",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Library(nsmooth::Error),
    Io(std::io::Error),
}

impl RunError {
    /// 2 for a failed hypothesis, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Library(nsmooth::Error::HypothesisFailure { .. }) => 2,
            _ => 1,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<nsmooth::Error> for RunError {
    fn from(e: nsmooth::Error) -> Self {
        RunError::Library(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Library(e) => write!(f, "error: {e}"),
            RunError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

pub type RunResult<T> = Result<T, RunError>;

/// Loads and validates the configuration, runs `command` and writes
/// report.json and grid.csv into `out`. Returns whether every checked claim held.
pub fn run(command: Command, config: Option<&Path>, out: &Path, seed: Option<u64>) -> RunResult<bool> {
    let cfg = match config {
        Some(path) => {
            let mut cfg = RunConfig::load(path)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.sampling.seed = cfg.seed;
            cfg.validate(command)?;
            Some(cfg)
        }
        None if command == Command::Selftest => None,
        None => return Err(ConfigError::new("", format!("`{}` needs --config", command.name())).into()),
    };
    let seed = cfg.as_ref().map(|c| c.seed).or(seed).unwrap_or(0);
    let outcome = match (&cfg, command) {
        (_, Command::Selftest) => commands::selftest(seed)?,
        (Some(c), Command::Probe) => commands::probe(c)?,
        (Some(c), Command::Scan) => commands::scan(c)?,
        (Some(c), Command::Smooth) => commands::smooth(c)?,
        (Some(c), Command::Fibrate) => commands::fibrate(c)?,
        (Some(c), Command::Reeb) => commands::reeb(c)?,
        (None, _) => unreachable!("config checked above"),
    };

    std::fs::create_dir_all(out)?;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command.name(),
        "seed": seed,
        "config": cfg,
        "passed": outcome.passed,
        "result": outcome.result,
    });
    std::fs::write(out.join("report.json"), output::to_json(&report)?)?;
    if let Some(c) = &cfg {
        output::write_grid_csv(&out.join("grid.csv"), c.manifold.ambient_dim(), &outcome.rows)?;
    }
    Ok(outcome.passed)
}
