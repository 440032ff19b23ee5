// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scenario runner behind the `wpsim` binary.
//!
//! Exit codes: 0 all checks passed, 1 some check failed, 2 schema
//! violation, 3 numerical guard breach, 4 I/O failure.

pub mod config;
pub mod report;
pub mod scenarios;
pub mod verify;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use report::{Check, Relation, Report};
pub use scenarios::{Artifact, ScenarioOutput};
pub use verify::{verify, verify_with};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(Error),
    #[error("numerical guard: {0}")]
    Numerical(Error),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical_guard() {
            CliError::Numerical(e)
        } else {
            CliError::Config(e)
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Config(_) | CliError::Usage(_) => EXIT_SCHEMA,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Witness,
    Gas,
    Radiation,
    Cavity,
    Verify,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Witness => "witness",
            Subcommand::Gas => "gas",
            Subcommand::Radiation => "radiation",
            Subcommand::Cavity => "cavity",
            Subcommand::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Tolerances every report check is compared against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Tolerances {
    /// Standard errors allowed between ensemble and predicted drift.
    pub gas_z: f64,
    pub gas_std_rel: f64,
    pub frozen: f64,
    /// Minimum witness drift of the unfrozen control run.
    pub control_drift: f64,
    pub branch: f64,
    pub branch_closed_form: f64,
    pub frame: f64,
    pub sign_negation: f64,
    /// Relative slack for negations that hold exactly up to rounding.
    pub exact_negation: f64,
    pub radiation_e: f64,
    pub radiation_b: f64,
    pub radiation_rk: f64,
    pub divergence: f64,
    pub witness_product: f64,
    pub witness_bell: f64,
    pub closure: f64,
    pub canonical: f64,
    pub ode: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gas_z: 3.0,
            gas_std_rel: 0.05,
            frozen: 1e-9,
            control_drift: 1e-6,
            branch: 1e-9,
            branch_closed_form: 1e-6,
            frame: 1e-8,
            sign_negation: 1e-9,
            exact_negation: 1e-12,
            radiation_e: 0.05,
            radiation_b: 0.02,
            radiation_rk: 1e-8,
            divergence: 1e-8,
            witness_product: 1e-10,
            witness_bell: 1e-12,
            closure: 1e-9,
            canonical: 1e-9,
            ode: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub subcommand: Subcommand,
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub format: Format,
    /// Worker threads; `None` uses every logical core.
    pub workers: Option<usize>,
}

/// Runs one scenario from config text. `base_dir` resolves relative paths
/// inside the config.
pub fn run_text(
    subcommand: Subcommand,
    text: &str,
    base_dir: &Path,
    seed: u64,
    format: Format,
) -> Result<ScenarioOutput, CliError> {
    let tol = Tolerances::default();
    match subcommand {
        Subcommand::Witness => scenarios::witness(text, seed, &tol),
        Subcommand::Gas => scenarios::gas(text, seed, format, &tol),
        Subcommand::Radiation => scenarios::radiation(text, base_dir, seed, format, &tol),
        Subcommand::Cavity => scenarios::cavity(text, seed, format, &tol),
        Subcommand::Verify => Ok(ScenarioOutput {
            report: verify(seed)?,
            artifacts: Vec::new(),
        }),
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let n = match workers {
        Some(0) => return Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::write(&path, bytes).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Executes the manifest and writes artifacts plus `report.json` into the
/// output directory. Returns the report and written paths.
pub fn run(manifest: &RunManifest) -> Result<(Report, Vec<PathBuf>), CliError> {
    let (text, base_dir) = match (&manifest.config_path, manifest.subcommand) {
        (_, Subcommand::Verify) => (String::new(), PathBuf::from(".")),
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (text, base)
        }
        (None, sub) => return Err(CliError::Usage(format!("`{}` requires --config", sub.name()))),
    };
    let output = with_workers(manifest.workers, || {
        run_text(manifest.subcommand, &text, &base_dir, manifest.seed, manifest.format)
    })??;
    std::fs::create_dir_all(&manifest.out_dir).map_err(|source| CliError::Io {
        path: manifest.out_dir.clone(),
        source,
    })?;
    let mut written = Vec::new();
    for a in &output.artifacts {
        written.push(write(manifest.out_dir.join(&a.name), &a.bytes)?);
    }
    written.push(write(manifest.out_dir.join("report.json"), &output.report.to_bytes())?);
    Ok((output.report, written))
}

/// Exit status for a finished run.
pub fn exit_status(result: &Result<(Report, Vec<PathBuf>), CliError>) -> i32 {
    match result {
        Ok((report, _)) if report.passed => EXIT_OK,
        Ok(_) => EXIT_CHECKS_FAILED,
        Err(e) => e.exit_code(),
    }
}
