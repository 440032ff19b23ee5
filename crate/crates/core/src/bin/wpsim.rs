// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use wpsim::cli::{self, Format, RunManifest, Subcommand};

/// Witness-coupled environment simulator.
#[derive(Debug, Parser)]
#[command(name = "wpsim", version)]
struct Args {
    /// Scenario to run.
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// Scenario configuration (JSON). Not used by `verify`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts and `report.json`.
    #[arg(long, default_value = "wpsim-out")]
    out: PathBuf,
    #[arg(long, env = "WPSIM_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (default: logical cores).
    #[arg(long, env = "WPSIM_WORKERS")]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let manifest = RunManifest {
        subcommand: args.subcommand,
        config_path: args.config,
        out_dir: args.out,
        seed: args.seed,
        format: args.format,
        workers: args.workers,
    };
    let result = cli::run(&manifest);
    match &result {
        Ok((report, _)) => {
            for c in report.failed() {
                eprintln!("FAILED [{}] {}: value {:?}, tolerance {}", c.criterion, c.quantity, c.value, c.tolerance);
            }
            println!(
                "{}: {} ({} checks) -> {}",
                args.subcommand.name(),
                if report.passed { "passed" } else { "failed" },
                report.checks.len(),
                manifest.out_dir.join("report.json").display()
            );
        }
        Err(e) => eprintln!("wpsim: {e}"),
    }
    ExitCode::from(cli::exit_status(&result) as u8)
}
