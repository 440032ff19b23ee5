// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! One function per subcommand: config text in, report and artifacts out.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::cavity::{self, CavityConfig, EnvInit};
use crate::gas::{self, GasEnsembleResult};
use crate::radiation::{self, RadiationResult};
use crate::trajectory::Trajectory;
use crate::witness::{certify, eigen_branches, witness_expectation, WitnessSign};

use super::config::{parse, CavityRunConfig, GasRunConfig, RadiationRunConfig, WitnessRunConfig};
use super::report::{Check, Report};
use super::{CliError, Format, Tolerances};

pub const QUADRATURE_CONVENTION: &str = "X = (a + a†)/√2, P = i(a† - a)/√2";

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutput {
    pub report: Report,
    pub artifacts: Vec<Artifact>,
}

fn json_artifact(name: &str, value: &impl Serialize) -> Artifact {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
    bytes.push(b'\n');
    Artifact {
        name: name.into(),
        bytes,
    }
}

fn trajectory_artifact(traj: &Trajectory, format: Format) -> Artifact {
    match format {
        Format::Csv => Artifact {
            name: "trajectory.csv".into(),
            bytes: traj.to_csv_string().into_bytes(),
        },
        Format::Json => json_artifact("trajectory.json", traj),
    }
}

pub fn witness(text: &str, seed: u64, tol: &Tolerances) -> Result<ScenarioOutput, CliError> {
    let cfg: WitnessRunConfig = parse(text)?;
    let rho = cfg.state.density_matrix()?;
    let rep = certify(&rho)?;
    let checks = vec![Check::abs_diff(
        "witness",
        "wPlusPlusWMinus",
        rep.w_plus + rep.w_minus,
        2.0,
        tol.witness_bell,
    )];
    let summary = serde_json::to_value(&rep).expect("serializes");
    Ok(ScenarioOutput {
        report: Report::new("witness", seed, text.as_bytes(), checks, summary),
        artifacts: vec![json_artifact("witness.json", &rep)],
    })
}

/// Drift and fluctuation checks of one gas ensemble.
pub fn gas_checks(criterion: &str, res: &GasEnsembleResult, tol: &Tolerances) -> Vec<Check> {
    let (growth, analytic_growth) = res.growth_ratio();
    vec![
        Check::at_most(criterion, "meanSlopeZ", res.max_abs_z, 0.0, tol.gas_z),
        Check::at_most(criterion, "slopeZ", res.slope_z.abs(), 0.0, tol.gas_z),
        Check::at_most(criterion, "stdRelErr", res.max_std_rel_err, 0.0, tol.gas_std_rel),
        Check::rel_diff(criterion, "stdGrowth", growth, analytic_growth, tol.gas_std_rel),
    ]
}

pub fn gas_summary(res: &GasEnsembleResult, w0: f64, sigma_w: f64) -> serde_json::Value {
    let (growth, analytic_growth) = res.growth_ratio();
    json!({
        "w0": w0,
        "sigmaW": sigma_w,
        "slope": res.slope,
        "slopeStderr": res.slope_stderr,
        "analyticSlope": res.analytic_slope,
        "maxAbsZ": res.max_abs_z,
        "maxStdRelErr": res.max_std_rel_err,
        "stdGrowth": growth,
        "analyticStdGrowth": analytic_growth,
        "sampleCount": res.sample_count,
    })
}

pub fn gas(text: &str, seed: u64, format: Format, tol: &Tolerances) -> Result<ScenarioOutput, CliError> {
    let cfg: GasRunConfig = parse(text)?;
    let config = cfg.to_config()?;
    let res = gas::mc_ensemble(&config, seed, cfg.samples)?;
    let traj = match format {
        Format::Csv => trajectory_artifact(&res.trajectory(), format),
        Format::Json => json_artifact("trajectory.json", &res),
    };
    Ok(ScenarioOutput {
        report: Report::new(
            "gas",
            seed,
            text.as_bytes(),
            gas_checks("gas", &res, tol),
            gas_summary(&res, config.branches.mean(), config.branches.std()),
        ),
        artifacts: vec![traj],
    })
}

/// Trapezoidal time mean of a series on its grid.
pub fn time_mean(times: &[f64], values: &[f64]) -> f64 {
    let span = times[times.len() - 1] - times[0];
    if span <= 0.0 {
        return values[0];
    }
    let area: f64 = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum();
    area / span
}

pub struct CavityOutcome {
    pub run: cavity::CavityRun,
    pub checks: Vec<Check>,
    pub summary: serde_json::Value,
}

pub fn cavity_outcome(config: &CavityConfig, criterion: &str, tol: &Tolerances) -> Result<CavityOutcome, CliError> {
    let frozen = config.is_frozen();
    let run = if frozen {
        cavity::simulate(config)?
    } else {
        cavity::simulate_control(config)?
    };
    let frame = cavity::displaced_frame(config)?;
    let w_op = crate::witness::build_w_pm(frame.sign);
    let w0 = witness_expectation(&w_op, &config.rho_s0)?;
    let traj = &run.trajectory;
    let w = traj.get("W").expect("witness series");
    let drift = w.iter().map(|x| (x - w[0]).abs()).fold(0.0, f64::max);
    let mut checks = vec![
        Check::at_most(criterion, "truncationTopPopulation", run.top_population, 0.0, cavity::TRUNCATION_TOL),
        Check::at_most(criterion, "frameInteriorResidual", frame.interior_residual, 0.0, tol.frame),
    ];
    if frozen {
        checks.push(Check::at_most(criterion, "witnessDrift", drift, 0.0, tol.frozen));
        let branches = eigen_branches(&w_op, &config.rho_s0)?;
        let oracle = cavity::branch_mixture_analytic(
            &branches,
            config.gamma_eff().abs(),
            config.omega,
            cavity::thermal_occupation(config),
            &config.times,
        )?;
        let dev = ["X", "P", "n"]
            .iter()
            .map(|name| traj.max_abs_diff(&oracle, name).expect("shared series"))
            .fold(0.0, f64::max);
        checks.push(Check::at_most(criterion, "branchClosedFormDeviation", dev, 0.0, tol.branch_closed_form));
    }
    let mean_x = time_mean(&traj.times, traj.get("X").expect("X series"));
    let summary = json!({
        "alpha": frame.alpha,
        "witnessInInteraction": match frame.sign { WitnessSign::Plus => "plus", WitnessSign::Minus => "minus" },
        "envInit": match config.env_init { EnvInit::Vacuum => "vacuum".to_string(), EnvInit::Thermal { beta } => format!("thermal(beta={beta})") },
        "frozen": frozen,
        "quadratureConvention": QUADRATURE_CONVENTION,
        "w0": w0,
        "witnessDrift": drift,
        "timeMeanX": mean_x,
        "topPopulation": run.top_population,
    });
    Ok(CavityOutcome { run, checks, summary })
}

pub fn cavity(text: &str, seed: u64, format: Format, tol: &Tolerances) -> Result<ScenarioOutput, CliError> {
    let cfg: CavityRunConfig = parse(text)?;
    let config = cfg.to_config()?;
    let out = cavity_outcome(&config, "cavity", tol)?;
    Ok(ScenarioOutput {
        report: Report::new("cavity", seed, text.as_bytes(), out.checks, out.summary),
        artifacts: vec![trajectory_artifact(&out.run.trajectory, format)],
    })
}

pub fn radiation_checks(criterion: &str, res: &RadiationResult, tol: &Tolerances) -> Vec<Check> {
    let d = &res.diagnostics;
    vec![
        Check::at_most(criterion, "eRelativeResidual", d.e_relative_residual, 0.0, tol.radiation_e),
        Check::at_most(criterion, "bRatio", d.b_ratio, 0.0, tol.radiation_b),
        Check::at_most(criterion, "rkMaxDeviation", d.rk_max_deviation, 0.0, tol.radiation_rk),
        Check::at_most(criterion, "divergenceRelative", d.divergence_relative, 0.0, tol.divergence),
        Check::at_least(criterion, "windowPeriods", d.window_periods, radiation::MIN_PERIODS, radiation::MIN_PERIODS),
    ]
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FieldMaps<'a> {
    grid_n: usize,
    #[serde(rename = "L")]
    box_size: f64,
    w0: f64,
    epsilon0: f64,
    e_bar: &'a [radiation::Vec3],
    b_bar: &'a [radiation::Vec3],
    reference: &'a [radiation::Vec3],
}

fn diagnostics_csv(d: &radiation::RadiationDiagnostics) -> Vec<u8> {
    let value = serde_json::to_value(d).expect("serializes");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["quantity", "value"]).expect("memory");
    for (k, v) in value.as_object().expect("struct") {
        w.write_record([k.as_str(), &v.to_string()]).expect("memory");
    }
    w.into_inner().expect("memory")
}

pub fn radiation(text: &str, base_dir: &Path, seed: u64, format: Format, tol: &Tolerances) -> Result<ScenarioOutput, CliError> {
    let cfg: RadiationRunConfig = parse(text)?;
    let config = cfg.to_config(base_dir)?;
    let res = radiation::run(&config)?;
    let maps = FieldMaps {
        grid_n: config.grid_n,
        box_size: config.box_size,
        w0: config.w0,
        epsilon0: config.epsilon0,
        e_bar: &res.e_bar.values,
        b_bar: &res.b_bar.values,
        reference: &res.reference.values,
    };
    let diagnostics = match format {
        Format::Csv => Artifact {
            name: "diagnostics.csv".into(),
            bytes: diagnostics_csv(&res.diagnostics),
        },
        Format::Json => json_artifact("diagnostics.json", &res.diagnostics),
    };
    let mut summary = serde_json::to_value(&res.diagnostics).expect("serializes");
    summary["w0"] = json!(config.w0);
    Ok(ScenarioOutput {
        report: Report::new("radiation", seed, text.as_bytes(), radiation_checks("radiation", &res, tol), summary),
        artifacts: vec![json_artifact("fields.json", &maps), diagnostics],
    })
}
