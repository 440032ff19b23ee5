// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Pinned desk-scale presets for every acceptance criterion, aggregated
//! into one report.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use crate::cavity::{self, CavityConfig, EnvInit, Method};
use crate::fock;
use crate::gas::{self, SurrogateConfig};
use crate::operator::{DensityMatrix, SpaceLabel, C64};
use crate::protocol::{evolve_full, fit_canonical, fit_closure, solve_observable_ode, Observable};
use crate::radiation::{self, DipoleSpec};
use crate::states::{MixtureTerm, NamedState, StateSpec};
use crate::trajectory::uniform_times;
use crate::witness::{build_w_pm, witness_expectation, WitnessChoice, WitnessSign};

use super::config::{GasRunConfig, RadiationRunConfig};
use super::report::{Check, Report};
use super::scenarios::{cavity_outcome, gas_checks, radiation_checks, time_mean};
use super::{CliError, Tolerances};

pub const PRODUCT_STATE_COUNT: usize = 1000;

pub fn gas_preset(state: StateSpec) -> GasRunConfig {
    GasRunConfig {
        schema: None,
        n: 1000,
        m: 1.0,
        beta: 1.0,
        alpha: 0.1,
        rho_s: state,
        witness: WitnessChoice::Minus,
        t_end: 10.0,
        n_steps: 100,
        samples: 10_000,
    }
}

pub fn mixed_gas_state() -> StateSpec {
    StateSpec::Mixture {
        mixture: vec![
            MixtureTerm {
                weight: 0.8,
                state: StateSpec::named("phi+"),
            },
            MixtureTerm {
                weight: 0.2,
                state: StateSpec::named("00"),
            },
        ],
    }
}

/// `ε₁ = ε₄`, `|γ_eff|/ω = 0.2` with `γ < 0` (so `W₋` couples), 10³ steps
/// over `ωt ∈ [0, 50]`.
pub fn cavity_preset(state: NamedState) -> CavityConfig {
    CavityConfig {
        epsilons: [0.2, 0.5, -0.1, 0.2],
        omega: 1.0,
        gamma: -0.4,
        n_max: 40,
        rho_s0: state.density_matrix(),
        env_init: EnvInit::Vacuum,
        times: uniform_times(50.0, 1000),
    }
}

pub fn surrogate_preset() -> SurrogateConfig {
    SurrogateConfig {
        levels: 48,
        m: 10.0,
        alpha: 0.1,
        witness: WitnessChoice::Minus,
    }
}

pub fn radiation_preset() -> RadiationRunConfig {
    RadiationRunConfig {
        schema: None,
        box_size: 10.0,
        k_max: 8.0 * 2.0 * PI / 10.0,
        grid_n: 32,
        epsilon0: 1.0,
        dipole: DipoleSpec::Gaussian {
            sigma: 1.0,
            amplitude: 1.0,
            center: None,
        },
        rho_s: StateSpec::named("phi+"),
        witness: WitnessChoice::Minus,
        window: 200.0,
        n_steps: 40_000,
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn gas_criteria(seed: u64, tol: &Tolerances, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let phi = gas_preset(StateSpec::named("phi+"));
    let cfg = phi.to_config()?;
    let res = gas::mc_ensemble(&cfg, seed, phi.samples)?;
    for c in gas_checks("1", &res, tol).into_iter().take(2) {
        checks.push(c);
    }
    checks.push(Check::at_most("2", "stdRelErr", res.max_std_rel_err, 0.0, tol.gas_std_rel));

    let mixed = gas_preset(mixed_gas_state());
    let mixed_res = gas::mc_ensemble(&mixed.to_config()?, seed, mixed.samples)?;
    let (growth, analytic_growth) = mixed_res.growth_ratio();
    checks.push(Check::at_most("2", "mixedStdRelErr", mixed_res.max_std_rel_err, 0.0, tol.gas_std_rel));
    checks.push(Check::rel_diff("2", "mixedStdGrowth", growth, analytic_growth, tol.gas_std_rel));

    let flip = gas_preset(StateSpec::named("00"));
    let flip_cfg = flip.to_config()?;
    let flip_res = gas::mc_ensemble(&flip_cfg, seed, flip.samples)?;
    checks.push(Check::rel_diff(
        "3",
        "gasFlippedAnalyticDrift",
        flip_res.analytic_slope,
        -res.analytic_slope,
        tol.exact_negation,
    ));
    checks.push(Check::at_most(
        "3",
        "gasSlopeSignProduct",
        sign(res.slope) * sign(flip_res.slope),
        -1.0,
        -1.0,
    ));
    checks.push(Check::at_most("3", "gasFlippedSlopeZ", flip_res.slope_z.abs(), 0.0, tol.gas_z));
    Ok(())
}

fn cavity_criteria(tol: &Tolerances, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let phi = cavity_preset(NamedState::PhiPlus);
    let out = cavity_outcome(&phi, "4", tol)?;
    let drift = out.summary["witnessDrift"].as_f64().expect("number");
    checks.push(Check::at_most("4", "witnessDrift", drift, 0.0, tol.frozen));

    let mut control = phi.clone();
    control.epsilons[3] = 0.3;
    let control_run = cavity::simulate_control(&control)?;
    let w = control_run.trajectory.get("W").expect("W");
    let control_drift = w.iter().map(|x| (x - w[0]).abs()).fold(0.0, f64::max);
    checks.push(Check::at_least("4", "controlWitnessDrift", control_drift, 1.0, tol.control_drift));

    let flip = cavity_preset(NamedState::Basis(0));
    let flip_run = cavity::simulate(&flip)?;
    let times = &phi.times;
    let mean_phi = time_mean(times, out.run.trajectory.get("X").expect("X"));
    let mean_flip = time_mean(times, flip_run.trajectory.get("X").expect("X"));
    checks.push(Check::rel_diff("3", "cavityFlippedMeanX", mean_flip, -mean_phi, tol.sign_negation));
    // Time-mean displacement has sign −sign(|γ_eff| W₀) = +1 for W₀ = −1.
    checks.push(Check::at_least("3", "cavityMeanXSign", sign(mean_phi), 1.0, 1.0));

    for (state, cfg, full) in [("phi+", &phi, &out.run), ("00", &flip, &flip_run)] {
        let branches = cavity::simulate_with(cfg, Method::Branches)?;
        let dev = ["X", "P", "n"]
            .iter()
            .map(|name| full.trajectory.max_abs_diff(&branches.trajectory, name).expect("series"))
            .fold(0.0, f64::max);
        checks.push(Check::at_most("5", &format!("fullVsBranches[{state}]"), dev, 0.0, tol.branch));
    }

    for (gamma, expected, label) in [(0.4, WitnessSign::Plus, "gammaPositive"), (-0.4, WitnessSign::Minus, "gammaNegative")] {
        let mut cfg = phi.clone();
        cfg.gamma = gamma;
        let frame = cavity::displaced_frame(&cfg)?;
        checks.push(Check::at_most("6", &format!("interiorResidual[{label}]"), frame.interior_residual, 0.0, tol.frame));
        checks.push(Check::at_most(
            "6",
            &format!("witnessSelection[{label}]"),
            frame.witness_in_interaction.distance(&build_w_pm(expected)),
            0.0,
            0.0,
        ));
    }

    // Quadrature closure, read in both orderings.
    let levels = phi.levels();
    let x = Observable::new("X", fock::position_quadrature(levels));
    let p = Observable::new("P", fock::momentum_quadrature(levels));
    let model = cavity::frame_model(&phi)?;
    let interior = cavity::interior_subspace(&phi);
    let w = phi.omega;
    let fit_px = fit_closure(model.h_e(), &[p.clone(), x.clone()], &interior)?;
    let want = DMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0]);
    checks.push(Check::at_most("9", "closureMatrix[P,X]", (&fit_px.c - &want).amax(), 0.0, tol.closure));
    let fit_xp = fit_closure(model.h_e(), &[x.clone(), p.clone()], &interior)?;
    checks.push(Check::at_most("9", "closureMatrix[X,P]", (&fit_xp.c - want.transpose()).amax(), 0.0, tol.closure));
    let residual = fit_px.residuals.iter().chain(&fit_xp.residuals).fold(0.0_f64, |m, r| m.max(*r));
    checks.push(Check::at_most("9", "closureResidual", residual, 0.0, tol.closure));

    let canon = fit_canonical(model.h_int(), &[x, p], &interior)?;
    let w0 = witness_expectation(model.witness(), &phi.rho_s0)?;
    let traj = &out.run.trajectory;
    let initial = [traj.get("X").expect("X")[0], traj.get("P").expect("P")[0]];
    let ode = solve_observable_ode(&fit_xp.c, &canon.g, w0, &initial, times, &["X", "P"])?;
    let dev = ["X", "P"]
        .iter()
        .map(|name| ode.closed_form.max_abs_diff(traj, name).expect("series"))
        .fold(0.0, f64::max);
    checks.push(Check::at_most("9", "odeVsFull[cavity]", dev, 0.0, tol.ode));
    Ok(())
}

fn surrogate_criteria(tol: &Tolerances, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let cfg = surrogate_preset();
    let model = gas::quantum_surrogate(&cfg)?;
    let interior = gas::surrogate_interior(&cfg);
    let canon = fit_canonical(model.h_int(), model.observables(), &interior)?;
    checks.push(Check::abs_diff("9", "canonicalG[surrogate]", canon.g[0], cfg.alpha, tol.canonical));
    let closure = fit_closure(model.h_e(), model.observables(), &interior)?;
    let rho_s = NamedState::PhiPlus.density_matrix();
    let rho_e = DensityMatrix::from_pure(&fock::number_state(cfg.levels, 0), SpaceLabel::Environment)?;
    let times = uniform_times(8.0, 80);
    let full = evolve_full(&model, &rho_s, &rho_e, &times)?;
    let w0 = witness_expectation(model.witness(), &rho_s)?;
    let p0 = full.get("P").expect("P")[0];
    let ode = solve_observable_ode(&closure.c, &canon.g, w0, &[p0], &times, &["P"])?;
    let dev = ode.closed_form.max_abs_diff(&full, "P").expect("series");
    checks.push(Check::at_most("9", "odeVsFull[surrogate]", dev, 0.0, tol.ode));
    Ok(())
}

fn random_qubit(rng: &mut ChaCha8Rng) -> [C64; 2] {
    let v: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    [C64::new(v[0] / n, v[1] / n), C64::new(v[2] / n, v[3] / n)]
}

fn witness_criteria(seed: u64, tol: &Tolerances, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let wp = build_w_pm(WitnessSign::Plus);
    let wm = build_w_pm(WitnessSign::Minus);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut min_p, mut min_m) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..PRODUCT_STATE_COUNT {
        let a = random_qubit(&mut rng);
        let b = random_qubit(&mut rng);
        let ket = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
        let rho = DensityMatrix::from_pure(&ket, SpaceLabel::System)?;
        min_p = min_p.min(witness_expectation(&wp, &rho)?);
        min_m = min_m.min(witness_expectation(&wm, &rho)?);
    }
    checks.push(Check::at_least("8", "productMinWPlus", min_p, 0.0, -tol.witness_product));
    checks.push(Check::at_least("8", "productMinWMinus", min_m, 0.0, -tol.witness_product));
    let phi_p = witness_expectation(&wm, &NamedState::PhiPlus.density_matrix())?;
    let phi_m = witness_expectation(&wp, &NamedState::PhiMinus.density_matrix())?;
    checks.push(Check::abs_diff("8", "phiPlusWMinus", phi_p, -1.0, tol.witness_bell));
    checks.push(Check::abs_diff("8", "phiMinusWPlus", phi_m, -1.0, tol.witness_bell));
    Ok(())
}

fn radiation_criteria(tol: &Tolerances, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let cfg = radiation_preset().to_config(std::path::Path::new("."))?;
    let res = radiation::run(&cfg)?;
    checks.extend(radiation_checks("7", &res, tol));
    Ok(())
}

/// Description of every preset plus the tolerances, hashed into the report.
pub fn preset_manifest(tol: &Tolerances) -> serde_json::Value {
    json!({
        "tolerances": tol,
        "gas": gas_preset(StateSpec::named("phi+")),
        "gasMixed": gas_preset(mixed_gas_state()),
        "cavity": {
            "epsilons": [0.2, 0.5, -0.1, 0.2], "omega": 1.0, "gamma": -0.4, "nMax": 40,
            "tMax": 50.0, "nSteps": 1000, "controlEpsilon4": 0.3, "states": ["phi+", "00"],
        },
        "surrogate": { "levels": 48, "m": 10.0, "alpha": 0.1, "tEnd": 8.0, "nSteps": 80 },
        "radiation": radiation_preset(),
        "productStates": PRODUCT_STATE_COUNT,
    })
}

/// Runs every preset with the given tolerances.
pub fn verify_with(tol: &Tolerances, seed: u64) -> Result<Report, CliError> {
    let mut checks = Vec::new();
    gas_criteria(seed, tol, &mut checks)?;
    cavity_criteria(tol, &mut checks)?;
    radiation_criteria(tol, &mut checks)?;
    witness_criteria(seed, tol, &mut checks)?;
    surrogate_criteria(tol, &mut checks)?;
    checks.sort_by_key(|c| c.criterion.parse::<u32>().unwrap_or(u32::MAX));
    let mut criteria = serde_json::Map::new();
    for c in &checks {
        let entry = criteria.entry(c.criterion.clone()).or_insert(json!(true));
        if !c.passed {
            *entry = json!(false);
        }
    }
    let manifest = serde_json::to_vec(&preset_manifest(tol)).expect("serializes");
    Ok(Report::new("verify", seed, &manifest, checks, json!({ "criteria": criteria })))
}

pub fn verify(seed: u64) -> Result<Report, CliError> {
    verify_with(&Tolerances::default(), seed)
}
