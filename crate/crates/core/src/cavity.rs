// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Four-level atom coupled to one cavity mode.
//!
//! `H = Σ εᵢ σᵢᵢ + ω a†a + γ(σ₁₄ + σ₄₁)(a + a†)`. Since `W̃ = 2(σ₁₄ + σ₄₁)`
//! the interaction is `γ_eff W̃ (a + a†)` with `γ_eff = γ/2`; `γ` in
//! configuration files is always the literal coupling above.
//!
//! Displacing the mode by `α = |γ_eff|/ω` (`a = a_α + α`) gives
//!
//! `H = Σ εᵢ σᵢᵢ + 2αγ_eff W̃ + ω a_α†a_α + |γ_eff| W± (a_α + a_α†) + ωα²`
//!
//! with `±` the sign of `γ`. Simulations run in this frame with the
//! environment starting in the vacuum (or a thermal state) of `a_α`, and the
//! reported quadratures are those of `a_α`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock;
use crate::operator::{hermitian_eigen, thermal_state, DensityMatrix, Operator, SpaceLabel};
use crate::protocol::{
    branch_evolve_with, evolve_full_with, Observable, ProtocolModel, Subspace, DEFAULT_COMPOSITE_CAP,
};
use crate::trajectory::Trajectory;
use crate::witness::{build_w_pm, build_w_tilde, eigen_branches, WitnessBranches, WitnessSign, FROZEN_TOL};

/// Population allowed in the top two Fock levels during a run.
pub const TRUNCATION_TOL: f64 = 1e-8;
/// Residual allowed in the displaced-frame identity on interior levels.
pub const FRAME_TOL: f64 = 1e-8;
/// Smallest accepted truncation level.
pub const MIN_N_MAX: usize = 10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum EnvInit {
    #[default]
    Vacuum,
    Thermal { beta: f64 },
}

#[derive(Clone, Debug)]
pub struct CavityConfig {
    pub epsilons: [f64; 4],
    pub omega: f64,
    /// Literal coupling of `γ(σ₁₄ + σ₄₁)(a + a†)`.
    pub gamma: f64,
    pub n_max: usize,
    pub rho_s0: DensityMatrix,
    pub env_init: EnvInit,
    pub times: Vec<f64>,
}

impl CavityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::param("omega", "must be positive"));
        }
        if !self.gamma.is_finite() || self.epsilons.iter().any(|e| !e.is_finite()) {
            return Err(Error::param("gamma", "coupling and energies must be finite"));
        }
        if self.n_max < MIN_N_MAX {
            return Err(Error::param("nMax", format!("must be at least {MIN_N_MAX}")));
        }
        if self.rho_s0.dim() != 4 {
            return Err(Error::DimensionMismatch {
                context: "cavity atom state",
                expected: 4,
                found: self.rho_s0.dim(),
            });
        }
        if let EnvInit::Thermal { beta } = self.env_init {
            if !(beta.is_finite() && beta > 0.0) {
                return Err(Error::param("envInit.beta", "must be positive"));
            }
        }
        Trajectory::new(self.times.clone())?;
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    pub fn gamma_eff(&self) -> f64 {
        effective_coupling(self.gamma)
    }

    /// `α = |γ_eff|/ω`.
    pub fn alpha(&self) -> f64 {
        self.gamma_eff().abs() / self.omega
    }

    /// Witness appearing in the displaced-frame interaction.
    pub fn interaction_sign(&self) -> WitnessSign {
        WitnessSign::of(self.gamma)
    }

    /// `ε₁ = ε₄`.
    pub fn is_frozen(&self) -> bool {
        (self.epsilons[0] - self.epsilons[3]).abs() <= FROZEN_TOL
    }
}

/// `γ_eff = γ/2`, the coefficient of `W̃ (a + a†)`.
pub fn effective_coupling(gamma: f64) -> f64 {
    0.5 * gamma
}

/// Original-frame Hamiltonian on `4·levels` dimensions.
pub fn hamiltonian(epsilons: [f64; 4], omega: f64, gamma: f64, levels: usize) -> Operator {
    let atom = Operator::from_real_diagonal(&epsilons);
    let id_a = Operator::identity(4);
    let id_f = Operator::identity(levels);
    let free = &atom.kron(&id_f) + &id_a.kron(&fock::number(levels).scale(omega));
    let coupling = build_w_tilde()
        .scale(effective_coupling(gamma))
        .kron(&fock::field_sum(levels));
    &free + &coupling
}

pub fn build_hamiltonian(config: &CavityConfig) -> Result<Operator> {
    config.validate()?;
    Ok(hamiltonian(config.epsilons, config.omega, config.gamma, config.levels()))
}

/// Atomic part of the displaced-frame Hamiltonian, `Σ εᵢσᵢᵢ + 2αγ_eff W̃`.
fn displaced_system(epsilons: [f64; 4], omega: f64, gamma: f64) -> Operator {
    let g = effective_coupling(gamma);
    let alpha = g.abs() / omega;
    &Operator::from_real_diagonal(&epsilons) + &build_w_tilde().scale(2.0 * alpha * g)
}

/// Displaced-frame Hamiltonian without the constant `ωα²`.
pub fn displaced_hamiltonian(epsilons: [f64; 4], omega: f64, gamma: f64, levels: usize) -> Operator {
    let g = effective_coupling(gamma);
    let w = build_w_pm(WitnessSign::of(gamma));
    let h_s = displaced_system(epsilons, omega, gamma);
    let free = &h_s.kron(&Operator::identity(levels)) + &Operator::identity(4).kron(&fock::number(levels).scale(omega));
    &free + &w.scale(g.abs()).kron(&fock::field_sum(levels))
}

#[derive(Clone, Debug)]
pub struct DisplacedFrame {
    /// `|γ_eff|/ω`.
    pub alpha: f64,
    pub sign: WitnessSign,
    /// Displaced-frame Hamiltonian on the truncated space, constant dropped.
    pub transformed_h: Operator,
    /// `W₊` or `W₋`.
    pub witness_in_interaction: Operator,
    /// `ωα²`.
    pub constant_shift: f64,
    /// Largest deviation of `U†HU` from the displaced form on Fock levels
    /// `0..=nMax-3`.
    pub interior_residual: f64,
}

/// Conjugates `H` with `1⊗D(α)` and checks the displaced-frame structure on
/// Fock levels `0..=nMax-3`.
///
/// The conjugation is carried out on a padded Fock space so that the cut of
/// the displacement operator lies well above the checked levels.
pub fn displaced_frame(config: &CavityConfig) -> Result<DisplacedFrame> {
    config.validate()?;
    let levels = config.levels();
    let alpha = config.alpha();
    let sign = config.interaction_sign();
    let d = fock::padded_displacement(levels, alpha, 1e-12)?;
    let padded = d.dim();
    let h = hamiltonian(config.epsilons, config.omega, config.gamma, padded);
    let u = Operator::identity(4).kron(&d);
    // D†aD = a + α, so U†HU is H with a → a + α.
    let conjugated = &(&u.adjoint() * &h) * &u;
    let constant_shift = config.omega * alpha * alpha;
    let expected = &displaced_hamiltonian(config.epsilons, config.omega, config.gamma, padded)
        + &Operator::identity(4 * padded).scale(constant_shift);
    let interior: Vec<usize> = (0..4)
        .flat_map(|s| (0..=config.n_max - 3).map(move |n| s * padded + n))
        .collect();
    let interior_residual = (&conjugated - &expected).restrict(&interior).max_abs();
    if interior_residual > FRAME_TOL {
        return Err(Error::CrossCheck {
            context: "displaced-frame structure on interior Fock levels",
            deviation: interior_residual,
            tolerance: FRAME_TOL,
        });
    }
    Ok(DisplacedFrame {
        alpha,
        sign,
        transformed_h: displaced_hamiltonian(config.epsilons, config.omega, config.gamma, levels),
        witness_in_interaction: build_w_pm(sign),
        constant_shift,
        interior_residual,
    })
}

/// Displaced-frame protocol model with observables `X`, `P`, `n` of `a_α`.
pub fn frame_model(config: &CavityConfig) -> Result<ProtocolModel> {
    config.validate()?;
    let levels = config.levels();
    ProtocolModel::new(
        displaced_system(config.epsilons, config.omega, config.gamma),
        fock::number(levels).scale(config.omega),
        build_w_pm(config.interaction_sign()),
        fock::field_sum(levels).scale(config.gamma_eff().abs()),
        vec![
            Observable::new("X", fock::position_quadrature(levels)),
            Observable::new("P", fock::momentum_quadrature(levels)),
            Observable::new("n", fock::number(levels)),
        ],
    )
}

/// Interior subspace on which canonical commutators are checked.
pub fn interior_subspace(config: &CavityConfig) -> Subspace {
    Subspace::leading(config.n_max - 1)
}

/// Vacuum or thermal state of `a_α` on the truncated space.
pub fn initial_environment(config: &CavityConfig) -> Result<DensityMatrix> {
    let levels = config.levels();
    match config.env_init {
        EnvInit::Vacuum => DensityMatrix::from_pure(&fock::number_state(levels, 0), SpaceLabel::Environment),
        EnvInit::Thermal { beta } => thermal_state(&fock::number(levels).scale(config.omega), beta),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Exact composite evolution.
    Full,
    /// Per-branch environment evolutions (frozen models only).
    Branches,
}

#[derive(Clone, Debug)]
pub struct CavityRun {
    /// Series `X`, `P`, `n`, `W`.
    pub trajectory: Trajectory,
    /// Largest population of the top two Fock levels over the run.
    pub top_population: f64,
    pub env_init: EnvInit,
    pub sign: WitnessSign,
}

const TOP_LABEL: &str = "top";

fn run(config: &CavityConfig, method: Method, require_frozen: bool, guard: bool) -> Result<CavityRun> {
    config.validate()?;
    if require_frozen && !config.is_frozen() {
        return Err(Error::NotFrozen {
            residual: (config.epsilons[0] - config.epsilons[3]).abs(),
        });
    }
    let levels = config.levels();
    let model = frame_model(config)?;
    let rho_e = initial_environment(config)?;
    let top = [Observable::new(TOP_LABEL, fock::top_projector(levels, levels - 2))];
    let mut traj = match method {
        Method::Full => evolve_full_with(&model, &config.rho_s0, &rho_e, &config.times, &top, DEFAULT_COMPOSITE_CAP)?,
        Method::Branches => {
            let branches = eigen_branches(model.witness(), &config.rho_s0)?;
            branch_evolve_with(&model, &branches, &rho_e, &config.times, &top)?
        }
    };
    let top_population = traj.get(TOP_LABEL).unwrap_or(&[]).iter().fold(0.0_f64, |m, p| m.max(*p));
    traj.series.retain(|s| s.name != TOP_LABEL);
    if guard && top_population > TRUNCATION_TOL {
        return Err(Error::TruncationBreach {
            population: top_population,
            threshold: TRUNCATION_TOL,
            suggested_n_max: suggest_n_max(config.n_max),
        });
    }
    Ok(CavityRun {
        trajectory: traj,
        top_population,
        env_init: config.env_init,
        sign: config.interaction_sign(),
    })
}

fn suggest_n_max(n_max: usize) -> usize {
    n_max + n_max / 2 + 10
}

/// Frozen simulation (`ε₁ = ε₄`) with the truncation guard.
pub fn simulate(config: &CavityConfig) -> Result<CavityRun> {
    run(config, Method::Full, true, true)
}

pub fn simulate_with(config: &CavityConfig, method: Method) -> Result<CavityRun> {
    run(config, method, true, true)
}

/// Exact simulation without the frozen requirement, for control runs.
pub fn simulate_control(config: &CavityConfig) -> Result<CavityRun> {
    run(config, Method::Full, false, true)
}

/// Closed-form `X`, `P`, `n` of `a_α` for one branch starting in the vacuum.
///
/// With `λ = |γ_eff|·w_k`: `⟨a_α⟩(t) = -(λ/ω)(1 - e^{-iωt})`, so
/// `X = -(√2λ/ω)(1 - cos ωt)`, `P = -(√2λ/ω) sin ωt`,
/// `n = 2(λ/ω)²(1 - cos ωt)`.
pub fn branch_quadrature_analytic(w_k: f64, gamma_abs: f64, omega: f64, times: &[f64]) -> Result<Trajectory> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::param("omega", "must be positive"));
    }
    let ratio = gamma_abs * w_k / omega;
    let s2 = std::f64::consts::SQRT_2;
    let mut traj = Trajectory::new(times.to_vec())?;
    traj.push("X", times.iter().map(|t| -s2 * ratio * (1.0 - (omega * t).cos())).collect())?;
    traj.push("P", times.iter().map(|t| -s2 * ratio * (omega * t).sin()).collect())?;
    traj.push("n", times.iter().map(|t| 2.0 * ratio * ratio * (1.0 - (omega * t).cos())).collect())?;
    Ok(traj)
}

/// Probability-weighted branch closed forms, plus the thermal occupation
/// `n_th` of the initial environment.
pub fn branch_mixture_analytic(
    branches: &WitnessBranches,
    gamma_abs: f64,
    omega: f64,
    n_thermal: f64,
    times: &[f64],
) -> Result<Trajectory> {
    let mut acc: [Vec<f64>; 3] = [vec![0.0; times.len()], vec![0.0; times.len()], vec![n_thermal; times.len()]];
    for b in &branches.branches {
        let t = branch_quadrature_analytic(b.eigenvalue, gamma_abs, omega, times)?;
        for (slot, name) in acc.iter_mut().zip(["X", "P", "n"]) {
            for (a, v) in slot.iter_mut().zip(t.get(name).expect("present")) {
                *a += b.probability * v;
            }
        }
    }
    let mut traj = Trajectory::new(times.to_vec())?;
    for (name, values) in ["X", "P", "n"].into_iter().zip(acc) {
        traj.push(name, values)?;
    }
    traj.push("W", vec![branches.mean(); times.len()])?;
    Ok(traj)
}

/// Mean thermal occupation of the initial environment.
pub fn thermal_occupation(config: &CavityConfig) -> f64 {
    match config.env_init {
        EnvInit::Vacuum => 0.0,
        EnvInit::Thermal { beta } => {
            let x = (-beta * config.omega).exp();
            x / (1.0 - x)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub n_max: usize,
    pub top_population: f64,
    /// Whether the truncation guard would accept this level.
    pub guard_ok: bool,
    /// `max_t` over `X`, `P` of the difference from the previous row.
    pub diff_from_previous: Option<f64>,
}

/// Runs the configuration at every truncation level in `n_max_list`
/// (ascending) and tabulates successive quadrature differences.
pub fn convergence_sweep(config: &CavityConfig, n_max_list: &[usize]) -> Result<Vec<SweepRow>> {
    if n_max_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("nMaxList", "must be strictly ascending"));
    }
    let mut rows = Vec::with_capacity(n_max_list.len());
    let mut previous: Option<Trajectory> = None;
    for &n_max in n_max_list {
        let cfg = CavityConfig {
            n_max,
            ..config.clone()
        };
        let out = run(&cfg, Method::Full, false, false)?;
        let diff = previous.as_ref().map(|p| {
            ["X", "P"]
                .iter()
                .map(|name| out.trajectory.max_abs_diff(p, name).expect("present"))
                .fold(0.0_f64, f64::max)
        });
        rows.push(SweepRow {
            n_max,
            top_population: out.top_population,
            guard_ok: out.top_population <= TRUNCATION_TOL,
            diff_from_previous: diff,
        });
        previous = Some(out.trajectory);
    }
    Ok(rows)
}

/// Largest difference between the bottom quarter of the spectra of the
/// original and displaced-frame Hamiltonians after removing `ωα²`.
pub fn spectral_consistency(config: &CavityConfig) -> Result<f64> {
    config.validate()?;
    let levels = config.levels();
    let original = hermitian_eigen(&hamiltonian(config.epsilons, config.omega, config.gamma, levels))?;
    let displaced = hermitian_eigen(&displaced_hamiltonian(config.epsilons, config.omega, config.gamma, levels))?;
    let shift = config.omega * config.alpha().powi(2);
    let count = original.dim() / 4;
    Ok(original.values[..count]
        .iter()
        .zip(&displaced.values[..count])
        .map(|(a, b)| (a - b - shift).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::C64;
    use crate::states::NamedState;
    use crate::trajectory::uniform_times;

    fn config(gamma: f64, n_max: usize, state: NamedState) -> CavityConfig {
        CavityConfig {
            epsilons: [0.2, 0.5, -0.1, 0.2],
            omega: 1.0,
            gamma,
            n_max,
            rho_s0: state.density_matrix(),
            env_init: EnvInit::Vacuum,
            times: uniform_times(20.0, 200),
        }
    }

    #[test]
    fn decoupled_spectrum() {
        let eps = [0.1, 0.4, 0.7, 1.3];
        let h = hamiltonian(eps, 0.9, 0.0, 5);
        let mut want: Vec<f64> = eps
            .iter()
            .flat_map(|e| (0..5).map(move |n| e + 0.9 * n as f64))
            .collect();
        want.sort_by(f64::total_cmp);
        let got = hermitian_eigen(&h).unwrap().values;
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_built_two_level_instance() {
        let (eps, omega, gamma) = ([0.1, 0.2, 0.3, 0.4], 1.5, 0.6);
        let h = hamiltonian(eps, omega, gamma, 2);
        // Index = 2·atom + photon; γ(σ₁₄ + σ₄₁)(a + a†) links |1,n⟩ and |4,1-n⟩.
        let mut want = vec![C64::new(0.0, 0.0); 64];
        for (s, e) in eps.iter().enumerate() {
            for n in 0..2 {
                let i = 2 * s + n;
                want[i * 8 + i] = C64::new(e + omega * n as f64, 0.0);
            }
        }
        for (i, j) in [(0, 7), (7, 0), (1, 6), (6, 1)] {
            want[i * 8 + j] = C64::new(gamma, 0.0);
        }
        let want = Operator::from_row_major(8, &want).unwrap();
        assert!(h.distance(&want) < 1e-15);
    }

    #[test]
    fn equal_outer_energies_freeze_both_witnesses() {
        let cfg = config(0.3, 12, NamedState::PhiPlus);
        let model = frame_model(&cfg).unwrap();
        assert_eq!(model.frozen_residual(), 0.0);
        let atom = Operator::from_real_diagonal(&cfg.epsilons);
        for s in [WitnessSign::Plus, WitnessSign::Minus] {
            assert_eq!(crate::witness::frozen_check(&build_w_pm(s), &atom).unwrap(), 0.0);
        }
    }

    #[test]
    fn frame_sign_selects_the_witness() {
        let plus = displaced_frame(&config(0.4, 20, NamedState::PhiPlus)).unwrap();
        assert_eq!(plus.sign, WitnessSign::Plus);
        assert!(plus.witness_in_interaction.distance(&build_w_pm(WitnessSign::Plus)) == 0.0);
        let minus = displaced_frame(&config(-0.4, 20, NamedState::PhiPlus)).unwrap();
        assert_eq!(minus.sign, WitnessSign::Minus);
        assert!((minus.alpha - 0.2).abs() < 1e-15);
        assert!(minus.interior_residual < 1e-8);
    }

    #[test]
    fn simulation_matches_branch_closed_form() {
        let cfg = config(-0.4, 30, NamedState::PhiPlus);
        let out = simulate(&cfg).unwrap();
        let analytic = branch_quadrature_analytic(-1.0, cfg.gamma_eff().abs(), cfg.omega, &cfg.times).unwrap();
        for name in ["X", "P", "n"] {
            assert!(out.trajectory.max_abs_diff(&analytic, name).unwrap() < 1e-8, "{name}");
        }
        assert!(out.trajectory.get("W").unwrap().iter().all(|w| (w + 1.0).abs() < 1e-9));
    }

    #[test]
    fn zero_coupling_leaves_vacuum_quadratures_at_zero() {
        let out = simulate(&config(0.0, 10, NamedState::PhiPlus)).unwrap();
        for name in ["X", "P", "n"] {
            assert!(out.trajectory.get(name).unwrap().iter().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn mixture_oracle_for_non_eigenstate() {
        let cfg = config(-0.4, 30, NamedState::Basis(0));
        let out = simulate(&cfg).unwrap();
        let branches = eigen_branches(&build_w_pm(WitnessSign::Minus), &cfg.rho_s0).unwrap();
        let oracle = branch_mixture_analytic(&branches, cfg.gamma_eff().abs(), cfg.omega, 0.0, &cfg.times).unwrap();
        for name in ["X", "P", "n", "W"] {
            assert!(out.trajectory.max_abs_diff(&oracle, name).unwrap() < 1e-6, "{name}");
        }
    }

    #[test]
    fn analytic_branch_symmetries() {
        let times = uniform_times(10.0, 50);
        let zero = branch_quadrature_analytic(0.0, 0.3, 1.0, &times).unwrap();
        assert!(zero.get("X").unwrap().iter().all(|x| *x == 0.0));
        let up = branch_quadrature_analytic(2.0, 0.3, 1.0, &times).unwrap();
        let down = branch_quadrature_analytic(-2.0, 0.3, 1.0, &times).unwrap();
        for (a, b) in up.get("X").unwrap().iter().zip(down.get("X").unwrap()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn truncation_guard_triggers_for_strong_drive() {
        let mut cfg = config(-4.0, 10, NamedState::PhiPlus);
        cfg.times = uniform_times(6.0, 60);
        assert!(matches!(simulate(&cfg), Err(Error::TruncationBreach { .. })));
    }

    #[test]
    fn unfrozen_configs_are_rejected_by_simulate() {
        let mut cfg = config(-0.4, 12, NamedState::PhiPlus);
        cfg.epsilons[3] = 0.7;
        assert!(matches!(simulate(&cfg), Err(Error::NotFrozen { .. })));
        let out = simulate_control(&cfg).unwrap();
        let w = out.trajectory.get("W").unwrap();
        assert!(w.iter().any(|x| (x - w[0]).abs() > 1e-6));
    }

    #[test]
    fn sweep_requires_ascending_levels_and_vanishes_without_coupling() {
        let cfg = config(0.0, 10, NamedState::PhiPlus);
        assert!(convergence_sweep(&cfg, &[12, 10]).is_err());
        let rows = convergence_sweep(&cfg, &[10, 12]).unwrap();
        assert_eq!(rows[1].diff_from_previous, Some(0.0));
    }

    #[test]
    fn low_spectrum_survives_the_frame_change() {
        let cfg = config(-0.4, 30, NamedState::PhiPlus);
        assert!(spectral_consistency(&cfg).unwrap() < 1e-8);
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(0.1, 9, NamedState::PhiPlus);
        assert!(matches!(cfg.validate(), Err(Error::InvalidParameter { name: "nMax", .. })));
        cfg.n_max = 10;
        cfg.omega = 0.0;
        assert!(cfg.validate().is_err());
    }
}
