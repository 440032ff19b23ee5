// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;

use wpsim::cavity::{self, CavityConfig, EnvInit};
use wpsim::error::Error;
use wpsim::states::NamedState;
use wpsim::trajectory::uniform_times;
use wpsim::witness::{build_w_pm, witness_expectation, WitnessSign};

fn config(epsilons: [f64; 4], gamma: f64, n_max: usize, state: NamedState, t_end: f64) -> CavityConfig {
    CavityConfig {
        epsilons,
        omega: 1.0,
        gamma,
        n_max,
        rho_s0: state.density_matrix(),
        env_init: EnvInit::Vacuum,
        times: uniform_times(t_end, 200),
    }
}

fn mean(times: &[f64], v: &[f64]) -> f64 {
    let area: f64 = times.windows(2).zip(v.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum();
    area / times[times.len() - 1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn frozen_witness_stays_constant(
        e in prop::array::uniform3(-1.0..1.0f64),
        coupling in 0.05..0.6f64,
        positive in any::<bool>(),
        state in prop::sample::select(vec![NamedState::PhiPlus, NamedState::PsiMinus, NamedState::Basis(0)]),
    ) {
        let gamma = if positive { coupling } else { -coupling };
        let cfg = config([e[0], e[1], e[2], e[0]], gamma, 25, state, 20.0);
        let run = cavity::simulate(&cfg).unwrap();
        let w = run.trajectory.get("W").unwrap();
        prop_assert!(w.iter().all(|x| (x - w[0]).abs() <= 1e-9));
    }

    #[test]
    fn mean_displacement_sign_follows_the_branch(
        coupling in 0.05..0.6f64,
        positive in any::<bool>(),
        state in prop::sample::select(vec![NamedState::PhiPlus, NamedState::PhiMinus]),
    ) {
        // Bell states are witness eigenstates, so λ = |γ_eff| W₀ and the
        // time-mean of X over whole periods is −√2 λ/ω.
        let gamma = if positive { coupling } else { -coupling };
        let cfg = config([0.2, 0.5, -0.1, 0.2], gamma, 25, state, 4.0 * std::f64::consts::PI);
        let w0 = witness_expectation(&build_w_pm(WitnessSign::of(gamma)), &cfg.rho_s0).unwrap();
        let run = cavity::simulate(&cfg).unwrap();
        let m = mean(&cfg.times, run.trajectory.get("X").unwrap());
        prop_assert_eq!(m.signum(), -w0.signum());
        let want = -std::f64::consts::SQRT_2 * (gamma / 2.0).abs() * w0;
        prop_assert!((m - want).abs() <= 1e-3 * want.abs());
    }

    #[test]
    fn low_spectrum_agrees_between_frames(
        e in prop::array::uniform4(-1.0..1.0f64),
        gamma in -0.8..0.8f64,
    ) {
        let cfg = config(e, gamma, 30, NamedState::PhiPlus, 1.0);
        prop_assert!(cavity::spectral_consistency(&cfg).unwrap() <= 1e-8);
    }
}

#[test]
fn moderate_drive_converges_by_thirty_levels() {
    // |γ_eff|/ω = 0.2.
    let cfg = config([0.2, 0.5, -0.1, 0.2], -0.4, 30, NamedState::PhiPlus, 50.0);
    let rows = cavity::convergence_sweep(&cfg, &[10, 15, 20, 25, 30]).unwrap();
    let diffs: Vec<f64> = rows.iter().filter_map(|r| r.diff_from_previous).collect();
    assert!(diffs.last().unwrap() <= &1e-8, "{diffs:?}");
    assert!(rows.last().unwrap().guard_ok);
}

#[test]
fn strong_drive_trips_the_truncation_guard() {
    // |γ_eff|/ω = 2.
    let cfg = config([0.2, 0.5, -0.1, 0.2], -4.0, 15, NamedState::PhiPlus, 10.0);
    assert!(matches!(cavity::simulate(&cfg), Err(Error::TruncationBreach { .. })));
    let rows = cavity::convergence_sweep(&cfg, &[15, 40]).unwrap();
    assert!(!rows[0].guard_ok);
    assert!(rows[1].top_population < rows[0].top_population);
}
