// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;

use wpsim::gas::{self, GasConfig};
use wpsim::states::NamedState;
use wpsim::trajectory::uniform_times;
use wpsim::witness::{build_w_pm, eigen_branches, WitnessSign};

fn config(n: usize, alpha: f64, state: NamedState, sign: WitnessSign) -> GasConfig {
    GasConfig {
        n,
        m: 1.0,
        beta: 1.0,
        alpha,
        branches: eigen_branches(&build_w_pm(sign), &state.density_matrix()).unwrap(),
        times: uniform_times(10.0, 20),
    }
}

fn states() -> impl Strategy<Value = NamedState> {
    prop::sample::select(vec![
        NamedState::PhiPlus,
        NamedState::PhiMinus,
        NamedState::PsiPlus,
        NamedState::Basis(0),
        NamedState::Basis(3),
    ])
}

fn signs() -> impl Strategy<Value = WitnessSign> {
    prop::sample::select(vec![WitnessSign::Plus, WitnessSign::Minus])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn drift_direction_follows_the_witness_sign(
        n in 10usize..200,
        alpha in 0.02..0.5f64,
        state in states(),
        sign in signs(),
        seed in any::<u64>(),
    ) {
        let cfg = config(n, alpha, state, sign);
        let samples = 400;
        let res = gas::mc_ensemble(&cfg, seed, samples).unwrap();
        let w0 = cfg.branches.mean();
        for (k, t) in cfg.times.iter().enumerate() {
            let salient = w0.abs() * alpha * t > 5.0 * res.analytic_std[k] / (samples as f64).sqrt();
            if *t > 0.0 && salient {
                prop_assert_eq!(res.mean[k].signum(), -w0.signum(), "t = {}", t);
            }
        }
    }

    #[test]
    fn samples_are_a_function_of_config_and_seed(
        n in 1usize..50,
        alpha in -1.0..1.0f64,
        state in states(),
        sign in signs(),
        seed in any::<u64>(),
    ) {
        let cfg = config(n, alpha, state, sign);
        prop_assert_eq!(gas::mc_sample(&cfg, seed).unwrap(), gas::mc_sample(&cfg, seed).unwrap());
        let a = gas::mc_ensemble(&cfg, seed, 64).unwrap();
        let b = gas::mc_ensemble(&cfg, seed, 64).unwrap();
        prop_assert_eq!(a.mean, b.mean);
        prop_assert_eq!(a.std, b.std);
    }
}

#[test]
fn ensemble_converges_at_the_inverse_square_root_rate() {
    // Non-eigenstate: per-path slopes spread by α Σ_W, so the slope error is
    // α Σ_W / sqrt(samples). Check the stderr scaling and that the observed
    // errors are standard normal in units of it.
    let cfg = config(100, 0.1, NamedState::Basis(0), WitnessSign::Minus);
    let spread = cfg.alpha * cfg.branches.std();
    let mut z2 = Vec::new();
    for (k, samples) in [400usize, 1600, 6400].into_iter().enumerate() {
        for j in 0..32u64 {
            let r = gas::mc_ensemble(&cfg, 1000 * k as u64 + j, samples).unwrap();
            let predicted = spread / (samples as f64).sqrt();
            assert!((r.slope_stderr / predicted - 1.0).abs() < 0.05);
            z2.push(((r.slope - r.analytic_slope) / predicted).powi(2));
        }
    }
    // Mean of 96 squared standard normals: 1 ± 0.145.
    let mean = z2.iter().sum::<f64>() / z2.len() as f64;
    assert!((0.55..1.45).contains(&mean), "mean z² {mean}");
}
