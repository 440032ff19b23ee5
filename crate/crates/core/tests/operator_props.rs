// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

mod common;

use proptest::prelude::*;

use common::{density_strategy, hermitian_strategy};
use wpsim::operator::{evolve, expectation, hermitian_eigen, Operator, SpaceLabel};

fn spectral_norm(h: &Operator) -> f64 {
    let e = hermitian_eigen(h).unwrap();
    e.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn dims() -> impl Strategy<Value = usize> {
    2usize..=6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_preserves_state_properties(
        (h, rho) in dims().prop_flat_map(|n| (hermitian_strategy(n), density_strategy(n, SpaceLabel::System))),
        s in 0.0..1.0f64,
    ) {
        let t = s * 1e3 / spectral_norm(&h).max(1e-12);
        let out = evolve(&h, &rho, t).unwrap();
        let op = out.operator();
        prop_assert!((op.trace().re - 1.0).abs() <= 1e-10);
        prop_assert!(op.trace().im.abs() <= 1e-10);
        prop_assert!(op.hermiticity_residual() <= 1e-10);
        let min = hermitian_eigen(&op.hermitian_part()).unwrap().values[0];
        prop_assert!(min >= -1e-10, "min eigenvalue {min}");
    }

    #[test]
    fn evolution_is_a_semigroup(
        (h, rho) in dims().prop_flat_map(|n| (hermitian_strategy(n), density_strategy(n, SpaceLabel::System))),
        t1 in 0.0..20.0f64,
        t2 in 0.0..20.0f64,
    ) {
        let once = evolve(&h, &rho, t1 + t2).unwrap();
        let twice = evolve(&h, &evolve(&h, &rho, t1).unwrap(), t2).unwrap();
        prop_assert!(once.operator().distance(twice.operator()) <= 1e-9);
    }

    #[test]
    fn energy_is_conserved(
        (h, rho) in dims().prop_flat_map(|n| (hermitian_strategy(n), density_strategy(n, SpaceLabel::System))),
        t in 0.0..100.0f64,
    ) {
        let e0 = expectation(&h, &rho).unwrap();
        let et = expectation(&h, &evolve(&h, &rho, t).unwrap()).unwrap();
        prop_assert!((e0 - et).abs() <= 1e-10 * spectral_norm(&h).max(1.0));
    }

    #[test]
    fn eigendecomposition_reconstructs(h in dims().prop_flat_map(hermitian_strategy)) {
        let e = hermitian_eigen(&h).unwrap();
        let scale = h.max_abs().max(1.0);
        prop_assert!(e.reconstruct().distance(&h) <= 1e-10 * scale);
        prop_assert!(e.orthonormality_residual() <= 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}
