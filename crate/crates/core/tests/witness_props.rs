// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

mod common;

use proptest::prelude::*;

use common::{density_strategy, hermitian_strategy, qubit_state};
use wpsim::operator::{DensityMatrix, Operator, SpaceLabel};
use wpsim::witness::{build_w_pm, certify, eigen_branches, witness_expectation, WitnessSign};

fn product_state() -> impl Strategy<Value = DensityMatrix> {
    (prop::array::uniform4(-1.0..1.0f64), prop::array::uniform4(-1.0..1.0f64), 0.0..1.0f64, 0.0..1.0f64).prop_map(
        |(a, b, pa, pb)| {
            let rho = qubit_state(a, pa).kronecker(&qubit_state(b, pb));
            DensityMatrix::new(Operator::from_matrix(rho).unwrap().hermitian_part(), SpaceLabel::System).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn product_states_are_never_certified(rho in product_state()) {
        let r = certify(&rho).unwrap();
        prop_assert!(r.w_plus >= -1e-10 && r.w_minus >= -1e-10, "{r:?}");
        prop_assert!(!r.certified);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn witness_pair_sums_to_two(rho in density_strategy(4, SpaceLabel::System)) {
        let r = certify(&rho).unwrap();
        prop_assert!((r.w_plus + r.w_minus - 2.0).abs() <= 1e-15);
        let wp = witness_expectation(&build_w_pm(WitnessSign::Plus), &rho).unwrap();
        prop_assert!((wp - r.w_plus).abs() <= 1e-12);
    }

    #[test]
    fn branch_sum_matches_expectation(
        w in hermitian_strategy(4),
        rho in density_strategy(4, SpaceLabel::System),
    ) {
        let b = eigen_branches(&w, &rho).unwrap();
        prop_assert!((b.total_probability() - 1.0).abs() <= 1e-10);
        prop_assert!((b.mean() - witness_expectation(&w, &rho).unwrap()).abs() <= 1e-10);
        prop_assert!(b.branches.iter().all(|br| br.probability >= -1e-12));
    }
}
