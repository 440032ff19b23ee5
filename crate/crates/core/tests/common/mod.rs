// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Random operators and states for the property tests.

#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;

use wpsim::operator::{DensityMatrix, Operator, SpaceLabel, C64};

/// Entries of a random complex `n×n` matrix, real and imaginary parts in
/// `[-1, 1]`.
pub fn complex_entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
}

fn matrix(n: usize, entries: &[(f64, f64)]) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |i, j| {
        let (re, im) = entries[i * n + j];
        C64::new(re, im)
    })
}

/// `(A + A†)/2`.
pub fn hermitian(n: usize, entries: &[(f64, f64)]) -> Operator {
    let a = matrix(n, entries);
    Operator::from_matrix((&a + a.adjoint()) * C64::new(0.5, 0.0)).expect("square")
}

/// `BB†/tr(BB†)`.
pub fn density(n: usize, entries: &[(f64, f64)], label: SpaceLabel) -> DensityMatrix {
    let b = matrix(n, entries);
    let m = &b * b.adjoint();
    let tr = m.trace().re;
    let op = Operator::from_matrix(m / C64::new(tr, 0.0)).expect("square");
    DensityMatrix::new(op.hermitian_part(), label).expect("valid state")
}

pub fn hermitian_strategy(n: usize) -> impl Strategy<Value = Operator> {
    complex_entries(n).prop_map(move |e| hermitian(n, &e))
}

pub fn density_strategy(n: usize, label: SpaceLabel) -> impl Strategy<Value = DensityMatrix> {
    complex_entries(n).prop_map(move |e| density(n, &e, label))
}

/// Random pure one-qubit state as a 2×2 density matrix mixed with white
/// noise of weight `p`.
pub fn qubit_state(re: [f64; 4], p: f64) -> DMatrix<C64> {
    let a = C64::new(re[0], re[1]);
    let b = C64::new(re[2], re[3]);
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt().max(1e-9);
    let (a, b) = (a / n, b / n);
    let pure = DMatrix::from_row_slice(2, 2, &[a * a.conj(), a * b.conj(), b * a.conj(), b * b.conj()]);
    pure * C64::new(1.0 - p, 0.0) + DMatrix::identity(2, 2) * C64::new(p / 2.0, 0.0)
}
