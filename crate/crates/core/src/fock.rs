// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Truncated single-mode Fock-space operators.
//!
//! `levels` is the number of retained number states `|0⟩ … |levels-1⟩`,
//! i.e. `n_max + 1`. Quadratures are fixed as `X = (a + a†)/√2` and
//! `P = i(a† - a)/√2`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::operator::{Operator, Propagator, C64, I, ONE, ZERO};

/// Unitarity residual above which a truncated displacement is re-unitarized.
pub const UNITARITY_TOL: f64 = 1e-10;

pub fn annihilation(levels: usize) -> Operator {
    Operator::from_fn(levels, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

pub fn creation(levels: usize) -> Operator {
    annihilation(levels).adjoint()
}

pub fn number(levels: usize) -> Operator {
    Operator::from_real_diagonal(&(0..levels).map(|n| n as f64).collect::<Vec<_>>())
}

/// `X = (a + a†)/√2`.
pub fn position_quadrature(levels: usize) -> Operator {
    let a = annihilation(levels);
    (&a + &a.adjoint()).scale(FRAC_1_SQRT_2)
}

/// `P = i(a† - a)/√2`.
pub fn momentum_quadrature(levels: usize) -> Operator {
    let a = annihilation(levels);
    (&a.adjoint() - &a).scale(I * FRAC_1_SQRT_2)
}

/// `a + a†`.
pub fn field_sum(levels: usize) -> Operator {
    let a = annihilation(levels);
    &a + &a.adjoint()
}

/// Projector onto number states `first..levels`.
pub fn top_projector(levels: usize, first: usize) -> Operator {
    Operator::from_fn(levels, |i, j| if i == j && i >= first { ONE } else { ZERO })
}

/// Number state `|n⟩` as a column vector.
pub fn number_state(levels: usize, n: usize) -> Vec<C64> {
    (0..levels).map(|k| if k == n { ONE } else { ZERO }).collect()
}

/// Truncated displacement `D(α) = exp(α(a† - a))` for real `α`.
///
/// Built from the eigendecomposition of the Hermitian generator
/// `iα(a† - a)`; if the result misses unitarity by more than
/// [`UNITARITY_TOL`] it is replaced by the unitary polar factor.
pub fn displacement(levels: usize, alpha: f64) -> Result<Operator> {
    if !alpha.is_finite() {
        return Err(Error::param("alpha", "displacement must be finite"));
    }
    let a = annihilation(levels);
    // exp(α(a† - a)) = exp(-i K) with K = iα(a† - a) Hermitian.
    let generator = (&a.adjoint() - &a).scale(I * alpha);
    let d = Propagator::new(&generator)?.unitary(1.0);
    if unitarity_residual(&d) > UNITARITY_TOL {
        return Ok(polar_unitary(&d));
    }
    Ok(d)
}

/// Displacement built on a padded workspace of `levels + pad` number states,
/// where `pad` grows until `D a D† = a - α` holds on the first `levels`
/// states within `tol`.
///
/// Truncating `exp(α(a† - a))` corrupts the states nearest the cut, and the
/// corruption reaches deeper as `α√levels` grows. Padding moves the cut away
/// from the block of interest. Returns `D` on the padded space.
pub fn padded_displacement(levels: usize, alpha: f64, tol: f64) -> Result<Operator> {
    let keep: Vec<usize> = (0..levels).collect();
    let mut pad = 16;
    loop {
        let total = levels + pad;
        let d = displacement(total, alpha)?;
        let a = annihilation(total);
        let shifted = &(&d * &a) * &d.adjoint();
        let expected = &a - &Operator::identity(total).scale(alpha);
        let residual = (&shifted - &expected).restrict(&keep).max_abs();
        if residual <= tol {
            return Ok(d);
        }
        if pad >= 4 * levels.max(64) {
            return Err(Error::CrossCheck {
                context: "padded displacement",
                deviation: residual,
                tolerance: tol,
            });
        }
        pad *= 2;
    }
}

/// `max |U†U - 1|`.
pub fn unitarity_residual(u: &Operator) -> f64 {
    (&(&u.adjoint() * u) - &Operator::identity(u.dim())).max_abs()
}

/// Unitary factor `W V†` of the polar decomposition `A = (W V†)(V Σ V†)`.
pub fn polar_unitary(a: &Operator) -> Operator {
    let svd = a.matrix().clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    Operator::from_matrix(u * v_t).expect("square")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::commutator;

    #[test]
    fn ladder_commutator_is_identity_below_the_top_level() {
        let levels = 12;
        let a = annihilation(levels);
        let comm = commutator(&a, &a.adjoint()).unwrap();
        for n in 0..levels - 1 {
            assert!((comm.entry(n, n) - ONE).norm() < 1e-14);
        }
        assert!((comm.entry(levels - 1, levels - 1).re + (levels - 1) as f64).abs() < 1e-12);
    }

    #[test]
    fn number_operator_matches_a_dagger_a() {
        let a = annihilation(9);
        assert!((&a.adjoint() * &a).distance(&number(9)) < 1e-14);
    }

    #[test]
    fn displacement_shifts_the_mode_on_interior_levels() {
        let levels = 41;
        let alpha = 0.35;
        let interior: Vec<usize> = (0..=levels - 3).collect();

        // Plain truncation leaves O(1) errors next to the cut.
        let d = displacement(levels, alpha).unwrap();
        assert!(unitarity_residual(&d) < 1e-12);
        let a = annihilation(levels);
        let shifted = &(&d * &a) * &d.adjoint();
        let expected = &a - &Operator::identity(levels).scale(alpha);
        assert!((&shifted - &expected).restrict(&interior).max_abs() > 1e-3);

        let d = padded_displacement(levels, alpha, 1e-12).unwrap();
        let total = d.dim();
        let a = annihilation(total);
        let shifted = &(&d * &a) * &d.adjoint();
        let expected = &a - &Operator::identity(total).scale(alpha);
        let residual = (&shifted - &expected).restrict(&interior).max_abs();
        assert!(residual < 1e-9, "residual {residual:e}");
    }

    #[test]
    fn polar_factor_of_a_unitary_is_itself() {
        let d = displacement(10, 0.2).unwrap();
        assert!(polar_unitary(&d).distance(&d) < 1e-12);
        let stretched = d.scale(1.5);
        let fixed = polar_unitary(&stretched);
        assert!(unitarity_residual(&fixed) < 1e-12);
        assert!(fixed.distance(&d) < 1e-12);
    }
}
