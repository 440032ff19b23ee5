// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! The witness-coupled protocol engine.
//!
//! A [`ProtocolModel`] holds `H = H_S⊗1 + 1⊗H_E + W⊗h_E` together with a
//! list of environment observables `G_j`. When `[W, H_S] = 0` the witness
//! expectation is frozen at `W₀` and the environment evolves, branch by
//! branch, under `H_E + w_k h_E`. When in addition
//! `[H_E, G_j] = i Σ_k c_jk G_k` and `[h_E, G_j] = i g_j 1`, the means obey
//! `Ġ_j + Σ_k c_jk G_k + g_j W₀ = 0`.
//!
//! Canonical commutators cannot hold on a finite matrix space, so both fits
//! take an *interior* [`Subspace`] of the environment on which they are
//! checked.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ode::rk4_integrate;
use crate::operator::{
    commutator, expm, trace_product, DensityMatrix, Operator, Propagator, C64, I,
};
use crate::trajectory::Trajectory;
use crate::witness::{frozen_check, WitnessBranches, FROZEN_TOL};

/// Residual allowed in `[H_E, G_j] = i Σ c_jk G_k`.
pub const CLOSURE_TOL: f64 = 1e-9;
/// Interior residual allowed in `[h_E, G_j] = i g_j 1`.
pub const CANONICAL_TOL: f64 = 1e-8;
/// Imaginary part allowed in fitted structural constants.
pub const REALITY_TOL: f64 = 1e-10;
/// Closed-form and RK solutions of the observable ODE must agree to this
/// (relative to `max(1, max |G|)`).
pub const ODE_AGREEMENT_TOL: f64 = 1e-8;
/// Default cap on the composite Hilbert-space dimension.
pub const DEFAULT_COMPOSITE_CAP: usize = 2048;

/// Labelled environment observable.
#[derive(Clone, Debug)]
pub struct Observable {
    pub label: String,
    pub op: Operator,
}

impl Observable {
    pub fn new(label: impl Into<String>, op: Operator) -> Self {
        Self {
            label: label.into(),
            op,
        }
    }
}

/// A set of basis indices of the environment space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    indices: Vec<usize>,
}

impl Subspace {
    pub fn full(dim: usize) -> Self {
        Self {
            indices: (0..dim).collect(),
        }
    }

    /// Basis states `0..count`.
    pub fn leading(count: usize) -> Self {
        Self::full(count)
    }

    pub fn from_indices(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `H_S⊗1 + 1⊗H_E + W⊗h_E`.
pub fn assemble_total(h_s: &Operator, h_e: &Operator, w: &Operator, h_int: &Operator) -> Result<Operator> {
    w.check_same_dim(h_s, "witness vs system Hamiltonian")?;
    h_int.check_same_dim(h_e, "interaction vs environment Hamiltonian")?;
    for op in [h_s, h_e, w, h_int] {
        op.require_hermitian()?;
    }
    let id_s = Operator::identity(h_s.dim());
    let id_e = Operator::identity(h_e.dim());
    Ok(&(&h_s.kron(&id_e) + &id_s.kron(h_e)) + &w.kron(h_int))
}

#[derive(Clone, Debug)]
pub struct ClosureFit {
    /// `c_jk`, row `j` belongs to observable `j`.
    pub c: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub max_imaginary: f64,
}

#[derive(Clone, Debug)]
pub struct CanonicalFit {
    pub g: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_imaginary: f64,
}

/// Least-squares fit of `-i[H_E, G_j]` onto `span{G_k}` on the given
/// subspace.
pub fn fit_closure(h_e: &Operator, observables: &[Observable], interior: &Subspace) -> Result<ClosureFit> {
    let k = observables.len();
    h_e.require_hermitian()?;
    let restricted: Vec<Operator> = observables
        .iter()
        .map(|g| {
            g.op.check_same_dim(h_e, "closure observable")?;
            g.op.require_hermitian()?;
            Ok(g.op.restrict(interior.indices()))
        })
        .collect::<Result<_>>()?;
    // Gram matrix ⟨G_a, G_b⟩ = tr(G_a G_b) is real for Hermitian G.
    let gram = DMatrix::from_fn(k, k, |a, b| trace_product(&restricted[a], &restricted[b]));
    let lu = gram.clone().lu();
    let mut c = DMatrix::zeros(k, k);
    let mut residuals = Vec::with_capacity(k);
    let mut max_imaginary = 0.0_f64;
    for (j, g) in observables.iter().enumerate() {
        let target = commutator(h_e, &g.op)?.scale(-I).restrict(interior.indices());
        let rhs = DVector::from_fn(k, |a, _| trace_product(&restricted[a], &target));
        let coeffs = lu.solve(&rhs).unwrap_or_else(|| DVector::zeros(k));
        let mut fitted = Operator::zeros(interior.len());
        for (b, coeff) in coeffs.iter().enumerate() {
            fitted = &fitted + &restricted[b].scale(*coeff);
            c[(j, b)] = coeff.re;
            max_imaginary = max_imaginary.max(coeff.im.abs());
        }
        let residual = target.distance(&fitted);
        if residual > CLOSURE_TOL * target.max_abs().max(1.0) {
            return Err(Error::ClosureViolated {
                index: j,
                label: g.label.clone(),
                residual,
            });
        }
        residuals.push(residual);
    }
    if max_imaginary > REALITY_TOL {
        return Err(Error::NonRealConstants {
            imaginary: max_imaginary,
        });
    }
    Ok(ClosureFit {
        c,
        residuals,
        max_imaginary,
    })
}

/// Fits `[h_int, G_j] = i g_j 1` on the interior subspace:
/// `g_j = -i tr_Π([h_int, G_j]) / dim Π`.
pub fn fit_canonical(h_int: &Operator, observables: &[Observable], interior: &Subspace) -> Result<CanonicalFit> {
    h_int.require_hermitian()?;
    let mut g = Vec::with_capacity(observables.len());
    let mut residuals = Vec::with_capacity(observables.len());
    let mut max_imaginary = 0.0_f64;
    for (j, obs) in observables.iter().enumerate() {
        obs.op.check_same_dim(h_int, "canonical observable")?;
        let block = commutator(h_int, &obs.op)?.restrict(interior.indices());
        let gj = block.trace() * (-I) / interior.len() as f64;
        max_imaginary = max_imaginary.max(gj.im.abs());
        let residual = block.distance(&Operator::identity(interior.len()).scale(I * gj.re));
        if residual > CANONICAL_TOL {
            return Err(Error::CanonicalRejected {
                index: j,
                label: obs.label.clone(),
                residual,
            });
        }
        g.push(gj.re);
        residuals.push(residual);
    }
    if max_imaginary > REALITY_TOL {
        return Err(Error::NonRealConstants {
            imaginary: max_imaginary,
        });
    }
    Ok(CanonicalFit {
        g,
        residuals,
        max_imaginary,
    })
}

#[derive(Clone, Debug)]
pub struct ProtocolModel {
    h_s: Operator,
    h_e: Operator,
    w: Operator,
    h_int: Operator,
    observables: Vec<Observable>,
    frozen_residual: f64,
}

impl ProtocolModel {
    pub fn new(
        h_s: Operator,
        h_e: Operator,
        w: Operator,
        h_int: Operator,
        observables: Vec<Observable>,
    ) -> Result<Self> {
        // Validates dimensions and hermiticity.
        assemble_total(&h_s, &h_e, &w, &h_int)?;
        for g in &observables {
            g.op.check_same_dim(&h_e, "environment observable")?;
            g.op.require_hermitian()?;
        }
        let frozen_residual = frozen_check(&w, &h_s)?;
        Ok(Self {
            h_s,
            h_e,
            w,
            h_int,
            observables,
            frozen_residual,
        })
    }

    pub fn h_s(&self) -> &Operator {
        &self.h_s
    }

    pub fn h_e(&self) -> &Operator {
        &self.h_e
    }

    pub fn witness(&self) -> &Operator {
        &self.w
    }

    pub fn h_int(&self) -> &Operator {
        &self.h_int
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn system_dim(&self) -> usize {
        self.h_s.dim()
    }

    pub fn env_dim(&self) -> usize {
        self.h_e.dim()
    }

    pub fn composite_dim(&self) -> usize {
        self.system_dim() * self.env_dim()
    }

    /// `max |[W, H_S]|`.
    pub fn frozen_residual(&self) -> f64 {
        self.frozen_residual
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen_residual <= FROZEN_TOL
    }

    pub fn require_frozen(&self) -> Result<()> {
        if self.is_frozen() {
            Ok(())
        } else {
            Err(Error::NotFrozen {
                residual: self.frozen_residual,
            })
        }
    }

    pub fn total_hamiltonian(&self) -> Operator {
        assemble_total(&self.h_s, &self.h_e, &self.w, &self.h_int).expect("validated at construction")
    }

    pub fn fit_closure(&self, interior: &Subspace) -> Result<ClosureFit> {
        fit_closure(&self.h_e, &self.observables, interior)
    }

    pub fn fit_canonical(&self, interior: &Subspace) -> Result<CanonicalFit> {
        fit_canonical(&self.h_int, &self.observables, interior)
    }

    /// Environment generator of the branch with witness eigenvalue `w_k`.
    pub fn branch_hamiltonian(&self, w_k: f64) -> Operator {
        &self.h_e + &self.h_int.scale(w_k)
    }

    /// Environment and witness forces `(F_E, F_W)` on every observable for
    /// the composite state `rho`.
    pub fn forces(&self, rho: &DensityMatrix) -> Result<Vec<(f64, f64)>> {
        rho.operator().check_same_dim(&Operator::zeros(self.composite_dim()), "forces")?;
        let id_s = Operator::identity(self.system_dim());
        self.observables
            .iter()
            .map(|g| {
                let f_e = trace_product(&id_s.kron(&commutator(&self.h_e, &g.op)?), rho.operator()) * I;
                let f_w = trace_product(&self.w.kron(&commutator(&self.h_int, &g.op)?), rho.operator()) * I;
                Ok((f_e.re, f_w.re))
            })
            .collect()
    }
}

/// Closed-form and RK solutions of `Ġ + c G + g W₀ = 0`.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub closed_form: Trajectory,
    pub numerical: Trajectory,
    pub max_deviation: f64,
    /// False when `c` is singular and the augmented-matrix exponential is
    /// used instead of a fixed point.
    pub used_fixed_point: bool,
}

pub fn solve_observable_ode(
    c: &DMatrix<f64>,
    g: &[f64],
    w0: f64,
    initial: &[f64],
    times: &[f64],
    labels: &[&str],
) -> Result<OdeSolution> {
    let k = c.nrows();
    if c.ncols() != k || g.len() != k || initial.len() != k || labels.len() != k {
        return Err(Error::DimensionMismatch {
            context: "observable ODE",
            expected: k,
            found: g.len(),
        });
    }
    let forcing: Vec<f64> = g.iter().map(|gj| gj * w0).collect();
    let c_norm = c.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let svd_min = c.clone().svd(false, false).singular_values.min();
    let invertible = k > 0 && svd_min > 1e-12 * c_norm.max(1.0);

    let mut closed: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); k];
    if invertible {
        let c_inv = c.clone().try_inverse().expect("checked singular values");
        let fixed = -(&c_inv * DVector::from_column_slice(&forcing));
        let offset = DVector::from_column_slice(initial) - &fixed;
        let minus_c = Operator::from_fn(k, |i, j| C64::new(-c[(i, j)], 0.0));
        for &t in times {
            let prop = expm(&minus_c.scale(t));
            for i in 0..k {
                let v: f64 = (0..k).map(|j| prop.entry(i, j).re * offset[j]).sum();
                closed[i].push(v + fixed[i]);
            }
        }
    } else {
        // d/dt [G; 1] = [[-c, -gW₀], [0, 0]] [G; 1].
        let aug = Operator::from_fn(k + 1, |i, j| {
            if i == k {
                C64::new(0.0, 0.0)
            } else if j == k {
                C64::new(-forcing[i], 0.0)
            } else {
                C64::new(-c[(i, j)], 0.0)
            }
        });
        for &t in times {
            let prop = expm(&aug.scale(t));
            for (i, series) in closed.iter_mut().enumerate() {
                let v: f64 = (0..k).map(|j| prop.entry(i, j).re * initial[j]).sum::<f64>() + prop.entry(i, k).re;
                series.push(v);
            }
        }
    }

    let spectral_radius = c
        .complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, z| m.max(z.norm()));
    let max_step = if spectral_radius > 0.0 {
        1.0 / (200.0 * spectral_radius)
    } else {
        f64::INFINITY
    };
    let rhs = |_t: f64, y: &Vec<f64>| -> Vec<f64> {
        (0..k)
            .map(|i| -(0..k).map(|j| c[(i, j)] * y[j]).sum::<f64>() - forcing[i])
            .collect()
    };
    let rk = rk4_integrate(rhs, initial.to_vec(), times, max_step);

    let mut closed_form = Trajectory::new(times.to_vec())?;
    let mut numerical = Trajectory::new(times.to_vec())?;
    let mut max_deviation = 0.0_f64;
    let mut scale = 1.0_f64;
    for i in 0..k {
        let rk_i: Vec<f64> = rk.iter().map(|y| y[i]).collect();
        for (a, b) in closed[i].iter().zip(&rk_i) {
            max_deviation = max_deviation.max((a - b).abs());
            scale = scale.max(a.abs());
        }
        closed_form.push(labels[i], closed[i].clone())?;
        numerical.push(labels[i], rk_i)?;
    }
    let tolerance = ODE_AGREEMENT_TOL * scale;
    if max_deviation > tolerance {
        return Err(Error::CrossCheck {
            context: "observable ODE closed form vs RK4",
            deviation: max_deviation,
            tolerance,
        });
    }
    Ok(OdeSolution {
        closed_form,
        numerical,
        max_deviation,
        used_fixed_point: invertible,
    })
}

/// Inverts the observable ODE for the witness:
/// `Ŵ₀(t) = -(Ġ_j + Σ_k c_jk G_k) / g_j`, with `Ġ` from finite differences
/// (central inside the grid, one-sided at the ends). Diagnostic only.
pub fn estimate_witness(times: &[f64], series: &[&[f64]], c: &DMatrix<f64>, g: &[f64], j: usize) -> Vec<f64> {
    let n = times.len();
    let gj = &series[j];
    (0..n)
        .map(|t| {
            let (lo, hi) = match t {
                0 => (0, 1.min(n - 1)),
                t if t == n - 1 => (t - 1, t),
                t => (t - 1, t + 1),
            };
            let deriv = if hi > lo {
                (gj[hi] - gj[lo]) / (times[hi] - times[lo])
            } else {
                0.0
            };
            let drift: f64 = (0..series.len()).map(|k| c[(j, k)] * series[k][t]).sum();
            -(deriv + drift) / g[j]
        })
        .collect()
}

fn observed_series(
    prop: &Propagator,
    rho0: &Operator,
    ops: &[&Operator],
    labels: &[String],
    times: &[f64],
) -> Result<Trajectory> {
    let values = prop.expectation_series(rho0, ops, times)?;
    let mut traj = Trajectory::new(times.to_vec())?;
    for (label, v) in labels.iter().zip(values) {
        traj.push(label.clone(), v)?;
    }
    Ok(traj)
}

/// Exact composite evolution `ρ(t) = e^{-iHt} ρ_S(0)⊗ρ_E(0) e^{iHt}`,
/// reporting every model observable, any `extra` environment observables
/// and the witness series `W`.
pub fn evolve_full_with(
    model: &ProtocolModel,
    rho_s0: &DensityMatrix,
    rho_e0: &DensityMatrix,
    times: &[f64],
    extra: &[Observable],
    cap: usize,
) -> Result<Trajectory> {
    let dim = model.composite_dim();
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    rho_s0.operator().check_same_dim(model.h_s(), "system state")?;
    rho_e0.operator().check_same_dim(model.h_e(), "environment state")?;
    let prop = Propagator::new(&model.total_hamiltonian())?;
    let rho0 = rho_s0.kron(rho_e0);
    let id_s = Operator::identity(model.system_dim());
    let id_e = Operator::identity(model.env_dim());
    let lifted: Vec<Operator> = model
        .observables()
        .iter()
        .chain(extra)
        .map(|g| id_s.kron(&g.op))
        .chain(std::iter::once(model.witness().kron(&id_e)))
        .collect();
    let labels: Vec<String> = model
        .observables()
        .iter()
        .chain(extra)
        .map(|g| g.label.clone())
        .chain(std::iter::once("W".to_string()))
        .collect();
    let refs: Vec<&Operator> = lifted.iter().collect();
    observed_series(&prop, rho0.operator(), &refs, &labels, times)
}

pub fn evolve_full(
    model: &ProtocolModel,
    rho_s0: &DensityMatrix,
    rho_e0: &DensityMatrix,
    times: &[f64],
) -> Result<Trajectory> {
    evolve_full_with(model, rho_s0, rho_e0, times, &[], DEFAULT_COMPOSITE_CAP)
}

/// Branch-decomposed evolution of a frozen model:
/// `G_j(t) = Σ_k p_k tr{G_j e^{-it(H_E + w_k h_E)} ρ_E(0) e^{it(H_E + w_k h_E)}}`.
///
/// Branches run in parallel and are summed in their fixed order.
pub fn branch_evolve_with(
    model: &ProtocolModel,
    branches: &WitnessBranches,
    rho_e0: &DensityMatrix,
    times: &[f64],
    extra: &[Observable],
) -> Result<Trajectory> {
    model.require_frozen()?;
    rho_e0.operator().check_same_dim(model.h_e(), "environment state")?;
    let observables: Vec<&Observable> = model.observables().iter().chain(extra).collect();
    let ops: Vec<&Operator> = observables.iter().map(|g| &g.op).collect();
    let per_branch: Vec<Vec<Vec<f64>>> = branches
        .branches
        .par_iter()
        .map(|b| {
            let prop = Propagator::new(&model.branch_hamiltonian(b.eigenvalue))?;
            prop.expectation_series(rho_e0.operator(), &ops, times)
        })
        .collect::<Result<_>>()?;
    let mut traj = Trajectory::new(times.to_vec())?;
    for (j, g) in observables.iter().enumerate() {
        let mut acc = vec![0.0; times.len()];
        for (b, series) in branches.branches.iter().zip(&per_branch) {
            for (a, v) in acc.iter_mut().zip(&series[j]) {
                *a += b.probability * v;
            }
        }
        traj.push(g.label.clone(), acc)?;
    }
    traj.push("W", vec![branches.mean(); times.len()])?;
    Ok(traj)
}

pub fn branch_evolve(
    model: &ProtocolModel,
    branches: &WitnessBranches,
    rho_e0: &DensityMatrix,
    times: &[f64],
) -> Result<Trajectory> {
    branch_evolve_with(model, branches, rho_e0, times, &[])
}
