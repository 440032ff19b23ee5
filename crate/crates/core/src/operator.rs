// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex operator algebra and exact unitary time evolution.
//!
//! Every operator in the crate (Hamiltonians, witnesses, observables,
//! density matrices) is an [`Operator`]: a square `nalgebra` matrix of
//! `Complex64`. Composite spaces use the Kronecker convention in which the
//! *first* factor is the slow index, so `|i⟩ ⊗ |j⟩` sits at row
//! `i * dim_b + j`.
//!
//! Time evolution follows `dρ/dt = i[ρ, H]`, which is the usual
//! `-i[H, ρ]` written with the commutator reversed; the solution is
//! `ρ(t) = e^{-iHt} ρ(0) e^{iHt}`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Entry-wise tolerance for accepting an operator as Hermitian, relative to
/// `max(1, max |A_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on the imaginary part of an expectation value, relative to
/// `max(1, max |O_ij|)`.
pub const IMAG_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted in a density matrix.
pub const MIN_EIGENVALUE: f64 = -1e-10;
/// Allowed deviation of a density-matrix trace from one.
pub const TRACE_TOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: "square operator",
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::param("dim", "operator dimension must be positive"));
        }
        Ok(Self { m })
    }

    /// Builds an operator from `dim * dim` entries in row-major order.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "row-major entries",
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            m: DMatrix::from_fn(dim, dim, f),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO })
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                context: "outer product",
                expected: a.len(),
                found: b.len(),
            });
        }
        Ok(Self::from_fn(a.len(), |i, j| a[i] * b[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let n = self.dim();
        (0..n * n).map(|k| self.m[(k / n, k % n)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() <= HERMITIAN_TOL * self.max_abs().max(1.0)
    }

    pub(crate) fn require_hermitian(&self) -> Result<()> {
        if self.is_hermitian() {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                residual: self.hermiticity_residual(),
            })
        }
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            m: (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    pub fn scale(&self, c: impl Into<C64>) -> Self {
        Self { m: &self.m * c.into() }
    }

    /// Kronecker product, first factor slow.
    pub fn kron(&self, other: &Operator) -> Self {
        Self {
            m: self.m.kronecker(&other.m),
        }
    }

    /// Principal submatrix on the given basis indices.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        Self::from_fn(indices.len(), |i, j| self.m[(indices[i], indices[j])])
    }

    /// Largest entry magnitude of `self - other`.
    pub fn distance(&self, other: &Operator) -> f64 {
        (&self.m - &other.m).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub(crate) fn check_same_dim(&self, other: &Operator, context: &'static str) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator { m: &self.m + &rhs.m }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator { m: &self.m - &rhs.m }
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator { m: &self.m * &rhs.m }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { m: -&self.m }
    }
}

/// Pauli matrices in the computational basis `{|0⟩, |1⟩}`.
pub mod pauli {
    use super::{Operator, C64, I, ONE, ZERO};

    pub fn identity() -> Operator {
        Operator::identity(2)
    }

    pub fn x() -> Operator {
        Operator::from_row_major(2, &[ZERO, ONE, ONE, ZERO]).expect("2x2")
    }

    pub fn y() -> Operator {
        Operator::from_row_major(2, &[ZERO, -I, I, ZERO]).expect("2x2")
    }

    pub fn z() -> Operator {
        Operator::from_row_major(2, &[ONE, ZERO, ZERO, C64::new(-1.0, 0.0)]).expect("2x2")
    }
}

/// Which subsystem a state lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceLabel {
    System,
    Environment,
    Composite,
}

/// Unit-trace, Hermitian, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
    label: SpaceLabel,
}

impl DensityMatrix {
    pub fn new(op: Operator, label: SpaceLabel) -> Result<Self> {
        let rho = Self { op, label };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn new_unchecked(op: Operator, label: SpaceLabel) -> Self {
        Self { op, label }
    }

    /// `|ψ⟩⟨ψ|` for a normalised copy of `psi`.
    pub fn from_pure(psi: &[C64], label: SpaceLabel) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= 0.0 {
            return Err(Error::InvalidDensityMatrix("zero state vector".into()));
        }
        let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::new(Operator::outer(&unit, &unit)?, label)
    }

    pub fn maximally_mixed(dim: usize, label: SpaceLabel) -> Self {
        Self::new_unchecked(Operator::identity(dim).scale(1.0 / dim as f64), label)
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.op.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        self.op
            .require_hermitian()
            .map_err(|e| Error::InvalidDensityMatrix(e.to_string()))?;
        let min = hermitian_eigen(&self.op)?.values[0];
        if min < MIN_EIGENVALUE {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn label(&self) -> SpaceLabel {
        self.label
    }

    /// Product state `self ⊗ other` on the composite space.
    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        Self::new_unchecked(self.op.kron(&other.op), SpaceLabel::Composite)
    }

    /// Convex combination `Σ wᵢ ρᵢ`; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidDensityMatrix("empty mixture".into()))?;
        let mut acc = Operator::zeros(first.1.dim());
        for (w, rho) in parts {
            if *w < 0.0 {
                return Err(Error::InvalidDensityMatrix(format!("negative weight {w}")));
            }
            acc.check_same_dim(&rho.op, "mixture")?;
            acc = &acc + &rho.op.scale(*w);
        }
        Self::new(acc, first.1.label)
    }
}

/// Ascending eigenvalues and orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k).iter().copied().collect()
    }

    /// `V Λ V†`.
    pub fn reconstruct(&self) -> Operator {
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(v);
        }
        Operator {
            m: scaled * self.vectors.adjoint(),
        }
    }

    /// `max |V†V - 1|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.dim();
        let gram = self.vectors.adjoint() * &self.vectors;
        (gram - DMatrix::<C64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// `a ⊗ b` with the first factor as the slow index.
pub fn tensor_product(a: &Operator, b: &Operator) -> Operator {
    a.kron(b)
}

/// `ab - ba`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.check_same_dim(b, "commutator")?;
    Ok(&(a * b) - &(b * a))
}

pub fn hermitian_eigen(a: &Operator) -> Result<EigenSystem> {
    a.require_hermitian()?;
    let eig = a.hermitian_part().m.symmetric_eigen();
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenSystem { values, vectors })
}

/// Exact propagation under a fixed Hermitian generator via its
/// eigendecomposition.
#[derive(Clone, Debug)]
pub struct Propagator {
    eigen: EigenSystem,
}

impl Propagator {
    pub fn new(h: &Operator) -> Result<Self> {
        Ok(Self {
            eigen: hermitian_eigen(h)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigen.dim()
    }

    pub fn eigen(&self) -> &EigenSystem {
        &self.eigen
    }

    /// `e^{-iHt}`.
    pub fn unitary(&self, t: f64) -> Operator {
        let v = &self.eigen.vectors;
        let mut scaled = v.clone();
        for (k, &e) in self.eigen.values.iter().enumerate() {
            { let ph = C64::from_polar(1.0, -e * t); scaled.column_mut(k).iter_mut().for_each(|x| *x *= ph); }
        }
        Operator {
            m: scaled * v.adjoint(),
        }
    }

    pub fn evolve(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        rho.op.check_same_dim(&Operator::zeros(self.dim()), "evolve")?;
        let u = self.unitary(t);
        let out = &(&u * &rho.op) * &u.adjoint();
        Ok(DensityMatrix::new_unchecked(out, rho.label))
    }

    /// `tr(G_j ρ(t))` for every observable and time, evaluated in the
    /// eigenbasis so each time point costs `O(dim²)` per observable.
    pub fn expectation_series(
        &self,
        rho0: &Operator,
        observables: &[&Operator],
        times: &[f64],
    ) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        rho0.check_same_dim(&Operator::zeros(n), "expectation series")?;
        let v = &self.eigen.vectors;
        let vh = v.adjoint();
        let rho_eig = &vh * rho0.matrix() * v;
        let kernels: Vec<(DMatrix<C64>, f64)> = observables
            .iter()
            .map(|g| {
                g.check_same_dim(rho0, "expectation series")?;
                let g_eig = &vh * g.matrix() * v;
                // K_ab = G̃_ba ρ̃_ab so that tr(G̃ ρ̃(t)) = Σ_ab K_ab φ_a φ_b*.
                let k = DMatrix::from_fn(n, n, |a, b| g_eig[(b, a)] * rho_eig[(a, b)]);
                Ok((k, g.max_abs().max(1.0)))
            })
            .collect::<Result<_>>()?;
        let mut out = vec![Vec::with_capacity(times.len()); observables.len()];
        let mut phases = vec![ZERO; n];
        for &t in times {
            for (p, &e) in phases.iter_mut().zip(&self.eigen.values) {
                *p = C64::from_polar(1.0, -e * t);
            }
            for (series, (k, scale)) in out.iter_mut().zip(&kernels) {
                let mut total = ZERO;
                for b in 0..n {
                    let mut col = ZERO;
                    for a in 0..n {
                        col += k[(a, b)] * phases[a];
                    }
                    total += col * phases[b].conj();
                }
                if total.im.abs() > IMAG_TOL * scale {
                    return Err(Error::ImaginaryResidue { residue: total.im });
                }
                series.push(total.re);
            }
        }
        Ok(out)
    }
}

/// `ρ(t) = e^{-iHt} ρ e^{iHt}`, the solution of `dρ/dt = i[ρ, H]`.
pub fn evolve(h: &Operator, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    h.check_same_dim(&rho.op, "evolve")?;
    Propagator::new(h)?.evolve(rho, t)
}

/// Matrix exponential by scaling and squaring with a diagonal [6/6] Padé
/// approximant. Works for any square matrix; used as an independent route
/// to `e^{-iHt}`.
pub fn expm(a: &Operator) -> Operator {
    const B: [f64; 7] = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let n = a.dim();
    let norm = (0..n)
        .map(|i| a.m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = &a.m * C64::new(0.5_f64.powi(squarings), 0.0);
    let id = DMatrix::<C64>::identity(n, n);
    let mut num = id.clone() * C64::new(B[0], 0.0);
    let mut den = num.clone();
    let mut power = id;
    for (k, &b) in B.iter().enumerate().skip(1) {
        power = &power * &x;
        let term = &power * C64::new(b, 0.0);
        num += &term;
        if k % 2 == 0 {
            den += &term;
        } else {
            den -= &term;
        }
    }
    let mut r = den.lu().solve(&num).expect("Padé denominator is nonsingular");
    for _ in 0..squarings {
        r = &r * &r;
    }
    Operator { m: r }
}

/// Which factor of a bipartite space to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

pub fn partial_trace(rho: &DensityMatrix, dim_a: usize, dim_b: usize, keep: Keep) -> Result<DensityMatrix> {
    if dim_a * dim_b != rho.dim() {
        return Err(Error::DimensionMismatch {
            context: "partial trace factorization",
            expected: rho.dim(),
            found: dim_a * dim_b,
        });
    }
    let m = rho.op.matrix();
    let (out, label) = match keep {
        Keep::First => (
            Operator::from_fn(dim_a, |i, j| {
                (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum()
            }),
            SpaceLabel::System,
        ),
        Keep::Second => (
            Operator::from_fn(dim_b, |i, j| {
                (0..dim_a).map(|k| m[(k * dim_b + i, k * dim_b + j)]).sum()
            }),
            SpaceLabel::Environment,
        ),
    };
    Ok(DensityMatrix::new_unchecked(out, label))
}

/// `Re tr(O ρ)`, rejecting a non-negligible imaginary part.
pub fn expectation(obs: &Operator, rho: &DensityMatrix) -> Result<f64> {
    obs.check_same_dim(&rho.op, "expectation")?;
    obs.require_hermitian()?;
    let tr = trace_product(obs, &rho.op);
    if tr.im.abs() > IMAG_TOL * obs.max_abs().max(1.0) {
        return Err(Error::ImaginaryResidue { residue: tr.im });
    }
    Ok(tr.re)
}

/// `tr(AB)` without forming the product.
pub(crate) fn trace_product(a: &Operator, b: &Operator) -> C64 {
    let n = a.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a.m[(i, j)] * b.m[(j, i)];
        }
    }
    acc
}

/// Gibbs state `e^{-βh} / Z`.
pub fn thermal_state(h: &Operator, beta: f64) -> Result<DensityMatrix> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::param("beta", format!("must be positive, got {beta}")));
    }
    let eig = hermitian_eigen(h)?;
    let ground = eig.values[0];
    let weights: Vec<f64> = eig
        .values
        .iter()
        .map(|&e| {
            let gap = e - ground;
            if gap <= 1e-12 * ground.abs().max(1.0) {
                1.0
            } else {
                (-beta * gap).exp()
            }
        })
        .collect();
    let z: f64 = weights.iter().sum();
    let v = &eig.vectors;
    let mut scaled = v.clone();
    for (k, w) in weights.iter().enumerate() {
        scaled.column_mut(k).scale_mut(w / z);
    }
    let rho = Operator {
        m: scaled * v.adjoint(),
    }
    .hermitian_part();
    Ok(DensityMatrix::new_unchecked(rho, SpaceLabel::Environment))
}
