// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Multimode radiation field in a periodic box of side `L` (`ħ = c = 1`).
//!
//! Modes are the wave vectors `k = 2πn/L`, `n ∈ ℤ³`, with
//! `0 < |k| ≤ kMax`, each carrying two transverse polarizations. The
//! environment couples through `h_E = -∫ D·E d³r`, which drives every mode
//! amplitude as `d⟨a⟩/dt = -iω⟨a⟩ - ΩW₀` with
//! `Ω = -sqrt(ω/2Vε₀) d*(k)·e*(k)`.
//!
//! Real-space samples live on an `N³` grid with `r = (i, j, l)·L/N`.
//! The discrete transform pair is
//! `d(k) = ΔV Σ_r D(r) e^{ik·r}` and `D(r) = (1/V) Σ_k d(k) e^{-ik·r}`,
//! so that the round trip is the identity on grid samples.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::rk4_integrate;
use crate::operator::{C64, I, ZERO};

/// Transversality and orthonormality tolerance of polarization vectors.
pub const POLARIZATION_TOL: f64 = 1e-12;
/// Completeness tolerance `Σ_λ e_λ e_λ† = 1 - k̂k̂ᵀ`.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Closed-form vs RK agreement per mode, relative to `2|ΩW₀|/ω`.
pub const MODE_AGREEMENT_TOL: f64 = 1e-8;
/// RK substeps satisfy `ω h ≤ RK_PHASE_STEP`.
pub const RK_PHASE_STEP: f64 = 0.004;
/// Averaging window must cover this many periods of the slowest mode.
pub const MIN_PERIODS: f64 = 20.0;
/// Relative imaginary residue allowed in reconstructed fields.
pub const FIELD_IMAG_TOL: f64 = 1e-10;

pub type Vec3 = [f64; 3];
pub type CVec3 = [C64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn cross_c(a: Vec3, b: CVec3) -> CVec3 {
    [
        b[2] * a[1] - b[1] * a[2],
        b[0] * a[2] - b[2] * a[0],
        b[1] * a[0] - b[0] * a[1],
    ]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn cnorm(a: &CVec3) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub n: [i32; 3],
    pub k: Vec3,
    pub omega: f64,
    /// Real unit vectors `e₁`, `e₂ = k̂ × e₁`.
    pub polarizations: [Vec3; 2],
}

#[derive(Clone, Debug)]
pub struct ModeLattice {
    pub box_size: f64,
    pub k_max: f64,
    pub modes: Vec<Mode>,
    index: HashMap<[i32; 3], usize>,
}

/// Gram-Schmidt polarization pair against the least-aligned Cartesian axis.
pub fn polarization_pair(k: Vec3) -> [Vec3; 2] {
    let kn = norm(k);
    let khat = [k[0] / kn, k[1] / kn, k[2] / kn];
    let mut axis = 0;
    for i in 1..3 {
        if khat[i].abs() < khat[axis].abs() {
            axis = i;
        }
    }
    let mut a = [0.0; 3];
    a[axis] = 1.0;
    let p = dot(a, khat);
    let mut e1 = [a[0] - p * khat[0], a[1] - p * khat[1], a[2] - p * khat[2]];
    let l = norm(e1);
    e1.iter_mut().for_each(|x| *x /= l);
    [e1, cross(khat, e1)]
}

impl ModeLattice {
    pub fn volume(&self) -> f64 {
        self.box_size.powi(3)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn find(&self, n: [i32; 3]) -> Option<usize> {
        self.index.get(&n).copied()
    }

    /// Largest `|n_i|` over all modes.
    pub fn max_index(&self) -> usize {
        self.modes
            .iter()
            .flat_map(|m| m.n.iter().map(|x| x.unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }

    pub fn min_omega(&self) -> f64 {
        self.modes.iter().map(|m| m.omega).fold(f64::INFINITY, f64::min)
    }

    /// Worst transversality, orthonormality and completeness residuals.
    pub fn polarization_residuals(&self) -> (f64, f64, f64) {
        let mut trans = 0.0_f64;
        let mut ortho = 0.0_f64;
        let mut complete = 0.0_f64;
        for m in &self.modes {
            let [e1, e2] = m.polarizations;
            trans = trans.max(dot(m.k, e1).abs()).max(dot(m.k, e2).abs());
            ortho = ortho
                .max((dot(e1, e1) - 1.0).abs())
                .max((dot(e2, e2) - 1.0).abs())
                .max(dot(e1, e2).abs());
            let k2 = dot(m.k, m.k);
            for i in 0..3 {
                for j in 0..3 {
                    let sum = e1[i] * e1[j] + e2[i] * e2[j];
                    let want = if i == j { 1.0 } else { 0.0 } - m.k[i] * m.k[j] / k2;
                    complete = complete.max((sum - want).abs());
                }
            }
        }
        (trans, ortho, complete)
    }
}

/// All modes `k = 2πn/L` with `0 < |k| ≤ kMax`, sorted by `n`.
pub fn build_lattice(box_size: f64, k_max: f64) -> Result<ModeLattice> {
    if !(box_size.is_finite() && box_size > 0.0) {
        return Err(Error::param("L", "must be positive"));
    }
    let unit = 2.0 * PI / box_size;
    if !(k_max.is_finite() && k_max >= unit) {
        return Err(Error::EmptyLattice);
    }
    let ratio = k_max / unit;
    let reach = ratio.floor() as i32;
    let limit = ratio * ratio * (1.0 + 1e-12);
    let mut modes = Vec::new();
    for nx in -reach..=reach {
        for ny in -reach..=reach {
            for nz in -reach..=reach {
                let n2 = (nx * nx + ny * ny + nz * nz) as f64;
                if n2 == 0.0 || n2 > limit {
                    continue;
                }
                let k = [unit * nx as f64, unit * ny as f64, unit * nz as f64];
                modes.push(Mode {
                    n: [nx, ny, nz],
                    k,
                    omega: norm(k),
                    polarizations: polarization_pair(k),
                });
            }
        }
    }
    if modes.is_empty() {
        return Err(Error::EmptyLattice);
    }
    let index = modes.iter().enumerate().map(|(i, m)| (m.n, i)).collect();
    Ok(ModeLattice {
        box_size,
        k_max,
        modes,
        index,
    })
}

/// Real 3-vector samples on an `N³` grid, `x` slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VectorGrid {
    pub grid_n: usize,
    pub box_size: f64,
    pub values: Vec<Vec3>,
}

impl VectorGrid {
    pub fn zeros(grid_n: usize, box_size: f64) -> Self {
        Self {
            grid_n,
            box_size,
            values: vec![[0.0; 3]; grid_n.pow(3)],
        }
    }

    pub fn from_fn(grid_n: usize, box_size: f64, f: impl Fn(Vec3) -> Vec3) -> Self {
        let h = box_size / grid_n as f64;
        let mut values = Vec::with_capacity(grid_n.pow(3));
        for i in 0..grid_n {
            for j in 0..grid_n {
                for l in 0..grid_n {
                    values.push(f([i as f64 * h, j as f64 * h, l as f64 * h]));
                }
            }
        }
        Self {
            grid_n,
            box_size,
            values,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_n == 0 || self.values.len() != self.grid_n.pow(3) {
            return Err(Error::GridMismatch(format!(
                "expected {} samples for gridN = {}, found {}",
                self.grid_n.pow(3),
                self.grid_n,
                self.values.len()
            )));
        }
        if self.values.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::GridMismatch("non-finite sample".into()));
        }
        Ok(())
    }

    pub fn cell_volume(&self) -> f64 {
        (self.box_size / self.grid_n as f64).powi(3)
    }

    /// `max_r |v(r)|`.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| norm(*v)).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| [s * v[0], s * v[1], s * v[2]]).collect(),
            ..self.clone()
        }
    }

    /// `max_r |self(r) - other(r)|`.
    pub fn max_distance(&self, other: &VectorGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]]))
            .fold(0.0, f64::max)
    }
}

/// Dipole density specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "lowercase")]
pub enum DipoleSpec {
    /// `D = A ∇×(ẑ g)` with `g = exp(-|r - c|²/2σ²)`; transverse by
    /// construction. `center` defaults to the box centre.
    Gaussian {
        sigma: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: Option<Vec3>,
    },
    /// `D = A ê cos(2πn·r/L)`.
    Planewave {
        n: [i32; 3],
        polarization: Vec3,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Samples read from a JSON [`VectorGrid`].
    File { path: String },
}

fn one() -> f64 {
    1.0
}

/// Samples the analytic dipole profiles on the grid. File dipoles are read
/// by the caller.
pub fn sample_dipole(spec: &DipoleSpec, grid_n: usize, box_size: f64) -> Result<VectorGrid> {
    match spec {
        DipoleSpec::Gaussian {
            sigma,
            amplitude,
            center,
        } => {
            if !(sigma.is_finite() && *sigma > 0.0) {
                return Err(Error::param("dipole.sigma", "must be positive"));
            }
            let c = center.unwrap_or([0.5 * box_size; 3]);
            let s2 = sigma * sigma;
            Ok(VectorGrid::from_fn(grid_n, box_size, |r| {
                let d = [r[0] - c[0], r[1] - c[1], r[2] - c[2]];
                let g = (-dot(d, d) / (2.0 * s2)).exp();
                // ∇×(ẑ g) = (∂_y g, -∂_x g, 0).
                [-amplitude * d[1] / s2 * g, amplitude * d[0] / s2 * g, 0.0]
            }))
        }
        DipoleSpec::Planewave {
            n,
            polarization,
            amplitude,
        } => {
            let k = [n[0] as f64, n[1] as f64, n[2] as f64].map(|x| 2.0 * PI * x / box_size);
            Ok(VectorGrid::from_fn(grid_n, box_size, |r| {
                let c = amplitude * dot(k, r).cos();
                [c * polarization[0], c * polarization[1], c * polarization[2]]
            }))
        }
        DipoleSpec::File { path } => Err(Error::param(
            "dipole",
            format!("file dipole `{path}` must be loaded before sampling"),
        )),
    }
}

/// Complex 3-vector samples on an `N³` grid, `x` slowest. Holds either
/// grid values or their discrete spectrum, with wave index `n` stored at
/// `n mod N`.
#[derive(Clone)]
struct Spectrum {
    n: usize,
    data: Vec<CVec3>,
}

impl Spectrum {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![[ZERO; 3]; n.pow(3)],
        }
    }

    fn from_grid(grid: &VectorGrid) -> Self {
        Self {
            n: grid.grid_n,
            data: grid.values.iter().map(|v| v.map(|x| C64::new(x, 0.0))).collect(),
        }
    }

    fn slot(&self, n: [i32; 3]) -> usize {
        let w = |x: i32| x.rem_euclid(self.n as i32) as usize;
        (w(n[0]) * self.n + w(n[1])) * self.n + w(n[2])
    }

    fn at(&self, n: [i32; 3]) -> CVec3 {
        self.data[self.slot(n)]
    }

    fn add(&mut self, n: [i32; 3], v: CVec3) {
        let i = self.slot(n);
        for (d, x) in self.data[i].iter_mut().zip(v) {
            *d += x;
        }
    }

    /// In-place unnormalised `Σ_j v_j e^{s i 2π n·j/N}` along all three axes,
    /// `s = +1` for [`FftDirection::Inverse`].
    fn transform(&mut self, direction: FftDirection) {
        let n = self.n;
        let fft = FftPlanner::new().plan_fft(n, direction);
        let mut line = vec![ZERO; n];
        let strides = [n * n, n, 1];
        for (axis, &stride) in strides.iter().enumerate() {
            let others: Vec<usize> = (0..n.pow(3))
                .filter(|i| (i / stride) % n == 0)
                .collect();
            debug_assert_eq!(others.len(), n * n, "axis {axis}");
            for &base in &others {
                for c in 0..3 {
                    for (j, z) in line.iter_mut().enumerate() {
                        *z = self.data[base + j * stride][c];
                    }
                    fft.process(&mut line);
                    for (j, z) in line.iter().enumerate() {
                        self.data[base + j * stride][c] = *z;
                    }
                }
            }
        }
    }
}

fn check_grid(lattice: &ModeLattice, grid_n: usize, box_size: f64) -> Result<()> {
    if (box_size - lattice.box_size).abs() > 1e-12 * lattice.box_size {
        return Err(Error::GridMismatch(format!(
            "grid box {box_size} differs from lattice box {}",
            lattice.box_size
        )));
    }
    if 2 * lattice.max_index() >= grid_n {
        return Err(Error::GridMismatch(format!(
            "gridN = {grid_n} cannot resolve lattice index {}",
            lattice.max_index()
        )));
    }
    Ok(())
}

/// Dipole density on the grid and its transverse transform per mode.
#[derive(Clone, Debug)]
pub struct DipoleField {
    pub real_space: VectorGrid,
    /// Transverse `d(k)` in lattice mode order.
    pub k_space: Vec<CVec3>,
    /// Largest `|d(-k) - d(k)*| / max |d|`.
    pub reality_residual: f64,
    /// Largest `|k·d| / (|k| max |d|)` after projection.
    pub transversality_residual: f64,
}

/// `d(k) = ΔV Σ_r D(r) e^{ik·r}` at every lattice mode, then the
/// transverse projection `d - k(k·d)/k²`.
pub fn dipole_transform(grid: &VectorGrid, lattice: &ModeLattice) -> Result<DipoleField> {
    grid.validate()?;
    check_grid(lattice, grid.grid_n, grid.box_size)?;
    let mut coeffs = Spectrum::from_grid(grid);
    coeffs.transform(FftDirection::Inverse);
    let dv = grid.cell_volume();
    let k_space: Vec<CVec3> = lattice
        .modes
        .iter()
        .map(|m| {
            let raw = coeffs.at(m.n).map(|z| z * dv);
            let k2 = dot(m.k, m.k);
            let kd: C64 = (0..3).map(|c| raw[c] * m.k[c]).sum();
            [0, 1, 2].map(|c| raw[c] - kd * (m.k[c] / k2))
        })
        .collect();
    let scale = k_space.iter().map(cnorm).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut reality_residual = 0.0_f64;
    let mut transversality_residual = 0.0_f64;
    for (i, m) in lattice.modes.iter().enumerate() {
        let partner = lattice.find([-m.n[0], -m.n[1], -m.n[2]]).expect("lattice is symmetric");
        let d = k_space[i];
        let dm = k_space[partner];
        let diff = [0, 1, 2].map(|c| dm[c] - d[c].conj());
        reality_residual = reality_residual.max(cnorm(&diff) / scale);
        let kd: C64 = (0..3).map(|c| d[c] * m.k[c]).sum();
        transversality_residual = transversality_residual.max(kd.norm() / (m.omega * scale));
    }
    Ok(DipoleField {
        real_space: grid.clone(),
        k_space,
        reality_residual,
        transversality_residual,
    })
}

/// `Ω_λ(k) = -sqrt(ω/2Vε₀) d*(k)·e*_λ(k)` for both polarizations.
pub fn couplings(lattice: &ModeLattice, dipole: &DipoleField, epsilon0: f64) -> Vec<[C64; 2]> {
    let v = lattice.volume();
    lattice
        .modes
        .iter()
        .zip(&dipole.k_space)
        .map(|(m, d)| {
            let pre = -(m.omega / (2.0 * v * epsilon0)).sqrt();
            m.polarizations.map(|e| (0..3).map(|c| d[c].conj() * e[c]).sum::<C64>() * pre)
        })
        .collect()
}

/// `⟨a⟩(t) = (i/ω) Ω W₀ (1 - e^{-iωt})`.
pub fn mode_amplitude(omega: f64, coupling: C64, w0: f64, t: f64) -> C64 {
    I / omega * coupling * w0 * (C64::new(1.0, 0.0) - C64::from_polar(1.0, -omega * t))
}

/// `⟨a†⟩(t) = -(i/ω) Ω* W₀ (1 - e^{iωt})`.
pub fn mode_amplitude_dagger(omega: f64, coupling: C64, w0: f64, t: f64) -> C64 {
    -I / omega * coupling.conj() * w0 * (C64::new(1.0, 0.0) - C64::from_polar(1.0, omega * t))
}

#[derive(Clone, Debug)]
pub struct ModeSolution {
    pub closed_form: Vec<C64>,
    pub numerical: Vec<C64>,
    /// Relative to `2|ΩW₀|/ω`.
    pub max_deviation: f64,
}

fn rk_amplitudes(omega: f64, coupling: C64, w0: f64, times: &[f64]) -> Vec<C64> {
    let drive = coupling * w0;
    rk4_integrate(
        |_t, a: &C64| C64::new(0.0, -omega) * a - drive,
        ZERO,
        times,
        RK_PHASE_STEP / omega,
    )
}

/// Closed form of one mode from `⟨a⟩(0) = 0`, cross-checked by RK4.
pub fn mode_solution(omega: f64, coupling: C64, w0: f64, times: &[f64]) -> Result<ModeSolution> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::param("omega", "must be positive"));
    }
    let closed_form: Vec<C64> = times.iter().map(|&t| mode_amplitude(omega, coupling, w0, t)).collect();
    let numerical = rk_amplitudes(omega, coupling, w0, times);
    let bound = 2.0 * (coupling * w0).norm() / omega;
    let max_abs = closed_form
        .iter()
        .zip(&numerical)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let max_deviation = if bound > 0.0 { max_abs / bound } else { max_abs };
    if max_deviation > MODE_AGREEMENT_TOL {
        return Err(Error::CrossCheck {
            context: "mode amplitude closed form vs RK4",
            deviation: max_deviation,
            tolerance: MODE_AGREEMENT_TOL,
        });
    }
    Ok(ModeSolution {
        closed_form,
        numerical,
        max_deviation,
    })
}

/// `⟨a_λ(k)⟩` and `⟨a_λ†(k)⟩` for every mode at one instant (or averaged).
#[derive(Clone, Debug, PartialEq)]
pub struct ModeAmplitudes {
    pub a: Vec<[C64; 2]>,
    pub a_dagger: Vec<[C64; 2]>,
}

impl ModeAmplitudes {
    pub fn at(lattice: &ModeLattice, couplings: &[[C64; 2]], w0: f64, t: f64) -> Self {
        let (a, a_dagger) = lattice
            .modes
            .iter()
            .zip(couplings)
            .map(|(m, om)| {
                (
                    om.map(|o| mode_amplitude(m.omega, o, w0, t)),
                    om.map(|o| mode_amplitude_dagger(m.omega, o, w0, t)),
                )
            })
            .unzip();
        Self { a, a_dagger }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSnapshot {
    pub e: VectorGrid,
    pub b: VectorGrid,
    /// Largest `|Im|` of the reconstructed fields relative to their size.
    pub imaginary_residue: f64,
}

fn real_part(values: &[CVec3], grid_n: usize, box_size: f64) -> (VectorGrid, f64) {
    let max_re = values
        .iter()
        .map(|v| v.iter().map(|z| z.re * z.re).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let max_im = values.iter().flatten().map(|z| z.im.abs()).fold(0.0, f64::max);
    let grid = VectorGrid {
        grid_n,
        box_size,
        values: values.iter().map(|v| v.map(|z| z.re)).collect(),
    };
    (grid, max_im / max_re.max(f64::MIN_POSITIVE))
}

/// `E = i sqrt(1/2Vε₀) Σ sqrt(ω) (e a e^{ik·r} - e* a† e^{-ik·r})` and
/// `B = i sqrt(1/2Vε₀) Σ ω^{-1/2} k×(e a e^{ik·r} - e* a† e^{-ik·r})` on the
/// grid, with a check that both come out real.
pub fn reconstruct_fields(
    lattice: &ModeLattice,
    amplitudes: &ModeAmplitudes,
    grid_n: usize,
    epsilon0: f64,
) -> Result<FieldSnapshot> {
    if amplitudes.a.len() != lattice.len() || amplitudes.a_dagger.len() != lattice.len() {
        return Err(Error::DimensionMismatch {
            context: "mode amplitudes",
            expected: lattice.len(),
            found: amplitudes.a.len(),
        });
    }
    check_grid(lattice, grid_n, lattice.box_size)?;
    let pre = (1.0 / (2.0 * lattice.volume() * epsilon0)).sqrt();
    let mut e_spec = Spectrum::zeros(grid_n);
    let mut b_spec = Spectrum::zeros(grid_n);
    for (i, mode) in lattice.modes.iter().enumerate() {
        let se = I * pre * mode.omega.sqrt();
        let sb = I * pre / mode.omega.sqrt();
        let minus = mode.n.map(|x| -x);
        for (l, e) in mode.polarizations.iter().enumerate() {
            let va = e.map(|x| amplitudes.a[i][l] * x);
            let vd = e.map(|x| amplitudes.a_dagger[i][l] * x);
            // The e^{-ik·r} terms sit at wave index -n.
            e_spec.add(mode.n, va.map(|z| z * se));
            e_spec.add(minus, vd.map(|z| -z * se));
            b_spec.add(mode.n, cross_c(mode.k, va).map(|z| z * sb));
            b_spec.add(minus, cross_c(mode.k, vd).map(|z| -z * sb));
        }
    }
    e_spec.transform(FftDirection::Inverse);
    b_spec.transform(FftDirection::Inverse);
    let (e, ie) = real_part(&e_spec.data, grid_n, lattice.box_size);
    let (b, ib) = real_part(&b_spec.data, grid_n, lattice.box_size);
    let imaginary_residue = ie.max(ib);
    if imaginary_residue > FIELD_IMAG_TOL {
        return Err(Error::ImaginaryResidue {
            residue: imaginary_residue,
        });
    }
    Ok(FieldSnapshot { e, b, imaginary_residue })
}

fn check_window(lattice: &ModeLattice, window: f64, n_steps: usize) -> Result<()> {
    let period = 2.0 * PI / lattice.min_omega();
    if window.is_nan() || window < MIN_PERIODS * period {
        return Err(Error::WindowTooShort {
            window,
            period,
            required_periods: MIN_PERIODS,
        });
    }
    if n_steps < 2 {
        return Err(Error::param("nSteps", "need at least two steps"));
    }
    Ok(())
}

/// Trapezoidal weights of `n_steps` equal intervals on `[0, T]`, divided by `T`.
fn trapezoid_weights(n_steps: usize) -> Vec<f64> {
    let h = 1.0 / n_steps as f64;
    (0..=n_steps)
        .map(|k| if k == 0 || k == n_steps { 0.5 * h } else { h })
        .collect()
}

/// `(1/T) ∫₀ᵀ E dt` and `(1/T) ∫₀ᵀ B dt` by the trapezoid rule over
/// `n_steps` intervals, sampling fields through `sampler`.
pub fn time_average(
    lattice: &ModeLattice,
    sampler: impl Fn(f64) -> Result<FieldSnapshot> + Sync,
    window: f64,
    n_steps: usize,
) -> Result<(VectorGrid, VectorGrid)> {
    check_window(lattice, window, n_steps)?;
    let weights = trapezoid_weights(n_steps);
    let snaps: Vec<FieldSnapshot> = (0..=n_steps)
        .into_par_iter()
        .map(|k| sampler(window * k as f64 / n_steps as f64))
        .collect::<Result<_>>()?;
    let mut e = VectorGrid::zeros(snaps[0].e.grid_n, snaps[0].e.box_size);
    let mut b = e.clone();
    for (w, s) in weights.iter().zip(&snaps) {
        for (acc, v) in e.values.iter_mut().zip(&s.e.values) {
            for c in 0..3 {
                acc[c] += w * v[c];
            }
        }
        for (acc, v) in b.values.iter_mut().zip(&s.b.values) {
            for c in 0..3 {
                acc[c] += w * v[c];
            }
        }
    }
    Ok((e, b))
}

/// Trapezoid-averaged amplitudes of every mode, with the RK cross-check run
/// on the same grid. Fields are linear in the amplitudes, so averaging the
/// amplitudes and reconstructing once equals averaging the fields.
pub fn averaged_amplitudes(
    lattice: &ModeLattice,
    couplings: &[[C64; 2]],
    w0: f64,
    window: f64,
    n_steps: usize,
) -> Result<(ModeAmplitudes, f64)> {
    check_window(lattice, window, n_steps)?;
    let weights = trapezoid_weights(n_steps);
    let times: Vec<f64> = (0..=n_steps).map(|k| window * k as f64 / n_steps as f64).collect();
    let per_mode: Vec<([C64; 2], [C64; 2], f64)> = lattice
        .modes
        .par_iter()
        .zip(couplings)
        .map(|(m, om)| {
            let mut a = [ZERO; 2];
            let mut ad = [ZERO; 2];
            let mut dev = 0.0_f64;
            for l in 0..2 {
                let sol = mode_solution(m.omega, om[l], w0, &times)?;
                dev = dev.max(sol.max_deviation);
                for (w, (z, t)) in weights.iter().zip(sol.closed_form.iter().zip(&times)) {
                    a[l] += z * *w;
                    ad[l] += mode_amplitude_dagger(m.omega, om[l], w0, *t) * *w;
                }
            }
            Ok((a, ad, dev))
        })
        .collect::<Result<_>>()?;
    let max_dev = per_mode.iter().map(|p| p.2).fold(0.0, f64::max);
    let (a, a_dagger) = per_mode.into_iter().map(|(a, ad, _)| (a, ad)).unzip();
    Ok((ModeAmplitudes { a, a_dagger }, max_dev))
}

/// Exact `(1/T) ∫₀ᵀ ⟨a⟩ dt = (i/ω) Ω W₀ (1 - (1 - e^{-iωT})/(iωT))` per mode.
pub fn exact_average_amplitudes(lattice: &ModeLattice, couplings: &[[C64; 2]], w0: f64, window: f64) -> ModeAmplitudes {
    let one = C64::new(1.0, 0.0);
    let (a, a_dagger) = lattice
        .modes
        .iter()
        .zip(couplings)
        .map(|(m, om)| {
            let w = m.omega;
            let avg = one - (one - C64::from_polar(1.0, -w * window)) / (I * w * window);
            let a = om.map(|o| I / w * o * w0 * avg);
            (a, a.map(|z| z.conj()))
        })
        .unzip();
    ModeAmplitudes { a, a_dagger }
}

/// Spectral divergence of a band-limited grid field, `max |∇·v|`.
pub fn spectral_divergence(field: &VectorGrid, max_index: usize) -> Result<f64> {
    field.validate()?;
    let n = field.grid_n;
    if 2 * max_index >= n {
        return Err(Error::GridMismatch("divergence band exceeds grid Nyquist".into()));
    }
    let mut coeffs = Spectrum::from_grid(field);
    coeffs.transform(FftDirection::Inverse);
    let unit = 2.0 * PI / field.box_size;
    let mut div = Spectrum::zeros(n);
    let m = max_index as i32;
    for nx in -m..=m {
        for ny in -m..=m {
            for nz in -m..=m {
                let c = coeffs.at([nx, ny, nz]);
                let kc = [nx, ny, nz].map(|x| unit * x as f64);
                // The forward kernel is e^{+ik·r}, so ∇ acts as -ik on synthesis.
                let d: C64 = (0..3).map(|i| c[i] * kc[i]).sum::<C64>() * (-I);
                div.add([nx, ny, nz], [d, ZERO, ZERO]);
            }
        }
    }
    div.transform(FftDirection::Forward);
    let scale = 1.0 / n.pow(3) as f64;
    Ok(div.data.iter().map(|v| (v[0] * scale).norm()).fold(0.0, f64::max))
}

/// `D(r) = (1/V) Σ_k d(k) e^{-ik·r}` on the grid.
pub fn inverse_transform(lattice: &ModeLattice, k_space: &[CVec3], grid_n: usize) -> Result<VectorGrid> {
    if k_space.len() != lattice.len() {
        return Err(Error::DimensionMismatch {
            context: "dipole spectrum",
            expected: lattice.len(),
            found: k_space.len(),
        });
    }
    check_grid(lattice, grid_n, lattice.box_size)?;
    let mut spec = Spectrum::zeros(grid_n);
    for (m, d) in lattice.modes.iter().zip(k_space) {
        spec.add(m.n, *d);
    }
    spec.transform(FftDirection::Forward);
    let (grid, residue) = real_part(&spec.data, grid_n, lattice.box_size);
    if residue > FIELD_IMAG_TOL {
        return Err(Error::ImaginaryResidue { residue });
    }
    Ok(grid.scaled(1.0 / lattice.volume()))
}

#[derive(Clone, Debug)]
pub struct RadiationConfig {
    pub box_size: f64,
    pub k_max: f64,
    pub grid_n: usize,
    pub epsilon0: f64,
    pub dipole: VectorGrid,
    pub w0: f64,
    pub window: f64,
    pub n_steps: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RadiationDiagnostics {
    pub mode_count: usize,
    pub slowest_period: f64,
    pub window_periods: f64,
    /// `max_r |Ē - W₀D/ε₀| / max_r |W₀D/ε₀|`.
    pub e_relative_residual: f64,
    /// `max_r |B̄| / max_r |Ē|`.
    pub b_ratio: f64,
    /// Worst per-mode closed-form vs RK deviation.
    pub rk_max_deviation: f64,
    /// `max |∇·Ē| / (kMax max |Ē|)`.
    pub divergence_relative: f64,
    pub imaginary_residue: f64,
    pub dipole_reality_residual: f64,
    pub dipole_transversality_residual: f64,
}

#[derive(Clone, Debug)]
pub struct RadiationResult {
    pub e_bar: VectorGrid,
    pub b_bar: VectorGrid,
    pub reference: VectorGrid,
    pub diagnostics: RadiationDiagnostics,
}

/// Full pipeline: lattice, dipole transform, per-mode solutions, averaged
/// field reconstruction and residuals against `Ē = W₀D/ε₀`, `B̄ = 0`.
pub fn run(config: &RadiationConfig) -> Result<RadiationResult> {
    if !(config.epsilon0.is_finite() && config.epsilon0 > 0.0) {
        return Err(Error::param("epsilon0", "must be positive"));
    }
    if config.dipole.grid_n != config.grid_n {
        return Err(Error::GridMismatch(format!(
            "dipole grid {} differs from gridN {}",
            config.dipole.grid_n, config.grid_n
        )));
    }
    let lattice = build_lattice(config.box_size, config.k_max)?;
    let dipole = dipole_transform(&config.dipole, &lattice)?;
    let om = couplings(&lattice, &dipole, config.epsilon0);
    let (avg, rk_max_deviation) = averaged_amplitudes(&lattice, &om, config.w0, config.window, config.n_steps)?;
    let snap = reconstruct_fields(&lattice, &avg, config.grid_n, config.epsilon0)?;
    let reference = config.dipole.scaled(config.w0 / config.epsilon0);
    let ref_max = reference.max_norm();
    let e_max = snap.e.max_norm();
    let e_relative_residual = if ref_max > 0.0 {
        snap.e.max_distance(&reference) / ref_max
    } else {
        e_max
    };
    let b_ratio = if e_max > 0.0 { snap.b.max_norm() / e_max } else { snap.b.max_norm() };
    let div = spectral_divergence(&snap.e, lattice.max_index())?;
    let divergence_relative = if e_max > 0.0 { div / (config.k_max * e_max) } else { div };
    let slowest_period = 2.0 * PI / lattice.min_omega();
    Ok(RadiationResult {
        diagnostics: RadiationDiagnostics {
            mode_count: lattice.len(),
            slowest_period,
            window_periods: config.window / slowest_period,
            e_relative_residual,
            b_ratio,
            rk_max_deviation,
            divergence_relative,
            imaginary_residue: snap.imaginary_residue,
            dipole_reality_residual: dipole.reality_residual,
            dipole_transversality_residual: dipole.transversality_residual,
        },
        e_bar: snap.e,
        b_bar: snap.b,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_lattice_has_six_modes() {
        let l = 10.0;
        let lat = build_lattice(l, 2.0 * PI / l * 1.01).unwrap();
        assert_eq!(lat.len(), 6);
        assert!(build_lattice(l, 0.5).is_err());
    }

    #[test]
    fn lattice_symmetry_and_polarizations() {
        let lat = build_lattice(10.0, 3.0 * 2.0 * PI / 10.0).unwrap();
        for m in &lat.modes {
            assert!(lat.find([-m.n[0], -m.n[1], -m.n[2]]).is_some());
        }
        let (t, o, c) = lat.polarization_residuals();
        assert!(t < POLARIZATION_TOL && o < POLARIZATION_TOL && c < COMPLETENESS_TOL);
    }

    #[test]
    fn zero_dipole_transforms_to_zero() {
        let lat = build_lattice(10.0, 2.0).unwrap();
        let d = dipole_transform(&VectorGrid::zeros(16, 10.0), &lat).unwrap();
        assert!(d.k_space.iter().all(|v| cnorm(v) == 0.0));
    }

    #[test]
    fn plane_wave_dipole_hits_one_pair() {
        let l = 10.0;
        let lat = build_lattice(l, 2.0 * 2.0 * PI / l).unwrap();
        let spec = DipoleSpec::Planewave {
            n: [1, 1, 0],
            polarization: [0.0, 0.0, 1.0],
            amplitude: 2.0,
        };
        let grid = sample_dipole(&spec, 16, l).unwrap();
        let d = dipole_transform(&grid, &lat).unwrap();
        let pair = [lat.find([1, 1, 0]).unwrap(), lat.find([-1, -1, 0]).unwrap()];
        let v = lat.volume();
        for (i, dk) in d.k_space.iter().enumerate() {
            if pair.contains(&i) {
                assert!((dk[2].re - v).abs() < 1e-9 * v && dk[2].im.abs() < 1e-9 * v);
            } else {
                assert!(cnorm(dk) < 1e-9 * v, "mode {:?}", lat.modes[i].n);
            }
        }
        assert!(d.reality_residual < 1e-10);
    }

    #[test]
    fn longitudinal_dipole_is_projected_out() {
        let l = 10.0;
        let lat = build_lattice(l, 2.0 * 2.0 * PI / l).unwrap();
        let spec = DipoleSpec::Planewave {
            n: [0, 1, 0],
            polarization: [0.0, 1.0, 0.0],
            amplitude: 1.0,
        };
        let d = dipole_transform(&sample_dipole(&spec, 16, l).unwrap(), &lat).unwrap();
        assert!(d.k_space.iter().all(|v| cnorm(v) < 1e-9));
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let lat = build_lattice(10.0, 6.0).unwrap();
        assert!(matches!(
            dipole_transform(&VectorGrid::zeros(8, 10.0), &lat),
            Err(Error::GridMismatch(_))
        ));
        assert!(matches!(
            dipole_transform(&VectorGrid::zeros(32, 9.0), &lat),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn round_trip_is_identity_on_band_limited_transverse_samples() {
        let l = 10.0;
        let n = 12;
        let lat = build_lattice(l, 2.0 * PI / l * 3.0_f64.sqrt() * 1.001).unwrap();
        let k = 2.0 * PI / l;
        // Each term is transverse to its own wave vector.
        let grid = VectorGrid::from_fn(n, l, |r| {
            [(k * (r[1] + r[2])).sin(), (k * (r[0] - r[2])).cos(), 0.3 * (k * r[0]).cos() + (k * r[1]).sin()]
        });
        let d = dipole_transform(&grid, &lat).unwrap();
        let back = inverse_transform(&lat, &d.k_space, n).unwrap();
        assert!(back.max_distance(&grid) < 1e-12);
    }

    #[test]
    fn mode_solution_properties() {
        let omega = 1.3;
        let om = C64::new(0.2, -0.1);
        let period = 2.0 * PI / omega;
        assert!(mode_amplitude(omega, om, -1.0, period).norm() < 1e-15);
        assert_eq!(mode_amplitude(omega, om, 0.0, 3.0), ZERO);
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
        let sol = mode_solution(omega, om, -1.0, &times).unwrap();
        assert!(sol.max_deviation < 1e-8);
        let bound = 2.0 * om.norm() / omega;
        assert!(sol.closed_form.iter().all(|a| a.norm() <= bound * (1.0 + 1e-12)));
        for (a, t) in sol.closed_form.iter().zip(&times) {
            let ad = mode_amplitude_dagger(omega, om, -1.0, *t);
            assert!((ad - a.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn closed_form_time_average_tends_to_the_fixed_point() {
        let omega = 2.0;
        let om = C64::new(0.3, 0.4);
        let n = 20_000;
        let t_end = 200.0 * 2.0 * PI / omega;
        let w = trapezoid_weights(n);
        let avg: C64 = (0..=n)
            .map(|k| mode_amplitude(omega, om, -1.0, t_end * k as f64 / n as f64) * w[k])
            .sum();
        let want = I / omega * om * -1.0;
        assert!((avg - want).norm() < 1e-6);
    }

    #[test]
    fn two_mode_field_matches_hand_sum() {
        let l = 10.0;
        let lat = build_lattice(l, 2.0 * PI / l * 1.01).unwrap();
        let mut amps = ModeAmplitudes {
            a: vec![[ZERO; 2]; lat.len()],
            a_dagger: vec![[ZERO; 2]; lat.len()],
        };
        let i = lat.find([1, 0, 0]).unwrap();
        let j = lat.find([-1, 0, 0]).unwrap();
        let z = C64::new(0.3, -0.2);
        amps.a[i][0] = z;
        amps.a_dagger[i][0] = z.conj();
        amps.a[j][1] = z * 0.5;
        amps.a_dagger[j][1] = (z * 0.5).conj();
        let eps0 = 1.5;
        let snap = reconstruct_fields(&lat, &amps, 8, eps0).unwrap();
        let pre = (1.0 / (2.0 * lat.volume() * eps0)).sqrt();
        let n = 8;
        let h = l / n as f64;
        for (idx, got) in snap.e.values.iter().enumerate() {
            let x = (idx / (n * n)) as f64 * h;
            let mut want = [0.0; 3];
            for (mode, l_, amp) in [(i, 0, z), (j, 1, z * 0.5)] {
                let m = &lat.modes[mode];
                let phase = C64::from_polar(1.0, m.k[0] * x);
                let e = m.polarizations[l_];
                for c in 0..3 {
                    let term = I * pre * m.omega.sqrt() * (amp * phase * e[c] - (amp * phase).conj() * e[c]);
                    want[c] += term.re;
                }
            }
            for c in 0..3 {
                assert!((got[c] - want[c]).abs() < 1e-13);
            }
        }
        let zero = ModeAmplitudes {
            a: vec![[ZERO; 2]; lat.len()],
            a_dagger: vec![[ZERO; 2]; lat.len()],
        };
        let snap = reconstruct_fields(&lat, &zero, 8, eps0).unwrap();
        assert_eq!(snap.e.max_norm(), 0.0);
        assert_eq!(snap.b.max_norm(), 0.0);
    }

    fn small_config(w0: f64) -> RadiationConfig {
        let l = 10.0;
        let grid_n = 12;
        let spec = DipoleSpec::Gaussian {
            sigma: 1.5,
            amplitude: 1.0,
            center: None,
        };
        RadiationConfig {
            box_size: l,
            k_max: 3.0 * 2.0 * PI / l,
            grid_n,
            epsilon0: 1.0,
            dipole: sample_dipole(&spec, grid_n, l).unwrap(),
            w0,
            window: 20.0 * l,
            n_steps: 2000,
        }
    }

    #[test]
    fn field_average_equals_amplitude_average() {
        let cfg = small_config(-1.0);
        let lat = build_lattice(cfg.box_size, cfg.k_max).unwrap();
        let dip = dipole_transform(&cfg.dipole, &lat).unwrap();
        let om = couplings(&lat, &dip, cfg.epsilon0);
        let n_steps = 400;
        let (e1, b1) = time_average(
            &lat,
            |t| reconstruct_fields(&lat, &ModeAmplitudes::at(&lat, &om, cfg.w0, t), cfg.grid_n, cfg.epsilon0),
            cfg.window,
            n_steps,
        )
        .unwrap();
        let (avg, _) = averaged_amplitudes(&lat, &om, cfg.w0, cfg.window, n_steps).unwrap();
        let snap = reconstruct_fields(&lat, &avg, cfg.grid_n, cfg.epsilon0).unwrap();
        assert!(snap.e.max_distance(&e1) < 1e-12 * e1.max_norm());
        assert!(snap.b.max_distance(&b1) < 1e-12 * e1.max_norm());
    }

    #[test]
    fn trapezoid_average_approaches_exact_average() {
        let cfg = small_config(-1.0);
        let lat = build_lattice(cfg.box_size, cfg.k_max).unwrap();
        let dip = dipole_transform(&cfg.dipole, &lat).unwrap();
        let om = couplings(&lat, &dip, cfg.epsilon0);
        let exact = exact_average_amplitudes(&lat, &om, cfg.w0, cfg.window);
        let (trap, _) = averaged_amplitudes(&lat, &om, cfg.w0, cfg.window, 20_000).unwrap();
        let scale = exact.a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        for (x, y) in exact.a.iter().flatten().zip(trap.a.iter().flatten()) {
            assert!((x - y).norm() < 1e-6 * scale);
        }
    }

    #[test]
    fn short_window_is_rejected() {
        let mut cfg = small_config(-1.0);
        cfg.window = 19.0 * cfg.box_size;
        assert!(matches!(run(&cfg), Err(Error::WindowTooShort { .. })));
    }

    #[test]
    fn sign_covariance_and_zero_witness() {
        let plus = run(&small_config(1.0)).unwrap();
        let minus = run(&small_config(-1.0)).unwrap();
        let neg = minus.e_bar.scaled(-1.0);
        assert!(plus.e_bar.max_distance(&neg) <= 1e-14 * plus.e_bar.max_norm());
        let zero = run(&small_config(0.0)).unwrap();
        assert_eq!(zero.e_bar.max_norm(), 0.0);
        assert_eq!(zero.b_bar.max_norm(), 0.0);
        assert!(plus.diagnostics.divergence_relative < 1e-8);
    }
}
