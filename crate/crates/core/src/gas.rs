// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! One-dimensional ideal gas coupled through `h_E = α Σ q_k = α N R`.
//!
//! The centre-of-mass momentum `P = (1/N) Σ p_k` drifts as
//! `P(t) = P(0) - α W₀ t`, and its ensemble spread is
//! `Σ_P(t) = sqrt(α² Σ_W² t² + m/(Nβ))`.
//!
//! The Monte Carlo oracle treats the bath classically: each sample draws a
//! witness branch `k` with probability `p_k` and `N` Maxwell-Boltzmann
//! momenta of variance `m/β`. Sample `i` uses `ChaCha8Rng` seeded with the
//! run seed on stream `i`, so every path is reproducible on its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock;
use crate::operator::Operator;
use crate::protocol::{Observable, ProtocolModel, Subspace};
use crate::trajectory::Trajectory;
use crate::witness::{WitnessBranches, WitnessChoice};

#[derive(Clone, Debug)]
pub struct GasConfig {
    pub n: usize,
    pub m: f64,
    pub beta: f64,
    pub alpha: f64,
    pub branches: WitnessBranches,
    pub times: Vec<f64>,
}

impl GasConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("N", "must be at least 1"));
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::param("m", "must be positive"));
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return Err(Error::param("beta", "must be positive"));
        }
        if !self.alpha.is_finite() {
            return Err(Error::param("alpha", "must be finite"));
        }
        Trajectory::new(self.times.clone())?;
        Ok(())
    }

    /// Thermal variance `m/β` of one particle momentum.
    pub fn particle_variance(&self) -> f64 {
        self.m / self.beta
    }
}

/// `P(t) = -α W₀ t`.
pub fn analytic_momentum(alpha: f64, w0: f64, times: &[f64]) -> Result<Trajectory> {
    let mut traj = Trajectory::new(times.to_vec())?;
    traj.push("P", times.iter().map(|t| -alpha * w0 * t).collect())?;
    Ok(traj)
}

/// `Σ_P(t) = sqrt(α² Σ_W² t² + m/(Nβ))`.
pub fn analytic_sigma(alpha: f64, sigma_w: f64, times: &[f64], m: f64, n: usize, beta: f64) -> Result<Trajectory> {
    let thermal = m / (n as f64 * beta);
    let mut traj = Trajectory::new(times.to_vec())?;
    traj.push(
        "sigma",
        times
            .iter()
            .map(|t| (alpha * alpha * sigma_w * sigma_w * t * t + thermal).sqrt())
            .collect(),
    )?;
    Ok(traj)
}

/// Sampled branch eigenvalue and thermal momentum offset of one path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleDraw {
    pub eigenvalue: f64,
    pub offset: f64,
}

fn draw(config: &GasConfig, seed: u64, index: u64) -> SampleDraw {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let branches = &config.branches.branches;
    let mut eigenvalue = branches.last().map_or(0.0, |b| b.eigenvalue);
    for b in branches {
        cumulative += b.probability;
        if u < cumulative {
            eigenvalue = b.eigenvalue;
            break;
        }
    }
    let scale = config.particle_variance().sqrt();
    let sum: f64 = if scale == 0.0 {
        0.0
    } else {
        (0..config.n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                scale * z
            })
            .sum()
    };
    SampleDraw {
        eigenvalue,
        offset: sum / config.n as f64,
    }
}

/// Path `P(t) = (1/N) Σ p_i - α w_k t` of sample `index`.
pub fn mc_sample_indexed(config: &GasConfig, seed: u64, index: u64) -> Vec<f64> {
    let d = draw(config, seed, index);
    config
        .times
        .iter()
        .map(|t| d.offset - config.alpha * d.eigenvalue * t)
        .collect()
}

/// First path (stream 0) of the ensemble with this seed.
pub fn mc_sample(config: &GasConfig, seed: u64) -> Result<Vec<f64>> {
    config.validate()?;
    Ok(mc_sample_indexed(config, seed, 0))
}

/// Pairwise summation in index order; independent of thread count.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0)).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GasEnsembleResult {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub analytic_mean: Vec<f64>,
    pub analytic_std: Vec<f64>,
    pub sample_count: usize,
    /// `(mean - analytic)/(std/√n)` per time.
    pub z_scores: Vec<f64>,
    pub max_abs_z: f64,
    /// `max_t |std - Σ_P| / Σ_P`.
    pub max_std_rel_err: f64,
    /// Ensemble-mean drift rate and its standard error.
    pub slope: f64,
    pub slope_stderr: f64,
    pub analytic_slope: f64,
    pub slope_z: f64,
}

impl GasEnsembleResult {
    /// Columns `t, mean, std, analytic_mean, analytic_std`.
    pub fn trajectory(&self) -> Trajectory {
        let mut t = Trajectory::new(self.times.clone()).expect("validated grid");
        for (name, v) in [
            ("mean", &self.mean),
            ("std", &self.std),
            ("analytic_mean", &self.analytic_mean),
            ("analytic_std", &self.analytic_std),
        ] {
            t.push(name, v.clone()).expect("shared grid");
        }
        t
    }

    /// `std(t_end)/std(0)` of the ensemble and of the formula.
    pub fn growth_ratio(&self) -> (f64, f64) {
        let last = self.times.len() - 1;
        (self.std[last] / self.std[0], self.analytic_std[last] / self.analytic_std[0])
    }
}

fn z_score(deviation: f64, stderr: f64) -> f64 {
    if stderr > 0.0 {
        deviation / stderr
    } else if deviation.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY.copysign(deviation)
    }
}

pub fn mc_ensemble(config: &GasConfig, seed: u64, samples: usize) -> Result<GasEnsembleResult> {
    config.validate()?;
    if samples < 2 {
        return Err(Error::param("samples", "need at least two samples"));
    }
    let draws: Vec<SampleDraw> = (0..samples as u64)
        .into_par_iter()
        .map(|i| draw(config, seed, i))
        .collect();
    let times = &config.times;
    let mut column = vec![0.0; samples];
    let mut mean = Vec::with_capacity(times.len());
    let mut std = Vec::with_capacity(times.len());
    for &t in times {
        for (c, d) in column.iter_mut().zip(&draws) {
            *c = d.offset - config.alpha * d.eigenvalue * t;
        }
        let (m, s) = mean_and_std(&column);
        mean.push(m);
        std.push(s);
    }
    let w0 = config.branches.mean();
    let analytic_mean = analytic_momentum(config.alpha, w0, times)?.series.remove(0).values;
    let analytic_std = analytic_sigma(config.alpha, config.branches.std(), times, config.m, config.n, config.beta)?
        .series
        .remove(0)
        .values;
    let root_n = (samples as f64).sqrt();
    let z_scores: Vec<f64> = mean
        .iter()
        .zip(&analytic_mean)
        .zip(&std)
        .map(|((m, a), s)| z_score(m - a, s / root_n))
        .collect();
    let max_abs_z = z_scores.iter().fold(0.0_f64, |acc, z| acc.max(z.abs()));
    let max_std_rel_err = std
        .iter()
        .zip(&analytic_std)
        .map(|(s, a)| (s - a).abs() / a)
        .fold(0.0, f64::max);
    // Every path is linear in t with slope -α w_k.
    let slopes: Vec<f64> = draws.iter().map(|d| -config.alpha * d.eigenvalue).collect();
    let (slope, slope_std) = mean_and_std(&slopes);
    let slope_stderr = slope_std / root_n;
    let analytic_slope = -config.alpha * w0;
    Ok(GasEnsembleResult {
        times: times.clone(),
        mean,
        std,
        analytic_mean,
        analytic_std,
        sample_count: samples,
        z_scores,
        max_abs_z,
        max_std_rel_err,
        slope,
        slope_stderr,
        analytic_slope,
        slope_z: z_score(slope - analytic_slope, slope_stderr),
    })
}

/// Largest surrogate environment dimension.
pub const SURROGATE_MAX_LEVELS: usize = 64;

/// Single quantum particle standing in for the gas at toy scale.
#[derive(Clone, Debug)]
pub struct SurrogateConfig {
    /// Number of Hermite functions kept.
    pub levels: usize,
    pub m: f64,
    pub alpha: f64,
    pub witness: WitnessChoice,
}

/// Frozen protocol model of one particle: `H_E = p²/2m`, `h_E = α q`,
/// observable `P = p`, `H_S = W²/2`.
///
/// `q` and `p` are the truncated Hermite-basis matrices, so `[q, p] = i` on
/// every state but the last and the canonical constant is `g = α` there.
pub fn quantum_surrogate(config: &SurrogateConfig) -> Result<ProtocolModel> {
    if config.levels > SURROGATE_MAX_LEVELS {
        return Err(Error::DimensionCap {
            dim: config.levels,
            cap: SURROGATE_MAX_LEVELS,
        });
    }
    if config.levels < 2 {
        return Err(Error::param("levels", "need at least two states"));
    }
    if !(config.m.is_finite() && config.m > 0.0) {
        return Err(Error::param("m", "must be positive"));
    }
    let q = fock::position_quadrature(config.levels);
    let p = fock::momentum_quadrature(config.levels);
    let w = config.witness.operator();
    let h_s = (&w * &w).scale(0.5);
    let h_e = (&p * &p).scale(0.5 / config.m);
    ProtocolModel::new(h_s, h_e, w, q.scale(config.alpha), vec![Observable::new("P", p)])
}

/// States on which the surrogate's canonical commutator holds.
pub fn surrogate_interior(config: &SurrogateConfig) -> Subspace {
    Subspace::leading(config.levels - 1)
}

/// `|top⟩⟨top|` of the surrogate Hermite basis.
pub fn surrogate_top_projector(config: &SurrogateConfig) -> Operator {
    fock::top_projector(config.levels, config.levels - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DensityMatrix, SpaceLabel};
    use crate::protocol::{evolve_full, fit_canonical, fit_closure};
    use crate::states::NamedState;
    use crate::trajectory::uniform_times;
    use crate::witness::{build_w_pm, eigen_branches, WitnessSign};

    fn config(pairs: &[(f64, f64)]) -> GasConfig {
        GasConfig {
            n: 100,
            m: 1.0,
            beta: 1.0,
            alpha: 0.1,
            branches: WitnessBranches::from_weights(pairs).unwrap(),
            times: uniform_times(10.0, 20),
        }
    }

    #[test]
    fn analytic_drift_values() {
        let t = [0.0, 10.0];
        assert!(analytic_momentum(0.1, 0.0, &t).unwrap().get("P").unwrap().iter().all(|p| *p == 0.0));
        assert!((analytic_momentum(0.1, -1.0, &t).unwrap().get("P").unwrap()[1] - 1.0).abs() < 1e-15);
        assert!((analytic_momentum(0.1, 1.0, &t).unwrap().get("P").unwrap()[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn analytic_sigma_limits() {
        let t = [0.0, 5.0];
        let s = analytic_sigma(0.1, 0.0, &t, 2.0, 50, 4.0).unwrap();
        let s = s.get("sigma").unwrap();
        assert!((s[0] - (2.0_f64 / 200.0).sqrt()).abs() < 1e-15);
        assert_eq!(s[0], s[1]);
        let small = analytic_sigma(0.1, 0.0, &t, 1.0, 100, 1.0).unwrap().get("sigma").unwrap()[0];
        let big = analytic_sigma(0.1, 0.0, &t, 1.0, 10_000, 1.0).unwrap().get("sigma").unwrap()[0];
        assert!((small / big - 10.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_and_drift_only_without_temperature() {
        let cfg = config(&[(-1.0, 1.0)]);
        assert_eq!(mc_sample(&cfg, 7).unwrap(), mc_sample(&cfg, 7).unwrap());
        assert_ne!(mc_sample(&cfg, 7).unwrap(), mc_sample(&cfg, 8).unwrap());
        let path = mc_sample(&cfg, 3).unwrap();
        for k in 1..path.len() {
            let slope = (path[k] - path[0]) / cfg.times[k];
            assert!((slope - 0.1).abs() < 1e-12);
        }
        let cold = GasConfig {
            beta: f64::INFINITY,
            ..config(&[(2.0, 1.0)])
        };
        let path = mc_sample(&cold, 1).unwrap();
        for (p, t) in path.iter().zip(&cold.times) {
            assert_eq!(*p, -0.2 * t);
        }
    }

    #[test]
    fn ensemble_is_an_unbiased_estimator() {
        let cfg = config(&[(-1.0, 0.5), (1.0, 0.5)]);
        let r = mc_ensemble(&cfg, 11, 4000).unwrap();
        assert!(r.max_abs_z < 4.0);
        assert!(r.max_std_rel_err < 0.1);
        assert_eq!(r, mc_ensemble(&cfg, 11, 4000).unwrap());
        let tiny = mc_ensemble(&cfg, 11, 2).unwrap();
        assert_eq!(tiny.sample_count, 2);
        assert!(mc_ensemble(&cfg, 11, 1).is_err());
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }

    #[test]
    fn csv_columns() {
        let r = mc_ensemble(&config(&[(-1.0, 1.0)]), 1, 10).unwrap();
        let csv = r.trajectory().to_csv_string();
        assert!(csv.starts_with("t,mean,std,analytic_mean,analytic_std\n"));
    }

    #[test]
    fn surrogate_structure() {
        let cfg = SurrogateConfig {
            levels: 24,
            m: 1.0,
            alpha: 0.1,
            witness: WitnessChoice::Minus,
        };
        let model = quantum_surrogate(&cfg).unwrap();
        assert_eq!(model.frozen_residual(), 0.0);
        let g = fit_canonical(model.h_int(), model.observables(), &surrogate_interior(&cfg)).unwrap();
        assert!((g.g[0] - 0.1).abs() < 1e-12);
        let c = fit_closure(model.h_e(), model.observables(), &Subspace::full(24)).unwrap();
        assert!(c.c[(0, 0)].abs() < 1e-12);
        assert!(quantum_surrogate(&SurrogateConfig { levels: 65, ..cfg }).is_err());
    }

    #[test]
    fn surrogate_drift_slope_and_sign_flip() {
        let cfg = SurrogateConfig {
            levels: 32,
            m: 4.0,
            alpha: 0.1,
            witness: WitnessChoice::Minus,
        };
        let model = quantum_surrogate(&cfg).unwrap();
        let rho_e = DensityMatrix::from_pure(&fock::number_state(32, 0), SpaceLabel::Environment).unwrap();
        let times = uniform_times(4.0, 40);
        let wm = build_w_pm(WitnessSign::Minus);
        let mut slopes = Vec::new();
        for state in [NamedState::PhiPlus, NamedState::Basis(0)] {
            let rho_s = state.density_matrix();
            let w0 = eigen_branches(&wm, &rho_s).unwrap().mean();
            let traj = evolve_full(&model, &rho_s, &rho_e, &times).unwrap();
            let p = traj.get("P").unwrap();
            let slope = (p[40] - p[0]) / 4.0;
            assert!((slope + 0.1 * w0).abs() < 0.02 * 0.1 * w0.abs(), "slope {slope} w0 {w0}");
            slopes.push(slope);
        }
        assert!(slopes[0] > 0.0 && slopes[1] < 0.0);
    }
}
