// Copyright 2026 wpsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Fixed-step classic Runge-Kutta integration, used as the numerical
//! cross-check of every closed-form solution in the crate.

use crate::operator::C64;

/// Minimal vector-space interface for RK4 states.
pub trait OdeState: Clone {
    /// `self += a * x`.
    fn axpy(&mut self, a: f64, x: &Self);
}

impl OdeState for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (y, xi) in self.iter_mut().zip(x) {
            *y += a * xi;
        }
    }
}

impl OdeState for C64 {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x * a;
    }
}

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<S: OdeState>(f: &impl Fn(f64, &S) -> S, t: f64, y: &S, h: f64) -> S {
    let k1 = f(t, y);
    let mut y2 = y.clone();
    y2.axpy(0.5 * h, &k1);
    let k2 = f(t + 0.5 * h, &y2);
    let mut y3 = y.clone();
    y3.axpy(0.5 * h, &k2);
    let k3 = f(t + 0.5 * h, &y3);
    let mut y4 = y.clone();
    y4.axpy(h, &k3);
    let k4 = f(t + h, &y4);
    let mut out = y.clone();
    out.axpy(h / 6.0, &k1);
    out.axpy(h / 3.0, &k2);
    out.axpy(h / 3.0, &k3);
    out.axpy(h / 6.0, &k4);
    out
}

/// Integrates from `times[0]` and records the state at every grid time.
/// Each grid interval is split into equal substeps no longer than
/// `max_step`.
pub fn rk4_integrate<S: OdeState>(
    f: impl Fn(f64, &S) -> S,
    y0: S,
    times: &[f64],
    max_step: f64,
) -> Vec<S> {
    let mut out = Vec::with_capacity(times.len());
    if times.is_empty() {
        return out;
    }
    let mut y = y0;
    out.push(y.clone());
    for pair in times.windows(2) {
        let dt = pair[1] - pair[0];
        let substeps = (dt / max_step).ceil().max(1.0) as usize;
        let h = dt / substeps as f64;
        for s in 0..substeps {
            y = rk4_step(&f, pair[0] + s as f64 * h, &y, h);
        }
        out.push(y.clone());
    }
    out
}
