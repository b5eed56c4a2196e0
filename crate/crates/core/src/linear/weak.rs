//! Weak-form residuals of discrete solutions against smooth test functions
//! `phi(t, x) = b(t) h(x)` with `h` a torus harmonic.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{LinearProblem, LinearSolution};
use crate::error::{Error, Result};
use crate::field::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeProfile {
    Constant,
    /// `exp(-1 / (1 - s^2))` with `s` mapping `(start, end)` onto `(-1, 1)`.
    Bump { start: f64, end: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Bump { start, end } => {
                let s = (2.0 * t - start - end) / (end - start);
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - s * s)).exp()
                }
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 0.0,
            TimeProfile::Bump { start, end } => {
                let s = (2.0 * t - start - end) / (end - start);
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    let w = 1.0 - s * s;
                    (-1.0 / w).exp() * (-2.0 * s / (w * w)) * 2.0 / (end - start)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Cos,
    Sin,
}

/// `phi(t, x) = b(t) * trig(2 pi (m . x) / L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub profile: TimeProfile,
    pub mode: [i32; 2],
    pub phase: Phase,
}

impl TestFunction {
    pub fn new(profile: TimeProfile, mode: [i32; 2], phase: Phase) -> Self {
        TestFunction { profile, mode, phase }
    }

    fn wave(&self, length: f64) -> [f64; 2] {
        let c = 2.0 * PI / length;
        [c * self.mode[0] as f64, c * self.mode[1] as f64]
    }

    fn arg(&self, x: [f64; 2], length: f64) -> f64 {
        let k = self.wave(length);
        k[0] * x[0] + k[1] * x[1]
    }

    pub fn space(&self, x: [f64; 2], length: f64) -> f64 {
        let a = self.arg(x, length);
        match self.phase {
            Phase::Cos => a.cos(),
            Phase::Sin => a.sin(),
        }
    }

    pub fn space_gradient(&self, x: [f64; 2], length: f64) -> [f64; 2] {
        let a = self.arg(x, length);
        let d = match self.phase {
            Phase::Cos => -a.sin(),
            Phase::Sin => a.cos(),
        };
        let k = self.wave(length);
        [k[0] * d, k[1] * d]
    }

    pub fn value(&self, t: f64, x: [f64; 2], length: f64) -> f64 {
        self.profile.value(t) * self.space(x, length)
    }

    /// Rough `C^2` size used to normalise residuals: `(1 + |k| + |k|^2)` times
    /// the sampled maxima of `b`, `b'` and a difference estimate of `b''`.
    pub fn c2_scale(&self, length: f64, horizon: f64) -> f64 {
        let k = self.wave(length);
        let kn = (k[0] * k[0] + k[1] * k[1]).sqrt();
        let n = 2000;
        let h = horizon / n as f64;
        let (mut b0, mut b1, mut b2) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..=n {
            let t = i as f64 * h;
            b0 = b0.max(self.profile.value(t).abs());
            b1 = b1.max(self.profile.derivative(t).abs());
            if i > 0 && i < n {
                let d2 = (self.profile.derivative(t + h) - self.profile.derivative(t - h)) / (2.0 * h);
                b2 = b2.max(d2.abs());
            }
        }
        b0 * (1.0 + kn + kn * kn) + b1 * (1.0 + kn) + b2
    }

    /// Twelve test functions: two bumps inside `(0, T)` times six harmonics.
    pub fn default_set(dim: usize, horizon: f64) -> Vec<TestFunction> {
        let bumps = [
            TimeProfile::Bump { start: 0.05 * horizon, end: 0.95 * horizon },
            TimeProfile::Bump { start: 0.25 * horizon, end: 0.75 * horizon },
        ];
        let modes: [([i32; 2], Phase); 6] = if dim == 1 {
            [
                ([0, 0], Phase::Cos),
                ([1, 0], Phase::Cos),
                ([1, 0], Phase::Sin),
                ([2, 0], Phase::Cos),
                ([2, 0], Phase::Sin),
                ([3, 0], Phase::Cos),
            ]
        } else {
            [
                ([0, 0], Phase::Cos),
                ([1, 0], Phase::Cos),
                ([0, 1], Phase::Sin),
                ([1, 1], Phase::Cos),
                ([1, -1], Phase::Sin),
                ([2, 1], Phase::Cos),
            ]
        };
        bumps
            .iter()
            .flat_map(|b| modes.iter().map(move |(m, ph)| TestFunction::new(*b, *m, *ph)))
            .collect()
    }
}

fn face_point(grid: &Grid, cell: usize, axis: usize) -> [f64; 2] {
    let mut x = grid.coords(cell);
    x[axis] += 0.5 * grid.dx();
    x
}

/// `sum over steps k < end` of
/// `int u (-d_t phi) + (A grad u + F) . grad phi`, with the time integral of
/// `d_t phi` taken exactly and the flux theta-weighted as in the scheme.
fn bulk(sol: &LinearSolution, theta: f64, phi: &TestFunction, end: usize) -> f64 {
    let grid = sol.u.grid();
    let length = grid.length();
    let nc = grid.cells();
    let dv = grid.cell_volume();
    let times = sol.u.times();
    let space: Vec<f64> = (0..nc).map(|c| phi.space(grid.coords(c), length)).collect();
    let grads: Vec<[[f64; 2]; 2]> = (0..nc)
        .map(|c| {
            let gx = phi.space_gradient(face_point(grid, c, 0), length);
            let gy = phi.space_gradient(face_point(grid, c, 1), length);
            [gx, gy]
        })
        .collect();
    let mut total = 0.0;
    for k in 0..end {
        let (t0, t1) = (times[k], times[k + 1]);
        let dt = t1 - t0;
        let db = phi.profile.value(t1) - phi.profile.value(t0);
        let bm = phi.profile.value(0.5 * (t0 + t1));
        let (u0, u1) = (sol.u.frame(k), sol.u.frame(k + 1));
        let (f0, f1) = (sol.flux.frame(k), sol.flux.frame(k + 1));
        let mut s_u = 0.0;
        let mut s_f = 0.0;
        for c in 0..nc {
            s_u -= 0.5 * (u0[c] + u1[c]) * space[c] * db;
            for d in 0..grid.dim() {
                let f = theta * f1[d * nc + c] + (1.0 - theta) * f0[d * nc + c];
                s_f += f * grads[c][d][d];
            }
        }
        total += dv * (s_u + dt * bm * s_f);
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakResidualReport {
    pub max: f64,
    pub per_test: Vec<f64>,
    /// `dx^2 + dt_max`.
    pub scale: f64,
    /// `max_phi |R(phi)| / (scale * C^2 size of phi)`.
    pub constant: f64,
}

/// Largest weak residual over the test set.
pub fn weak_residual(sol: &LinearSolution, p: &LinearProblem, tests: &[TestFunction]) -> WeakResidualReport {
    let grid = sol.u.grid();
    let times = sol.u.times();
    let end = times.len() - 1;
    let dt_max = times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let scale = grid.dx() * grid.dx() + dt_max;
    let horizon = times[end];
    let per_test: Vec<f64> = tests.iter().map(|phi| bulk(sol, p.theta(), phi, end).abs()).collect();
    let max = per_test.iter().cloned().fold(0.0, f64::max);
    let constant = tests
        .iter()
        .zip(&per_test)
        .map(|(phi, r)| r / (scale * phi.c2_scale(grid.length(), horizon)))
        .fold(0.0, f64::max);
    WeakResidualReport { max, per_test, scale, constant }
}

/// `|<u(0), phi(0)> - <u(T'), phi(T')> - bulk(0, T')|` with `T' = times[end]`.
pub fn integral_identity_check(sol: &LinearSolution, p: &LinearProblem, phi: &TestFunction, end: usize) -> Result<f64> {
    let times = sol.u.times();
    if end == 0 || end >= times.len() {
        return Err(Error::InvalidParameter(format!("T' index {end} outside 1..{}", times.len())));
    }
    let grid = sol.u.grid();
    let dv = grid.cell_volume();
    let pair = |k: usize| -> f64 {
        let t = times[k];
        sol.u
            .frame(k)
            .iter()
            .enumerate()
            .map(|(c, u)| u * phi.value(t, grid.coords(c), grid.length()))
            .sum::<f64>()
            * dv
    };
    Ok((pair(0) - pair(end) - bulk(sol, p.theta(), phi, end)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivative_matches_difference_quotient() {
        let b = TimeProfile::Bump { start: 0.1, end: 0.9 };
        for &t in &[0.2, 0.4, 0.5, 0.77] {
            let h = 1e-6;
            let fd = (b.value(t + h) - b.value(t - h)) / (2.0 * h);
            assert!((fd - b.derivative(t)).abs() < 1e-7);
        }
        assert_eq!(b.value(0.05), 0.0);
    }

    #[test]
    fn default_set_has_twelve_members() {
        assert_eq!(TestFunction::default_set(1, 1.0).len(), 12);
        assert_eq!(TestFunction::default_set(2, 1.0).len(), 12);
    }
}
