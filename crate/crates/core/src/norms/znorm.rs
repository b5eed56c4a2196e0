//! Weighted space-time norms over parabolic cylinders `(t/2, t] x B(x, sqrt t)`.
//!
//! A sampled field is treated as piecewise constant in time: frame `k`
//! represents `(t_{k-1}, t_k]` with `t_{-1} = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ball::{ball_max, ball_sums, Ball};
use crate::error::{Error, Result};
use crate::field::{Grid, SpaceTimeField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZNormSpec {
    /// Integrability exponent, `q > 1`; `f64::INFINITY` gives the weighted sup.
    pub q: f64,
    pub horizon: f64,
    /// Cylinder tops. `None` uses every frame time in `(0, horizon]`.
    pub t_samples: Option<Vec<f64>>,
}

impl ZNormSpec {
    pub fn new(q: f64, horizon: f64) -> Self {
        ZNormSpec { q, horizon, t_samples: None }
    }

    pub fn with_samples(mut self, t: Vec<f64>) -> Self {
        self.t_samples = Some(t);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.q > 1.0) {
            return Err(Error::InvalidParameter(format!("Z-norm exponent must exceed 1, got {}", self.q)));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidParameter("Z-norm horizon must be positive".into()));
        }
        if let Some(ts) = &self.t_samples {
            if ts.iter().any(|&t| !(t > 0.0 && t <= self.horizon)) {
                return Err(Error::InvalidParameter("Z-norm samples must lie in (0, T]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZNormReport {
    pub value: f64,
    pub argmax_x: [f64; 2],
    pub argmax_t: f64,
    /// Sample times whose half-window held fewer than two frames.
    pub skipped: Vec<f64>,
    /// Some cylinder ball covered the whole torus.
    pub saturated: bool,
    /// `(t, sup_x average)` per evaluated sample.
    pub profile: Vec<(f64, f64)>,
}

/// Overlap weights of each frame interval with `(t/2, t]`, normalised by
/// `t/2`, and the number of frame times inside the window.
fn window_weights(times: &[f64], t: f64) -> (Vec<(usize, f64)>, usize) {
    let lo = 0.5 * t;
    let mut out = Vec::new();
    let mut inside = 0;
    let mut prev: f64 = 0.0;
    for (k, &tk) in times.iter().enumerate() {
        let a = prev.max(lo);
        let b = tk.min(t);
        if b > a {
            out.push((k, (b - a) / (t - lo)));
        }
        if tk > lo && tk <= t * (1.0 + 1e-12) {
            inside += 1;
        }
        prev = tk;
    }
    (out, inside)
}

/// `(s^{1/2} |f|)^q` per frame, or `s^{1/2} |f|` when `q` is infinite.
fn weighted_powers(f: &SpaceTimeField, q: f64) -> Vec<Vec<f64>> {
    let nc = f.grid().cells();
    f.times()
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            let w = t.max(0.0).sqrt();
            (0..nc)
                .map(|c| {
                    let v = w * f.magnitude(k, c);
                    if q.is_infinite() {
                        v
                    } else {
                        v.powf(q)
                    }
                })
                .collect()
        })
        .collect()
}

/// The cylinder average `sup_x` at one sample time, with its argmax cell.
fn cylinder_sup(grid: &Grid, powers: &[Vec<f64>], q: f64, weights: &[(usize, f64)], ball: &Ball) -> (f64, usize) {
    let nc = grid.cells();
    let vals: Vec<f64> = if q.is_infinite() {
        let mut h = vec![0.0f64; nc];
        for &(k, _) in weights {
            for (hc, v) in h.iter_mut().zip(&powers[k]) {
                *hc = hc.max(*v);
            }
        }
        ball_max(grid, ball, &h)
    } else {
        let mut h = vec![0.0; nc];
        for &(k, wk) in weights {
            for (hc, v) in h.iter_mut().zip(&powers[k]) {
                *hc += wk * v;
            }
        }
        let inv = 1.0 / ball.count() as f64;
        ball_sums(grid, ball, &h).into_iter().map(|s| (s * inv).max(0.0).powf(1.0 / q)).collect()
    };
    let mut best = (f64::NEG_INFINITY, 0);
    for (c, &v) in vals.iter().enumerate() {
        if v > best.0 {
            best = (v, c);
        }
    }
    best
}

/// `sup_{t, x} ( avg_{(t/2, t) x B(x, sqrt t)} |s^{1/2} f(s, y)|^q )^{1/q}`.
pub fn z_norm(f: &SpaceTimeField, spec: &ZNormSpec) -> Result<ZNormReport> {
    spec.validate()?;
    let grid = *f.grid();
    let samples: Vec<f64> = match &spec.t_samples {
        Some(ts) => ts.clone(),
        None => f.times().iter().cloned().filter(|&t| t > 0.0 && t <= spec.horizon * (1.0 + 1e-12)).collect(),
    };
    let powers = weighted_powers(f, spec.q);
    let evaluated: Vec<Option<(f64, f64, usize, bool)>> = samples
        .par_iter()
        .map(|&t| {
            let (weights, inside) = window_weights(f.times(), t);
            if inside < 2 {
                return None;
            }
            let r = t.sqrt().min(0.5 * grid.length() * if grid.dim() == 2 { std::f64::consts::SQRT_2 } else { 1.0 });
            let ball = Ball::new(&grid, r);
            let (v, c) = cylinder_sup(&grid, &powers, spec.q, &weights, &ball);
            Some((t, v, c, grid.ball_saturates(t.sqrt())))
        })
        .collect();
    let mut report = ZNormReport {
        value: 0.0,
        argmax_x: [0.0; 2],
        argmax_t: 0.0,
        skipped: Vec::new(),
        saturated: false,
        profile: Vec::new(),
    };
    let mut any = false;
    for (t, e) in samples.iter().zip(evaluated) {
        match e {
            None => report.skipped.push(*t),
            Some((t, v, c, sat)) => {
                report.profile.push((t, v));
                report.saturated |= sat;
                if !any || v > report.value {
                    report.value = v;
                    report.argmax_x = grid.coords(c);
                    report.argmax_t = t;
                }
                any = true;
            }
        }
    }
    if !any {
        return Err(Error::InsufficientResolution(
            "no sample time has two frames in its window (t/2, t]".into(),
        ));
    }
    Ok(report)
}

/// `|| . ||_Z` restricted to horizons `t_k`: the running maximum of the
/// per-sample profile.
pub fn z_norm_prefix(report: &ZNormReport, horizons: &[f64]) -> Vec<f64> {
    horizons
        .iter()
        .map(|&h| {
            report
                .profile
                .iter()
                .filter(|(t, _)| *t <= h * (1.0 + 1e-12))
                .map(|(_, v)| *v)
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `sup_{0 < t <= T, x} t^{-beta} |f(t, x)|`.
pub fn weighted_sup_norm(f: &SpaceTimeField, beta: f64, horizon: f64) -> f64 {
    let nc = f.grid().cells();
    let mut m: f64 = 0.0;
    for (k, &t) in f.times().iter().enumerate() {
        if t <= 0.0 || t > horizon * (1.0 + 1e-12) {
            continue;
        }
        let w = t.powf(-beta);
        for c in 0..nc {
            m = m.max(w * f.magnitude(k, c));
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticZ {
    pub value: f64,
    /// Same quadrature with doubled resolution.
    pub refined: f64,
    /// Richardson extrapolation of the two, assuming second order.
    pub extrapolated: f64,
}

fn analytic_cylinder(
    f: &(dyn Fn(f64, [f64; 2]) -> f64 + Sync),
    dim: usize,
    q: f64,
    t: f64,
    x: [f64; 2],
    m: usize,
) -> f64 {
    let r = t.sqrt();
    let ds = 0.5 * t / m as f64;
    let mut acc = 0.0;
    let mut weight = 0.0;
    for a in 0..m {
        let s = 0.5 * t + (a as f64 + 0.5) * ds;
        let ws = s.sqrt();
        if dim == 1 {
            let h = 2.0 * r / m as f64;
            for b in 0..m {
                let y = x[0] - r + (b as f64 + 0.5) * h;
                let v = (ws * f(s, [y, x[1]])).abs();
                if q.is_infinite() {
                    acc = f64::max(acc, v);
                } else {
                    acc += v.powf(q) * h;
                }
                weight += h;
            }
        } else {
            let hr = r / m as f64;
            let ht = 2.0 * std::f64::consts::PI / m as f64;
            for b in 0..m {
                let rho = (b as f64 + 0.5) * hr;
                for c in 0..m {
                    let th = (c as f64 + 0.5) * ht;
                    let y = [x[0] + rho * th.cos(), x[1] + rho * th.sin()];
                    let v = (ws * f(s, y)).abs();
                    let dvol = rho * hr * ht;
                    if q.is_infinite() {
                        acc = f64::max(acc, v);
                    } else {
                        acc += v.powf(q) * dvol;
                    }
                    weight += dvol;
                }
            }
        }
    }
    if q.is_infinite() {
        acc
    } else {
        (acc / weight).powf(1.0 / q)
    }
}

/// Z-norm of a closed-form `f` by midpoint quadrature on each cylinder, at
/// `m` and `2m` nodes per direction, over the given centres and tops.
pub fn z_norm_analytic(
    f: &(dyn Fn(f64, [f64; 2]) -> f64 + Sync),
    dim: usize,
    q: f64,
    centres: &[[f64; 2]],
    t_samples: &[f64],
    m: usize,
) -> AnalyticZ {
    let sup = |m: usize| {
        t_samples
            .par_iter()
            .map(|&t| centres.iter().map(|&x| analytic_cylinder(f, dim, q, t, x, m)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    };
    let value = sup(m);
    let refined = sup(2 * m);
    AnalyticZ {
        value,
        refined,
        extrapolated: (4.0 * refined - value) / 3.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    /// `(q, Z-norm)` of `s^{-1/2} 1_B`.
    pub z_values: Vec<(f64, f64)>,
    pub eps: Vec<f64>,
    /// `int_eps^T int_B f^2`.
    pub integrals: Vec<f64>,
    /// Least-squares slope of the integral against `-ln eps`.
    pub slope: f64,
    /// `|B|` on the grid.
    pub ball_measure: f64,
    pub slope_relative_error: f64,
}

/// `f(s, y) = s^{-1/2} 1_B(y)` has unit Z-norm for every `q`, yet its
/// space-time `L^2` mass over `(eps, T) x B` grows like `|B| ln(T / eps)`.
pub fn z_l2_noninclusion_witness(grid: &Grid, horizon: f64, qs: &[f64], eps: &[f64]) -> Result<WitnessReport> {
    let centre = [0.5 * grid.length(); 2];
    let radius = 0.25 * grid.length();
    let in_b: Vec<bool> = (0..grid.cells())
        .map(|c| grid.periodic_dist2(grid.coords(c), centre) <= radius * radius)
        .collect();
    let ball_measure = in_b.iter().filter(|b| **b).count() as f64 * grid.cell_volume();
    let sigma: f64 = 0.97;
    let eps_min = eps.iter().cloned().fold(horizon, f64::min);
    let steps = ((horizon / (0.5 * eps_min)).ln() / (1.0 / sigma).ln()).ceil() as usize;
    let times = crate::field::time_grid::geometric(0.0, horizon, sigma, steps)?;
    let frames: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| in_b.iter().map(|&b| if b && t > 0.0 { 1.0 / t.sqrt() } else { 0.0 }).collect())
        .collect();
    let f = SpaceTimeField::scalar(*grid, times.clone(), frames)?;
    let mut z_values = Vec::new();
    for &q in qs {
        z_values.push((q, z_norm(&f, &ZNormSpec::new(q, horizon))?.value));
    }
    // the sampled field is piecewise constant on (t_{k-1}, t_k]
    let dv = grid.cell_volume();
    let integrals: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let mut s = 0.0;
            for k in 1..times.len() {
                let overlap = times[k] - times[k - 1].max(e);
                if overlap > 0.0 {
                    s += overlap * f.frame(k).iter().map(|v| v * v * dv).sum::<f64>();
                }
            }
            s
        })
        .collect();
    let xs: Vec<f64> = eps.iter().map(|e| -e.ln()).collect();
    let slope = super::least_squares(&xs, &integrals).0;
    Ok(WitnessReport {
        z_values,
        eps: eps.to_vec(),
        slope_relative_error: (slope - ball_measure).abs() / ball_measure,
        integrals,
        slope,
        ball_measure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlesonReport {
    pub value: f64,
    pub argmax_x: [f64; 2],
    pub argmax_t: f64,
    /// `value / |u0|_inf`; zero when both vanish.
    pub bound_ratio: f64,
}

/// `sup_{x, t} ( int_0^t avg_{B(x, sqrt t)} |grad u|^2 )^{1/2}` with `t`
/// ranging over the frame times up to `horizon`.
pub fn carleson(grad: &SpaceTimeField, u0_norm: f64, horizon: f64) -> CarlesonReport {
    let grid = *grad.grid();
    let nc = grid.cells();
    let times = grad.times();
    let mut cumulative = Vec::with_capacity(times.len());
    let mut acc = vec![0.0; nc];
    let mut prev = 0.0;
    for (k, &t) in times.iter().enumerate() {
        let dt = t - prev;
        for (c, a) in acc.iter_mut().enumerate() {
            let g = grad.magnitude(k, c);
            *a += dt * g * g;
        }
        prev = t;
        cumulative.push(acc.clone());
    }
    let best = times
        .par_iter()
        .enumerate()
        .filter(|(_, &t)| t > 0.0 && t <= horizon * (1.0 + 1e-12))
        .map(|(k, &t)| {
            let ball = Ball::new(&grid, t.sqrt());
            let s = ball_sums(&grid, &ball, &cumulative[k]);
            let inv = 1.0 / ball.count() as f64;
            let (mut v, mut c) = (0.0, 0);
            for (i, si) in s.iter().enumerate() {
                let val = (si * inv).max(0.0).sqrt();
                if val > v {
                    v = val;
                    c = i;
                }
            }
            (v, c, t)
        })
        .reduce(|| (0.0, 0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    let bound_ratio = if u0_norm > 0.0 { best.0 / u0_norm } else { 0.0 };
    CarlesonReport {
        value: best.0,
        argmax_x: grid.coords(best.1),
        argmax_t: best.2,
        bound_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::time_grid;

    #[test]
    fn weight_cancels_inverse_square_root() {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let times = time_grid::uniform(0.0, 1.0, 200).unwrap();
        let f = SpaceTimeField::from_fn(g, &times, |t, _| if t > 0.0 { 1.0 / t.sqrt() } else { 0.0 }).unwrap();
        for q in [1.5, 2.0, 4.0, f64::INFINITY] {
            let v = z_norm(&f, &ZNormSpec::new(q, 1.0)).unwrap().value;
            assert!((v - 1.0).abs() < 1e-12, "q={q}: {v}");
        }
    }

    #[test]
    fn sparse_frames_are_skipped() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let f = SpaceTimeField::from_fn(g, &[0.0, 1.0], |_, _| 1.0).unwrap();
        assert!(matches!(z_norm(&f, &ZNormSpec::new(2.0, 1.0)), Err(Error::InsufficientResolution(_))));
    }

    #[test]
    fn weighted_sup_of_square_root() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let f = SpaceTimeField::from_fn(g, &[0.0, 0.1, 0.5, 1.0], |t, _| t.sqrt()).unwrap();
        assert!((weighted_sup_norm(&f, 0.5, 1.0) - 1.0).abs() < 1e-15);
        assert!((weighted_sup_norm(&f, 0.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn analytic_constant_matches_closed_form() {
        let f = |_: f64, _: [f64; 2]| 1.0;
        let z = z_norm_analytic(&f, 1, 2.0, &[[0.5, 0.0]], &[0.25, 0.5, 1.0], 64);
        assert!((z.extrapolated - 0.75f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn carleson_of_zero_gradient() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let grad = SpaceTimeField::new(g, vec![0.0, 0.1], 2, vec![vec![0.0; 128]; 2]).unwrap();
        let r = carleson(&grad, 1.0, 1.0);
        assert_eq!(r.value, 0.0);
        assert_eq!(r.bound_ratio, 0.0);
    }
}
