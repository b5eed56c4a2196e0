use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ball::{ball_max, ball_min, Ball};
use super::{least_squares, z_norm, z_norm_prefix, ZNormSpec};
use crate::error::{Error, Result};
use crate::field::{Interval, MatrixField, ScalarField, SpaceTimeField};
use crate::linear::{solve_linear, LinearProblem, LinearSolution, MatrixCoefficient};

/// Upper parabolic Sobolev conjugate, `1/p* = 1/p - 1/(n+2)`, for `1 < p < n+2`.
pub fn p_star(p: f64, n: usize) -> Result<f64> {
    let m = (n + 2) as f64;
    if !(p > 1.0 && p < m) {
        return Err(Error::InvalidParameter(format!("p* needs 1 < p < {m}, got {p}")));
    }
    Ok(p * m / (m - p))
}

/// Lower conjugate, `1/q_* = 1/q + 1/(n+2)`, for `q >= 1` (including infinity).
pub fn q_lower_star(q: f64, n: usize) -> Result<f64> {
    let m = (n + 2) as f64;
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("q_* needs q >= 1, got {q}")));
    }
    if q.is_infinite() {
        return Ok(m);
    }
    Ok(q * m / (q + m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub initial: Interval,
    /// Hull over frames with `t > 0`.
    pub evolved: Interval,
    /// How far the evolved hull pokes out of the initial one.
    pub excess: f64,
    pub contained: bool,
    /// How far the evolved hull falls short of the initial one.
    pub shrinkage: f64,
    pub hull_equal: bool,
}

/// Compares `conv(range u)` with `conv(range u0)`: containment up to `tau`,
/// equality up to `slack`.
pub fn range_invariance(u: &SpaceTimeField, u0: &ScalarField, tau: f64, slack: f64) -> Result<RangeReport> {
    let initial = u0.range()?;
    let mut evolved: Option<Interval> = None;
    for (k, &t) in u.times().iter().enumerate() {
        if t > 0.0 {
            let r = crate::field::essential_range(u.frame(k))?;
            evolved = Some(evolved.map_or(r, |e| e.hull(&r)));
        }
    }
    let evolved = evolved.unwrap_or(initial);
    let excess = (initial.lo - evolved.lo).max(evolved.hi - initial.hi).max(0.0);
    let shrinkage = (evolved.lo - initial.lo).max(initial.hi - evolved.hi).max(0.0);
    Ok(RangeReport {
        initial,
        evolved,
        excess,
        contained: excess <= tau,
        shrinkage,
        hull_equal: shrinkage <= slack,
    })
}

/// `omega(rho)`: the largest deviation `|u(s, y) - u(t, x)|` over
/// `(t - rho^2, t] x B(x, rho)`, maximised over base points `(t, x)` with
/// `t` in `window` (all frames if `None`). Returned in increasing `rho`
/// with a running maximum, so the table is non-decreasing.
pub fn modulus_of_continuity(u: &SpaceTimeField, scales: &[f64], window: Option<(f64, f64)>) -> Result<Vec<(f64, f64)>> {
    let grid = *u.grid();
    if let Some(&bad) = scales.iter().find(|&&r| !(r > 0.0 && r <= 0.25 * grid.length() * (1.0 + 1e-12))) {
        return Err(Error::InvalidParameter(format!("modulus scale {bad} outside (0, L/4]")));
    }
    let mut sorted = scales.to_vec();
    sorted.sort_by(f64::total_cmp);
    let times = u.times();
    let (w_lo, w_hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let nc = grid.cells();
    let mut out = Vec::with_capacity(sorted.len());
    let mut running: f64 = 0.0;
    for &rho in &sorted {
        let ball = Ball::new(&grid, rho);
        let mut maxq: Vec<VecDeque<(usize, f64)>> = vec![VecDeque::new(); nc];
        let mut minq: Vec<VecDeque<(usize, f64)>> = vec![VecDeque::new(); nc];
        let mut omega: f64 = 0.0;
        for k in 0..times.len() {
            let bmax = ball_max(&grid, &ball, u.frame(k));
            let bmin = ball_min(&grid, &ball, u.frame(k));
            let cutoff = times[k] - rho * rho;
            for c in 0..nc {
                let q = &mut maxq[c];
                while q.back().is_some_and(|&(_, v)| v <= bmax[c]) {
                    q.pop_back();
                }
                q.push_back((k, bmax[c]));
                while q.front().is_some_and(|&(j, _)| times[j] <= cutoff) {
                    q.pop_front();
                }
                let q = &mut minq[c];
                while q.back().is_some_and(|&(_, v)| v >= bmin[c]) {
                    q.pop_back();
                }
                q.push_back((k, bmin[c]));
                while q.front().is_some_and(|&(j, _)| times[j] <= cutoff) {
                    q.pop_front();
                }
            }
            if times[k] < w_lo || times[k] > w_hi {
                continue;
            }
            let f = u.frame(k);
            for c in 0..nc {
                let hi = maxq[c].front().map_or(f[c], |e| e.1);
                let lo = minq[c].front().map_or(f[c], |e| e.1);
                omega = omega.max(hi - f[c]).max(f[c] - lo);
            }
        }
        running = running.max(omega);
        out.push((rho, running));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub c: f64,
    pub times: Vec<f64>,
    /// `|u(t) - c|_inf` per frame.
    pub sup_dist: Vec<f64>,
    /// Slope of `ln sup_dist` against `ln t` on the fit window; `None` if
    /// `u` never leaves `c`.
    pub fitted_exponent: Option<f64>,
    pub fit_window: (f64, f64),
    pub fit_points: usize,
    /// `sup_dist` strictly decreasing on the fit window.
    pub monotone_tail: bool,
    /// `(L/8)^2 / lambda`; wrap-around dominates beyond it.
    pub valid_horizon: f64,
}

/// Fits the algebraic decay of `|u(t) - c|_inf` on `[t_start, T_valid]`.
pub fn long_time_decay(u: &SpaceTimeField, c: f64, t_start: f64, lambda: f64) -> Result<DecayReport> {
    let grid = u.grid();
    let valid_horizon = grid.validity_horizon(lambda);
    let sup_dist: Vec<f64> = u.frames().iter().map(|f| f.iter().map(|v| (v - c).abs()).fold(0.0, f64::max)).collect();
    let times = u.times().to_vec();
    let mut report = DecayReport {
        c,
        times: times.clone(),
        sup_dist: sup_dist.clone(),
        fitted_exponent: None,
        fit_window: (t_start, valid_horizon),
        fit_points: 0,
        monotone_tail: true,
        valid_horizon,
    };
    if sup_dist.iter().all(|&d| d == 0.0) {
        return Ok(report);
    }
    let idx: Vec<usize> = (0..times.len())
        .filter(|&k| times[k] >= t_start && times[k] <= valid_horizon && sup_dist[k] > 0.0)
        .collect();
    if idx.len() < 5 {
        return Err(Error::FitWindowEmpty(format!(
            "{} frames in [{t_start:.3e}, {valid_horizon:.3e}]; enlarge L or start the fit earlier",
            idx.len()
        )));
    }
    let xs: Vec<f64> = idx.iter().map(|&k| times[k].ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&k| sup_dist[k].ln()).collect();
    report.fitted_exponent = Some(least_squares(&xs, &ys).0);
    report.fit_points = idx.len();
    report.monotone_tail = idx.windows(2).all(|w| sup_dist[w[1]] < sup_dist[w[0]]);
    Ok(report)
}

/// Response to a discrete delta of unit mass at `cell` under frozen `A0`.
pub fn fundamental_solution(a0: &MatrixField, cell: usize, times: &[f64], theta: f64) -> Result<LinearSolution> {
    let grid = *a0.grid();
    let mut v = vec![0.0; grid.cells()];
    v[cell] = 1.0 / grid.cell_volume();
    let p = LinearProblem::new(
        MatrixCoefficient::Frozen(a0.clone()),
        None,
        ScalarField::new(grid, v)?,
        times.to_vec(),
        theta,
    )?;
    solve_linear(&p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeConfig {
    /// Probe radius as a fraction of `L`.
    pub radius_fraction: f64,
    pub bins: usize,
    pub lower_quantile: f64,
    pub upper_quantile: f64,
    /// Relative slack on the pointwise envelope check.
    pub tolerance: f64,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        EnvelopeConfig {
            radius_fraction: 0.25,
            bins: 24,
            lower_quantile: 0.05,
            upper_quantile: 0.95,
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEnvelope {
    pub lower_amplitude: f64,
    pub lower_rate: f64,
    pub upper_amplitude: f64,
    pub upper_rate: f64,
    /// Largest `|sum Gamma dV - 1|` over all frames after the first.
    pub mass_error: f64,
    pub min_value: f64,
    pub min_at: ([f64; 2], f64),
    pub positive: bool,
    pub envelopes_hold: bool,
    pub pass: bool,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, f) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

/// Fits `C0 t^{-n/2} exp(-c0 r^2/t) <= Gamma <= C1 t^{-n/2} exp(-c1 r^2/t)`
/// to a fundamental solution at the probe times, using annulus quantiles
/// of `ln(Gamma t^{n/2})` against `rho = r^2/t`.
pub fn gaussian_envelope(gamma: &SpaceTimeField, cell: usize, probe_times: &[f64], cfg: &EnvelopeConfig) -> Result<GaussianEnvelope> {
    let grid = *gamma.grid();
    let half_n = 0.5 * grid.dim() as f64;
    let dv = grid.cell_volume();
    let mass_error = gamma
        .frames()
        .iter()
        .skip(1)
        .map(|f| (f.iter().sum::<f64>() * dv - 1.0).abs())
        .fold(0.0, f64::max);
    let y = grid.coords(cell);
    let rmax2 = (cfg.radius_fraction * grid.length()).powi(2);
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut min_value = f64::INFINITY;
    let mut min_at = ([0.0; 2], 0.0);
    for &tp in probe_times {
        let k = gamma
            .times()
            .iter()
            .position(|&t| (t - tp).abs() <= 1e-12 * tp.max(1e-300))
            .ok_or_else(|| Error::InvalidParameter(format!("probe time {tp} is not a frame time")))?;
        let f = gamma.frame(k);
        for (c, &v) in f.iter().enumerate() {
            let r2 = grid.periodic_dist2(grid.coords(c), y);
            if r2 > rmax2 {
                continue;
            }
            if v < min_value {
                min_value = v;
                min_at = (grid.coords(c), tp);
            }
            if v > 0.0 {
                samples.push((r2 / tp, (v * tp.powf(half_n)).ln()));
            }
        }
    }
    if samples.len() < 2 * cfg.bins {
        return Err(Error::InsufficientResolution("too few probe samples for an envelope fit".into()));
    }
    let rho_max = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    let width = rho_max / cfg.bins as f64;
    let mut bins: Vec<Vec<(f64, f64)>> = vec![Vec::new(); cfg.bins];
    for &(rho, l) in &samples {
        let b = ((rho / width) as usize).min(cfg.bins - 1);
        bins[b].push((rho, l));
    }
    let mut lo_pts = (Vec::new(), Vec::new());
    let mut hi_pts = (Vec::new(), Vec::new());
    for b in bins.iter().filter(|b| !b.is_empty()) {
        let mean_rho = b.iter().map(|s| s.0).sum::<f64>() / b.len() as f64;
        // quantiles of the spread about the in-bin trend, so the bin width
        // does not leak into the envelope
        let (rs, ls): (Vec<f64>, Vec<f64>) = b.iter().cloned().unzip();
        let (slope, icpt) = least_squares(&rs, &ls);
        let centre = icpt + slope * mean_rho;
        let mut res: Vec<f64> = b.iter().map(|s| s.1 - (icpt + slope * s.0)).collect();
        res.sort_by(f64::total_cmp);
        lo_pts.0.push(mean_rho);
        lo_pts.1.push(centre + quantile(&res, cfg.lower_quantile));
        hi_pts.0.push(mean_rho);
        hi_pts.1.push(centre + quantile(&res, cfg.upper_quantile));
    }
    let lower_rate = -least_squares(&lo_pts.0, &lo_pts.1).0;
    let upper_rate = -least_squares(&hi_pts.0, &hi_pts.1).0;
    let log_c0 = lo_pts.0.iter().zip(&lo_pts.1).map(|(r, l)| l + lower_rate * r).fold(f64::INFINITY, f64::min);
    let log_c1 = hi_pts.0.iter().zip(&hi_pts.1).map(|(r, l)| l + upper_rate * r).fold(f64::NEG_INFINITY, f64::max);
    let slack = (1.0 + cfg.tolerance).ln();
    let envelopes_hold = samples
        .iter()
        .all(|&(rho, l)| l >= log_c0 - lower_rate * rho - slack && l <= log_c1 - upper_rate * rho + slack);
    let positive = min_value >= -1e-12;
    Ok(GaussianEnvelope {
        lower_amplitude: log_c0.exp(),
        lower_rate,
        upper_amplitude: log_c1.exp(),
        upper_rate,
        mass_error,
        min_value,
        min_at,
        positive,
        envelopes_hold,
        pass: positive && envelopes_hold && lower_rate > 0.0 && upper_rate > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    /// `last / first`; zero when every value vanishes.
    pub ratio: f64,
    /// Values do not grow by more than 5% as `t` decreases.
    pub monotone: bool,
    pub passes: bool,
}

/// `|grad u|_{Z(t_k)}` for a decreasing list `t_k`.
pub fn z_gradient_smallness(grad: &SpaceTimeField, q: f64, t_list: &[f64]) -> Result<SmallnessReport> {
    let t_max = t_list.iter().cloned().fold(0.0, f64::max);
    let t_min = t_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let report = z_norm(grad, &ZNormSpec::new(q, t_max))?;
    if !report.profile.iter().any(|(t, _)| *t <= t_min * (1.0 + 1e-12)) {
        return Err(Error::InsufficientResolution(format!(
            "no resolved cylinder below t = {t_min:.3e}; refine the early time grid"
        )));
    }
    let values = z_norm_prefix(&report, t_list);
    let first = values[0];
    let last = *values.last().unwrap();
    let ratio = if first > 0.0 { last / first } else { 0.0 };
    let monotone = values.windows(2).all(|w| w[1] <= w[0] * 1.05 + 1e-300);
    Ok(SmallnessReport {
        t: t_list.to_vec(),
        values,
        ratio,
        monotone,
        passes: ratio <= 0.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{time_grid, Grid};

    #[test]
    fn conjugates() {
        assert_eq!(p_star(2.0, 2).unwrap(), 4.0);
        assert_eq!(q_lower_star(4.0, 2).unwrap(), 2.0);
        assert_eq!(q_lower_star(f64::INFINITY, 1).unwrap(), 3.0);
        assert!(p_star(4.0, 2).is_err());
        assert!(p_star(1.0, 2).is_err());
    }

    #[test]
    fn constant_field_diagnostics() {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let times = time_grid::uniform(0.0, 0.1, 20).unwrap();
        let u = SpaceTimeField::from_fn(g, &times, |_, _| 2.0).unwrap();
        let u0 = ScalarField::constant(g, 2.0);
        let r = range_invariance(&u, &u0, 0.0, 0.0).unwrap();
        assert!(r.contained && r.hull_equal);
        let w = modulus_of_continuity(&u, &[0.05, 0.1], None).unwrap();
        assert!(w.iter().all(|&(_, o)| o == 0.0));
        let d = long_time_decay(&u, 2.0, 0.01, 1.0).unwrap();
        assert!(d.fitted_exponent.is_none());
        assert!(d.sup_dist.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn modulus_is_monotone_and_bounded_by_oscillation() {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let times = time_grid::uniform(0.0, 0.05, 10).unwrap();
        let u = SpaceTimeField::from_fn(g, &times, |t, x| (-t).exp() * (6.283 * x[0]).sin()).unwrap();
        let w = modulus_of_continuity(&u, &[0.25, 0.02, 0.1], None).unwrap();
        assert!(w.windows(2).all(|p| p[1].0 > p[0].0 && p[1].1 >= p[0].1));
        assert!(w.last().unwrap().1 <= 2.0);
        assert!(modulus_of_continuity(&u, &[0.3], None).is_err());
    }

    #[test]
    fn empty_fit_window_is_reported() {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let times = time_grid::uniform(0.0, 1.0, 20).unwrap();
        let u = SpaceTimeField::from_fn(g, &times, |t, _| 1.0 + (-t).exp()).unwrap();
        assert!(matches!(long_time_decay(&u, 1.0, 0.5, 1.0), Err(Error::FitWindowEmpty(_))));
    }
}
