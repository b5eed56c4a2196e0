//! Quasilinear solves by freezing the coefficient at the initial datum and
//! iterating the map
//!
//! `Theta(v) = u` where `du/dt - div(A0 grad u) = div((a(t, x, v) - A0) grad v)`,
//! `u(0) = u0`, `A0(x) = a(0, x, u0(x))`.
//!
//! A discrete fixed point of `Theta` is exactly a solution of the theta scheme
//! with coefficient `a(t, x, u)`, because the source is assembled with the
//! same face stencil as the solver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    compose_coefficient, compose_frame, mat_frobenius, mat_sub, safety_radius, time_grid, verify_ellipticity,
    verify_lipschitz_and_equilibrium, CoefficientFn, Interval, SampleCounts, ScalarField, SpaceTimeField,
};
use crate::linear::{
    evaluate_solution, face_gradient, flux_source, solve_linear, theta_step, weak_residual, LinearProblem,
    LinearSolution, MatrixCoefficient, Stencil, TestFunction, WeakResidualReport,
};
use crate::norms::{z_norm, ZNormSpec};

/// Parameters of the fixed-point construction on one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedPointConfig {
    /// Exponent of the gradient norm, `q > n + 2`.
    pub q: f64,
    /// Ball radius; `None` takes half the safety radius of `u0`.
    pub r: Option<f64>,
    /// Longest local window.
    #[serde(rename = "T")]
    pub horizon: f64,
    pub max_iters: usize,
    /// Relative stopping tolerance on `|v_{k+1} - v_k|_X / |u0|_inf`.
    pub fp_tol: f64,
    /// Number of trailing factors averaged (geometrically) into the reported
    /// contraction estimate.
    pub contraction_window: usize,
    /// Taken from the scheme section when read from an experiment file.
    #[serde(skip)]
    pub theta: f64,
    /// Uniform time steps per window.
    pub steps: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            q: 5.0,
            r: None,
            horizon: 0.005,
            max_iters: 50,
            fp_tol: 1e-9,
            contraction_window: 3,
            theta: 1.0,
            steps: 32,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let n2 = dim as f64 + 2.0;
        if !(self.q > n2) {
            return Err(Error::InvalidParameter(format!("q must exceed n + 2 = {n2}, got {}", self.q)));
        }
        if let Some(r) = self.r {
            if !(r > 0.0) {
                return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("T must be positive, got {}", self.horizon)));
        }
        if self.max_iters == 0 || self.steps == 0 || self.contraction_window == 0 {
            return Err(Error::InvalidParameter("max_iters, steps and contraction_window must be positive".into()));
        }
        if !(self.fp_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("fp_tol must be positive, got {}", self.fp_tol)));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!("theta must lie in [1/2, 1], got {}", self.theta)));
        }
        Ok(())
    }
}

/// Position of an iterate relative to the ball of radius `r` around `u0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallMembership {
    pub sup_dist: f64,
    pub grad_z: f64,
    pub in_ball: bool,
}

impl BallMembership {
    pub fn measure(v: &SpaceTimeField, u0: &ScalarField, q: f64, r: f64) -> Result<Self> {
        let sup_dist = sup_distance_to(v, u0);
        let grad_z = gradient_z(v, q)?;
        Ok(BallMembership {
            sup_dist,
            grad_z,
            in_ball: sup_dist <= r && grad_z <= r,
        })
    }
}

fn sup_distance_to(v: &SpaceTimeField, u0: &ScalarField) -> f64 {
    v.frames()
        .iter()
        .flat_map(|f| f.iter().zip(u0.values()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// Z-norm of the face gradient over the field's own time span. Fields too
/// short to be sampled count as zero.
fn gradient_z(v: &SpaceTimeField, q: f64) -> Result<f64> {
    let local = v.clone().time_shifted(-v.times()[0]);
    let horizon = local.final_time();
    let grad = face_gradient(&local)?;
    match z_norm(&grad, &ZNormSpec::new(q, horizon)) {
        Ok(rep) => Ok(rep.value),
        Err(Error::InsufficientResolution(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// `|w|_inf + |grad w|_Z` for a difference of iterates.
pub fn x_norm(w: &SpaceTimeField, q: f64) -> Result<f64> {
    Ok(w.sup_norm() + gradient_z(w, q)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub start: f64,
    pub end: f64,
    /// Updates before the iteration confirmed a fixed point.
    pub iterations: usize,
    pub contraction_factors: Vec<f64>,
    /// Geometric mean of the trailing factors.
    pub contraction_estimate: f64,
    /// Ball membership of every accepted iterate.
    pub memberships: Vec<BallMembership>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedWindow {
    pub start: f64,
    pub length: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub r: f64,
    pub r_sharp: f64,
    pub windows: Vec<WindowReport>,
    pub rejected: Vec<RejectedWindow>,
    /// Largest excursion of the solution outside `[min u0, max u0]`.
    pub range_drift: f64,
    pub validity_horizon: f64,
    /// Filled by [`attach_oracle_gap`].
    pub oracle_gap: Option<f64>,
    /// `C_L(K) r`, Lipschitz constant of `a` in `y` on `K` times the radius.
    pub lipschitz_radius: f64,
    /// `sup |a(t, x, u0(x)) - a(0, x, u0(x))|` over the longest window.
    pub time_oscillation: f64,
}

impl SolveReport {
    pub fn iterations(&self) -> Vec<usize> {
        self.windows.iter().map(|w| w.iterations).collect()
    }

    /// Largest factor over all accepted windows.
    pub fn max_contraction(&self) -> f64 {
        self.windows
            .iter()
            .flat_map(|w| w.contraction_factors.iter().copied())
            .fold(0.0, f64::max)
    }
}

fn report_counts() -> SampleCounts {
    SampleCounts {
        t: 9,
        x_per_axis: None,
        y: 17,
        directions: 8,
    }
}

/// `A0 = a(0, x, u0(x))`, validated for ellipticity by the linear problem.
fn frozen_coefficient(u0: &ScalarField, a: &CoefficientFn) -> Result<crate::field::MatrixField> {
    compose_frame(a, 0.0, u0.grid(), u0.values())
}

/// One application of the fixed-point map on the time grid of `v`.
pub fn theta_map(v: &SpaceTimeField, u0: &ScalarField, a: &CoefficientFn, theta: f64) -> Result<LinearSolution> {
    let a0 = frozen_coefficient(u0, a)?;
    let av = compose_coefficient(a, v)?;
    let b: Vec<_> = av.frames.iter().map(|m| m.sub(&a0)).collect();
    let source = flux_source(&b, v)?;
    let p = LinearProblem::new(MatrixCoefficient::Frozen(a0), Some(source), u0.clone(), v.times().to_vec(), theta)?;
    solve_linear(&p)
}

struct Window {
    u: SpaceTimeField,
    report: WindowReport,
}

/// Picard iteration of [`theta_map`] on `[0, length]` from the constant
/// extension of `u0`.
fn solve_window(u0: &ScalarField, a: &CoefficientFn, cfg: &FixedPointConfig, r: f64, length: f64) -> Result<Window> {
    let times = time_grid::uniform(0.0, length, cfg.steps)?;
    let mut v = SpaceTimeField::constant_in_time(u0, &times)?;
    let scale = u0.sup_norm();
    let mut factors = Vec::new();
    let mut memberships = Vec::new();
    let mut prev_diff: Option<f64> = None;
    for iteration in 0..cfg.max_iters {
        let next = theta_map(&v, u0, a, cfg.theta)?.u;
        let membership = BallMembership::measure(&next, u0, cfg.q, r)?;
        if !membership.in_ball {
            return Err(Error::ContractionFailure {
                iteration,
                reason: format!(
                    "iterate left the ball of radius {r:.3e}: sup distance {:.3e}, gradient norm {:.3e}",
                    membership.sup_dist, membership.grad_z
                ),
            });
        }
        let diff = x_norm(&next.sub(&v)?, cfg.q)?;
        if let Some(p) = prev_diff {
            let f = if p > 0.0 { diff / p } else { 0.0 };
            factors.push(f);
            if f >= 1.0 {
                return Err(Error::ContractionFailure {
                    iteration,
                    reason: format!("contraction factor {f:.3} is not below 1"),
                });
            }
        }
        if diff <= cfg.fp_tol * scale {
            let tail = &factors[factors.len().saturating_sub(cfg.contraction_window)..];
            let estimate = if tail.is_empty() {
                0.0
            } else if tail.iter().any(|&f| f == 0.0) {
                0.0
            } else {
                (tail.iter().map(|f| f.ln()).sum::<f64>() / tail.len() as f64).exp()
            };
            return Ok(Window {
                u: next,
                report: WindowReport {
                    start: 0.0,
                    end: length,
                    iterations: iteration,
                    contraction_factors: factors,
                    contraction_estimate: estimate,
                    memberships,
                },
            });
        }
        memberships.push(membership);
        prev_diff = Some(diff);
        v = next;
    }
    Err(Error::ContractionFailure {
        iteration: cfg.max_iters,
        reason: format!("no convergence within {} iterations", cfg.max_iters),
    })
}

/// Radius actually used: `cfg.r` if given, else half the safety radius.
fn ball_radius(u0: &ScalarField, a: &CoefficientFn, cfg: &FixedPointConfig) -> Result<(f64, f64)> {
    let r_sharp = safety_radius(u0, a.admissible())?;
    let r = cfg.r.unwrap_or(0.5 * r_sharp);
    if !(r < r_sharp) {
        return Err(Error::InvalidParameter(format!("r = {r} must be below the safety radius {r_sharp}")));
    }
    Ok((r, r_sharp))
}

fn base_report(u0: &ScalarField, a: &CoefficientFn, cfg: &FixedPointConfig, r: f64, r_sharp: f64, t_end: f64) -> Result<SolveReport> {
    let grid = u0.grid();
    let k = u0.range()?.widen(r);
    let counts = report_counts();
    let lambda = verify_ellipticity(a, k, t_end, grid, &counts)?;
    let lip = verify_lipschitz_and_equilibrium(a, k, t_end, grid, &counts)?;
    let mut osc: f64 = 0.0;
    for s in 0..=16 {
        let t = cfg.horizon * s as f64 / 16.0;
        for (c, &y) in u0.values().iter().enumerate() {
            let x = grid.coords(c);
            osc = osc.max(mat_frobenius(&mat_sub(&a.eval(t, x, y), &a.eval(0.0, x, y)), grid.dim()));
        }
    }
    Ok(SolveReport {
        r,
        r_sharp,
        windows: Vec::new(),
        rejected: Vec::new(),
        range_drift: 0.0,
        validity_horizon: grid.validity_horizon(lambda),
        oracle_gap: None,
        lipschitz_radius: lip.c_l * r,
        time_oscillation: osc,
    })
}

fn range_drift(u: &SpaceTimeField, u0: &ScalarField) -> Result<f64> {
    let r0 = u0.range()?;
    let r = u.range()?;
    Ok((r0.lo - r.lo).max(r.hi - r0.hi).max(0.0))
}

/// Fixed-point solve on the single window `[0, cfg.horizon]`.
pub fn local_solve_fixed_point(u0: &ScalarField, a: &CoefficientFn, cfg: &FixedPointConfig) -> Result<(SpaceTimeField, SolveReport)> {
    cfg.validate(u0.grid().dim())?;
    let (r, r_sharp) = ball_radius(u0, a, cfg)?;
    let mut report = base_report(u0, a, cfg, r, r_sharp, cfg.horizon)?;
    let w = solve_window(u0, a, cfg, r, cfg.horizon)?;
    report.range_drift = range_drift(&w.u, u0)?;
    report.windows.push(w.report);
    Ok((w.u, report))
}

/// Consecutive fixed-point windows restarted from the previous terminal
/// frame with the time-shifted coefficient. Windows halve after a failed
/// contraction and double (up to `cfg.horizon`) after three successes.
pub fn global_solve(u0: &ScalarField, a: &CoefficientFn, t_end: f64, cfg: &FixedPointConfig) -> Result<(SpaceTimeField, SolveReport)> {
    cfg.validate(u0.grid().dim())?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("T_end must be positive, got {t_end}")));
    }
    let (r, r_sharp) = ball_radius(u0, a, cfg)?;
    let mut report = base_report(u0, a, cfg, r, r_sharp, t_end)?;
    let minimum = 1e-6 * t_end;
    let mut tau = 0.0;
    let mut length = cfg.horizon;
    let mut successes = 0;
    let mut current = u0.clone();
    let mut total: Option<SpaceTimeField> = None;
    while tau < t_end {
        let remaining = t_end - tau;
        let win = if remaining <= length * (1.0 + 1e-9) { remaining } else { length };
        if win < minimum {
            return Err(Error::WindowUnderflow { at: tau, length: win, minimum });
        }
        match solve_window(&current, &a.shifted(tau), cfg, r, win) {
            Ok(mut w) => {
                let end = if win == remaining { t_end } else { tau + win };
                w.report.start = tau;
                w.report.end = end;
                let mut piece = w.u.time_shifted(tau);
                if let Some(last) = piece.times().len().checked_sub(1) {
                    set_last_time(&mut piece, last, end);
                }
                current = piece.last_field();
                match &mut total {
                    None => total = Some(piece),
                    Some(t) => t.glue(&piece)?,
                }
                report.windows.push(w.report);
                tau = end;
                successes += 1;
                if successes == 3 {
                    length = (2.0 * length).min(cfg.horizon);
                    successes = 0;
                }
            }
            Err(Error::ContractionFailure { reason, .. }) => {
                report.rejected.push(RejectedWindow { start: tau, length: win, reason });
                length = 0.5 * win;
                successes = 0;
            }
            Err(e) => return Err(e),
        }
    }
    let u = total.expect("at least one window");
    report.range_drift = range_drift(&u, u0)?;
    Ok((u, report))
}

fn set_last_time(f: &mut SpaceTimeField, k: usize, t: f64) {
    let mut times = f.times().to_vec();
    times[k] = t;
    *f = SpaceTimeField::new(*f.grid(), times, f.components(), f.frames().to_vec()).expect("same shape");
}

/// Semi-implicit oracle: each step freezes `a(t, x, u)` at the current state,
/// then re-steps `corrections` times with the implicit coefficient evaluated
/// at the latest iterate.
pub fn direct_solve(
    u0: &ScalarField,
    a: &CoefficientFn,
    times: &[f64],
    theta: f64,
    corrections: usize,
) -> Result<SpaceTimeField> {
    if !(0.5..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!("theta must lie in [1/2, 1], got {theta}")));
    }
    if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("time grid needs at least two strictly increasing times".into()));
    }
    let grid = *u0.grid();
    let mut frames = vec![u0.values().to_vec()];
    let elliptic = |m: &crate::field::MatrixField, t: f64| -> Result<()> {
        let e = m.min_ellipticity();
        if !(e > 0.0) {
            return Err(Error::NotElliptic {
                value: e,
                t,
                x: [f64::NAN; 2],
                y: f64::NAN,
                xi: [f64::NAN; 2],
            });
        }
        Ok(())
    };
    let a_first = compose_frame(a, times[0], &grid, u0.values())?;
    elliptic(&a_first, times[0])?;
    let mut old = Stencil::new(&a_first);
    for k in 0..times.len() - 1 {
        let dt = times[k + 1] - times[k];
        let u = frames[k].clone();
        let mut guess = u.clone();
        let mut stencil_new = old.clone();
        for _ in 0..=corrections {
            let a_new = compose_frame(a, times[k + 1], &grid, &guess)?;
            elliptic(&a_new, times[k + 1])?;
            stencil_new = Stencil::new(&a_new);
            guess = theta_step(&old, &stencil_new, &u, dt, theta, (None, None), k + 1)?.0;
        }
        // Explicit half of the next step uses the coefficient at the new state.
        let a_end = compose_frame(a, times[k + 1], &grid, &guess)?;
        old = if corrections > 0 { Stencil::new(&a_end) } else { stencil_new };
        frames.push(guess);
    }
    SpaceTimeField::scalar(grid, times.to_vec(), frames)
}

/// Sup distance between `u` and [`direct_solve`] on the same times.
pub fn oracle_gap(u: &SpaceTimeField, a: &CoefficientFn, theta: f64) -> Result<f64> {
    let oracle = direct_solve(&u.frame_field(0), a, u.times(), theta, 2)?;
    u.sup_distance(&oracle)
}

pub fn attach_oracle_gap(report: &mut SolveReport, u: &SpaceTimeField, a: &CoefficientFn, theta: f64) -> Result<()> {
    report.oracle_gap = Some(oracle_gap(u, a, theta)?);
    Ok(())
}

/// Weak residual of `u` for the quasilinear equation, with the coefficient
/// composed along `u` itself.
pub fn quasilinear_residual(u: &SpaceTimeField, a: &CoefficientFn, theta: f64, tests: &[TestFunction]) -> Result<WeakResidualReport> {
    let shift = u.times()[0];
    let local = u.clone().time_shifted(-shift);
    let a_local = a.shifted(shift);
    let series = compose_coefficient(&a_local, &local)?;
    let p = LinearProblem::new(
        MatrixCoefficient::Series(series),
        None,
        local.frame_field(0),
        local.times().to_vec(),
        theta,
    )?;
    let sol = evaluate_solution(&p, local)?;
    Ok(weak_residual(&sol, &p, tests))
}

/// Convolution with the normalized bump `exp(-1 / (1 - |x / eps|^2))`
/// sampled on the grid. Radii below one cell return the data unchanged.
pub fn mollify(u0: &ScalarField, eps: f64) -> Result<ScalarField> {
    let grid = *u0.grid();
    if !(eps > 0.0 && eps < 0.25 * grid.length()) {
        return Err(Error::InvalidParameter(format!(
            "mollifier radius {eps} must lie in (0, L/4 = {})",
            0.25 * grid.length()
        )));
    }
    let dx = grid.dx();
    let weights: Vec<((isize, isize), f64)> = grid
        .ball_offsets(eps)
        .into_iter()
        .filter_map(|(di, dj)| {
            let rho2 = ((di * di + dj * dj) as f64) * dx * dx / (eps * eps);
            (rho2 < 1.0).then(|| ((di, dj), (-1.0 / (1.0 - rho2)).exp()))
        })
        .collect();
    let total: f64 = weights.iter().map(|w| w.1).sum();
    let values = (0..grid.cells())
        .map(|c| {
            let (i, j) = grid.split(c);
            weights
                .iter()
                .map(|&((di, dj), w)| w * u0.values()[grid.index(i as isize + di, j as isize + dj)])
                .sum::<f64>()
                / total
        })
        .collect();
    ScalarField::new(grid, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifyReport {
    pub eps: Vec<f64>,
    /// `(eps_i, eps_{i+1}, L2 distance on [T/4, T])` for consecutive radii.
    pub pairwise: Vec<(f64, f64, f64)>,
    /// Pairwise distances strictly decrease along the list.
    pub monotone_cauchy: bool,
    pub data_sup: f64,
    pub sup_norms: Vec<f64>,
    /// `|u_eps|_inf <= |u0|_inf + 1e-10` for every radius.
    pub sup_bound_holds: bool,
    pub hulls: Vec<Interval>,
    pub reports: Vec<SolveReport>,
}

/// Space-time L2 distance on `[t_end / 4, t_end]`, sampled at 33 instants.
fn l2_late(u: &SpaceTimeField, v: &SpaceTimeField, t_end: f64) -> f64 {
    let grid = u.grid();
    let samples = 33;
    let h = 0.75 * t_end / (samples - 1) as f64;
    let mut acc = 0.0;
    for s in 0..samples {
        let t = 0.25 * t_end + s as f64 * h;
        let w = if s == 0 || s == samples - 1 { 0.5 } else { 1.0 };
        let a = u.sample_at(t);
        let b = v.sample_at(t);
        let d2: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum();
        acc += w * h * d2 * grid.cell_volume();
    }
    acc.sqrt()
}

/// Solves from mollified data for every radius in `eps` (decreasing) and
/// compares the family on a window bounded away from `t = 0`.
pub fn mollify_solve(
    u0: &ScalarField,
    a: &CoefficientFn,
    eps: &[f64],
    t_end: f64,
    cfg: &FixedPointConfig,
) -> Result<(Vec<(f64, SpaceTimeField)>, MollifyReport)> {
    let o = a.admissible();
    let hull = u0.range()?;
    if !o.strictly_contains(&hull) {
        return Err(Error::RangeNotInside {
            lo: hull.lo,
            hi: hull.hi,
            o_lo: o.lo,
            o_hi: o.hi,
        });
    }
    if eps.is_empty() || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("mollifier radii must be a nonempty decreasing list".into()));
    }
    let runs: Vec<(SpaceTimeField, SolveReport)> = eps
        .par_iter()
        .map(|&e| global_solve(&mollify(u0, e)?, a, t_end, cfg))
        .collect::<Result<_>>()?;
    let data_sup = u0.sup_norm();
    let pairwise: Vec<(f64, f64, f64)> = (1..eps.len())
        .map(|i| (eps[i - 1], eps[i], l2_late(&runs[i - 1].0, &runs[i].0, t_end)))
        .collect();
    let monotone_cauchy = pairwise.windows(2).all(|w| w[1].2 < w[0].2);
    let sup_norms: Vec<f64> = runs.iter().map(|r| r.0.sup_norm()).collect();
    let sup_bound_holds = sup_norms.iter().all(|&s| s <= data_sup + 1e-10);
    let hulls = runs.iter().map(|r| r.0.range()).collect::<Result<Vec<_>>>()?;
    let (fields, reports): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    Ok((
        eps.iter().copied().zip(fields).collect(),
        MollifyReport {
            eps: eps.to_vec(),
            pairwise,
            monotone_cauchy,
            data_sup,
            sup_norms,
            sup_bound_holds,
            hulls,
            reports,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Grid, MatrixField};
    use crate::linear::free_evolution;
    use std::f64::consts::PI;

    fn cos_datum(n: usize) -> ScalarField {
        let g = Grid::new(1, n, 1.0).unwrap();
        ScalarField::from_fn(g, |x| 1.0 + 0.1 * (2.0 * PI * x[0]).cos()).unwrap()
    }

    #[test]
    fn identity_map_ignores_iterate() {
        let u0 = cos_datum(32);
        let times = time_grid::uniform(0.0, 0.01, 8).unwrap();
        let a = CoefficientFn::identity(1);
        let v1 = SpaceTimeField::constant_in_time(&u0, &times).unwrap();
        let v2 = SpaceTimeField::from_fn(*u0.grid(), &times, |t, x| t + x[0].sin()).unwrap();
        let h1 = theta_map(&v1, &u0, &a, 1.0).unwrap().u;
        let h2 = theta_map(&v2, &u0, &a, 1.0).unwrap().u;
        assert_eq!(h1, h2);
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let u0 = cos_datum(32);
        let cfg = FixedPointConfig { horizon: 0.01, ..Default::default() };
        let (_, rep) = local_solve_fixed_point(&u0, &CoefficientFn::identity(1), &cfg).unwrap();
        assert_eq!(rep.iterations(), vec![1]);
    }

    #[test]
    fn constant_first_iterate_sees_time_variation_only() {
        let u0 = cos_datum(32);
        let g = *u0.grid();
        let times = time_grid::uniform(0.0, 0.02, 10).unwrap();
        let a = CoefficientFn::time_ramp(1, 1.0);
        let v = SpaceTimeField::constant_in_time(&u0, &times).unwrap();
        let got = theta_map(&v, &u0, &a, 1.0).unwrap().u;
        let b: Vec<MatrixField> = times.iter().map(|&t| MatrixField::constant(g, crate::field::mat_scale(t))).collect();
        let f = flux_source(&b, &v).unwrap();
        let p = LinearProblem::new(MatrixCoefficient::Frozen(MatrixField::identity(g)), Some(f), u0.clone(), times.clone(), 1.0).unwrap();
        let want = solve_linear(&p).unwrap().u;
        assert!(got.sup_distance(&want).unwrap() < 1e-14);
        let free = free_evolution(&MatrixField::identity(g), &u0, &times, 1.0).unwrap().u;
        assert!(got.sup_distance(&free).unwrap() > 1e-6);
    }

    #[test]
    fn direct_solve_matches_linear_for_state_free_coefficients() {
        let u0 = cos_datum(64);
        let g = *u0.grid();
        let times = time_grid::uniform(0.0, 0.05, 20).unwrap();
        let a = CoefficientFn::time_ramp(1, 1.0);
        let got = direct_solve(&u0, &a, &times, 0.5, 2).unwrap();
        let series = crate::field::MatrixSeries {
            times: times.clone(),
            frames: times.iter().map(|&t| MatrixField::constant(g, crate::field::mat_scale(1.0 + t.min(1.0)))).collect(),
        };
        let p = LinearProblem::new(MatrixCoefficient::Series(series), None, u0.clone(), times.clone(), 0.5).unwrap();
        let want = solve_linear(&p).unwrap().u;
        assert!(got.sup_distance(&want).unwrap() <= 1e-10);
    }

    #[test]
    fn constants_stay_constant() {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let u0 = ScalarField::constant(g, 1.5);
        let a = CoefficientFn::porous(1, 1.0);
        let cfg = FixedPointConfig { horizon: 0.01, ..Default::default() };
        let (u, rep) = global_solve(&u0, &a, 0.03, &cfg).unwrap();
        assert!(u.frames().iter().flatten().all(|&v| (v - 1.5).abs() < 1e-13));
        assert_eq!(rep.windows.len(), 3);
        let d = direct_solve(&u0, &a, &time_grid::uniform(0.0, 0.1, 10).unwrap(), 1.0, 2).unwrap();
        assert!(d.frames().iter().flatten().all(|&v| (v - 1.5).abs() < 1e-13));
    }

    #[test]
    fn config_rejects_small_q() {
        let cfg = FixedPointConfig { q: 3.0, ..Default::default() };
        assert!(cfg.validate(1).is_err());
        assert!(cfg.validate(2).is_err());
        assert!(FixedPointConfig { q: 3.5, ..cfg }.validate(1).is_ok());
    }

    #[test]
    fn mollifier_preserves_constants_and_mean() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let c = ScalarField::constant(g, 3.0);
        let m = mollify(&c, 0.2).unwrap();
        assert!(m.values().iter().all(|v| (v - 3.0).abs() < 1e-14));
        let s = ScalarField::from_fn(g, |x| if x[0] < 0.5 { 1.0 } else { 2.0 }).unwrap();
        let ms = mollify(&s, 0.2).unwrap();
        assert!((ms.mean() - s.mean()).abs() < 1e-13);
        let r = ms.range().unwrap();
        assert!(r.lo >= 1.0 - 1e-14 && r.hi <= 2.0 + 1e-14);
        assert!(mollify(&s, 0.3).is_err());
    }
}
