//! Theta-scheme solver for `du/dt - div(A grad u) = div(F)` with a
//! time-dependent matrix coefficient and a face-centred source.

pub mod krylov;
pub mod manufactured;
mod stencil;
pub mod weak;

pub use stencil::{divergence, face_gradient_frame, Stencil};
pub use weak::{integral_identity_check, weak_residual, TestFunction, TimeProfile, WeakResidualReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{mat_min_sym_eig, Grid, MatrixField, MatrixSeries, ScalarField, SpaceTimeField, IDENTITY};
use crate::heat::{heat_extend, SpectralHeat};
use crate::norms::{z_norm, ZNormSpec};

pub const LINEAR_TOL: f64 = 1e-12;
/// Accepted relative residual if the iteration stalls just short of [`LINEAR_TOL`].
pub const RESIDUAL_CEILING: f64 = 1e-10;

/// Coefficient `A` either frozen in time or sampled on the problem's time grid.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixCoefficient {
    Frozen(MatrixField),
    Series(MatrixSeries),
}

impl MatrixCoefficient {
    pub fn at(&self, k: usize) -> &MatrixField {
        match self {
            MatrixCoefficient::Frozen(a) => a,
            MatrixCoefficient::Series(s) => &s.frames[k],
        }
    }

    pub fn is_frozen(&self) -> bool {
        matches!(self, MatrixCoefficient::Frozen(_))
    }

    fn frames(&self) -> Vec<&MatrixField> {
        match self {
            MatrixCoefficient::Frozen(a) => vec![a],
            MatrixCoefficient::Series(s) => s.frames.iter().collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearProblem {
    grid: Grid,
    times: Vec<f64>,
    coefficient: MatrixCoefficient,
    source: Option<SpaceTimeField>,
    u0: ScalarField,
    theta: f64,
    lambda_min: f64,
}

impl LinearProblem {
    pub fn new(
        coefficient: MatrixCoefficient,
        source: Option<SpaceTimeField>,
        u0: ScalarField,
        times: Vec<f64>,
        theta: f64,
    ) -> Result<Self> {
        let grid = *u0.grid();
        if !(0.5..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta must lie in [1/2, 1], got {theta}")));
        }
        if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) || times[0] < 0.0 {
            return Err(Error::InvalidParameter("time grid needs at least two strictly increasing times".into()));
        }
        if let MatrixCoefficient::Series(s) = &coefficient {
            if s.frames.len() != times.len() {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient has {} frames for {} times",
                    s.frames.len(),
                    times.len()
                )));
            }
        }
        let mut lambda_min = f64::INFINITY;
        for (k, a) in coefficient.frames().into_iter().enumerate() {
            if a.grid() != &grid {
                return Err(Error::ShapeMismatch("coefficient grid differs from u0 grid".into()));
            }
            for (c, m) in a.values().iter().enumerate() {
                let e = mat_min_sym_eig(m, grid.dim());
                if !(e > 0.0) {
                    return Err(Error::NotElliptic {
                        value: e,
                        t: if coefficient.is_frozen() { times[0] } else { times[k] },
                        x: grid.coords(c),
                        y: f64::NAN,
                        xi: [f64::NAN; 2],
                    });
                }
                lambda_min = lambda_min.min(e);
            }
        }
        if let Some(f) = &source {
            if f.grid() != &grid || f.components() != grid.dim() || f.times() != &times[..] {
                return Err(Error::ShapeMismatch("source must be a face vector field on the problem's times".into()));
            }
        }
        Ok(LinearProblem {
            grid,
            times,
            coefficient,
            source,
            u0,
            theta,
            lambda_min,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn coefficient(&self) -> &MatrixCoefficient {
        &self.coefficient
    }

    pub fn source(&self) -> Option<&SpaceTimeField> {
        self.source.as_ref()
    }

    pub fn u0(&self) -> &ScalarField {
        &self.u0
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Diagonal coefficient and backward Euler: the discrete maximum
    /// principle holds.
    pub fn is_monotone(&self) -> bool {
        self.theta == 1.0 && self.coefficient.frames().iter().all(|a| a.is_diagonal())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepResidual {
    pub step: usize,
    pub relative: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub u: SpaceTimeField,
    /// Face normal derivatives of `u`.
    pub grad_u: SpaceTimeField,
    /// `A grad u + F` on faces.
    pub flux: SpaceTimeField,
    pub residuals: Vec<StepResidual>,
    /// Largest step is no longer than the cell width.
    pub dt_within_dx: bool,
    pub monotone_stencil: bool,
}

impl LinearSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.relative).fold(0.0, f64::max)
    }
}

fn implicit_solve(stencil: &Stencil, c: f64, rhs: &[f64], guess: &[f64], step: usize) -> Result<(Vec<f64>, StepResidual)> {
    let grid = stencil.grid();
    let nc = grid.cells();
    let apply = |v: &[f64]| -> Vec<f64> {
        let lv = stencil.apply(v);
        v.iter().zip(&lv).map(|(a, b)| a - c * b).collect()
    };
    let rel_residual = |x: &[f64]| {
        let ax = apply(x);
        let bn = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rn = rhs.iter().zip(&ax).map(|(b, a)| (b - a) * (b - a)).sum::<f64>().sqrt();
        if bn == 0.0 {
            rn
        } else {
            rn / bn
        }
    };
    if grid.dim() == 1 {
        let af = stencil.face_coefficients_1d();
        let s = c / (grid.dx() * grid.dx());
        let lower: Vec<f64> = (0..nc).map(|i| -s * af[(i + nc - 1) % nc]).collect();
        let upper: Vec<f64> = (0..nc).map(|i| -s * af[i]).collect();
        let diag: Vec<f64> = (0..nc).map(|i| 1.0 + s * (af[i] + af[(i + nc - 1) % nc])).collect();
        let x = krylov::solve_cyclic_tridiagonal(&lower, &diag, &upper, rhs);
        let relative = rel_residual(&x);
        if !(relative <= RESIDUAL_CEILING) {
            return Err(Error::LinearSolve { step, residual: relative, iterations: 0 });
        }
        return Ok((x, StepResidual { step, relative, iterations: 0 }));
    }
    let diag: Vec<f64> = stencil.neg_diagonal().iter().map(|d| 1.0 + c * d).collect();
    let mut x = guess.to_vec();
    let max_iter = 20 * nc.max(100);
    let out = if stencil.has_cross_terms() {
        krylov::bicgstab(apply, &diag, rhs, &mut x, LINEAR_TOL, max_iter)
    } else {
        krylov::pcg(apply, &diag, rhs, &mut x, LINEAR_TOL, max_iter)
    };
    let relative = rel_residual(&x);
    if !(relative <= RESIDUAL_CEILING) {
        return Err(Error::LinearSolve { step, residual: relative, iterations: out.iterations });
    }
    Ok((x, StepResidual { step, relative, iterations: out.iterations }))
}

/// Theta-scheme
/// `(u1 - u0) / dt = theta (L1 u1 + D F1) + (1 - theta) (L0 u0 + D F0)`.
pub fn solve_linear(p: &LinearProblem) -> Result<LinearSolution> {
    let grid = p.grid;
    let theta = p.theta;
    let times = &p.times;
    let mut frames = Vec::with_capacity(times.len());
    let mut residuals = Vec::with_capacity(times.len() - 1);
    frames.push(p.u0.values().to_vec());
    let mut st_old = Stencil::new(p.coefficient.at(0));
    let div_source = |k: usize| -> Option<Vec<f64>> { p.source.as_ref().map(|f| divergence(&grid, f.frame(k))) };
    let mut src_old = div_source(0);
    for k in 0..times.len() - 1 {
        let dt = times[k + 1] - times[k];
        let st_new = if p.coefficient.is_frozen() { st_old.clone() } else { Stencil::new(p.coefficient.at(k + 1)) };
        let src_new = div_source(k + 1);
        let (next, res) = theta_step(&st_old, &st_new, &frames[k], dt, theta, (src_old.as_deref(), src_new.as_deref()), k + 1)?;
        frames.push(next);
        residuals.push(res);
        st_old = st_new;
        src_old = src_new;
    }
    let mut sol = evaluate_solution(p, SpaceTimeField::scalar(grid, times.clone(), frames)?)?;
    sol.residuals = residuals;
    Ok(sol)
}

/// One theta step from `u` with explicit stencil `old`, implicit stencil
/// `new` and optional source divergences at both ends of the step.
pub(crate) fn theta_step(
    old: &Stencil,
    new: &Stencil,
    u: &[f64],
    dt: f64,
    theta: f64,
    src: (Option<&[f64]>, Option<&[f64]>),
    step: usize,
) -> Result<(Vec<f64>, StepResidual)> {
    let mut rhs = u.to_vec();
    if theta < 1.0 {
        let lu = old.apply(u);
        for (r, l) in rhs.iter_mut().zip(&lu) {
            *r += (1.0 - theta) * dt * l;
        }
    }
    if let (Some(s0), Some(s1)) = src {
        for c in 0..rhs.len() {
            rhs[c] += dt * (theta * s1[c] + (1.0 - theta) * s0[c]);
        }
    }
    implicit_solve(new, theta * dt, &rhs, u, step)
}

/// Wraps a sampled field on the problem's time grid as a solution, filling
/// in face gradients and fluxes with the problem's stencil. Useful for
/// residual checks of fields that did not come from [`solve_linear`].
pub fn evaluate_solution(p: &LinearProblem, u: SpaceTimeField) -> Result<LinearSolution> {
    let grid = p.grid;
    let dim = grid.dim();
    let times = &p.times;
    if u.grid() != &grid || u.times() != &times[..] || u.components() != 1 {
        return Err(Error::ShapeMismatch("field must be scalar on the problem's grid and times".into()));
    }
    let mut grads = Vec::with_capacity(u.len());
    let mut fluxes = Vec::with_capacity(u.len());
    let frozen = Stencil::new(p.coefficient.at(0));
    for (k, f) in u.frames().iter().enumerate() {
        grads.push(face_gradient_frame(&grid, f));
        let mut flux = if p.coefficient.is_frozen() { frozen.flux(f) } else { Stencil::new(p.coefficient.at(k)).flux(f) };
        if let Some(src) = &p.source {
            for (fi, si) in flux.iter_mut().zip(src.frame(k)) {
                *fi += si;
            }
        }
        fluxes.push(flux);
    }
    let dt_max = times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(LinearSolution {
        grad_u: SpaceTimeField::new(grid, times.clone(), dim, grads)?,
        flux: SpaceTimeField::new(grid, times.clone(), dim, fluxes)?,
        u,
        residuals: Vec::new(),
        dt_within_dx: dt_max <= grid.dx(),
        monotone_stencil: p.is_monotone(),
    })
}

/// Face normal derivatives of every frame.
pub fn face_gradient(u: &SpaceTimeField) -> Result<SpaceTimeField> {
    let g = *u.grid();
    let frames = u.frames().iter().map(|f| face_gradient_frame(&g, f)).collect();
    SpaceTimeField::new(g, u.times().to_vec(), g.dim(), frames)
}

/// `B grad v` per frame with the solver's face stencil, where `B` is given per
/// frame. This is the divergence-form source whose discrete divergence
/// matches `div(B grad v)` exactly.
pub fn flux_source(b: &[MatrixField], v: &SpaceTimeField) -> Result<SpaceTimeField> {
    let g = *v.grid();
    if b.len() != v.len() {
        return Err(Error::ShapeMismatch(format!("{} coefficient frames for {} times", b.len(), v.len())));
    }
    let frames = b.iter().zip(v.frames()).map(|(m, f)| Stencil::new(m).flux(f)).collect();
    SpaceTimeField::new(g, v.times().to_vec(), g.dim(), frames)
}

/// Tolerance on `|u|_inf <= |u0|_inf` for the solve's stencil.
pub fn max_principle_tolerance(p: &LinearProblem) -> f64 {
    if p.is_monotone() {
        1e-10
    } else if p.coefficient.frames().iter().all(|a| a.is_diagonal()) {
        1e-3
    } else {
        1e-2
    }
}

/// `E_{A0}(u0)`: the caloric extension with frozen `A0` and zero source.
pub fn free_evolution(a0: &MatrixField, u0: &ScalarField, times: &[f64], theta: f64) -> Result<LinearSolution> {
    let p = LinearProblem::new(MatrixCoefficient::Frozen(a0.clone()), None, u0.clone(), times.to_vec(), theta)?;
    let sol = solve_linear(&p)?;
    let bound = u0.sup_norm();
    let excess = sol.u.sup_norm() - bound;
    if excess > max_principle_tolerance(&p) * bound.max(f64::MIN_POSITIVE) {
        return Err(Error::MaxPrincipleViolation { excess });
    }
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InhomReport {
    pub u_sup: f64,
    pub grad_z: f64,
    pub source_z: f64,
    /// `(|u|_inf + |grad u|_Z) / |F|_Z`; infinite for a zero source with a
    /// nonzero response.
    pub rho: f64,
}

/// `R_{A0}(F)`: zero initial datum, frozen `A0`, source `F`.
pub fn inhom_solution(
    a0: &MatrixField,
    source: &SpaceTimeField,
    theta: f64,
    spec: &ZNormSpec,
) -> Result<(LinearSolution, InhomReport)> {
    let u0 = ScalarField::constant(*a0.grid(), 0.0);
    let p = LinearProblem::new(
        MatrixCoefficient::Frozen(a0.clone()),
        Some(source.clone()),
        u0,
        source.times().to_vec(),
        theta,
    )?;
    let sol = solve_linear(&p)?;
    let u_sup = sol.u.sup_norm();
    let grad_z = z_norm(&sol.grad_u, spec)?.value;
    let source_z = z_norm(source, spec)?.value;
    let num = u_sup + grad_z;
    let rho = if source_z > 0.0 {
        num / source_z
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok((sol, InhomReport { u_sup, grad_z, source_z, rho }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    /// `sup |E_{A0} u0 - (E_Id u0 + R_{A0}((A0 - Id) grad E_Id u0))|`.
    pub defect: f64,
    /// `sup |R_{A0}((A0 - Id) grad E_Id u0)|`.
    pub correction: f64,
    /// `sup |E_{A0} u0 - E_Id u0|`.
    pub gap: f64,
}

/// Compares the caloric extension under `A0` with the heat extension plus
/// the inhomogeneous correction driven by `(A0 - Id) grad E_Id u0`.
pub fn representation_check(a0: &MatrixField, u0: &ScalarField, times: &[f64], theta: f64) -> Result<RepresentationReport> {
    let grid = *u0.grid();
    let e_a0 = free_evolution(a0, u0, times, theta)?;
    let e_id = heat_extend(u0, times)?.frames;
    let diff = a0.sub(&MatrixField::constant(grid, IDENTITY));
    let source = flux_source(&vec![diff; times.len()], &e_id)?;
    let zero = ScalarField::constant(grid, 0.0);
    let p = LinearProblem::new(MatrixCoefficient::Frozen(a0.clone()), Some(source), zero, times.to_vec(), theta)?;
    let r = solve_linear(&p)?;
    let mut defect: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for k in 0..times.len() {
        for c in 0..grid.cells() {
            let ea = e_a0.u.frame(k)[c];
            let ei = e_id.frame(k)[c];
            defect = defect.max((ea - ei - r.u.frame(k)[c]).abs());
            gap = gap.max((ea - ei).abs());
        }
    }
    Ok(RepresentationReport { defect, correction: r.u.sup_norm(), gap })
}

/// Spectral face gradient of the heat extension, `grad E_Id(u0)`, as a
/// source field.
pub fn heat_gradient_source(u0: &ScalarField, times: &[f64]) -> Result<SpaceTimeField> {
    let h = SpectralHeat::new(u0);
    let g = *u0.grid();
    let frames = times.iter().map(|&t| h.gradient(t, crate::heat::Staggering::Faces)).collect();
    SpaceTimeField::new(g, times.to_vec(), g.dim(), frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::time_grid;
    use std::f64::consts::PI;

    fn cos1(n: usize) -> ScalarField {
        let g = Grid::new(1, n, 1.0).unwrap();
        ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).cos()).unwrap()
    }

    #[test]
    fn constants_are_steady() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let a = MatrixField::constant(g, [[2.0, 0.5], [0.5, 1.0]]);
        let u0 = ScalarField::constant(g, 1.5);
        let sol = free_evolution(&a, &u0, &time_grid::uniform(0.0, 0.1, 5).unwrap(), 1.0).unwrap();
        for f in sol.u.frames() {
            assert!(f.iter().all(|v| (v - 1.5).abs() < 1e-12));
        }
    }

    #[test]
    fn identity_tracks_heat_extension() {
        let u0 = cos1(128);
        let times = time_grid::uniform(0.0, 0.01, 400).unwrap();
        let sol = free_evolution(&MatrixField::identity(*u0.grid()), &u0, &times, 0.5).unwrap();
        let exact = heat_extend(&u0, &times).unwrap().frames;
        assert!(sol.u.sup_distance(&exact).unwrap() < 1e-3);
    }

    #[test]
    fn doubled_coefficient_doubles_decay() {
        let u0 = cos1(128);
        let g = *u0.grid();
        let times = time_grid::uniform(0.0, 0.01, 400).unwrap();
        let sol = free_evolution(&MatrixField::constant(g, [[2.0, 0.0], [0.0, 2.0]]), &u0, &times, 0.5).unwrap();
        let k2 = 4.0 * PI * PI;
        let last = sol.u.frame(times.len() - 1);
        assert!((last[0] - (-2.0 * k2 * 0.01f64).exp()).abs() < 2e-3);
    }

    #[test]
    fn duhamel_for_heat_gradient_source() {
        let u0 = cos1(128);
        let g = *u0.grid();
        let times = time_grid::uniform(0.0, 0.02, 800).unwrap();
        let src = heat_gradient_source(&u0, &times).unwrap();
        let spec = ZNormSpec::new(f64::INFINITY, 0.02);
        let (sol, rep) = inhom_solution(&MatrixField::identity(g), &src, 0.5, &spec).unwrap();
        let k2 = 4.0 * PI * PI;
        let exact = SpaceTimeField::from_fn(g, &times, |t, x| -k2 * t * (-k2 * t).exp() * (2.0 * PI * x[0]).cos()).unwrap();
        let err = sol.u.sup_distance(&exact).unwrap();
        assert!(err < 5e-3 * exact.sup_norm(), "{err}");
        assert!(rep.rho.is_finite() && rep.rho > 0.0);
    }

    #[test]
    fn zero_source_gives_zero() {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let times = time_grid::uniform(0.0, 0.1, 10).unwrap();
        let src = SpaceTimeField::new(g, times.clone(), 1, vec![vec![0.0; 32]; 11]).unwrap();
        let spec = ZNormSpec::new(4.0, 0.1);
        let (sol, rep) = inhom_solution(&MatrixField::identity(g), &src, 1.0, &spec).unwrap();
        assert_eq!(sol.u.sup_norm(), 0.0);
        assert_eq!(rep.rho, 0.0);
    }

    #[test]
    fn identity_representation_has_no_correction() {
        let u0 = cos1(64);
        let times = time_grid::uniform(0.0, 0.01, 20).unwrap();
        let r = representation_check(&MatrixField::identity(*u0.grid()), &u0, &times, 1.0).unwrap();
        assert_eq!(r.correction, 0.0);
        assert_eq!(r.defect, r.gap);
    }

    #[test]
    fn rejects_bad_theta_and_indefinite_a() {
        let u0 = cos1(16);
        let g = *u0.grid();
        let t = vec![0.0, 0.1];
        assert!(LinearProblem::new(MatrixCoefficient::Frozen(MatrixField::identity(g)), None, u0.clone(), t.clone(), 0.3).is_err());
        let bad = MatrixField::constant(g, [[-1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(
            LinearProblem::new(MatrixCoefficient::Frozen(bad), None, u0, t, 1.0),
            Err(Error::NotElliptic { .. })
        ));
    }

    #[test]
    fn anisotropic_2d_uses_nonsymmetric_path() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let a = MatrixField::constant(g, [[1.5, -0.5], [-0.5, 1.5]]);
        let u0 = ScalarField::from_fn(g, |x| (2.0 * PI * (x[0] + x[1])).cos()).unwrap();
        let sol = free_evolution(&a, &u0, &time_grid::uniform(0.0, 0.01, 10).unwrap(), 1.0).unwrap();
        assert!(sol.max_residual() <= RESIDUAL_CEILING);
        assert!(!sol.monotone_stencil);
    }
}
