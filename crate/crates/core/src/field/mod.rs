//! Periodic grids, sampled fields and coefficient functions.
//!
//! The whole space is replaced by a periodic box of side `L` in one or two
//! dimensions. Grid nodes sit at `x_i = i * dx`; every index wraps modulo
//! `N` along each axis. Cell `(i, j)` is stored at `j * N + i`.
//!
//! Vector-valued frames (gradients, fluxes, sources) are stored component
//! major. Component 0 lives on the x-faces `(i + 1/2, j)`, component 1 on the
//! y-faces `(i, j + 1/2)`, matching the flux stencil of the linear solver.

mod assumption;
mod coefficient;
pub mod io;

pub use assumption::{
    compose_coefficient, compose_frame, safety_radius, safety_radius_with_cap, verify_assumption,
    verify_ellipticity, verify_lipschitz_and_equilibrium, AssumptionReport, EquilibriumAnchor,
    LipschitzEstimate, SampleCounts,
};
pub use coefficient::CoefficientFn;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 2x2 matrix. In one dimension only `[0][0]` is meaningful.
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mat_scale(c: f64) -> Mat2 {
    [[c, 0.0], [0.0, c]]
}

pub fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

/// Frobenius norm restricted to the active `dim x dim` block.
pub fn mat_frobenius(a: &Mat2, dim: usize) -> f64 {
    let mut s = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            s += a[r][c] * a[r][c];
        }
    }
    s.sqrt()
}

/// Smallest eigenvalue of the symmetric part of the active block.
pub fn mat_min_sym_eig(a: &Mat2, dim: usize) -> f64 {
    if dim == 1 {
        return a[0][0];
    }
    let p = a[0][0];
    let d = a[1][1];
    let b = 0.5 * (a[0][1] + a[1][0]);
    0.5 * (p + d) - (0.25 * (p - d) * (p - d) + b * b).sqrt()
}

/// Periodic box discretization in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 cells per axis, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        Ok(Grid { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Total measure of the torus.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Axis indices `(i, j)` of a flat index; `j = 0` in one dimension.
    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    #[inline]
    pub fn index(&self, i: isize, j: isize) -> usize {
        let n = self.n as isize;
        let i = i.rem_euclid(n) as usize;
        if self.dim == 1 {
            i
        } else {
            j.rem_euclid(n) as usize * self.n + i
        }
    }

    /// Neighbour of `idx` shifted by `offset` cells along `axis`.
    #[inline]
    pub fn shift(&self, idx: usize, axis: usize, offset: isize) -> usize {
        let (i, j) = self.split(idx);
        if axis == 0 {
            self.index(i as isize + offset, j as isize)
        } else {
            self.index(i as isize, j as isize + offset)
        }
    }

    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.split(idx);
        let dx = self.dx();
        if self.dim == 1 {
            [i as f64 * dx, 0.0]
        } else {
            [i as f64 * dx, j as f64 * dx]
        }
    }

    /// Squared distance on the torus.
    pub fn periodic_dist2(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let wrap = |d: f64| {
            let d = d.rem_euclid(self.length);
            d.min(self.length - d)
        };
        let dx = wrap(a[0] - b[0]);
        if self.dim == 1 {
            dx * dx
        } else {
            let dy = wrap(a[1] - b[1]);
            dx * dx + dy * dy
        }
    }

    /// Horizon after which diffusion with ellipticity `lambda` reaches around
    /// the torus: `(L/8)^2 / lambda`.
    pub fn validity_horizon(&self, lambda: f64) -> f64 {
        (self.length / 8.0).powi(2) / lambda
    }

    /// Integer cell offsets `(di, dj)` within periodic distance `radius`.
    /// The offsets are clipped to one period, so a radius beyond `L/2`
    /// yields the whole torus.
    pub fn ball_offsets(&self, radius: f64) -> Vec<(isize, isize)> {
        let dx = self.dx();
        let k = (radius / dx * (1.0 + 1e-12)).floor().min(self.n as f64) as isize;
        let pos = k.min((self.n / 2) as isize);
        let neg = k.min(((self.n - 1) / 2) as isize);
        let r2 = (radius / dx).powi(2) * (1.0 + 1e-12);
        let mut out = Vec::new();
        if self.dim == 1 {
            out.extend((-neg..=pos).map(|di| (di, 0)));
        } else {
            for dj in -neg..=pos {
                for di in -neg..=pos {
                    if ((di * di + dj * dj) as f64) <= r2 {
                        out.push((di, dj));
                    }
                }
            }
        }
        out
    }

    /// Whether a ball of this radius already covers the whole torus.
    pub fn ball_saturates(&self, radius: f64) -> bool {
        let half = self.length / 2.0;
        if self.dim == 1 {
            radius >= half
        } else {
            radius >= half * std::f64::consts::SQRT_2
        }
    }
}

/// Interval `(lo, hi)` with possibly infinite ends. Used both as the open
/// admissible set `O` of a coefficient and as a closed range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn real_line() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains_open(&self, y: f64) -> bool {
        y > self.lo && y < self.hi
    }

    pub fn contains_closed(&self, y: f64) -> bool {
        y >= self.lo && y <= self.hi
    }

    /// Whether the closed interval `inner` lies strictly inside this open one.
    pub fn strictly_contains(&self, inner: &Interval) -> bool {
        self.contains_open(inner.lo) && self.contains_open(inner.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn widen(&self, by: f64) -> Interval {
        Interval::new(self.lo - by, self.hi + by)
    }
}

/// Values of a scalar function on the grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                grid.cells(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field".into()));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.cells()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.cells()).map(|i| f(grid.coords(i))).collect();
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Cyclic shift by `(di, dj)` cells.
    pub fn shifted(&self, di: isize, dj: isize) -> ScalarField {
        let g = self.grid;
        let mut out = vec![0.0; g.cells()];
        for (idx, v) in self.values.iter().enumerate() {
            let (i, j) = g.split(idx);
            out[g.index(i as isize + di, j as isize + dj)] = *v;
        }
        ScalarField {
            grid: g,
            values: out,
        }
    }
}

/// Sampled `u(t, x)` on a strictly increasing time grid.
///
/// `components` is 1 for scalar fields and `dim` for face-centred vector
/// fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: Grid,
    times: Vec<f64>,
    components: usize,
    frames: Vec<Vec<f64>>,
}

impl SpaceTimeField {
    pub fn new(grid: Grid, times: Vec<f64>, components: usize, frames: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyField);
        }
        if times.len() != frames.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} times but {} frames",
                times.len(),
                frames.len()
            )));
        }
        if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "times must be non-negative and strictly increasing".into(),
            ));
        }
        if components == 0 {
            return Err(Error::InvalidParameter("components must be positive".into()));
        }
        let len = components * grid.cells();
        for f in &frames {
            if f.len() != len {
                return Err(Error::ShapeMismatch(format!("frame has {} values, expected {len}", f.len())));
            }
        }
        Ok(SpaceTimeField {
            grid,
            times,
            components,
            frames,
        })
    }

    pub fn scalar(grid: Grid, times: Vec<f64>, frames: Vec<Vec<f64>>) -> Result<Self> {
        SpaceTimeField::new(grid, times, 1, frames)
    }

    /// `u0` held constant on every time of `times`.
    pub fn constant_in_time(u0: &ScalarField, times: &[f64]) -> Result<Self> {
        SpaceTimeField::scalar(*u0.grid(), times.to_vec(), vec![u0.values().to_vec(); times.len()])
    }

    /// Samples `f(t, x)` (scalar) on the grid.
    pub fn from_fn(grid: Grid, times: &[f64], f: impl Fn(f64, [f64; 2]) -> f64) -> Result<Self> {
        let frames = times
            .iter()
            .map(|&t| (0..grid.cells()).map(|i| f(t, grid.coords(i))).collect())
            .collect();
        SpaceTimeField::scalar(grid, times.to_vec(), frames)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        &self.frames[k]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn frame_field(&self, k: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.frames[k][..self.grid.cells()].to_vec(),
        }
    }

    pub fn last_field(&self) -> ScalarField {
        self.frame_field(self.len() - 1)
    }

    /// Euclidean magnitude of the vector at `cell` in frame `k`.
    #[inline]
    pub fn magnitude(&self, k: usize, cell: usize) -> f64 {
        let f = &self.frames[k];
        if self.components == 1 {
            f[cell].abs()
        } else {
            let nc = self.grid.cells();
            let mut s = 0.0;
            for c in 0..self.components {
                s += f[c * nc + cell] * f[c * nc + cell];
            }
            s.sqrt()
        }
    }

    pub fn sup_norm(&self) -> f64 {
        let nc = self.grid.cells();
        let mut m: f64 = 0.0;
        for k in 0..self.len() {
            for c in 0..nc {
                m = m.max(self.magnitude(k, c));
            }
        }
        m
    }

    /// Pointwise difference of two fields on the same grid and time samples.
    pub fn sub(&self, other: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.check_compatible(other)?;
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(SpaceTimeField {
            grid: self.grid,
            times: self.times.clone(),
            components: self.components,
            frames,
        })
    }

    pub fn scaled(&self, c: f64) -> SpaceTimeField {
        SpaceTimeField {
            grid: self.grid,
            times: self.times.clone(),
            components: self.components,
            frames: self.frames.iter().map(|f| f.iter().map(|v| c * v).collect()).collect(),
        }
    }

    /// Sup-norm distance over all shared samples.
    pub fn sup_distance(&self, other: &SpaceTimeField) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .frames
            .iter()
            .zip(&other.frames)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }

    fn check_compatible(&self, other: &SpaceTimeField) -> Result<()> {
        if self.grid != other.grid || self.components != other.components || self.times.len() != other.times.len() {
            return Err(Error::ShapeMismatch("fields differ in grid, components or time count".into()));
        }
        if self
            .times
            .iter()
            .zip(&other.times)
            .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(Error::ShapeMismatch("fields have different time samples".into()));
        }
        Ok(())
    }

    /// Keeps the frames with `t <= t_max` (plus a tolerance of one ulp-scale).
    pub fn truncate_to(&self, t_max: f64) -> SpaceTimeField {
        let keep = self
            .times
            .iter()
            .take_while(|&&t| t <= t_max * (1.0 + 1e-12) + 1e-300)
            .count()
            .max(1);
        SpaceTimeField {
            grid: self.grid,
            times: self.times[..keep].to_vec(),
            components: self.components,
            frames: self.frames[..keep].to_vec(),
        }
    }

    /// Linear interpolation in time of the scalar field at `t`.
    pub fn sample_at(&self, t: f64) -> ScalarField {
        let nc = self.grid.cells();
        let k = self.times.partition_point(|&s| s < t);
        let values = if k == 0 {
            self.frames[0][..nc].to_vec()
        } else if k >= self.len() {
            self.frames[self.len() - 1][..nc].to_vec()
        } else {
            let (t0, t1) = (self.times[k - 1], self.times[k]);
            let w = (t - t0) / (t1 - t0);
            self.frames[k - 1][..nc]
                .iter()
                .zip(&self.frames[k][..nc])
                .map(|(a, b)| (1.0 - w) * a + w * b)
                .collect()
        };
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    /// Appends `other`, whose first time must coincide with this field's
    /// last time; the duplicated junction frame is dropped.
    pub fn glue(&mut self, other: &SpaceTimeField) -> Result<()> {
        if other.grid != self.grid || other.components != self.components {
            return Err(Error::ShapeMismatch("cannot glue fields on different grids".into()));
        }
        let last = self.final_time();
        let first = other.times[0];
        if (first - last).abs() > 1e-12 * last.abs().max(1.0) {
            return Err(Error::ShapeMismatch(format!("junction mismatch: {last} vs {first}")));
        }
        self.times.extend_from_slice(&other.times[1..]);
        self.frames.extend_from_slice(&other.frames[1..]);
        Ok(())
    }

    /// Shifts all times by `offset`.
    pub fn time_shifted(mut self, offset: f64) -> SpaceTimeField {
        for t in &mut self.times {
            *t += offset;
        }
        self
    }
}

/// Per-cell matrices `A(x)` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    grid: Grid,
    values: Vec<Mat2>,
}

impl MatrixField {
    pub fn new(grid: Grid, values: Vec<Mat2>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} matrices, got {}",
                grid.cells(),
                values.len()
            )));
        }
        if values.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix field".into()));
        }
        Ok(MatrixField { grid, values })
    }

    pub fn constant(grid: Grid, a: Mat2) -> Self {
        MatrixField {
            grid,
            values: vec![a; grid.cells()],
        }
    }

    pub fn identity(grid: Grid) -> Self {
        MatrixField::constant(grid, IDENTITY)
    }

    /// Isotropic field `c(x) Id`.
    pub fn isotropic(grid: Grid, c: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        MatrixField::new(grid, (0..grid.cells()).map(|i| mat_scale(c(grid.coords(i)))).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }

    pub fn min_ellipticity(&self) -> f64 {
        let d = self.grid.dim();
        self.values.iter().map(|a| mat_min_sym_eig(a, d)).fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        let d = self.grid.dim();
        self.values.iter().map(|a| mat_frobenius(a, d)).fold(0.0, f64::max)
    }

    /// Whether all off-diagonal entries vanish.
    pub fn is_diagonal(&self) -> bool {
        self.grid.dim() == 1 || self.values.iter().all(|a| a[0][1] == 0.0 && a[1][0] == 0.0)
    }

    pub fn sub(&self, other: &MatrixField) -> MatrixField {
        MatrixField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| mat_sub(a, b)).collect(),
        }
    }
}

/// Matrix coefficients sampled on a time grid, `A(t_k, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeries {
    pub times: Vec<f64>,
    pub frames: Vec<MatrixField>,
}

impl MatrixSeries {
    pub fn min_ellipticity(&self) -> f64 {
        self.frames.iter().map(|f| f.min_ellipticity()).fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.frames.iter().map(|f| f.sup_norm()).fold(0.0, f64::max)
    }
}

/// Closed hull `[min, max]` of all samples.
pub fn essential_range(values: &[f64]) -> Result<Interval> {
    if values.is_empty() {
        return Err(Error::EmptyField);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if !v.is_finite() {
            return Err(Error::NonFinite("essential range input".into()));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(Interval::new(lo, hi))
}

impl ScalarField {
    pub fn range(&self) -> Result<Interval> {
        essential_range(&self.values)
    }
}

impl SpaceTimeField {
    /// Hull of all scalar samples over every frame.
    pub fn range(&self) -> Result<Interval> {
        let mut r: Option<Interval> = None;
        for f in &self.frames {
            let fr = essential_range(f)?;
            r = Some(match r {
                Some(acc) => acc.hull(&fr),
                None => fr,
            });
        }
        r.ok_or(Error::EmptyField)
    }
}

/// Time grids used throughout the solvers.
pub mod time_grid {
    use crate::error::{Error, Result};

    /// `steps + 1` equally spaced times from `start` to `start + length`.
    pub fn uniform(start: f64, length: f64, steps: usize) -> Result<Vec<f64>> {
        if steps == 0 || !(length > 0.0) {
            return Err(Error::InvalidParameter("uniform grid needs steps > 0 and length > 0".into()));
        }
        let dt = length / steps as f64;
        let mut t: Vec<f64> = (0..=steps).map(|k| start + k as f64 * dt).collect();
        t[steps] = start + length;
        Ok(t)
    }

    /// `start` followed by `start + length * sigma^(steps - k)`, `k = 1..=steps`.
    /// Early steps are short so that singular-in-time sources are resolved.
    pub fn geometric(start: f64, length: f64, sigma: f64, steps: usize) -> Result<Vec<f64>> {
        if steps == 0 || !(length > 0.0) || !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::InvalidParameter(
                "geometric grid needs steps > 0, length > 0 and sigma in (0, 1)".into(),
            ));
        }
        let mut t = Vec::with_capacity(steps + 1);
        t.push(start);
        for k in 1..=steps {
            t.push(start + length * sigma.powi((steps - k) as i32));
        }
        t[steps] = start + length;
        Ok(t)
    }

    /// Geometric sample points `t_max * 10^(-j / per_decade)` covering
    /// `decades` decades, returned in increasing order.
    pub fn log_samples(t_max: f64, decades: f64, per_decade: usize) -> Vec<f64> {
        let count = (decades * per_decade as f64).round() as usize;
        let mut out: Vec<f64> = (0..=count)
            .map(|j| t_max * 10f64.powf(-(j as f64) / per_decade as f64))
            .collect();
        out.reverse();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(n: usize) -> Grid {
        Grid::new(1, n, 1.0).unwrap()
    }

    #[test]
    fn constant_field_range() {
        let f = ScalarField::constant(grid1(16), 3.0);
        assert_eq!(f.range().unwrap(), Interval::new(3.0, 3.0));
    }

    #[test]
    fn sine_range_on_fine_grid() {
        let g = grid1(256);
        let f = ScalarField::from_fn(g, |x| (2.0 * std::f64::consts::PI * x[0]).sin()).unwrap();
        let r = f.range().unwrap();
        assert!((r.lo + 1.0).abs() < 1e-3 && (r.hi - 1.0).abs() < 1e-3);
    }

    #[test]
    fn step_range_is_hull() {
        let g = grid1(8);
        let f = ScalarField::from_fn(g, |x| if x[0] < 0.5 { 0.0 } else { 1.0 }).unwrap();
        assert_eq!(f.range().unwrap(), Interval::new(0.0, 1.0));
    }

    #[test]
    fn empty_range_is_error() {
        assert!(matches!(essential_range(&[]), Err(Error::EmptyField)));
    }

    #[test]
    fn spacing_times_cells_is_length() {
        let g = Grid::new(2, 96, 3.7).unwrap();
        assert!((g.dx() * 96.0 - 3.7).abs() < 1e-14);
        assert_eq!(g.cells(), 96 * 96);
    }

    #[test]
    fn indexing_wraps() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        assert_eq!(g.index(-1, 0), 7);
        assert_eq!(g.index(0, -1), 56);
        assert_eq!(g.shift(7, 0, 1), 0);
        assert_eq!(g.shift(63, 1, 1), 7);
    }

    #[test]
    fn ball_saturates_to_torus() {
        let g = grid1(16);
        assert_eq!(g.ball_offsets(10.0).len(), 16);
        let g2 = Grid::new(2, 8, 1.0).unwrap();
        assert_eq!(g2.ball_offsets(10.0).len(), 64);
        assert_eq!(g2.ball_offsets(0.01).len(), 1);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, 16, 1.0).is_err());
        assert!(Grid::new(1, 2, 1.0).is_err());
        assert!(Grid::new(1, 16, -1.0).is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = grid1(4);
        assert!(ScalarField::new(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn time_grids_end_exactly() {
        let u = time_grid::uniform(0.3, 0.7, 7).unwrap();
        assert_eq!(*u.last().unwrap(), 0.3 + 0.7);
        let g = time_grid::geometric(0.0, 2.0, 0.9, 30).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 2.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn glue_drops_junction() {
        let g = grid1(4);
        let a = SpaceTimeField::from_fn(g, &[0.0, 1.0], |t, _| t).unwrap();
        let b = SpaceTimeField::from_fn(g, &[1.0, 2.0, 3.0], |t, _| t).unwrap();
        let mut c = a.clone();
        c.glue(&b).unwrap();
        assert_eq!(c.times(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn min_eigenvalue_of_rotated_diag() {
        let th: f64 = 0.4;
        let (c, s) = (th.cos(), th.sin());
        // R diag(1,2) R^T
        let a = [[c * c + 2.0 * s * s, -c * s + 2.0 * s * c], [-c * s + 2.0 * s * c, s * s + 2.0 * c * c]];
        assert!((mat_min_sym_eig(&a, 2) - 1.0).abs() < 1e-12);
    }
}
