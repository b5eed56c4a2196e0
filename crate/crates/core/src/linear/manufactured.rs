//! Manufactured solution for convergence studies in one dimension:
//! `u*(t, x) = 2 + exp(-mu t) sin(k x)` with `A = (2 + cos(k x))`.
//!
//! The source `F` satisfies `dF/dx = du*/dt - d/dx(A du*/dx)`, so `F` is the
//! antiderivative of `du*/dt` minus the exact flux. Both are closed form.

use std::f64::consts::PI;

use super::{solve_linear, LinearProblem, LinearSolution, MatrixCoefficient};
use crate::error::Result;
use crate::field::{Grid, MatrixField, ScalarField, SpaceTimeField};

#[derive(Debug, Clone, Copy)]
pub struct Manufactured {
    grid: Grid,
    k: f64,
    mu: f64,
}

impl Manufactured {
    /// Decay rate `mu = 2 k^2`, matching the mean diffusivity so that time
    /// and space errors are of comparable size.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        let grid = Grid::new(1, n, length)?;
        let k = 2.0 * PI / length;
        Ok(Manufactured { grid, k, mu: 2.0 * k * k })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `1 / mu`, one e-folding of the transient.
    pub fn natural_horizon(&self) -> f64 {
        1.0 / self.mu
    }

    pub fn exact(&self, t: f64, x: f64) -> f64 {
        2.0 + (-self.mu * t).exp() * (self.k * x).sin()
    }

    pub fn coefficient(&self) -> MatrixField {
        let k = self.k;
        MatrixField::isotropic(self.grid, |x| 2.0 + (k * x[0]).cos()).expect("finite coefficient")
    }

    pub fn source_at(&self, t: f64, x: f64) -> f64 {
        let (k, mu) = (self.k, self.mu);
        let e = (-mu * t).exp();
        let c = (k * x).cos();
        (mu / k) * e * c - (2.0 + c) * k * e * c
    }

    /// `F` sampled on the x-faces.
    pub fn source(&self, times: &[f64]) -> Result<SpaceTimeField> {
        let dx = self.grid.dx();
        let frames = times
            .iter()
            .map(|&t| (0..self.grid.n()).map(|i| self.source_at(t, (i as f64 + 0.5) * dx)).collect())
            .collect();
        SpaceTimeField::new(self.grid, times.to_vec(), 1, frames)
    }

    pub fn problem(&self, times: &[f64], theta: f64) -> Result<LinearProblem> {
        let u0 = ScalarField::from_fn(self.grid, |x| self.exact(0.0, x[0]))?;
        LinearProblem::new(
            MatrixCoefficient::Frozen(self.coefficient()),
            Some(self.source(times)?),
            u0,
            times.to_vec(),
            theta,
        )
    }

    /// Sup-norm error over every frame.
    pub fn error(&self, sol: &LinearSolution) -> f64 {
        let mut e: f64 = 0.0;
        for (k, &t) in sol.u.times().iter().enumerate() {
            for (i, v) in sol.u.frame(k).iter().enumerate() {
                e = e.max((v - self.exact(t, i as f64 * self.grid.dx())).abs());
            }
        }
        e
    }

    /// Solves on `steps` uniform steps over `horizon` and returns the error.
    pub fn run(&self, horizon: f64, steps: usize, theta: f64) -> Result<f64> {
        let times = crate::field::time_grid::uniform(0.0, horizon, steps)?;
        Ok(self.error(&solve_linear(&self.problem(&times, theta)?)?))
    }
}

/// `log2(e_i / e_{i+1})` for successive halvings.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_balances_exact_solution() {
        let m = Manufactured::new(64, 1.0).unwrap();
        let t = 0.3 * m.natural_horizon();
        let h = 1e-4;
        let total_flux = |x: f64| {
            let du_dx = (m.exact(t, x + h) - m.exact(t, x - h)) / (2.0 * h);
            m.source_at(t, x) + (2.0 + (m.k * x).cos()) * du_dx
        };
        for &x in &[0.0, 0.13, 0.5, 0.77] {
            let lhs = (total_flux(x + h) - total_flux(x - h)) / (2.0 * h);
            let du_dt = (m.exact(t + h / m.mu, x) - m.exact(t - h / m.mu, x)) / (2.0 * h / m.mu);
            assert!((lhs - du_dt).abs() < 1e-4 * m.mu, "{lhs} vs {du_dt}");
        }
    }

    #[test]
    fn orders_from_halving() {
        let o = observed_orders(&[1.0, 0.25, 0.0625]);
        assert!(o.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }
}
