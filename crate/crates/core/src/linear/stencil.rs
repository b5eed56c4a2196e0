//! Face-flux finite-volume stencil for `div(A grad u)` on the periodic grid.
//!
//! The x-face flux between cells `i` and `i + 1` is
//! `a00 * (u[i+1] - u[i]) / dx + a01 * T_y u`, where the face coefficient is
//! the arithmetic mean of the two cell matrices and `T_y u` averages the
//! centred y-differences of both cells. The y-face flux is symmetric.

use crate::field::{Grid, MatrixField};

#[derive(Debug, Clone)]
pub struct Stencil {
    grid: Grid,
    /// `[a00, a01]` on x-faces.
    xf: Vec<[f64; 2]>,
    /// `[a10, a11]` on y-faces.
    yf: Vec<[f64; 2]>,
    /// `[x+, x-, y+, y-]` neighbours.
    nbr: Vec<[usize; 4]>,
    cross: bool,
}

pub(crate) fn neighbours(grid: &Grid) -> Vec<[usize; 4]> {
    (0..grid.cells())
        .map(|c| {
            if grid.dim() == 1 {
                let (xp, xm) = (grid.shift(c, 0, 1), grid.shift(c, 0, -1));
                [xp, xm, c, c]
            } else {
                [grid.shift(c, 0, 1), grid.shift(c, 0, -1), grid.shift(c, 1, 1), grid.shift(c, 1, -1)]
            }
        })
        .collect()
}

impl Stencil {
    pub fn new(a: &MatrixField) -> Self {
        let grid = *a.grid();
        let nbr = neighbours(&grid);
        let v = a.values();
        let mut xf = Vec::with_capacity(grid.cells());
        let mut yf = Vec::with_capacity(if grid.dim() == 2 { grid.cells() } else { 0 });
        for c in 0..grid.cells() {
            let p = nbr[c][0];
            xf.push([0.5 * (v[c][0][0] + v[p][0][0]), 0.5 * (v[c][0][1] + v[p][0][1])]);
            if grid.dim() == 2 {
                let q = nbr[c][2];
                yf.push([0.5 * (v[c][1][0] + v[q][1][0]), 0.5 * (v[c][1][1] + v[q][1][1])]);
            }
        }
        let cross = grid.dim() == 2 && !a.is_diagonal();
        Stencil { grid, xf, yf, nbr, cross }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Whether off-diagonal coefficients couple the axes.
    pub fn has_cross_terms(&self) -> bool {
        self.cross
    }

    /// `A grad u` on faces, component major.
    pub fn flux(&self, u: &[f64]) -> Vec<f64> {
        let nc = self.grid.cells();
        let h = 1.0 / self.grid.dx();
        let mut out = vec![0.0; self.grid.dim() * nc];
        for c in 0..nc {
            let [xp, _, yp, _] = self.nbr[c];
            let mut fx = self.xf[c][0] * (u[xp] - u[c]) * h;
            if self.cross {
                let ty = 0.25 * h * (u[self.nbr[c][2]] - u[self.nbr[c][3]] + u[self.nbr[xp][2]] - u[self.nbr[xp][3]]);
                fx += self.xf[c][1] * ty;
            }
            out[c] = fx;
            if self.grid.dim() == 2 {
                let mut fy = self.yf[c][1] * (u[yp] - u[c]) * h;
                if self.cross {
                    let tx = 0.25 * h * (u[self.nbr[c][0]] - u[self.nbr[c][1]] + u[self.nbr[yp][0]] - u[self.nbr[yp][1]]);
                    fy += self.yf[c][0] * tx;
                }
                out[nc + c] = fy;
            }
        }
        out
    }

    /// `div(A grad u)` at the cells.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        divergence(&self.grid, &self.flux(u))
    }

    /// Diagonal of `-div(A grad .)`.
    pub fn neg_diagonal(&self) -> Vec<f64> {
        let h2 = 1.0 / (self.grid.dx() * self.grid.dx());
        (0..self.grid.cells())
            .map(|c| {
                let [_, xm, _, ym] = self.nbr[c];
                let mut d = self.xf[c][0] + self.xf[xm][0];
                if self.grid.dim() == 2 {
                    d += self.yf[c][1] + self.yf[ym][1];
                }
                d * h2
            })
            .collect()
    }

    /// Face coefficients `a_{i+1/2}` in one dimension.
    pub fn face_coefficients_1d(&self) -> Vec<f64> {
        self.xf.iter().map(|f| f[0]).collect()
    }
}

/// Difference of face values across each cell, `sum_d (f_d(+1/2) - f_d(-1/2)) / dx`.
pub fn divergence(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let nc = grid.cells();
    let h = 1.0 / grid.dx();
    let mut out = vec![0.0; nc];
    for (c, o) in out.iter_mut().enumerate() {
        let mut d = f[c] - f[grid.shift(c, 0, -1)];
        if grid.dim() == 2 {
            d += f[nc + c] - f[nc + grid.shift(c, 1, -1)];
        }
        *o = d * h;
    }
    out
}

/// Normal derivatives on faces: `(u[i+1] - u[i]) / dx` on x-faces and the
/// analogue on y-faces.
pub fn face_gradient_frame(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let nc = grid.cells();
    let h = 1.0 / grid.dx();
    let mut out = vec![0.0; grid.dim() * nc];
    for c in 0..nc {
        out[c] = (u[grid.shift(c, 0, 1)] - u[c]) * h;
        if grid.dim() == 2 {
            out[nc + c] = (u[grid.shift(c, 1, 1)] - u[c]) * h;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{mat_scale, MatrixField};

    #[test]
    fn laplacian_of_cosine() {
        let g = Grid::new(1, 64, 1.0).unwrap();
        let k = 2.0 * std::f64::consts::PI;
        let u: Vec<f64> = (0..64).map(|i| (k * g.coords(i)[0]).cos()).collect();
        let lu = Stencil::new(&MatrixField::identity(g)).apply(&u);
        let symbol = -4.0 * (0.5 * k * g.dx()).sin().powi(2) / (g.dx() * g.dx());
        for (a, b) in lu.iter().zip(&u) {
            assert!((a - symbol * b).abs() < 1e-9);
        }
    }

    #[test]
    fn divergence_sums_to_zero() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let a = MatrixField::constant(g, [[2.0, 0.3], [0.3, 1.0]]);
        let u: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64).collect();
        let s: f64 = Stencil::new(&a).apply(&u).iter().sum();
        assert!(s.abs() < 1e-9);
    }

    #[test]
    fn flux_is_linear_in_coefficient() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let u: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = MatrixField::constant(g, [[2.0, 0.3], [0.3, 1.0]]);
        let b = MatrixField::constant(g, mat_scale(0.5));
        let fa = Stencil::new(&a).flux(&u);
        let fab = Stencil::new(&a.sub(&b)).flux(&u);
        let fb = Stencil::new(&b).flux(&u);
        for i in 0..fa.len() {
            assert!((fa[i] - fab[i] - fb[i]).abs() < 1e-12);
        }
    }
}
