//! Sums, maxima and minima over periodic balls centred at every cell.
//!
//! A ball is stored as one contiguous span of `x` offsets per row offset, so
//! sums reduce to prefix-sum differences and extrema to sparse-table
//! queries along rows.

use rayon::prelude::*;

use crate::field::Grid;

#[derive(Debug, Clone)]
pub struct Ball {
    /// `(dj, lo, hi)`: cells `i + lo ..= i + hi` of row `j + dj`.
    spans: Vec<(isize, isize, isize)>,
    count: usize,
}

impl Ball {
    pub fn new(grid: &Grid, radius: f64) -> Ball {
        let mut spans: Vec<(isize, isize, isize)> = Vec::new();
        for (di, dj) in grid.ball_offsets(radius) {
            match spans.iter_mut().find(|s| s.0 == dj) {
                Some(s) => {
                    s.1 = s.1.min(di);
                    s.2 = s.2.max(di);
                }
                None => spans.push((dj, di, di)),
            }
        }
        let count = spans.iter().map(|s| (s.2 - s.1 + 1) as usize).sum();
        Ball { spans, count }
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

fn rows(grid: &Grid) -> usize {
    if grid.dim() == 1 {
        1
    } else {
        grid.n()
    }
}

/// Periodic prefix sums of each row over three periods.
fn row_prefix(grid: &Grid, h: &[f64]) -> Vec<Vec<f64>> {
    let n = grid.n();
    (0..rows(grid))
        .map(|j| {
            let row = &h[j * n..(j + 1) * n];
            let mut p = Vec::with_capacity(3 * n + 1);
            p.push(0.0);
            let mut acc = 0.0;
            for m in 0..3 * n {
                acc += row[m % n];
                p.push(acc);
            }
            p
        })
        .collect()
}

/// Ball sums of `h` around every cell.
pub fn ball_sums(grid: &Grid, ball: &Ball, h: &[f64]) -> Vec<f64> {
    let n = grid.n() as isize;
    let nr = rows(grid) as isize;
    let pre = row_prefix(grid, h);
    let mut out = vec![0.0; grid.cells()];
    out.par_chunks_mut(n as usize).enumerate().for_each(|(j, row)| {
        for (i, o) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for &(dj, lo, hi) in &ball.spans {
                let p = &pre[(j as isize + dj).rem_euclid(nr) as usize];
                let a = (i as isize + lo + n) as usize;
                let b = (i as isize + hi + n + 1) as usize;
                s += p[b] - p[a];
            }
            *o = s;
        }
    });
    out
}

/// Sparse table for range maxima over three periods of a row.
struct RowMax {
    levels: Vec<Vec<f64>>,
}

impl RowMax {
    fn new(row: &[f64]) -> RowMax {
        let n = row.len();
        let base: Vec<f64> = (0..3 * n).map(|m| row[m % n]).collect();
        let mut levels = vec![base];
        let mut w = 1;
        while 2 * w <= 3 * n {
            let prev = levels.last().unwrap();
            let next: Vec<f64> = (0..prev.len() - w).map(|m| prev[m].max(prev[m + w])).collect();
            levels.push(next);
            w *= 2;
        }
        RowMax { levels }
    }

    /// Maximum over `a ..= b`.
    fn query(&self, a: usize, b: usize) -> f64 {
        let len = b - a + 1;
        let lvl = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let t = &self.levels[lvl];
        t[a].max(t[b + 1 - (1 << lvl)])
    }
}

/// Ball maxima of `h` around every cell.
pub fn ball_max(grid: &Grid, ball: &Ball, h: &[f64]) -> Vec<f64> {
    let n = grid.n() as isize;
    let nr = rows(grid) as isize;
    let tables: Vec<RowMax> = (0..nr as usize).map(|j| RowMax::new(&h[j * n as usize..(j + 1) * n as usize])).collect();
    let mut out = vec![0.0; grid.cells()];
    out.par_chunks_mut(n as usize).enumerate().for_each(|(j, row)| {
        for (i, o) in row.iter_mut().enumerate() {
            let mut m = f64::NEG_INFINITY;
            for &(dj, lo, hi) in &ball.spans {
                let t = &tables[(j as isize + dj).rem_euclid(nr) as usize];
                m = m.max(t.query((i as isize + lo + n) as usize, (i as isize + hi + n) as usize));
            }
            *o = m;
        }
    });
    out
}

/// Ball minima of `h` around every cell.
pub fn ball_min(grid: &Grid, ball: &Ball, h: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = h.iter().map(|v| -v).collect();
    ball_max(grid, ball, &neg).into_iter().map(|v| -v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(grid: &Grid, r: f64, h: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let offs = grid.ball_offsets(r);
        let mut s = vec![0.0; grid.cells()];
        let mut m = vec![f64::NEG_INFINITY; grid.cells()];
        for c in 0..grid.cells() {
            let (i, j) = grid.split(c);
            for &(di, dj) in &offs {
                let v = h[grid.index(i as isize + di, j as isize + dj)];
                s[c] += v;
                m[c] = m[c].max(v);
            }
        }
        (s, m)
    }

    #[test]
    fn matches_brute_force() {
        for &(dim, n) in &[(1usize, 16usize), (2, 12), (2, 9)] {
            let g = Grid::new(dim, n, 1.0).unwrap();
            let h: Vec<f64> = (0..g.cells()).map(|c| ((c * 7919) % 31) as f64 - 15.0).collect();
            for &r in &[0.0, 0.1, 0.26, 0.5, 0.71, 2.0] {
                let b = Ball::new(&g, r);
                let (s, m) = brute(&g, r, &h);
                let fs = ball_sums(&g, &b, &h);
                let fm = ball_max(&g, &b, &h);
                for c in 0..g.cells() {
                    assert!((s[c] - fs[c]).abs() < 1e-9, "dim {dim} r {r}");
                    assert_eq!(m[c], fm[c]);
                }
                assert_eq!(b.count(), g.ball_offsets(r).len());
            }
        }
    }
}
