//! Sampled checks of the structural assumptions on `a(t, x, y)`.

use serde::{Deserialize, Serialize};

use super::{mat_frobenius, mat_sub, CoefficientFn, Grid, Interval, MatrixField, MatrixSeries, ScalarField, SpaceTimeField};
use crate::error::{Error, Result};

/// Sampling densities over `(t, x, y, xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub t: usize,
    /// Points per axis in x; `None` uses every grid node in 1-D and at most
    /// 16 per axis in 2-D.
    pub x_per_axis: Option<usize>,
    pub y: usize,
    pub directions: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            t: 17,
            x_per_axis: None,
            y: 65,
            directions: 32,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn x_samples(grid: &Grid, counts: &SampleCounts) -> Vec<[f64; 2]> {
    let n = grid.n();
    let per_axis = counts
        .x_per_axis
        .unwrap_or(if grid.dim() == 1 { n } else { n.min(16) })
        .clamp(1, n);
    let stride = n / per_axis;
    let axis: Vec<f64> = (0..per_axis).map(|k| (k * stride) as f64 * grid.dx()).collect();
    if grid.dim() == 1 {
        axis.iter().map(|&x| [x, 0.0]).collect()
    } else {
        axis.iter().flat_map(|&y| axis.iter().map(move |&x| [x, y])).collect()
    }
}

fn check_compact(k: &Interval, a: &CoefficientFn) -> Result<()> {
    if !(k.lo.is_finite() && k.hi.is_finite() && k.lo <= k.hi) {
        return Err(Error::InvalidParameter(format!("K = [{}, {}] must be a finite closed interval", k.lo, k.hi)));
    }
    let o = a.admissible();
    if !(o.contains_open(k.lo) && o.contains_open(k.hi)) {
        return Err(Error::RangeNotInside {
            lo: k.lo,
            hi: k.hi,
            o_lo: o.lo,
            o_hi: o.hi,
        });
    }
    Ok(())
}

/// Minimum of `xi . a xi` over sampled `(t, x, y, xi)` with `|xi| = 1`.
pub fn verify_ellipticity(a: &CoefficientFn, k: Interval, horizon: f64, grid: &Grid, counts: &SampleCounts) -> Result<f64> {
    check_compact(&k, a)?;
    let dim = grid.dim();
    let dirs: Vec<[f64; 2]> = if dim == 1 {
        vec![[1.0, 0.0]]
    } else {
        (0..counts.directions.max(1))
            .map(|j| {
                let th = std::f64::consts::PI * j as f64 / counts.directions.max(1) as f64;
                [th.cos(), th.sin()]
            })
            .collect()
    };
    let mut best = f64::INFINITY;
    let mut worst = None;
    for t in linspace(0.0, horizon, counts.t) {
        for x in x_samples(grid, counts) {
            for y in linspace(k.lo, k.hi, counts.y) {
                let m = a.eval(t, x, y);
                for xi in &dirs {
                    let v = if dim == 1 {
                        m[0][0]
                    } else {
                        // Rayleigh quotient about the mean diagonal, exact for c * Id
                        let n2 = xi[0] * xi[0] + xi[1] * xi[1];
                        let b = 0.5 * (m[0][1] + m[1][0]);
                        0.5 * (m[0][0] + m[1][1])
                            + (0.5 * (m[0][0] - m[1][1]) * (xi[0] * xi[0] - xi[1] * xi[1]) + 2.0 * b * xi[0] * xi[1]) / n2
                    };
                    if !v.is_finite() {
                        return Err(Error::NonFinite(format!("a({t}, {x:?}, {y})")));
                    }
                    if v < best {
                        best = v;
                        worst = Some((t, x, y, *xi));
                    }
                }
            }
        }
    }
    if best <= 0.0 {
        let (t, x, y, xi) = worst.expect("at least one sample");
        return Err(Error::NotElliptic { value: best, t, x, y, xi });
    }
    Ok(best)
}

/// Which state value the equilibrium bound was anchored at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumAnchor {
    Zero,
    Midpoint(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub c_l: f64,
    pub c_e: f64,
    pub anchor: EquilibriumAnchor,
}

/// Difference-quotient estimate of the Lipschitz constant in `y` over `K`
/// (Frobenius norm) and the equilibrium bound `sup |a(t, x, 0)|`.
pub fn verify_lipschitz_and_equilibrium(
    a: &CoefficientFn,
    k: Interval,
    horizon: f64,
    grid: &Grid,
    counts: &SampleCounts,
) -> Result<LipschitzEstimate> {
    check_compact(&k, a)?;
    let dim = grid.dim();
    let ys = linspace(k.lo, k.hi, counts.y.max(2));
    let xs = x_samples(grid, counts);
    let ts = linspace(0.0, horizon, counts.t);
    let mut c_l: f64 = 0.0;
    for &t in &ts {
        for &x in &xs {
            let mats: Vec<_> = ys.iter().map(|&y| a.eval(t, x, y)).collect();
            for m in &mats {
                if m.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("a({t}, {x:?}, y) on K")));
                }
            }
            for i in 0..ys.len() {
                for j in (i + 1)..ys.len() {
                    let q = mat_frobenius(&mat_sub(&mats[i], &mats[j]), dim) / (ys[j] - ys[i]);
                    c_l = c_l.max(q);
                }
            }
        }
    }

    let mut zero_ok = true;
    let mut c_e: f64 = 0.0;
    'outer: for &t in &ts {
        for &x in &xs {
            let m = a.eval(t, x, 0.0);
            if m.iter().flatten().any(|v| !v.is_finite()) {
                zero_ok = false;
                break 'outer;
            }
            c_e = c_e.max(mat_frobenius(&m, dim));
        }
    }
    let anchor = if zero_ok {
        EquilibriumAnchor::Zero
    } else {
        let y0 = k.midpoint();
        c_e = 0.0;
        for &t in &ts {
            for &x in &xs {
                c_e = c_e.max(mat_frobenius(&a.eval(t, x, y0), dim));
            }
        }
        EquilibriumAnchor::Midpoint(y0)
    };
    Ok(LipschitzEstimate { c_l, c_e, anchor })
}

/// Sampled constants of the structural assumptions on a compact `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub lambda_k: f64,
    pub c_l: f64,
    pub c_e: f64,
    pub anchor: EquilibriumAnchor,
    /// `(scale, oscillation)` pairs; scale is relative to the sampled box.
    pub modulus_samples: Vec<(f64, f64)>,
    pub k: Interval,
    pub horizon: f64,
}

impl AssumptionReport {
    /// Upper bound `C_L |v|_inf + C_E` for a composed coefficient.
    pub fn composition_bound(&self, v_sup: f64) -> f64 {
        self.c_l * v_sup + self.c_e
    }
}

pub fn verify_assumption(a: &CoefficientFn, k: Interval, horizon: f64, grid: &Grid, counts: &SampleCounts) -> Result<AssumptionReport> {
    let lambda_k = verify_ellipticity(a, k, horizon, grid, counts)?;
    let lip = verify_lipschitz_and_equilibrium(a, k, horizon, grid, counts)?;
    let dim = grid.dim();
    let n_coarse = 9;
    let ts = linspace(0.0, horizon, n_coarse);
    let ys = linspace(k.lo, k.hi, n_coarse);
    let xs: Vec<[f64; 2]> = (0..n_coarse)
        .map(|j| {
            let x = grid.length() * j as f64 / n_coarse as f64;
            [x, if dim == 2 { x } else { 0.0 }]
        })
        .collect();
    let mut modulus = Vec::new();
    let mut running: f64 = 0.0;
    for scale in [0.125, 0.25, 0.5, 1.0] {
        let reach = (scale * (n_coarse - 1) as f64).round() as usize;
        let mut osc: f64 = 0.0;
        for (it, &t) in ts.iter().enumerate() {
            for (ix, &x) in xs.iter().enumerate() {
                for (iy, &y) in ys.iter().enumerate() {
                    let base = a.eval(t, x, y);
                    for dt in 0..=reach.min(n_coarse - 1 - it) {
                        for dy in 0..=reach.min(n_coarse - 1 - iy) {
                            for dxi in 0..=reach.min(n_coarse - 1 - ix) {
                                let other = a.eval(ts[it + dt], xs[ix + dxi], ys[iy + dy]);
                                osc = osc.max(mat_frobenius(&mat_sub(&base, &other), dim));
                            }
                        }
                    }
                }
            }
        }
        running = running.max(osc);
        modulus.push((scale, running));
    }
    Ok(AssumptionReport {
        lambda_k,
        c_l: lip.c_l,
        c_e: lip.c_e,
        anchor: lip.anchor,
        modulus_samples: modulus,
        k,
        horizon,
    })
}

/// `A(x) = a(t, x, v(x))` for one frame; fails if `v` leaves the admissible
/// interval.
pub fn compose_frame(a: &CoefficientFn, t: f64, grid: &Grid, values: &[f64]) -> Result<MatrixField> {
    let o = a.admissible();
    let mut out = Vec::with_capacity(values.len());
    for (idx, &y) in values.iter().enumerate() {
        if !o.contains_open(y) {
            return Err(Error::RangeEscape {
                value: y,
                t,
                lo: o.lo,
                hi: o.hi,
            });
        }
        out.push(a.eval(t, grid.coords(idx), y));
    }
    MatrixField::new(*grid, out)
}

/// Matrix coefficients `A(t, x) = a(t, x, v(t, x))` for every frame of `v`.
pub fn compose_coefficient(a: &CoefficientFn, v: &SpaceTimeField) -> Result<MatrixSeries> {
    let grid = v.grid();
    let nc = grid.cells();
    let frames = v
        .times()
        .iter()
        .zip(v.frames())
        .map(|(&t, f)| compose_frame(a, t, grid, &f[..nc]))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatrixSeries {
        times: v.times().to_vec(),
        frames,
    })
}

/// Half the distance from the range of `u0` to the boundary of `O`, with a
/// cap of 1 when `O` is the whole line.
pub fn safety_radius(u0: &ScalarField, o: Interval) -> Result<f64> {
    safety_radius_with_cap(u0, o, 1.0)
}

pub fn safety_radius_with_cap(u0: &ScalarField, o: Interval, cap: f64) -> Result<f64> {
    let r = u0.range()?;
    if !o.strictly_contains(&r) {
        return Err(Error::RangeNotInside {
            lo: r.lo,
            hi: r.hi,
            o_lo: o.lo,
            o_hi: o.hi,
        });
    }
    let d = (r.lo - o.lo).min(o.hi - r.hi);
    Ok(if d.is_finite() { 0.5 * d } else { cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{mat_scale, ScalarField};

    fn g1() -> Grid {
        Grid::new(1, 32, 1.0).unwrap()
    }

    #[test]
    fn identity_is_unit_elliptic() {
        let a = CoefficientFn::identity(1);
        let l = verify_ellipticity(&a, Interval::new(-3.0, 5.0), 1.0, &g1(), &SampleCounts::default()).unwrap();
        assert_eq!(l, 1.0);
        let g2 = Grid::new(2, 16, 1.0).unwrap();
        let a2 = CoefficientFn::identity(2);
        let l2 = verify_ellipticity(&a2, Interval::new(0.0, 1.0), 1.0, &g2, &SampleCounts::default()).unwrap();
        assert!((l2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn porous_ellipticity_is_inf_k_power() {
        let k = Interval::new(0.5, 2.0);
        let l1 = verify_ellipticity(&CoefficientFn::porous(1, 1.0), k, 1.0, &g1(), &SampleCounts::default()).unwrap();
        assert!((l1 - 0.5).abs() < 1e-14);
        let l2 = verify_ellipticity(&CoefficientFn::porous(1, 2.0), k, 1.0, &g1(), &SampleCounts::default()).unwrap();
        assert!((l2 - 0.25).abs() < 1e-14);
    }

    #[test]
    fn non_elliptic_reports_location() {
        let a = CoefficientFn::new("neg", 1, Interval::real_line(), |_, _, y| mat_scale(y));
        let err = verify_ellipticity(&a, Interval::new(-1.0, 1.0), 1.0, &g1(), &SampleCounts::default()).unwrap_err();
        match err {
            Error::NotElliptic { y, value, .. } => {
                assert_eq!(y, -1.0);
                assert_eq!(value, -1.0);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn lipschitz_constants() {
        let c = SampleCounts::default();
        let id = verify_lipschitz_and_equilibrium(&CoefficientFn::identity(1), Interval::new(0.0, 1.0), 1.0, &g1(), &c).unwrap();
        assert_eq!(id.c_l, 0.0);
        assert_eq!(id.c_e, 1.0);
        assert_eq!(id.anchor, EquilibriumAnchor::Zero);
        let k = Interval::new(0.25, 1.0);
        let lin = CoefficientFn::new("lin", 1, Interval::real_line(), |_, _, y| mat_scale(y));
        let e = verify_lipschitz_and_equilibrium(&lin, Interval::new(0.0, 1.0), 1.0, &g1(), &c).unwrap();
        assert!((e.c_l - 1.0).abs() < 1e-12);
        let sq = CoefficientFn::new("sq", 1, Interval::real_line(), |_, _, y| mat_scale(y * y));
        let e2 = verify_lipschitz_and_equilibrium(&sq, Interval::new(0.0, 1.0), 1.0, &g1(), &c).unwrap();
        // the largest sampled quotient is y + y' = 2 - 1/64
        assert!((e2.c_l - 2.0).abs() <= 1.0 / 64.0 + 1e-12);
        let _ = k;
    }

    #[test]
    fn equilibrium_falls_back_to_midpoint() {
        let a = CoefficientFn::new("log", 1, Interval::new(0.0, f64::INFINITY), |_, _, y| mat_scale(1.0 + y.ln().abs()));
        let e = verify_lipschitz_and_equilibrium(&a, Interval::new(1.0, 3.0), 1.0, &g1(), &SampleCounts::default()).unwrap();
        assert_eq!(e.anchor, EquilibriumAnchor::Midpoint(2.0));
        assert!((e.c_e - (1.0 + 2f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn modulus_is_monotone() {
        let r = verify_assumption(&CoefficientFn::porous(1, 2.0), Interval::new(0.5, 1.5), 1.0, &g1(), &SampleCounts::default()).unwrap();
        assert!(r.modulus_samples.windows(2).all(|w| w[1].1 >= w[0].1));
        assert!(r.lambda_k > 0.0);
    }

    #[test]
    fn compose_matches_pointwise_eval() {
        let g = g1();
        let a = CoefficientFn::porous(1, 2.0);
        let v = SpaceTimeField::from_fn(g, &[0.0, 0.1], |_, x| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x[0]).sin()).unwrap();
        let s = compose_coefficient(&a, &v).unwrap();
        for (k, fr) in s.frames.iter().enumerate() {
            for (i, m) in fr.values().iter().enumerate() {
                let y = v.frame(k)[i];
                assert_eq!(m[0][0], y.powf(2.0));
            }
        }
    }

    #[test]
    fn compose_detects_range_escape() {
        let g = g1();
        let v = SpaceTimeField::from_fn(g, &[0.0], |_, x| x[0] - 0.5).unwrap();
        assert!(matches!(
            compose_coefficient(&CoefficientFn::porous(1, 1.0), &v),
            Err(Error::RangeEscape { .. })
        ));
    }

    #[test]
    fn safety_radius_examples() {
        let g = g1();
        let u = ScalarField::from_fn(g, |x| 1.0 + 2.0 * x[0].min(0.5)).unwrap();
        assert_eq!(safety_radius(&u, Interval::new(0.0, f64::INFINITY)).unwrap(), 0.5);
        let u2 = ScalarField::from_fn(g, |x| x[0] - 0.5).unwrap();
        assert_eq!(safety_radius(&u2, Interval::new(-1.0, 1.0)).unwrap(), 0.25);
        assert_eq!(safety_radius(&u2, Interval::real_line()).unwrap(), 1.0);
        assert!(safety_radius(&u2, Interval::new(0.0, 1.0)).is_err());
    }
}
