//! Browser bindings for three interactive views: heat smoothing of a
//! datum, a porous-medium evolution through the fixed-point solver, and
//! the gradient Z-norm profile that shrinks as the horizon goes to zero.
//!
//! Every export returns a JSON string so the page needs no generated
//! TypeScript types.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qlpde::field::{time_grid, CoefficientFn, Grid, ScalarField};
use qlpde::harness::config::U0Config;
use qlpde::heat::{heat_extend_faces, heat_gradient_sup, HeatGradientConfig};
use qlpde::norms::{z_norm, z_norm_prefix, ZNormSpec};
use qlpde::quasilinear::{global_solve, FixedPointConfig};

const MAX_N: usize = 512;

fn datum(preset: &str, n: usize, offset: f64, amplitude: f64) -> Result<ScalarField, String> {
    if !(n.is_power_of_two() && (8..=MAX_N).contains(&n)) {
        return Err(format!("N must be a power of two in [8, {MAX_N}], got {n}"));
    }
    let grid = Grid::new(1, n, 1.0).map_err(|e| e.to_string())?;
    U0Config::new(preset, offset, amplitude).build(grid, 0).map_err(|e| e.to_string())
}

fn coords(u: &ScalarField) -> Vec<f64> {
    (0..u.grid().cells()).map(|c| u.grid().coords(c)[0]).collect()
}

#[derive(Debug, Serialize)]
pub struct HeatView {
    pub x: Vec<f64>,
    pub initial: Vec<f64>,
    pub smoothed: Vec<f64>,
    /// `sup_{s <= t} sqrt(s) |grad e^{s Laplacian} u0|`.
    pub gradient_sup: f64,
    /// `|u0|_inf / sqrt(2)`.
    pub gradient_bound: f64,
}

pub fn heat_view(preset: &str, n: usize, t: f64) -> Result<HeatView, String> {
    if !(t > 0.0 && t <= 0.1) {
        return Err(format!("t must lie in (0, 0.1], got {t}"));
    }
    let u0 = datum(preset, n, 0.0, 1.0)?;
    let ext = heat_extend_faces(&u0, &[0.0, t]).map_err(|e| e.to_string())?;
    let cfg = HeatGradientConfig { per_decade: 16, ..HeatGradientConfig::default() };
    let h = heat_gradient_sup(&u0, t, &cfg);
    Ok(HeatView {
        x: coords(&u0),
        initial: u0.values().to_vec(),
        smoothed: ext.frames.last_field().into_values(),
        gradient_sup: h.sup,
        gradient_bound: u0.sup_norm() * std::f64::consts::FRAC_1_SQRT_2,
    })
}

#[derive(Debug, Serialize)]
pub struct PorousView {
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    /// Snapshots at `times`.
    pub frames: Vec<Vec<f64>>,
    pub windows: usize,
    pub rejected: usize,
    pub iterations: Vec<usize>,
    pub max_contraction: f64,
    pub range_drift: f64,
}

/// Solves `u_t = div(u^m grad u)` from `1 + amplitude * preset` up to
/// `t_end` and returns `snapshots` evenly spaced frames.
pub fn porous_view(preset: &str, n: usize, m: f64, amplitude: f64, t_end: f64, snapshots: usize) -> Result<PorousView, String> {
    if !(0.0 < amplitude && amplitude < 1.0) {
        return Err(format!("amplitude must lie in (0, 1), got {amplitude}"));
    }
    if !(t_end > 0.0 && t_end <= 0.2) {
        return Err(format!("end time must lie in (0, 0.2], got {t_end}"));
    }
    if !(1.0..=3.0).contains(&m) {
        return Err(format!("exponent m must lie in [1, 3], got {m}"));
    }
    let u0 = datum(preset, n, 1.0, amplitude)?;
    let a = CoefficientFn::porous(1, m);
    let cfg = FixedPointConfig { horizon: 0.005, steps: 16, ..FixedPointConfig::default() };
    let (u, rep) = global_solve(&u0, &a, t_end, &cfg).map_err(|e| e.to_string())?;
    let snaps = snapshots.clamp(2, 32);
    let times: Vec<f64> = (0..snaps).map(|k| t_end * k as f64 / (snaps - 1) as f64).collect();
    Ok(PorousView {
        x: coords(&u0),
        frames: times.iter().map(|&t| u.sample_at(t).into_values()).collect(),
        times,
        windows: rep.windows.len(),
        rejected: rep.rejected.len(),
        iterations: rep.iterations(),
        max_contraction: rep.max_contraction(),
        range_drift: rep.range_drift,
    })
}

#[derive(Debug, Serialize)]
pub struct SmallnessView {
    /// Horizons, decreasing.
    pub horizons: Vec<f64>,
    /// `|grad e^{t Laplacian} u0|_Z` restricted to each horizon.
    pub z_values: Vec<f64>,
}

/// The gradient Z-norm of the heat extension over shrinking horizons.
/// Smooth data drive it to zero; a jump keeps it bounded away from zero.
pub fn smallness_view(preset: &str, n: usize, q: f64) -> Result<SmallnessView, String> {
    if !(q > 3.0 && q <= 16.0) {
        return Err(format!("q must lie in (3, 16], got {q}"));
    }
    let u0 = datum(preset, n, 0.0, 1.0)?;
    let t_max = u0.grid().validity_horizon(1.0);
    let times = time_grid::geometric(0.0, t_max, 0.9, 120).map_err(|e| e.to_string())?;
    let ext = heat_extend_faces(&u0, &times).map_err(|e| e.to_string())?;
    let report = z_norm(&ext.gradient_frames, &ZNormSpec::new(q, t_max)).map_err(|e| e.to_string())?;
    let horizons = time_grid::log_samples(t_max, 3.0, 4).into_iter().rev().collect::<Vec<_>>();
    Ok(SmallnessView {
        z_values: z_norm_prefix(&report, &horizons),
        horizons,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = heatView)]
pub fn heat_view_js(preset: &str, n: usize, t: f64) -> Result<String, JsValue> {
    to_js(heat_view(preset, n, t))
}

#[wasm_bindgen(js_name = porousView)]
pub fn porous_view_js(preset: &str, n: usize, m: f64, amplitude: f64, t_end: f64, snapshots: usize) -> Result<String, JsValue> {
    to_js(porous_view(preset, n, m, amplitude, t_end, snapshots))
}

#[wasm_bindgen(js_name = smallnessView)]
pub fn smallness_view_js(preset: &str, n: usize, q: f64) -> Result<String, JsValue> {
    to_js(smallness_view(preset, n, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_view_respects_the_gradient_bound() {
        let v = heat_view("smoothed_sign:0.01", 256, 0.01).unwrap();
        assert_eq!(v.x.len(), 256);
        assert!(v.gradient_sup <= 1.05 * v.gradient_bound);
        let top = v.smoothed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(top <= 1.0 + 1e-10);
    }

    #[test]
    fn porous_view_keeps_range_and_mean() {
        let v = porous_view("cos", 64, 1.0, 0.3, 0.02, 5).unwrap();
        assert_eq!(v.frames.len(), 5);
        let mean = |f: &Vec<f64>| f.iter().sum::<f64>() / f.len() as f64;
        assert!((mean(&v.frames[4]) - mean(&v.frames[0])).abs() < 1e-12);
        assert!(v.frames.iter().flatten().all(|&y| (0.7 - 1e-8..=1.3 + 1e-8).contains(&y)));
        assert!(v.max_contraction < 1.0);
    }

    #[test]
    fn smallness_separates_smooth_from_jump_data() {
        let smooth = smallness_view("cos", 128, 5.0).unwrap();
        let jump = smallness_view("step", 128, 5.0).unwrap();
        let ratio = |v: &SmallnessView| v.z_values.last().unwrap() / v.z_values[0];
        assert!(ratio(&smooth) < 0.2, "{:?}", smooth.z_values);
        assert!(ratio(&jump) > 0.5, "{:?}", jump.z_values);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(heat_view("cos", 100, 0.01).is_err());
        assert!(porous_view("cos", 64, 1.0, 1.5, 0.02, 5).is_err());
        assert!(smallness_view("cos", 64, 2.0).is_err());
    }
}
