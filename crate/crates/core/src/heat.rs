//! Exact heat extension `e^{t Laplacian} u0` on the torus, evaluated
//! spectrally, and the gradient bounds it satisfies.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{time_grid, Grid, ScalarField, SpaceTimeField};

/// Where spectral gradients are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Staggering {
    /// At the grid nodes.
    Nodes,
    /// Component `d` at the faces half a cell along axis `d`, matching the
    /// finite-volume flux layout.
    Faces,
}

/// Discrete Fourier representation of `u0` with the torus wavenumbers.
pub struct SpectralHeat {
    grid: Grid,
    spectrum: Vec<Complex64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    values0: Vec<f64>,
}

impl SpectralHeat {
    pub fn new(u0: &ScalarField) -> Self {
        let grid = *u0.grid();
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let two_pi_over_l = 2.0 * std::f64::consts::PI / grid.length();
        let wavenumbers = (0..n)
            .map(|m| {
                let m = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                two_pi_over_l * m
            })
            .collect();
        let mut spectrum: Vec<Complex64> = u0.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut heat = SpectralHeat {
            grid,
            spectrum: Vec::new(),
            wavenumbers,
            forward,
            inverse,
            values0: u0.values().to_vec(),
        };
        heat.transform(&mut spectrum, true);
        heat.spectrum = spectrum;
        heat
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        let n = self.grid.n();
        let plan = if forward { &self.forward } else { &self.inverse };
        if self.grid.dim() == 1 {
            plan.process(data);
        } else {
            for row in data.chunks_exact_mut(n) {
                plan.process(row);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                for j in 0..n {
                    col[j] = data[j * n + i];
                }
                plan.process(&mut col);
                for j in 0..n {
                    data[j * n + i] = col[j];
                }
            }
        }
        if !forward {
            let scale = 1.0 / self.grid.cells() as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    fn wave(&self, idx: usize) -> (f64, f64, bool) {
        let n = self.grid.n();
        let (i, j) = self.grid.split(idx);
        let kx = self.wavenumbers[i];
        let ky = if self.grid.dim() == 2 { self.wavenumbers[j] } else { 0.0 };
        let nyquist = n % 2 == 0 && (i == n / 2 || (self.grid.dim() == 2 && j == n / 2));
        (kx, ky, nyquist)
    }

    /// `e^{t Laplacian} u0` at the grid nodes. Exactly `u0` at `t = 0`.
    pub fn frame(&self, t: f64) -> Vec<f64> {
        if t == 0.0 {
            return self.values0.clone();
        }
        let mut data: Vec<Complex64> = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (kx, ky, _) = self.wave(idx);
                c * (-(kx * kx + ky * ky) * t).exp()
            })
            .collect();
        self.transform(&mut data, false);
        data.iter().map(|c| c.re).collect()
    }

    /// Gradient of the heat extension at time `t`, component major.
    pub fn gradient(&self, t: f64, staggering: Staggering) -> Vec<f64> {
        let dim = self.grid.dim();
        let nc = self.grid.cells();
        let half = 0.5 * self.grid.dx();
        let mut out = Vec::with_capacity(dim * nc);
        for d in 0..dim {
            let mut data: Vec<Complex64> = self
                .spectrum
                .iter()
                .enumerate()
                .map(|(idx, c)| {
                    let (kx, ky, nyq) = self.wave(idx);
                    let k = if d == 0 { kx } else { ky };
                    if nyq || k == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let decay = (-(kx * kx + ky * ky) * t).exp();
                    let mut m = Complex64::new(0.0, k) * decay;
                    if staggering == Staggering::Faces {
                        m *= Complex64::from_polar(1.0, k * half);
                    }
                    c * m
                })
                .collect();
            self.transform(&mut data, false);
            out.extend(data.iter().map(|c| c.re));
        }
        out
    }

    /// `sup_x sqrt(t) |grad e^{t Laplacian} u0(x)|` at one instant.
    pub fn weighted_gradient_sup(&self, t: f64) -> f64 {
        let g = self.gradient(t, Staggering::Nodes);
        let nc = self.grid.cells();
        let mut m: f64 = 0.0;
        for c in 0..nc {
            let mut s = 0.0;
            for d in 0..self.grid.dim() {
                s += g[d * nc + c] * g[d * nc + c];
            }
            m = m.max(s.sqrt());
        }
        t.sqrt() * m
    }
}

/// Heat extension sampled on a time grid together with its gradient.
#[derive(Debug, Clone)]
pub struct HeatExtension {
    pub u0: ScalarField,
    pub frames: SpaceTimeField,
    pub gradient_frames: SpaceTimeField,
}

fn extend(u0: &ScalarField, times: &[f64], staggering: Staggering) -> Result<HeatExtension> {
    let heat = SpectralHeat::new(u0);
    let grid = *u0.grid();
    let frames: Vec<Vec<f64>> = times.par_iter().map(|&t| heat.frame(t)).collect();
    let grads: Vec<Vec<f64>> = times.par_iter().map(|&t| heat.gradient(t, staggering)).collect();
    Ok(HeatExtension {
        u0: u0.clone(),
        frames: SpaceTimeField::scalar(grid, times.to_vec(), frames)?,
        gradient_frames: SpaceTimeField::new(grid, times.to_vec(), grid.dim(), grads)?,
    })
}

/// Heat extension with node-centred spectral gradient.
pub fn heat_extend(u0: &ScalarField, times: &[f64]) -> Result<HeatExtension> {
    extend(u0, times, Staggering::Nodes)
}

/// Heat extension with the gradient evaluated on the solver's faces.
pub fn heat_extend_faces(u0: &ScalarField, times: &[f64]) -> Result<HeatExtension> {
    extend(u0, times, Staggering::Faces)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatGradientConfig {
    pub per_decade: usize,
    pub decades: f64,
    /// Slack added to `1/sqrt(2)` for periodization effects.
    pub slack: f64,
}

impl Default for HeatGradientConfig {
    fn default() -> Self {
        HeatGradientConfig {
            per_decade: 64,
            decades: 6.0,
            slack: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatGradientSup {
    pub sup: f64,
    pub t_at_sup: f64,
    pub data_norm: f64,
    /// `(1/sqrt(2) + slack) |u0|_inf`.
    pub bound: f64,
    pub within_bound: bool,
    /// `T` exceeded the wrap-around horizon `(L/8)^2`.
    pub beyond_validity: bool,
}

/// `sup_{t in (0, T], x} sqrt(t) |grad e^{t Laplacian} u0(x)|` over a
/// geometric sample of `t`, refined by golden-section search around the
/// best sample.
pub fn heat_gradient_sup(u0: &ScalarField, horizon: f64, cfg: &HeatGradientConfig) -> HeatGradientSup {
    let heat = SpectralHeat::new(u0);
    let samples = time_grid::log_samples(horizon, cfg.decades, cfg.per_decade);
    let values: Vec<f64> = samples.par_iter().map(|&t| heat.weighted_gradient_sup(t)).collect();
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut t_best = samples[best_i];
    if best > 0.0 {
        let lo = samples[best_i.saturating_sub(1)].ln();
        let hi = samples[(best_i + 1).min(samples.len() - 1)].ln();
        let f = |s: f64| heat.weighted_gradient_sup(s.exp());
        let (mut a, mut b) = (lo, hi);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..40 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = f(d);
            }
        }
        let (s, v) = if fc > fd { (c, fc) } else { (d, fd) };
        if v > best {
            best = v;
            t_best = s.exp();
        }
    }
    let data_norm = u0.sup_norm();
    let bound = (std::f64::consts::FRAC_1_SQRT_2 + cfg.slack) * data_norm;
    HeatGradientSup {
        sup: best.max(0.0),
        t_at_sup: t_best,
        data_norm,
        bound,
        within_bound: best <= bound,
        beyond_validity: horizon > u0.grid().validity_horizon(1.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingReport {
    pub t: Vec<f64>,
    /// `|grad e^{t Laplacian} u0|` in the weighted sup norm over `(0, t_k]`.
    pub entries: Vec<f64>,
    /// Last entry at most a fifth of the largest (or everything zero).
    pub vanishing: bool,
}

/// Weighted sup norms `sup_{s <= t_k} sqrt(s) |grad E(s)|` for a decreasing
/// sequence `t_k`. All entries share one geometric sample set, so the
/// sequence is non-increasing by construction.
pub fn heat_gradient_vanishing(u0: &ScalarField, t_sequence: &[f64]) -> VanishingReport {
    let heat = SpectralHeat::new(u0);
    let t_max = t_sequence.iter().cloned().fold(0.0, f64::max);
    let t_min = t_sequence.iter().cloned().fold(f64::INFINITY, f64::min);
    let decades = (t_max / t_min).log10() + 3.0;
    let mut samples = time_grid::log_samples(t_max, decades, 32);
    samples.extend_from_slice(t_sequence);
    samples.sort_by(f64::total_cmp);
    let values: Vec<f64> = samples.par_iter().map(|&s| heat.weighted_gradient_sup(s)).collect();
    let entries: Vec<f64> = t_sequence
        .iter()
        .map(|&tk| {
            samples
                .iter()
                .zip(&values)
                .filter(|(s, _)| **s <= tk * (1.0 + 1e-12))
                .map(|(_, v)| *v)
                .fold(0.0, f64::max)
        })
        .collect();
    let peak = entries.iter().cloned().fold(0.0, f64::max);
    let last = entries.last().copied().unwrap_or(0.0);
    VanishingReport {
        t: t_sequence.to_vec(),
        vanishing: peak == 0.0 || last <= 0.2 * peak,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cos_field(n: usize, l: f64) -> ScalarField {
        let g = Grid::new(1, n, l).unwrap();
        ScalarField::from_fn(g, |x| (2.0 * PI * x[0] / l).cos()).unwrap()
    }

    #[test]
    fn constants_are_invariant() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let u0 = ScalarField::constant(g, 2.5);
        let h = heat_extend(&u0, &[0.0, 0.1, 1.0]).unwrap();
        for f in h.frames.frames() {
            assert!(f.iter().all(|v| (v - 2.5).abs() < 1e-13));
        }
        assert!(h.gradient_frames.sup_norm() < 1e-13);
    }

    #[test]
    fn cosine_is_eigenfunction() {
        let l = 2.0;
        let u0 = cos_field(64, l);
        let t = 0.03;
        let frame = SpectralHeat::new(&u0).frame(t);
        let k = 2.0 * PI / l;
        let g = u0.grid();
        for (i, v) in frame.iter().enumerate() {
            let exact = (-k * k * t).exp() * (k * g.coords(i)[0]).cos();
            assert!((v - exact).abs() <= 1e-12 * exact.abs().max(1e-3));
        }
    }

    #[test]
    fn frame_zero_is_exact() {
        let u0 = cos_field(32, 1.0);
        let h = heat_extend(&u0, &[0.0, 0.01]).unwrap();
        assert_eq!(h.frames.frame(0), u0.values());
    }

    #[test]
    fn face_gradient_matches_shifted_derivative() {
        let l = 1.0;
        let u0 = cos_field(32, l);
        let t = 0.002;
        let h = SpectralHeat::new(&u0);
        let g = h.gradient(t, Staggering::Faces);
        let k = 2.0 * PI / l;
        let dx = u0.grid().dx();
        for (i, v) in g.iter().enumerate() {
            let x = i as f64 * dx + 0.5 * dx;
            let exact = -k * (-k * k * t).exp() * (k * x).sin();
            assert!((v - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn cosine_gradient_sup_matches_calculus() {
        let l = 1.0;
        let u0 = cos_field(64, l);
        // maximiser t = L^2 / (8 pi^2) sits below the horizon
        let r = heat_gradient_sup(&u0, l * l / 64.0, &HeatGradientConfig::default());
        let expected = (-0.5f64).exp() / 2f64.sqrt();
        assert!((r.sup - expected).abs() < 1e-3, "{} vs {expected}", r.sup);
        assert!(r.within_bound);
        assert!(!r.beyond_validity);
    }

    #[test]
    fn constant_gradient_sup_is_zero() {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let r = heat_gradient_sup(&ScalarField::constant(g, 1.0), 0.01, &HeatGradientConfig::default());
        assert!(r.sup < 1e-14);
    }

    #[test]
    fn cosine_gradient_vanishes() {
        let u0 = cos_field(256, 1.0);
        let ts: Vec<f64> = (1..=8).map(|k| 4f64.powi(-k)).collect();
        let r = heat_gradient_vanishing(&u0, &ts);
        assert!(r.vanishing);
        assert!(r.entries.windows(2).all(|w| w[1] <= w[0]));
        let k = 2.0 * PI;
        let profile = |s: f64| s.sqrt() * k * (-k * k * s).exp();
        for (t, e) in ts.iter().zip(&r.entries) {
            let exact = profile(t.min(0.5 / (k * k)));
            assert!((e - exact).abs() < 1e-2 * exact, "t={t}: {e} vs {exact}");
        }
        let ratio = r.entries[6] / r.entries[7];
        assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn raw_step_does_not_vanish() {
        let g = Grid::new(1, 512, 1.0).unwrap();
        let u0 = ScalarField::from_fn(g, |x| if x[0] < 0.5 { -1.0 } else { 1.0 }).unwrap();
        let ts: Vec<f64> = (1..=8).map(|k| 4f64.powi(-k)).collect();
        let r = heat_gradient_vanishing(&u0, &ts);
        assert!(!r.vanishing);
        let plateau = 1.0 / PI.sqrt();
        assert!((r.entries[7] - plateau).abs() < 0.1 * plateau, "{}", r.entries[7]);
    }
}
