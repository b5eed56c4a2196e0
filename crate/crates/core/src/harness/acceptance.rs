//! Acceptance checks: fourteen criteria covering the norms, the linear
//! solver, the fixed-point solver and the long-time diagnostics.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Method, U0Config};
use super::run::{direct_step_error, execute};
use super::scenarios;
use super::suite::manufactured_studies;
use crate::error::{Error, Result};
use crate::field::{mat_scale, time_grid, CoefficientFn, Grid, MatrixField, ScalarField, SpaceTimeField};
use crate::heat::{heat_gradient_sup, HeatGradientConfig};
use crate::linear::manufactured::Manufactured;
use crate::linear::{face_gradient, representation_check};
use crate::norms::{
    carleson, fundamental_solution, gaussian_envelope, range_invariance, z_gradient_smallness, z_l2_noninclusion_witness, z_norm,
    EnvelopeConfig, ZNormSpec,
};
use crate::quasilinear::{direct_solve, global_solve, local_solve_fixed_point, mollify_solve, oracle_gap, FixedPointConfig};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
    pub note: Option<String>,
}

impl Check {
    fn upper(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound: format!("<= {bound:.3e}"),
            pass: value <= bound,
            note: None,
        }
    }

    fn lower(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound: format!(">= {bound:.3e}"),
            pass: value >= bound,
            note: None,
        }
    }

    fn near(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound: format!("{target:.4} +- {tol:.1e}"),
            pass: (value - target).abs() <= tol,
            note: None,
        }
    }

    fn flag(name: impl Into<String>, pass: bool, note: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            value: if pass { 1.0 } else { 0.0 },
            bound: "holds".into(),
            pass,
            note: Some(note.into()),
        }
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }
}

#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl Criterion {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// One line: id, verdict, title and the worst check.
    pub fn summary(&self) -> String {
        let failing: Vec<&Check> = self.checks.iter().filter(|c| !c.pass).collect();
        let detail = match failing.first() {
            Some(c) => format!("{} = {:.4e} (want {}){}", c.name, c.value, c.bound, c.note.as_ref().map(|n| format!("; {n}")).unwrap_or_default()),
            None => format!("{} checks", self.checks.len()),
        };
        format!("[{:>2}] {} {}: {}", self.id, if self.pass() { "PASS" } else { "FAIL" }, self.title, detail)
    }
}

type CriterionFn = fn() -> Result<Vec<Check>>;

pub const CRITERIA: [(u32, &str, CriterionFn); 14] = [
    (1, "heat gradient constant", heat_gradient_constant),
    (2, "z-norm exactness, nesting and scaling", z_norm_exactness),
    (3, "z versus L2 witness", z_witness),
    (4, "linear solver convergence orders", linear_convergence),
    (5, "representation formula", representation),
    (6, "fixed point against direct oracle", fixed_point_oracle),
    (7, "range invariance", range_criterion),
    (8, "zero data stays zero", zero_data),
    (9, "carleson ratio stability", carleson_stability),
    (10, "long-time decay exponents", long_time_decay),
    (11, "gaussian envelopes", gaussian_envelopes),
    (12, "mollification path", mollification),
    (13, "restart determinism and time shift", restart),
    (14, "z-gradient smallness", z_smallness),
];

pub fn run_one(id: u32) -> Option<Criterion> {
    CRITERIA.iter().find(|c| c.0 == id).map(|&(id, title, f)| Criterion {
        id,
        title,
        checks: f().unwrap_or_else(|e| vec![Check::flag("completes", false, e.to_string())]),
    })
}

pub fn run_all() -> Vec<Criterion> {
    CRITERIA.iter().map(|c| run_one(c.0).expect("listed")).collect()
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn datum(preset: &str, grid: Grid, offset: f64, amplitude: f64) -> Result<ScalarField> {
    U0Config::new(preset, offset, amplitude).build(grid, 0)
}

fn heat_gradient_constant() -> Result<Vec<Check>> {
    let cfg = HeatGradientConfig {
        slack: 0.05 * FRAC_1_SQRT_2,
        ..HeatGradientConfig::default()
    };
    let lib = scenarios::library();
    let mut checks: Vec<Check> = lib
        .par_iter()
        .map(|c| {
            let u0 = c.initial_datum()?;
            let h = heat_gradient_sup(&u0, u0.grid().validity_horizon(1.0), &cfg);
            Ok(Check::upper(format!("{}.sup", c.scenario), h.sup, h.bound))
        })
        .collect::<Result<_>>()?;
    let g = Grid::new(1, 512, 1.0)?;
    let sign = datum("smoothed_sign:0.005", g, 0.0, 1.0)?;
    let h = heat_gradient_sup(&sign, g.validity_horizon(1.0), &cfg);
    checks.push(Check::upper("smoothed_sign.sup", h.sup, h.bound));
    checks.push(Check::lower("smoothed_sign.attained", h.sup / h.data_norm, 0.55).note(format!("1/sqrt(pi) = {:.4}", 1.0 / PI.sqrt())));
    Ok(checks)
}

fn inverse_sqrt_field(grid: Grid, horizon: f64, steps: usize, scale: f64) -> Result<SpaceTimeField> {
    let times = time_grid::uniform(0.0, horizon, steps)?;
    SpaceTimeField::from_fn(grid, &times, |t, _| if t > 0.0 { scale / t.sqrt() } else { 0.0 })
}

fn random_field(grid: Grid, times: &[f64], rng: &mut ChaCha8Rng) -> Result<SpaceTimeField> {
    let frames = times
        .iter()
        .map(|_| (0..grid.cells()).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    SpaceTimeField::scalar(grid, times.to_vec(), frames)
}

fn z_norm_exactness() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let g = Grid::new(1, 64, 1.0)?;
    let horizon = 1.0 / 64.0;
    let f = inverse_sqrt_field(g, horizon, 64, 1.0)?;
    for q in [1.5, 2.0, 4.0] {
        let z = z_norm(&f, &ZNormSpec::new(q, horizon))?.value;
        checks.push(Check::near(format!("unit.q{q}"), z, 1.0, 1e-6));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let qs = [1.5, 2.0, 4.0, f64::INFINITY];
    let small = Grid::new(1, 32, 1.0)?;
    let times = time_grid::uniform(0.0, horizon, 16)?;
    let mut violations = 0;
    for _ in 0..20 {
        let r = random_field(small, &times, &mut rng)?;
        let zs = qs
            .iter()
            .map(|&q| z_norm(&r, &ZNormSpec::new(q, horizon)).map(|z| z.value))
            .collect::<Result<Vec<_>>>()?;
        violations += zs.windows(2).filter(|w| w[0] > w[1] * (1.0 + 1e-12)).count();
    }
    checks.push(Check::upper("nesting.violations", violations as f64, 0.0).note("20 random fields, q = 1.5, 2, 4, inf"));

    let r = random_field(small, &times, &mut rng)?;
    let wide = Grid::new(1, 32, 2.0)?;
    let scaled_times: Vec<f64> = times.iter().map(|t| 4.0 * t).collect();
    let scaled = SpaceTimeField::scalar(wide, scaled_times, r.frames().iter().map(|f| f.iter().map(|v| 0.5 * v).collect()).collect())?;
    for q in [2.0, 4.0] {
        let a = z_norm(&r, &ZNormSpec::new(q, horizon))?.value;
        let b = z_norm(&scaled, &ZNormSpec::new(q, 4.0 * horizon))?.value;
        checks.push(Check::upper(format!("scaling.q{q}"), (a - b).abs() / a, 0.02));
    }
    Ok(checks)
}

fn z_witness() -> Result<Vec<Check>> {
    let g = Grid::new(1, 256, 1.0)?;
    let eps: Vec<f64> = (3..=8).map(|k| 10f64.powi(-k)).collect();
    let w = z_l2_noninclusion_witness(&g, 1.0 / 64.0, &[1.5, 2.0, 4.0], &eps)?;
    let mut checks = vec![Check::upper("slope_relative_error", w.slope_relative_error, 0.05)
        .note(format!("slope {:.4} against |B| = {:.4}", w.slope, w.ball_measure))];
    for (q, z) in &w.z_values {
        checks.push(Check::near(format!("z.q{q}"), *z, 1.0, 1e-6));
    }
    let growing = w.integrals.windows(2).all(|p| p[1] > p[0]);
    checks.push(Check::flag("l2_mass_grows", growing, format!("{:.3} at eps = {:.0e}", w.integrals.last().unwrap(), eps.last().unwrap())));
    Ok(checks)
}

fn order_checks(label: &str, errors: &[f64], nominal: f64) -> Vec<Check> {
    crate::linear::manufactured::observed_orders(errors)
        .into_iter()
        .enumerate()
        .map(|(i, o)| Check::near(format!("{label}[{}]", i + 1), o, nominal, 0.3).note(format!("errors {:.3e} -> {:.3e}", errors[i], errors[i + 1])))
        .collect()
}

fn linear_convergence() -> Result<Vec<Check>> {
    let [dx, be, cn] = manufactured_studies()?;
    let mut checks = order_checks("dx_order", &dx, 2.0);
    checks.extend(order_checks("dt_order.theta1", &be, 1.0));
    checks.extend(order_checks("dt_order.theta0.5", &cn, 2.0));
    Ok(checks)
}

fn representation() -> Result<Vec<Check>> {
    let levels = [(32usize, 16usize), (64, 32), (128, 64)];
    let mut checks = Vec::new();
    for (label, variable) in [("2Id", false), ("2+cos", true)] {
        let rows = levels
            .par_iter()
            .map(|&(n, steps)| {
                let g = Grid::new(1, n, 1.0)?;
                let a0 = if variable {
                    MatrixField::isotropic(g, |x| 2.0 + (2.0 * PI * x[0]).cos())?
                } else {
                    MatrixField::constant(g, mat_scale(2.0))
                };
                let u0 = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin() + 0.3 * (4.0 * PI * x[0]).cos())?;
                let m = Manufactured::new(n, 1.0)?;
                let h = m.natural_horizon();
                let times = time_grid::uniform(0.0, h, steps)?;
                let defect = representation_check(&a0, &u0, &times, 0.5)?.defect;
                Ok((defect, m.run(h, steps, 0.5)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let defects: Vec<f64> = rows.iter().map(|r| r.0).collect();
        checks.push(Check::flag(
            format!("{label}.decreasing"),
            defects.windows(2).all(|w| w[1] < w[0]),
            format!("defects {}", sci(&defects)),
        ));
        let (d, m) = rows[rows.len() - 1];
        checks.push(Check::upper(format!("{label}.defect_over_manufactured"), d / m, 5.0));
    }
    Ok(checks)
}

fn cos_datum(grid: Grid, c: f64, amp: f64) -> Result<ScalarField> {
    datum("cos", grid, c, amp)
}

fn fixed_point_oracle() -> Result<Vec<Check>> {
    let g = Grid::new(1, 128, 1.0)?;
    let cfg = FixedPointConfig::default();
    let mut checks = Vec::new();
    for m in [1.0, 2.0] {
        let u0 = cos_datum(g, 1.0, 0.1)?;
        let a = CoefficientFn::porous(1, m);
        let (u, rep) = local_solve_fixed_point(&u0, &a, &cfg)?;
        let k = rep.max_contraction();
        checks.push(Check::upper(format!("m{m}.contraction"), k, 0.5).note(format!("iterations {:?}", rep.iterations())));
        let gap = oracle_gap(&u, &a, cfg.theta)?;
        let scheme = direct_step_error(&u0, &a, u.times(), cfg.theta)?;
        checks.push(Check::upper(format!("m{m}.oracle_gap"), gap, 10.0 * scheme).note(format!("direct step-halving error {scheme:.3e}")));
    }
    let (_, rep) = local_solve_fixed_point(&cos_datum(g, 0.0, 1.0)?, &CoefficientFn::identity(1), &cfg)?;
    checks.push(Check::near("identity.iterations", rep.iterations()[0] as f64, 1.0, 0.0));
    Ok(checks)
}

fn is_diagonal(cfg: &ExperimentConfig) -> bool {
    !cfg.coefficient.label.starts_with("anisotropic")
}

fn range_criterion() -> Result<Vec<Check>> {
    let lib: Vec<ExperimentConfig> = scenarios::library()
        .into_iter()
        .filter(|c| is_diagonal(c) && c.scheme.theta == 1.0 && c.scheme.method != Method::Heat)
        .collect();
    let mut checks: Vec<Check> = lib
        .par_iter()
        .map(|c| {
            let out = execute(c)?;
            let u0 = c.initial_datum()?;
            let tol = 1e-8 * u0.sup_norm();
            let r = range_invariance(&out.u, &u0, tol, 0.0)?;
            Ok(Check::upper(format!("{}.excess", c.scenario), r.excess, tol))
        })
        .collect::<Result<_>>()?;
    let shrink = [16usize, 32, 64]
        .par_iter()
        .map(|&steps| {
            let g = Grid::new(1, 64, 1.0)?;
            let u0 = cos_datum(g, 0.0, 1.0)?;
            let times = time_grid::uniform(0.0, 0.01, steps)?;
            let u = direct_solve(&u0, &CoefficientFn::identity(1), &times, 1.0, 0)?;
            Ok(range_invariance(&u, &u0, 1e-8, 0.0)?.shrinkage)
        })
        .collect::<Result<Vec<f64>>>()?;
    checks.push(Check::flag(
        "hull.shrinkage_vanishes",
        shrink.windows(2).all(|w| w[1] < 0.6 * w[0]),
        format!("hull shrinkage {} under dt halving", sci(&shrink)),
    ));
    Ok(checks)
}

fn zero_data() -> Result<Vec<Check>> {
    let labels = ["identity", "scaled:2", "anisotropic:0.5", "time_ramp:1", "periodic_medium:1", "porous:1", "ramped_porous:1"];
    let cfg = FixedPointConfig { horizon: 0.005, ..FixedPointConfig::default() };
    labels
        .par_iter()
        .flat_map(|label| [1usize, 2].into_par_iter().map(move |dim| (label, dim)))
        .map(|(label, dim)| {
            let a = CoefficientFn::from_label(label, dim)?;
            let g = Grid::new(dim, if dim == 1 { 64 } else { 16 }, 1.0)?;
            let name = format!("{label}.{dim}d");
            if !a.admissible().contains_open(0.0) {
                return Ok(Check::flag(name, true, "not applicable: 0 lies outside the admissible range"));
            }
            let zero = ScalarField::constant(g, 0.0);
            let (u, _) = global_solve(&zero, &a, 0.01, &cfg)?;
            Ok(Check::upper(name, u.sup_norm(), 1e-12))
        })
        .collect()
}

fn refined_config(c: &ExperimentConfig) -> ExperimentConfig {
    let mut r = c.clone();
    r.grid.n *= 2;
    r.scheme.steps *= 2;
    r.fixed_point.steps *= 2;
    r
}

fn carleson_ratio(c: &ExperimentConfig) -> Result<f64> {
    let out = execute(c)?;
    let u0 = c.initial_datum()?;
    Ok(carleson(&face_gradient(&out.u)?, u0.sup_norm(), c.horizon).bound_ratio)
}

fn carleson_stability() -> Result<Vec<Check>> {
    let names = ["heat_smoke", "periodic_medium", "anisotropic_2d", "time_ramp", "porous_2d"];
    let mut checks: Vec<Check> = names
        .par_iter()
        .map(|name| {
            let mut c = scenarios::by_name(name)?;
            c.diagnostics.clear();
            let coarse = carleson_ratio(&c)?;
            let fine = carleson_ratio(&refined_config(&c))?;
            Ok(Check::upper(format!("{name}.relative_change"), (fine - coarse).abs() / coarse, 0.1)
                .note(format!("ratio {coarse:.4} -> {fine:.4}")))
        })
        .collect::<Result<_>>()?;
    for dim in [1, 2] {
        let g = Grid::new(dim, 32, 1.0)?;
        let times = time_grid::uniform(0.0, 0.01, 16)?;
        let u = SpaceTimeField::constant_in_time(&ScalarField::constant(g, 3.0), &times)?;
        let c = carleson(&face_gradient(&u)?, 3.0, 0.01);
        checks.push(Check::upper(format!("constant.{dim}d"), c.value, 0.0));
    }
    Ok(checks)
}

fn long_time_decay() -> Result<Vec<Check>> {
    ["bump_decay_1d", "bump_decay_2d", "porous_bump_decay"]
        .par_iter()
        .map(|name| {
            let c = scenarios::by_name(name)?;
            let out = execute(&c)?;
            let d = out
                .manifest
                .diagnostics
                .iter()
                .find(|d| d.name == "decay")
                .ok_or_else(|| Error::InvalidParameter("decay diagnostic missing".into()))?;
            let mut k = Check::upper(format!("{name}.exponent_error"), d.value, d.bound);
            k.pass = d.pass;
            k.note = d.note.clone();
            Ok(k)
        })
        .collect()
}

fn gaussian_envelopes() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let env = EnvelopeConfig::default();
    for (dim, n, steps) in [(1usize, 256usize, 512usize), (2, 64, 256)] {
        let g = Grid::new(dim, n, 1.0)?;
        let horizon = g.validity_horizon(1.0);
        let times = time_grid::uniform(0.0, horizon, steps)?;
        let probes: Vec<f64> = [0.25, 0.5, 0.75, 1.0].iter().map(|s| s * horizon).collect();
        let cell = g.index((n / 2) as isize, if dim == 2 { (n / 2) as isize } else { 0 });
        let gamma = fundamental_solution(&MatrixField::identity(g), cell, &times, 0.5)?;
        let e = gaussian_envelope(&gamma.u, cell, &probes, &env)?;
        let amp = (4.0 * PI).powf(-0.5 * dim as f64);
        for (label, v) in [("lower_amplitude", e.lower_amplitude), ("upper_amplitude", e.upper_amplitude)] {
            checks.push(Check::upper(format!("id.{dim}d.{label}"), (v - amp).abs() / amp, 0.02).note(format!("{v:.5} vs {amp:.5}")));
        }
        for (label, v) in [("lower_rate", e.lower_rate), ("upper_rate", e.upper_rate)] {
            checks.push(Check::upper(format!("id.{dim}d.{label}"), (v - 0.25).abs() / 0.25, 0.02).note(format!("{v:.5} vs 0.25")));
        }
        checks.push(Check::upper(format!("id.{dim}d.mass"), e.mass_error, 1e-10));

        let a = MatrixField::isotropic(g, |x| 2.0 + (2.0 * PI * x[0]).cos())?;
        let gamma = fundamental_solution(&a, cell, &times, 1.0)?;
        let e = gaussian_envelope(&gamma.u, cell, &probes, &env)?;
        checks.push(Check::upper(format!("var.{dim}d.amplitude_ratio"), e.upper_amplitude / e.lower_amplitude, 10.0));
        checks.push(Check::upper(format!("var.{dim}d.rate_ratio"), e.lower_rate / e.upper_rate, 10.0));
        checks.push(Check::flag(format!("var.{dim}d.envelopes"), e.pass, format!("min value {:.3e}", e.min_value)));
    }
    Ok(checks)
}

fn mollification() -> Result<Vec<Check>> {
    let g = Grid::new(1, 256, 1.0)?;
    let u0 = datum("step", g, 1.0, 1.0)?;
    let dx = g.dx();
    let eps = [8.0 * dx, 4.0 * dx, 2.0 * dx];
    let cfg = FixedPointConfig { horizon: 0.005, ..FixedPointConfig::default() };
    let (_, rep) = mollify_solve(&u0, &CoefficientFn::porous(1, 1.0), &eps, 0.02, &cfg)?;
    let dists: Vec<f64> = rep.pairwise.iter().map(|p| p.2).collect();
    let mut checks = vec![Check::flag("monotone_cauchy", rep.monotone_cauchy, format!("L2 distances {}", sci(&dists)))];
    let top = rep.sup_norms.iter().cloned().fold(0.0, f64::max);
    checks.push(Check::upper("sup_norm", top, rep.data_sup + 1e-10));
    let hull_err = rep.hulls.iter().map(|h| (1.0 - h.lo).max(h.hi - 2.0).max(0.0)).fold(0.0, f64::max);
    checks.push(Check::upper("hull_excess", hull_err, 1e-6));
    Ok(checks)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn restart() -> Result<Vec<Check>> {
    let g = Grid::new(1, 128, 1.0)?;
    let u0 = datum("random_bandlimited:11", g, 1.0, 0.2)?;
    let a = CoefficientFn::ramped_porous(1, 1.0);
    let cfg = FixedPointConfig { horizon: 0.005, ..FixedPointConfig::default() };
    let t_end = 0.02;
    let (long, _) = global_solve(&u0, &a, t_end, &cfg)?;
    let (short, _) = global_solve(&u0, &a, 0.5 * t_end, &cfg)?;
    let prefix_exact = short.len() <= long.len()
        && (0..short.len()).all(|k| short.times()[k] == long.times()[k] && short.frame(k) == long.frame(k));
    let mut checks = vec![Check::flag("prefix.frame_exact", prefix_exact, format!("{} shared frames", short.len()))];

    let k = 40;
    let tau = long.times()[k];
    let (tail, _) = global_solve(&long.frame_field(k), &a.shifted(tau), t_end - tau, &cfg)?;
    let shift_gap = max_abs_diff(tail.last_field().values(), long.last_field().values());
    let scheme = direct_step_error(&u0, &a, long.times(), cfg.theta)?;
    checks.push(Check::upper("time_shift.gap", shift_gap, 5.0 * scheme).note(format!("restart at t = {tau:.5}; direct step-halving error {scheme:.3e}")));
    Ok(checks)
}

fn z_smallness() -> Result<Vec<Check>> {
    let runs: [(&str, usize, &str, &str, f64, f64); 5] = [
        ("porous1", 1, "porous:1", "cos", 1.0, 0.1),
        ("porous2", 1, "porous:2", "random_bandlimited:5", 1.0, 0.2),
        ("ramped_porous", 1, "ramped_porous:1", "random_bandlimited:11", 1.0, 0.2),
        ("porous1_2d", 2, "porous:1", "cos", 1.0, 0.1),
        ("step", 1, "porous:1", "step", 1.0, 1.0),
    ];
    let cfg = FixedPointConfig { horizon: 0.001, steps: 512, ..FixedPointConfig::default() };
    runs.par_iter()
        .map(|&(name, dim, label, preset, c, amp)| {
            let g = Grid::new(dim, if dim == 1 { 128 } else { 32 }, 1.0)?;
            let u0 = datum(preset, g, c, amp)?;
            let a = CoefficientFn::from_label(label, dim)?;
            let (u, _) = global_solve(&u0, &a, cfg.horizon, &cfg)?;
            let t_list: Vec<f64> = (0..=4).map(|j| cfg.horizon * 10f64.powf(-0.5 * j as f64)).collect();
            let s = z_gradient_smallness(&face_gradient(&u)?, cfg.q, &t_list)?;
            if preset == "step" {
                let mut k = Check::upper(format!("{name}.ratio"), s.ratio, 0.2);
                k.bound = "n/a".into();
                k.pass = true;
                return Ok(k.note("not applicable to raw jump data; reported for reference"));
            }
            Ok(Check::upper(format!("{name}.ratio"), s.ratio, 0.2))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_ids_are_consecutive() {
        for (i, c) in CRITERIA.iter().enumerate() {
            assert_eq!(c.0 as usize, i + 1);
        }
        assert!(run_one(99).is_none());
    }

    #[test]
    fn summary_reports_first_failure() {
        let c = Criterion {
            id: 3,
            title: "t",
            checks: vec![Check::upper("ok", 0.0, 1.0), Check::upper("bad", 2.0, 1.0)],
        };
        assert!(!c.pass());
        let s = c.summary();
        assert!(s.contains("FAIL") && s.contains("bad"), "{s}");
    }
}
