//! Executes one experiment: solve, diagnose, write artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Diagnostic, ExperimentConfig, Method};
use crate::error::{Error, Result};
use crate::field::{compose_frame, io, CoefficientFn, MatrixSeries, ScalarField, SpaceTimeField};
use crate::heat::{heat_extend, heat_gradient_sup, HeatGradientConfig};
use crate::linear::{face_gradient, solve_linear, LinearProblem, MatrixCoefficient, TestFunction};
use crate::norms::{carleson, long_time_decay, range_invariance, z_gradient_smallness};
use crate::quasilinear::{direct_solve, global_solve, oracle_gap, quasilinear_residual, FixedPointConfig, SolveReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticResult {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl DiagnosticResult {
    fn upper(name: &str, value: f64, bound: f64) -> Self {
        DiagnosticResult {
            name: name.to_string(),
            value,
            bound,
            pass: value <= bound,
            note: None,
        }
    }

    fn failed(name: &str, note: String) -> Self {
        DiagnosticResult {
            name: name.to_string(),
            value: f64::NAN,
            bound: f64::NAN,
            pass: false,
            note: Some(note),
        }
    }

    fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub seed: u64,
    /// SHA-256 of the canonical TOML form of the config.
    pub config_hash: String,
    /// SHA-256 of the binary dump of the solution.
    pub field_hash: String,
    /// SHA-256 of every emitted file other than the manifest.
    pub artifacts: BTreeMap<String, String>,
    pub wall_time_s: f64,
    /// Glued windows of a fixed-point run.
    #[serde(default)]
    pub windows: Vec<(f64, f64)>,
    pub diagnostics: Vec<DiagnosticResult>,
    pub pass: bool,
}

/// In-memory result of [`execute`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub u: SpaceTimeField,
    pub solve_report: Option<SolveReport>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn fixed_point_config(cfg: &ExperimentConfig) -> FixedPointConfig {
    FixedPointConfig {
        theta: cfg.scheme.theta,
        ..cfg.fixed_point.clone()
    }
}

/// `A(t, x) = a(t, x, u0(x))` on every time.
fn frozen_series(a: &CoefficientFn, u0: &ScalarField, times: &[f64]) -> Result<MatrixSeries> {
    let frames = times
        .iter()
        .map(|&t| compose_frame(a, t, u0.grid(), u0.values()))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatrixSeries {
        times: times.to_vec(),
        frames,
    })
}

fn solve(cfg: &ExperimentConfig, a: &CoefficientFn, u0: &ScalarField) -> Result<(SpaceTimeField, Option<SolveReport>)> {
    let theta = cfg.scheme.theta;
    match cfg.scheme.method {
        Method::Heat => Ok((heat_extend(u0, &cfg.times()?)?.frames, None)),
        Method::Linear => {
            let times = cfg.times()?;
            let series = frozen_series(a, u0, &times)?;
            let p = LinearProblem::new(MatrixCoefficient::Series(series), None, u0.clone(), times, theta)?;
            Ok((solve_linear(&p)?.u, None))
        }
        Method::Direct => Ok((direct_solve(u0, a, &cfg.times()?, theta, 2)?, None)),
        Method::FixedPoint => {
            let (u, rep) = global_solve(u0, a, cfg.horizon, &fixed_point_config(cfg))?;
            Ok((u, Some(rep)))
        }
    }
}

/// Times with every interval split in half.
fn refined(times: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * times.len());
    for w in times.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(*times.last().unwrap());
    out
}

/// Sup distance between the direct solve on `times` and on the halved
/// steps, compared on `times`.
pub fn direct_step_error(u0: &ScalarField, a: &CoefficientFn, times: &[f64], theta: f64) -> Result<f64> {
    let coarse = direct_solve(u0, a, times, theta, 2)?;
    let fine = direct_solve(u0, a, &refined(times), theta, 2)?;
    let mut e: f64 = 0.0;
    for k in 0..coarse.len() {
        for (x, y) in coarse.frame(k).iter().zip(fine.frame(2 * k)) {
            e = e.max((x - y).abs());
        }
    }
    Ok(e)
}

fn evaluate(
    d: &Diagnostic,
    cfg: &ExperimentConfig,
    a: &CoefficientFn,
    u0: &ScalarField,
    u: &SpaceTimeField,
    rep: Option<&SolveReport>,
) -> Result<Vec<DiagnosticResult>> {
    let theta = cfg.scheme.theta;
    let norm = u0.sup_norm();
    Ok(match d {
        Diagnostic::Range { tol, hull_slack } => {
            let osc = u0.range()?.width();
            let r = range_invariance(u, u0, tol * norm, hull_slack.unwrap_or(0.0) * osc)?;
            let mut rows = vec![DiagnosticResult::upper("range.contained", r.excess, tol * norm)];
            if let Some(h) = hull_slack {
                rows.push(DiagnosticResult::upper("range.hull", r.shrinkage, h * osc));
            }
            rows
        }
        Diagnostic::Mass { tol } => {
            let m0 = u0.mean();
            let drift = (0..u.len())
                .map(|k| (u.frame_field(k).mean() - m0).abs())
                .fold(0.0, f64::max);
            vec![DiagnosticResult::upper("mass", drift, tol * m0.abs().max(1.0))]
        }
        Diagnostic::Oracle { factor } => {
            let gap = oracle_gap(u, a, theta)?;
            let scheme = direct_step_error(u0, a, u.times(), theta)?;
            vec![DiagnosticResult::upper("oracle", gap, factor * scheme.max(1e-14))
                .with_note(format!("direct step-halving error {scheme:.3e}"))]
        }
        Diagnostic::Contraction { max } => {
            let m = rep.map(|r| r.max_contraction()).unwrap_or(0.0);
            let mut row = DiagnosticResult::upper("contraction", m, *max);
            row.pass = m < *max;
            vec![row]
        }
        Diagnostic::HeatGradient { slack } => {
            let hc = HeatGradientConfig {
                slack: slack * std::f64::consts::FRAC_1_SQRT_2,
                ..HeatGradientConfig::default()
            };
            let h = heat_gradient_sup(u0, cfg.horizon, &hc);
            vec![DiagnosticResult::upper("heat_gradient", h.sup, h.bound)]
        }
        Diagnostic::Carleson { max_ratio } => {
            let c = carleson(&face_gradient(u)?, norm, cfg.horizon);
            vec![DiagnosticResult::upper("carleson", c.bound_ratio, *max_ratio)]
        }
        Diagnostic::ZSmallness { decades, t_max, max_ratio } => {
            let t_max = t_max.unwrap_or(cfg.horizon).min(u.final_time());
            let count = (2.0 * decades).round() as i32;
            let t_list: Vec<f64> = (0..=count).map(|j| t_max * 10f64.powf(-0.5 * j as f64)).collect();
            match z_gradient_smallness(&face_gradient(u)?, cfg.fixed_point.q, &t_list) {
                Ok(s) => vec![DiagnosticResult::upper("z_smallness", s.ratio, *max_ratio)],
                Err(e @ Error::InsufficientResolution(_)) => vec![DiagnosticResult::failed("z_smallness", e.to_string())],
                Err(e) => return Err(e),
            }
        }
        Diagnostic::Decay { expected, tol } => {
            let lambda = compose_frame(a, 0.0, u0.grid(), u0.values())?.min_ellipticity();
            let t_valid = u.grid().validity_horizon(lambda);
            match long_time_decay(u, cfg.u0.offset, t_valid / 8.0, lambda) {
                Ok(r) => {
                    let p = r.fitted_exponent.unwrap_or(f64::NAN);
                    let err = (p - expected).abs();
                    let mut row = DiagnosticResult::upper("decay", err, *tol)
                        .with_note(format!("fitted exponent {p:.4} on [{:.3e}, {:.3e}]", r.fit_window.0, r.fit_window.1));
                    row.pass = err <= *tol;
                    vec![row]
                }
                Err(e @ Error::FitWindowEmpty(_)) => vec![DiagnosticResult::failed("decay", e.to_string())],
                Err(e) => return Err(e),
            }
        }
        Diagnostic::WeakResidual { max } => {
            let tests = TestFunction::default_set(u.grid().dim(), u.final_time());
            let w = quasilinear_residual(u, a, theta, &tests)?;
            vec![DiagnosticResult::upper("weak_residual", w.constant, *max)
                .with_note(format!("largest residual {:.3e}", w.max))]
        }
    })
}

/// Solves and diagnoses without touching the file system.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let a = cfg.coefficient_fn()?;
    let u0 = cfg.initial_datum()?;
    let (u, rep) = solve(cfg, &a, &u0).map_err(|e| e.in_scenario(&cfg.scenario))?;
    let mut diagnostics = Vec::new();
    for d in &cfg.diagnostics {
        diagnostics.extend(evaluate(d, cfg, &a, &u0, &u, rep.as_ref()).map_err(|e| e.in_scenario(&cfg.scenario))?);
    }
    let pass = diagnostics.iter().all(|d| d.pass);
    let manifest = RunManifest {
        scenario: cfg.scenario.clone(),
        seed: cfg.seed,
        config_hash: sha256_hex(cfg.to_toml_string().as_bytes()),
        field_hash: sha256_hex(&io::to_binary(&u)),
        artifacts: BTreeMap::new(),
        wall_time_s: start.elapsed().as_secs_f64(),
        windows: rep.as_ref().map(|r| r.windows.iter().map(|w| (w.start, w.end)).collect()).unwrap_or_default(),
        diagnostics,
        pass,
    };
    Ok(RunOutcome {
        manifest,
        u,
        solve_report: rep,
    })
}

fn diagnostics_csv(rows: &[DiagnosticResult]) -> String {
    let mut s = String::from("name,value,bound,pass\n");
    for r in rows {
        s.push_str(&format!("{},{:e},{:e},{}\n", r.name, r.value, r.bound, r.pass));
    }
    s
}

/// Runs `cfg` and writes `u.qlf`, `u_final.csv`, `diagnostics.csv`, the
/// solve report when there is one, the resolved config and
/// `manifest.json` into `dir`.
pub fn run_in(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutcome> {
    let mut out = execute(cfg)?;
    fs::create_dir_all(dir)?;
    let mut files: Vec<(&str, Vec<u8>)> = vec![
        ("config.toml", cfg.to_toml_string().into_bytes()),
        ("u.qlf", io::to_binary(&out.u)),
        ("diagnostics.csv", diagnostics_csv(&out.manifest.diagnostics).into_bytes()),
    ];
    let last = out.u.len() - 1;
    let final_frame = SpaceTimeField::scalar(*out.u.grid(), vec![out.u.final_time()], vec![out.u.frame(last).to_vec()])?;
    let mut csv = Vec::new();
    io::write_csv(&final_frame, &mut csv)?;
    files.push(("u_final.csv", csv));
    if let Some(rep) = &out.solve_report {
        files.push(("solve_report.json", serde_json::to_vec_pretty(rep)?));
    }
    for (name, bytes) in &files {
        fs::write(dir.join(name), bytes)?;
        out.manifest.artifacts.insert(name.to_string(), sha256_hex(bytes));
    }
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&out.manifest)?)?;
    Ok(out)
}

/// Loads the config at `path` and runs it into its resolved output dir.
pub fn run(path: &Path) -> Result<(RunManifest, PathBuf)> {
    let cfg = ExperimentConfig::load(path)?;
    let dir = cfg.resolved_output_dir();
    let out = run_in(&cfg, &dir)?;
    Ok((out.manifest, dir))
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let p = if path.is_dir() { path.join("manifest.json") } else { path.to_path_buf() };
    let text = fs::read_to_string(&p)?;
    Ok(serde_json::from_str(&text)?)
}

/// Human-readable summary of a manifest.
pub fn inspect(m: &RunManifest) -> String {
    let mut s = format!(
        "scenario  {}\nseed      {}\nconfig    {}\nfield     {}\nwall time {:.3} s\nwindows   {}\nresult    {}\n\n",
        m.scenario,
        m.seed,
        m.config_hash,
        m.field_hash,
        m.wall_time_s,
        m.windows.len(),
        if m.pass { "pass" } else { "FAIL" }
    );
    s.push_str(&format!("{:<18} {:>12} {:>12}  {}\n", "diagnostic", "value", "bound", "pass"));
    for d in &m.diagnostics {
        s.push_str(&format!("{:<18} {:>12.4e} {:>12.4e}  {}", d.name, d.value, d.bound, if d.pass { "yes" } else { "NO" }));
        if let Some(n) = &d.note {
            s.push_str(&format!("  ({n})"));
        }
        s.push('\n');
    }
    s.push_str("\nartifacts\n");
    for (k, v) in &m.artifacts {
        s.push_str(&format!("  {k:<18} {v}\n"));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub name: String,
    pub left: f64,
    pub right: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestDiff {
    pub same_config: bool,
    pub same_field: bool,
    pub entries: Vec<DiffEntry>,
    /// Diagnostics present in only one manifest.
    pub unmatched: Vec<String>,
    pub within: bool,
}

/// Compares diagnostic values with `|l - r| <= abs + rel * max(|l|, |r|)`.
pub fn diff(left: &RunManifest, right: &RunManifest, rel: f64, abs: f64) -> ManifestDiff {
    let mut entries = Vec::new();
    let mut unmatched = Vec::new();
    let mut seen = vec![false; right.diagnostics.len()];
    for l in &left.diagnostics {
        match right.diagnostics.iter().enumerate().find(|(i, r)| !seen[*i] && r.name == l.name) {
            Some((i, r)) => {
                seen[i] = true;
                let within = (l.value.is_nan() && r.value.is_nan())
                    || (l.value - r.value).abs() <= abs + rel * l.value.abs().max(r.value.abs());
                entries.push(DiffEntry {
                    name: l.name.clone(),
                    left: l.value,
                    right: r.value,
                    within,
                });
            }
            None => unmatched.push(l.name.clone()),
        }
    }
    for (i, r) in right.diagnostics.iter().enumerate() {
        if !seen[i] {
            unmatched.push(r.name.clone());
        }
    }
    let within = unmatched.is_empty() && entries.iter().all(|e| e.within);
    ManifestDiff {
        same_config: left.config_hash == right.config_hash,
        same_field: left.field_hash == right.field_hash,
        entries,
        unmatched,
        within,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenarios;

    #[test]
    fn smoke_run_writes_hashed_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = scenarios::by_name("heat_smoke").unwrap();
        let out = run_in(&cfg, dir.path()).unwrap();
        assert!(out.manifest.pass, "{}", inspect(&out.manifest));
        for (name, hash) in &out.manifest.artifacts {
            let bytes = fs::read(dir.path().join(name)).unwrap();
            assert_eq!(&sha256_hex(&bytes), hash);
        }
        let back = load_manifest(dir.path()).unwrap();
        assert_eq!(back, out.manifest);
        let field = io::read_binary(&fs::read(dir.path().join("u.qlf")).unwrap()[..]).unwrap();
        assert_eq!(field, out.u);
    }

    #[test]
    fn diff_flags_changed_values() {
        let cfg = scenarios::by_name("heat_smoke").unwrap();
        let a = execute(&cfg).unwrap().manifest;
        let mut b = a.clone();
        let d = diff(&a, &b, 0.0, 0.0);
        assert!(d.within && d.same_field);
        b.diagnostics[0].value += 1.0;
        b.diagnostics.pop();
        let d = diff(&a, &b, 1e-6, 0.0);
        assert!(!d.within);
        assert_eq!(d.unmatched.len(), 1);
    }
}
