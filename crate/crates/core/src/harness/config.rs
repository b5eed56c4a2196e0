//! Experiment descriptors read from TOML.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{time_grid, CoefficientFn, Grid, ScalarField};
use crate::quasilinear::FixedPointConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    /// Final time `T_end`.
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub grid: GridConfig,
    pub coefficient: CoefficientConfig,
    pub u0: U0Config,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L", default = "one")]
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct U0Config {
    /// `cos`, `step`, `bump:w`, `smoothed_sign:delta`, `constant`,
    /// `random_bandlimited` or `random_bandlimited:seed`.
    pub preset: String,
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Spectral heat extension; only for the identity coefficient.
    Heat,
    /// Linear solve with `A(t, x) = a(t, x, u0(x))`.
    Linear,
    /// Semi-implicit stepping with two Picard corrections.
    Direct,
    /// Windowed fixed-point construction.
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeRule {
    Uniform,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub method: Method,
    pub theta: f64,
    /// Steps over the horizon; ignored by the fixed-point method, which
    /// uses `fixed_point.steps` per window.
    pub steps: usize,
    pub time_grid: TimeRule,
    /// Ratio of consecutive steps for the geometric rule.
    pub sigma: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            method: Method::Linear,
            theta: 1.0,
            steps: 64,
            time_grid: TimeRule::Uniform,
            sigma: 0.9,
        }
    }
}

/// Checks run on a finished solve. Each yields one or more result rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Diagnostic {
    /// Range containment to `tol * |u0|_inf`, and hull equality to
    /// `hull_slack * osc(u0)` when a slack is given.
    Range {
        #[serde(default = "default_range_tol")]
        tol: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hull_slack: Option<f64>,
    },
    /// Conservation of the mean.
    Mass {
        #[serde(default = "default_mass_tol")]
        tol: f64,
    },
    /// Gap to the direct solver relative to its own step-halving error.
    Oracle {
        #[serde(default = "default_oracle_factor")]
        factor: f64,
    },
    /// Largest measured contraction factor.
    Contraction {
        #[serde(default = "one")]
        max: f64,
    },
    /// `sup sqrt(t) |grad e^{t Laplacian} u0| <= (1 + slack) |u0|_inf / sqrt 2`.
    HeatGradient {
        #[serde(default = "default_heat_slack")]
        slack: f64,
    },
    /// Carleson functional relative to `|u0|_inf`.
    Carleson {
        #[serde(default = "default_carleson_max")]
        max_ratio: f64,
    },
    /// Gradient Z-norm over `decades` decades below `t_max`.
    ZSmallness {
        #[serde(default = "default_decades")]
        decades: f64,
        #[serde(default)]
        t_max: Option<f64>,
        #[serde(default = "default_smallness")]
        max_ratio: f64,
    },
    /// Algebraic decay of `|u - c|_inf` with `c` the datum offset.
    Decay {
        expected: f64,
        #[serde(default = "default_decay_tol")]
        tol: f64,
    },
    /// Weak residual constant of the quasilinear equation.
    WeakResidual {
        #[serde(default = "default_weak_max")]
        max: f64,
    },
}

fn default_range_tol() -> f64 {
    1e-8
}
fn default_mass_tol() -> f64 {
    1e-10
}
fn default_oracle_factor() -> f64 {
    10.0
}
fn default_heat_slack() -> f64 {
    0.05
}
fn default_carleson_max() -> f64 {
    2.0
}
fn default_decades() -> f64 {
    2.0
}
fn default_smallness() -> f64 {
    0.2
}
fn default_decay_tol() -> f64 {
    0.15
}
fn default_weak_max() -> f64 {
    10.0
}

fn cfg_err(path: &str, message: impl Into<String>) -> Error {
    Error::config(path, message)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let path = e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_default();
            cfg_err(&path, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(&path.display().to_string(), format!("cannot read: {e}")))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario.trim().is_empty() {
            return Err(cfg_err("scenario", "must not be empty"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(cfg_err("seed", format!("must not exceed {}, got {}", i64::MAX, self.seed)));
        }
        let g = &self.grid;
        if !(g.dim == 1 || g.dim == 2) {
            return Err(cfg_err("grid.dim", format!("must be 1 or 2, got {}", g.dim)));
        }
        if g.n < 4 || !g.n.is_power_of_two() {
            return Err(cfg_err("grid.N", format!("must be a power of two >= 4, got {}", g.n)));
        }
        if !(g.length > 0.0 && g.length.is_finite()) {
            return Err(cfg_err("grid.L", format!("must be positive, got {}", g.length)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(cfg_err("horizon", format!("must be positive, got {}", self.horizon)));
        }
        let a = self.coefficient_fn()?;
        let u0 = self.initial_datum()?;
        let s = &self.scheme;
        if !(0.5..=1.0).contains(&s.theta) {
            return Err(cfg_err("scheme.theta", format!("must lie in [0.5, 1], got {}", s.theta)));
        }
        if s.steps == 0 {
            return Err(cfg_err("scheme.steps", "must be positive"));
        }
        if !(s.sigma > 0.0 && s.sigma < 1.0) {
            return Err(cfg_err("scheme.sigma", format!("must lie in (0, 1), got {}", s.sigma)));
        }
        if s.method == Method::Heat && a.label() != "identity" {
            return Err(cfg_err("scheme.method", "the heat method needs the identity coefficient"));
        }
        self.validate_fixed_point()?;
        let o = a.admissible();
        let r = u0.range()?;
        if !o.strictly_contains(&r) {
            return Err(cfg_err(
                "u0",
                format!("range [{}, {}] is not strictly inside ({}, {}) of `{}`", r.lo, r.hi, o.lo, o.hi, a.label()),
            ));
        }
        for (i, d) in self.diagnostics.iter().enumerate() {
            let path = format!("diagnostics[{i}]");
            let positive = |name: &str, v: f64| {
                if v > 0.0 && v.is_finite() {
                    Ok(())
                } else {
                    Err(cfg_err(&format!("{path}.{name}"), format!("must be positive, got {v}")))
                }
            };
            match d {
                Diagnostic::Range { tol, hull_slack } => {
                    positive("tol", *tol)?;
                    if let Some(h) = hull_slack {
                        positive("hull_slack", *h)?;
                    }
                }
                Diagnostic::Mass { tol } => positive("tol", *tol)?,
                Diagnostic::Oracle { factor } => {
                    positive("factor", *factor)?;
                    if s.method != Method::FixedPoint {
                        return Err(cfg_err(&path, "the oracle diagnostic needs method = \"fixed_point\""));
                    }
                }
                Diagnostic::Contraction { max } => {
                    positive("max", *max)?;
                    if s.method != Method::FixedPoint {
                        return Err(cfg_err(&path, "the contraction diagnostic needs method = \"fixed_point\""));
                    }
                }
                Diagnostic::HeatGradient { slack } => positive("slack", *slack)?,
                Diagnostic::Carleson { max_ratio } => positive("max_ratio", *max_ratio)?,
                Diagnostic::ZSmallness { decades, t_max, max_ratio } => {
                    positive("decades", *decades)?;
                    positive("max_ratio", *max_ratio)?;
                    if let Some(t) = t_max {
                        positive("t_max", *t)?;
                    }
                }
                Diagnostic::Decay { expected, tol } => {
                    positive("tol", *tol)?;
                    if !expected.is_finite() {
                        return Err(cfg_err(&format!("{path}.expected"), "must be finite"));
                    }
                }
                Diagnostic::WeakResidual { max } => positive("max", *max)?,
            }
        }
        Ok(())
    }

    fn validate_fixed_point(&self) -> Result<()> {
        let fp = &self.fixed_point;
        let n2 = self.grid.dim as f64 + 2.0;
        if !(fp.q > n2) {
            return Err(cfg_err("fixed_point.q", format!("must exceed n + 2 = {n2}, got {}", fp.q)));
        }
        if let Some(r) = fp.r {
            if !(r > 0.0) {
                return Err(cfg_err("fixed_point.r", format!("must be positive, got {r}")));
            }
        }
        if !(fp.horizon > 0.0 && fp.horizon.is_finite()) {
            return Err(cfg_err("fixed_point.T", format!("must be positive, got {}", fp.horizon)));
        }
        if fp.max_iters == 0 {
            return Err(cfg_err("fixed_point.max_iters", "must be positive"));
        }
        if !(fp.fp_tol > 0.0) {
            return Err(cfg_err("fixed_point.fp_tol", format!("must be positive, got {}", fp.fp_tol)));
        }
        if fp.contraction_window == 0 {
            return Err(cfg_err("fixed_point.contraction_window", "must be positive"));
        }
        if fp.steps == 0 {
            return Err(cfg_err("fixed_point.steps", "must be positive"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.n, self.grid.length).map_err(|e| cfg_err("grid", e.to_string()))
    }

    pub fn coefficient_fn(&self) -> Result<CoefficientFn> {
        CoefficientFn::from_label(&self.coefficient.label, self.grid.dim)
            .map_err(|e| cfg_err("coefficient.label", e.to_string()))
    }

    pub fn initial_datum(&self) -> Result<ScalarField> {
        self.u0.build(self.grid()?, self.seed).map_err(|e| match e {
            Error::Config { .. } => e,
            other => cfg_err("u0.preset", other.to_string()),
        })
    }

    /// Time grid of the linear, direct and heat methods.
    pub fn times(&self) -> Result<Vec<f64>> {
        match self.scheme.time_grid {
            TimeRule::Uniform => time_grid::uniform(0.0, self.horizon, self.scheme.steps),
            TimeRule::Geometric => time_grid::geometric(0.0, self.horizon, self.scheme.sigma, self.scheme.steps),
        }
    }

    /// Output directory after applying `QLPDE_OUTPUT_DIR`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        if let Ok(dir) = std::env::var("QLPDE_OUTPUT_DIR") {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(&self.scenario);
            }
        }
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("qlpde-out").join(&self.scenario))
    }
}

impl U0Config {
    pub fn new(preset: &str, offset: f64, amplitude: f64) -> Self {
        U0Config {
            preset: preset.to_string(),
            offset,
            amplitude,
        }
    }

    pub fn build(&self, grid: Grid, seed: u64) -> Result<ScalarField> {
        let (name, arg) = match self.preset.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (self.preset.trim(), None),
        };
        let num = |what: &str| -> Result<f64> {
            let raw = arg.ok_or_else(|| cfg_err("u0.preset", format!("`{name}` needs a {what}")))?;
            raw.parse::<f64>()
                .map_err(|_| cfg_err("u0.preset", format!("cannot parse {what} `{raw}`")))
        };
        let l = grid.length();
        let k = 2.0 * PI / l;
        let dim = grid.dim();
        let (c, amp) = (self.offset, self.amplitude);
        match name {
            "constant" => Ok(ScalarField::constant(grid, c)),
            "cos" => ScalarField::from_fn(grid, |x| {
                let s = if dim == 1 { (k * x[0]).cos() } else { 0.5 * ((k * x[0]).cos() + (k * x[1]).cos()) };
                c + amp * s
            }),
            "step" => ScalarField::from_fn(grid, |x| c + if x[0] >= 0.5 * l { amp } else { 0.0 }),
            "bump" => {
                let w = num("width")?;
                if !(w > 0.0 && w < 0.5) {
                    return Err(cfg_err("u0.preset", format!("bump width must lie in (0, 0.5), got {w}")));
                }
                let s2 = (w * l).powi(2);
                let centre = [0.5 * l; 2];
                ScalarField::from_fn(grid, |x| c + amp * (-grid.periodic_dist2(x, centre) / (2.0 * s2)).exp())
            }
            "smoothed_sign" => {
                let d = num("width")?;
                if !(d > 0.0) {
                    return Err(cfg_err("u0.preset", format!("smoothing width must be positive, got {d}")));
                }
                ScalarField::from_fn(grid, |x| c + amp * ((k * x[0]).sin() / d).tanh())
            }
            "random_bandlimited" => {
                let s = match arg {
                    Some(_) => num("seed")? as u64,
                    None => seed,
                };
                Ok(random_bandlimited(grid, s, 4, c, amp))
            }
            _ => Err(cfg_err(
                "u0.preset",
                format!(
                    "unknown preset `{}`; known: constant, cos, step, bump:w, smoothed_sign:delta, random_bandlimited[:seed]",
                    self.preset
                ),
            )),
        }
    }
}

/// Random trigonometric polynomial with modes `|k_i| <= kmax`, zero mean,
/// scaled to unit sup norm, then `c + amp * p`.
pub fn random_bandlimited(grid: Grid, seed: u64, kmax: i32, c: f64, amp: f64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ky = if grid.dim() == 1 { 0 } else { kmax };
    let mut modes = Vec::new();
    for i in -kmax..=kmax {
        for j in -ky..=ky {
            if (i, j) != (0, 0) {
                modes.push((i, j, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)));
            }
        }
    }
    let k = 2.0 * PI / grid.length();
    let raw: Vec<f64> = (0..grid.cells())
        .map(|cell| {
            let x = grid.coords(cell);
            modes
                .iter()
                .map(|&(i, j, a, ph)| a * (k * (i as f64 * x[0] + j as f64 * x[1]) + ph).cos())
                .sum()
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let sup = raw.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    ScalarField::new(grid, raw.iter().map(|v| c + amp * (v - mean) / sup).collect()).expect("finite values")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
scenario = "t"
horizon = 0.1
[grid]
dim = 1
N = 32
[coefficient]
label = "porous:1"
[u0]
preset = "cos"
offset = 1.0
amplitude = 0.1
[scheme]
method = "fixed_point"
[fixed_point]
q = 4.0
T = 0.01
[[diagnostics]]
name = "range"
[[diagnostics]]
name = "decay"
expected = -0.5
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(BASE).unwrap();
        assert_eq!(cfg.fixed_point.horizon, 0.01);
        assert_eq!(cfg.diagnostics.len(), 2);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
    }

    fn path_of(text: &str) -> String {
        match ExperimentConfig::from_toml_str(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(path_of(&BASE.replace("q = 4.0", "q = 2.0")), "fixed_point.q");
        assert_eq!(path_of(&BASE.replace("N = 32", "N = 48")), "grid.N");
        assert_eq!(path_of(&BASE.replace("porous:1", "porous")), "coefficient.label");
        assert_eq!(path_of(&BASE.replace("preset = \"cos\"", "preset = \"wave\"")), "u0.preset");
        assert_eq!(path_of(&BASE.replace("offset = 1.0", "offset = 0.0")), "u0");
    }

    #[test]
    fn bandlimited_is_reproducible_and_normalized() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let a = random_bandlimited(g, 7, 3, 0.0, 1.0);
        let b = random_bandlimited(g, 7, 3, 0.0, 1.0);
        assert_eq!(a, b);
        assert!((a.sup_norm() - 1.0).abs() < 1e-12);
        assert!(a.mean().abs() < 1e-12);
        assert_ne!(a, random_bandlimited(g, 8, 3, 0.0, 1.0));
    }
}
