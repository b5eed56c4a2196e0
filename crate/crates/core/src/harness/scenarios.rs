//! Built-in experiment descriptors.

use super::config::{CoefficientConfig, Diagnostic, ExperimentConfig, GridConfig, Method, SchemeConfig, U0Config};
use crate::error::{Error, Result};
use crate::quasilinear::FixedPointConfig;

struct Spec {
    name: &'static str,
    dim: usize,
    n: usize,
    label: &'static str,
    u0: (&'static str, f64, f64),
    horizon: f64,
    method: Method,
    /// Steps over the horizon, or per window for the fixed-point method.
    steps: usize,
    window: f64,
}

fn build(s: Spec, diagnostics: Vec<Diagnostic>) -> ExperimentConfig {
    ExperimentConfig {
        scenario: s.name.to_string(),
        seed: 0,
        horizon: s.horizon,
        output_dir: None,
        grid: GridConfig { dim: s.dim, n: s.n, length: 1.0 },
        coefficient: CoefficientConfig { label: s.label.to_string() },
        u0: U0Config::new(s.u0.0, s.u0.1, s.u0.2),
        scheme: SchemeConfig {
            method: s.method,
            steps: s.steps,
            ..SchemeConfig::default()
        },
        fixed_point: FixedPointConfig {
            horizon: s.window,
            steps: if s.method == Method::FixedPoint { s.steps } else { FixedPointConfig::default().steps },
            ..FixedPointConfig::default()
        },
        diagnostics,
    }
}

fn range() -> Diagnostic {
    Diagnostic::Range { tol: 1e-8, hull_slack: None }
}

fn mass() -> Diagnostic {
    Diagnostic::Mass { tol: 1e-10 }
}

fn fixed_point_checks() -> Vec<Diagnostic> {
    vec![
        range(),
        mass(),
        Diagnostic::Contraction { max: 1.0 },
        Diagnostic::Oracle { factor: 10.0 },
        Diagnostic::WeakResidual { max: 10.0 },
    ]
}

/// Every built-in scenario, in a fixed order.
pub fn library() -> Vec<ExperimentConfig> {
    use Method::*;
    let mut out = vec![
        build(
            Spec {
                name: "heat_smoke",
                dim: 1,
                n: 64,
                label: "identity",
                u0: ("cos", 0.0, 1.0),
                horizon: 0.01,
                method: Heat,
                steps: 32,
                window: 0.005,
            },
            vec![range(), mass(), Diagnostic::HeatGradient { slack: 0.05 }, Diagnostic::Carleson { max_ratio: 2.0 }],
        ),
        build(
            Spec {
                name: "periodic_medium",
                dim: 1,
                n: 128,
                label: "periodic_medium:1",
                u0: ("random_bandlimited:3", 0.0, 1.0),
                horizon: 0.02,
                method: Linear,
                steps: 64,
                window: 0.005,
            },
            vec![range(), mass(), Diagnostic::Carleson { max_ratio: 2.0 }],
        ),
        build(
            Spec {
                name: "anisotropic_2d",
                dim: 2,
                n: 32,
                label: "anisotropic:0.5",
                u0: ("cos", 0.0, 1.0),
                horizon: 0.02,
                method: Linear,
                steps: 32,
                window: 0.005,
            },
            vec![mass(), Diagnostic::Carleson { max_ratio: 2.0 }],
        ),
        build(
            Spec {
                name: "time_ramp",
                dim: 1,
                n: 128,
                label: "time_ramp:1",
                u0: ("bump:0.05", 0.0, 1.0),
                horizon: 0.05,
                method: Direct,
                steps: 64,
                window: 0.005,
            },
            vec![range(), mass()],
        ),
        build(
            Spec {
                name: "porous_local",
                dim: 1,
                n: 128,
                label: "porous:1",
                u0: ("cos", 1.0, 0.1),
                horizon: 0.005,
                method: FixedPoint,
                steps: 512,
                window: 0.005,
            },
            {
                let mut d = fixed_point_checks();
                d.push(Diagnostic::ZSmallness { decades: 2.0, t_max: None, max_ratio: 0.2 });
                d
            },
        ),
        build(
            Spec {
                name: "porous_global",
                dim: 1,
                n: 128,
                label: "porous:1",
                u0: ("cos", 1.0, 0.1),
                horizon: 0.5,
                method: FixedPoint,
                steps: 32,
                window: 0.005,
            },
            fixed_point_checks(),
        ),
        build(
            Spec {
                name: "porous2_global",
                dim: 1,
                n: 128,
                label: "porous:2",
                u0: ("random_bandlimited:5", 1.0, 0.2),
                horizon: 0.1,
                method: FixedPoint,
                steps: 32,
                window: 0.005,
            },
            fixed_point_checks(),
        ),
        build(
            Spec {
                name: "porous_2d",
                dim: 2,
                n: 32,
                label: "porous:1",
                u0: ("cos", 1.0, 0.1),
                horizon: 0.02,
                method: FixedPoint,
                steps: 16,
                window: 0.005,
            },
            fixed_point_checks(),
        ),
        build(
            Spec {
                name: "ramped_porous",
                dim: 1,
                n: 128,
                label: "ramped_porous:1",
                u0: ("random_bandlimited:11", 1.0, 0.2),
                horizon: 0.05,
                method: FixedPoint,
                steps: 32,
                window: 0.005,
            },
            fixed_point_checks(),
        ),
        build(
            Spec {
                name: "bump_decay_1d",
                dim: 1,
                n: 256,
                label: "identity",
                u0: ("bump:0.015625", 0.0, 1.0),
                horizon: 1.0 / 64.0,
                method: Linear,
                steps: 256,
                window: 0.005,
            },
            vec![range(), mass(), Diagnostic::Decay { expected: -0.5, tol: 0.15 }],
        ),
        build(
            Spec {
                name: "bump_decay_2d",
                dim: 2,
                n: 128,
                label: "identity",
                u0: ("bump:0.015625", 0.0, 1.0),
                horizon: 1.0 / 64.0,
                method: Linear,
                steps: 128,
                window: 0.005,
            },
            vec![range(), mass(), Diagnostic::Decay { expected: -1.0, tol: 0.15 }],
        ),
        build(
            Spec {
                name: "porous_bump_decay",
                dim: 1,
                n: 256,
                label: "porous:1",
                u0: ("bump:0.015625", 1.0, 0.5),
                horizon: 1.0 / 64.0,
                method: FixedPoint,
                steps: 32,
                window: 0.002,
            },
            vec![range(), mass(), Diagnostic::Decay { expected: -0.5, tol: 0.2 }],
        ),
    ];
    for c in &mut out {
        c.fixed_point.theta = c.scheme.theta;
    }
    out
}

pub fn names() -> Vec<String> {
    library().into_iter().map(|c| c.scenario).collect()
}

pub fn by_name(name: &str) -> Result<ExperimentConfig> {
    library().into_iter().find(|c| c.scenario == name).ok_or_else(|| {
        Error::config("scenario", format!("unknown scenario `{name}`; available: {}", names().join(", ")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_validates_and_names_are_unique() {
        let lib = library();
        for c in &lib {
            c.validate().unwrap_or_else(|e| panic!("{}: {e}", c.scenario));
        }
        let mut n = names();
        n.sort();
        n.dedup();
        assert_eq!(n.len(), lib.len());
        assert!(by_name("nope").is_err());
    }
}
