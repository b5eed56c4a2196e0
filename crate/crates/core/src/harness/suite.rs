//! Named collections of runs with a tabular summary.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{acceptance, run, scenarios};
use crate::error::{Error, Result};
use crate::field::{CoefficientFn, Grid, ScalarField};
use crate::linear::manufactured::{observed_orders, Manufactured};
use crate::quasilinear::{local_solve_fixed_point, FixedPointConfig};

pub const SUITES: [&str; 3] = ["acceptance", "invariants", "convergence"];

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// Worker threads; `QLPDE_WORKERS` or the rayon default when `None`.
    pub workers: Option<usize>,
    /// Members write their artifacts to `output_dir/<member>` when set.
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub member: String,
    pub diagnostic: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub rows: Vec<SuiteRow>,
    pub pass: bool,
}

impl SuiteReport {
    fn new(name: &str, rows: Vec<SuiteRow>) -> Self {
        let pass = rows.iter().all(|r| r.pass);
        SuiteReport {
            name: name.to_string(),
            rows,
            pass,
        }
    }

    pub fn table(&self) -> String {
        let w = self.rows.iter().map(|r| r.member.len()).max().unwrap_or(6).max(6);
        let d = self.rows.iter().map(|r| r.diagnostic.len()).max().unwrap_or(10).max(10);
        let mut s = format!("{:<w$}  {:<d$}  {:>12}  {:<18}  pass\n", "member", "diagnostic", "value", "bound");
        for r in &self.rows {
            s.push_str(&format!(
                "{:<w$}  {:<d$}  {:>12.4e}  {:<18}  {}",
                r.member,
                r.diagnostic,
                r.value,
                r.bound,
                if r.pass { "yes" } else { "NO" }
            ));
            if let Some(n) = &r.note {
                s.push_str(&format!("  {n}"));
            }
            s.push('\n');
        }
        s.push_str(&format!("suite {}: {}\n", self.name, if self.pass { "pass" } else { "FAIL" }));
        s
    }
}

fn workers(opts: &SuiteOptions) -> Option<usize> {
    opts.workers.or_else(|| std::env::var("QLPDE_WORKERS").ok().and_then(|v| v.parse().ok()))
}

pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<SuiteReport> {
    if !SUITES.contains(&name) {
        return Err(Error::config("suite", format!("unknown suite `{name}`; available: {}", SUITES.join(", "))));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers(opts) {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| match name {
        "acceptance" => acceptance_rows(),
        "invariants" => invariant_rows(opts),
        _ => convergence_rows(),
    })?;
    Ok(SuiteReport::new(name, rows))
}

fn acceptance_rows() -> Result<Vec<SuiteRow>> {
    let results = acceptance::run_all();
    Ok(results
        .into_iter()
        .flat_map(|c| {
            let member = format!("{:02} {}", c.id, c.title);
            c.checks.into_iter().map(move |k| SuiteRow {
                member: member.clone(),
                diagnostic: k.name,
                value: k.value,
                bound: k.bound,
                pass: k.pass,
                note: k.note,
            })
        })
        .collect())
}

fn invariant_rows(opts: &SuiteOptions) -> Result<Vec<SuiteRow>> {
    let members = scenarios::library();
    let per_member: Vec<Vec<SuiteRow>> = members
        .par_iter()
        .map(|cfg| {
            let outcome = match &opts.output_dir {
                Some(dir) => run::run_in(cfg, &dir.join(&cfg.scenario)),
                None => run::execute(cfg),
            };
            match outcome {
                Ok(o) => o
                    .manifest
                    .diagnostics
                    .into_iter()
                    .map(|d| SuiteRow {
                        member: cfg.scenario.clone(),
                        diagnostic: d.name,
                        value: d.value,
                        bound: format!("<= {:.3e}", d.bound),
                        pass: d.pass,
                        note: d.note,
                    })
                    .collect(),
                Err(e) => vec![SuiteRow {
                    member: cfg.scenario.clone(),
                    diagnostic: "run".into(),
                    value: f64::NAN,
                    bound: "completes".into(),
                    pass: false,
                    note: Some(e.to_string()),
                }],
            }
        })
        .collect();
    Ok(per_member.into_iter().flatten().collect())
}

fn order_rows(member: &str, diagnostic: &str, errors: &[f64], nominal: f64) -> Vec<SuiteRow> {
    observed_orders(errors)
        .into_iter()
        .enumerate()
        .map(|(i, o)| SuiteRow {
            member: member.to_string(),
            diagnostic: format!("{diagnostic}[{}]", i + 1),
            value: o,
            bound: format!("{nominal} +- 0.3"),
            pass: (o - nominal).abs() <= 0.3,
            note: Some(format!("errors {:.3e} -> {:.3e}", errors[i], errors[i + 1])),
        })
        .collect()
}

/// Manufactured-solution errors for the three refinement studies:
/// space with fine Crank-Nicolson steps, time with backward Euler, time
/// with Crank-Nicolson.
pub fn manufactured_studies() -> Result<[Vec<f64>; 3]> {
    let dx: Vec<f64> = [16, 32, 64]
        .par_iter()
        .map(|&n| {
            let m = Manufactured::new(n, 1.0)?;
            m.run(m.natural_horizon(), 4000, 0.5)
        })
        .collect::<Result<_>>()?;
    let m = Manufactured::new(512, 1.0)?;
    let be: Vec<f64> = [20, 40, 80]
        .par_iter()
        .map(|&s| m.run(m.natural_horizon(), s, 1.0))
        .collect::<Result<_>>()?;
    let m = Manufactured::new(2048, 1.0)?;
    let cn: Vec<f64> = [10, 20, 40]
        .par_iter()
        .map(|&s| m.run(m.natural_horizon(), s, 0.5))
        .collect::<Result<_>>()?;
    Ok([dx, be, cn])
}

/// Final-time errors of the fixed-point solve for porous medium `m = 1`
/// with 8, 16 and 32 steps against a 512-step reference.
pub fn fixed_point_time_study() -> Result<Vec<f64>> {
    let g = Grid::new(1, 64, 1.0)?;
    let u0 = ScalarField::from_fn(g, |x| 1.0 + 0.1 * (2.0 * std::f64::consts::PI * x[0]).cos())?;
    let a = CoefficientFn::porous(1, 1.0);
    let solve = |steps: usize| {
        let cfg = FixedPointConfig {
            horizon: 0.01,
            steps,
            ..FixedPointConfig::default()
        };
        local_solve_fixed_point(&u0, &a, &cfg).map(|r| r.0.last_field())
    };
    let reference = solve(512)?;
    [8, 16, 32]
        .iter()
        .map(|&s| {
            let u = solve(s)?;
            Ok(u.values().iter().zip(reference.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        })
        .collect()
}

fn convergence_rows() -> Result<Vec<SuiteRow>> {
    let [dx, be, cn] = manufactured_studies()?;
    let mut rows = order_rows("manufactured", "dx_order", &dx, 2.0);
    rows.extend(order_rows("manufactured", "dt_order_theta1", &be, 1.0));
    rows.extend(order_rows("manufactured", "dt_order_theta0.5", &cn, 2.0));
    rows.extend(order_rows("porous_fixed_point", "dt_order_theta1", &fixed_point_time_study()?, 1.0));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_lists_the_available_ones() {
        let e = run_suite("smoke", &SuiteOptions::default()).unwrap_err();
        let msg = e.to_string();
        assert!(SUITES.iter().all(|s| msg.contains(s)), "{msg}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn table_marks_failures() {
        let r = SuiteReport::new(
            "x",
            vec![SuiteRow {
                member: "m".into(),
                diagnostic: "d".into(),
                value: 1.0,
                bound: "<= 0".into(),
                pass: false,
                note: None,
            }],
        );
        assert!(!r.pass);
        assert!(r.table().contains("NO"));
    }
}
