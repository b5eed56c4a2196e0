use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qlpde::error::Result;
use qlpde::harness::{self, scenarios, ExperimentConfig, SuiteOptions};

#[derive(Parser)]
#[command(name = "qlpde", version, about = "Quasilinear parabolic solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run(RunArgs),
    /// Run a named suite and print its table.
    Suite {
        /// acceptance, invariants or convergence
        name: String,
        /// Worker threads (default: QLPDE_WORKERS or all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Give every member its own artifact directory under DIR.
        #[arg(long, value_name = "DIR")]
        output_dir: Option<PathBuf>,
        /// Also write the table as JSON.
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Pretty-print a manifest (file or run directory).
    Inspect { manifest: PathBuf },
    /// Compare the diagnostic values of two manifests.
    Diff {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        rel: f64,
        #[arg(long, default_value_t = 1e-12)]
        abs: f64,
    },
    /// List the built-in scenarios, or print one as a config file.
    Scenarios {
        #[arg(long, value_name = "NAME")]
        dump: Option<String>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Experiment config file.
    config: Option<PathBuf>,
    /// Built-in scenario name instead of a config file.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Artifact directory; overrides QLPDE_OUTPUT_DIR and the config.
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
}

fn verdict(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let cfg = match (&args.source.config, &args.source.scenario) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => scenarios::by_name(name)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    let dir = args.output_dir.unwrap_or_else(|| cfg.resolved_output_dir());
    let out = harness::run_in(&cfg, &dir)?;
    print!("{}", harness::inspect(&out.manifest));
    println!("\nwrote {}", dir.display());
    Ok(verdict(out.manifest.pass))
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Suite { name, workers, output_dir, json } => {
            let report = harness::run_suite(&name, &SuiteOptions { workers, output_dir })?;
            print!("{}", report.table());
            if let Some(path) = json {
                std::fs::write(path, serde_json::to_vec_pretty(&report)?)?;
            }
            Ok(verdict(report.pass))
        }
        Command::Inspect { manifest } => {
            print!("{}", harness::inspect(&harness::load_manifest(&manifest)?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Diff { left, right, rel, abs } => {
            let d = harness::diff(&harness::load_manifest(&left)?, &harness::load_manifest(&right)?, rel, abs);
            println!("config hash {}", if d.same_config { "identical" } else { "differs" });
            println!("field hash  {}", if d.same_field { "identical" } else { "differs" });
            for e in &d.entries {
                println!("{:<18} {:>12.4e} {:>12.4e}  {}", e.name, e.left, e.right, if e.within { "ok" } else { "DIFFERS" });
            }
            for u in &d.unmatched {
                println!("{u:<18} only in one manifest");
            }
            Ok(verdict(d.within))
        }
        Command::Scenarios { dump } => {
            match dump {
                Some(name) => print!("{}", scenarios::by_name(&name)?.to_toml_string()),
                None => {
                    for c in scenarios::library() {
                        println!("{:<18} {:?} dim={} N={} a={} u0={}", c.scenario, c.scheme.method, c.grid.dim, c.grid.n, c.coefficient.label, c.u0.preset);
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

