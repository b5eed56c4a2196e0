//! Experiment configuration, the scenario library, runs, suites and the
//! acceptance checks shared by the command-line tool and the test suite.

pub mod acceptance;
pub mod config;
pub mod run;
pub mod scenarios;
pub mod suite;

pub use config::{Diagnostic, ExperimentConfig, Method};
pub use run::{diff, execute, inspect, load_manifest, run, run_in, DiagnosticResult, ManifestDiff, RunManifest, RunOutcome};
pub use suite::{run_suite, SuiteOptions, SuiteReport, SuiteRow, SUITES};
