//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use qlpde::harness::acceptance::{run_one, CRITERIA};

fn main() -> ExitCode {
    let filter: Option<Vec<u32>> = std::env::var("QLPDE_CRITERIA")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, _, _) in CRITERIA {
        if filter.as_ref().is_some_and(|f| !f.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let c = run_one(id).expect("listed criterion");
        println!("{}  ({:.1} s)", c.summary(), start.elapsed().as_secs_f64());
        if std::env::var_os("QLPDE_VERBOSE").is_some() {
            for k in &c.checks {
                let note = k.note.as_deref().unwrap_or("");
                println!("       {:<40} {:>12.4e}  {:<18} {}  {note}", k.name, k.value, k.bound, if k.pass { "ok" } else { "FAIL" });
            }
        }
        if !c.pass() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    }
}
