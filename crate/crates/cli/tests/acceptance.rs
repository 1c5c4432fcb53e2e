//! The acceptance suite: every criterion once, one line each, nonzero exit
//! when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nds_pressure::verify::{run_suite, CRITERIA};

/// Worker count for the determinism criterion's parallel run.
const WORKERS: usize = 8;

fn main() -> ExitCode {
    let start = Instant::now();
    let ids: Vec<usize> = (1..=CRITERIA).collect();
    let report = match run_suite(&ids, WORKERS) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("acceptance suite aborted: {e}");
            return ExitCode::FAILURE;
        }
    };
    for c in &report.criteria {
        println!("{}", c.summary());
        for f in c.failures() {
            println!("    {}: {} {:?} {} (tolerance {})", f.name, f.lhs, f.relation, f.rhs, f.tolerance);
        }
    }
    let passed = report.criteria.iter().filter(|c| c.pass).count();
    println!(
        "acceptance: {passed} of {} criteria passed in {:.1}s",
        report.criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
