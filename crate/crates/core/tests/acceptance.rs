//! Acceptance criteria 1 to 13 on the default configuration. Runs without
//! the libtest harness so every criterion prints its line.

use std::process::ExitCode;
use std::time::Instant;

use blowup_lab::config::ExperimentConfig;
use blowup_lab::suite::{verify_suite, ALL_TAGS};

fn main() -> ExitCode {
    let cfg = ExperimentConfig::default();
    let start = Instant::now();
    let tags: Vec<String> = ALL_TAGS.iter().map(|t| t.to_string()).collect();
    let report = match verify_suite(&tags, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("acceptance suite failed to run: {e}");
            return ExitCode::FAILURE;
        }
    };
    assert_eq!(report.checks.len(), 13);
    for c in &report.checks {
        println!("{}", c.line());
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!(
        "acceptance: {} passed, {} failed ({:.1} s)",
        13 - failed,
        failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
