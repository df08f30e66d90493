//! Runs every acceptance criterion on the default configuration and prints
//! one line per criterion.

use blowup_lab::config::ExperimentConfig;
use blowup_lab::suite::verify_suite;

fn main() -> blowup_lab::Result<()> {
    let tags: Vec<String> = std::env::args().skip(1).collect();
    let tags = if tags.is_empty() { vec!["all".to_string()] } else { tags };
    let report = verify_suite(&tags, &ExperimentConfig::default())?;
    for c in &report.checks {
        println!("{}", c.line());
    }
    println!("overall: {}", if report.passed { "PASS" } else { "FAIL" });
    Ok(())
}
