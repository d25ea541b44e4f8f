//! The self-check suite at the default configuration.
//!
//! cargo run --example validate_oracles -- [seed] [samples]

use fpqsdc::config::Config;
use fpqsdc::validation::{run_validation, ValidationSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let samples = args
        .next()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1_000_000);
    let cfg = Config::default();
    let settings = ValidationSettings {
        seed,
        samples,
        ..Default::default()
    };
    let report = run_validation(&cfg.params, &cfg.source.resolve(), cfg.mode, &settings)?;
    for c in &report.checks {
        let verdict = if c.passed { "pass" } else { "FAIL" };
        println!(
            "{verdict}  {:<24} {:>10.3e} <= {:<8.1e} {}",
            c.name, c.statistic, c.threshold, c.detail
        );
    }
    println!(
        "{}",
        if report.passed {
            "all checks passed"
        } else {
            "some checks failed"
        }
    );
    Ok(())
}
