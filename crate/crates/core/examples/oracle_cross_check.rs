//! Monte Carlo ensembles scored against the exact probability tree, and the
//! naive regime scored against the observer-only truth.
//!
//! cargo run --release --example oracle_cross_check

use collapse_lab::cli::scenario_file::{preset_scenario, PRESET_NAMES};
use collapse_lab::{compare, oracle_distribution, run_ensemble, Outcome, Regime};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    for name in PRESET_NAMES {
        let scenario = preset_scenario(name)?;
        let stats = run_ensemble(&scenario)?;
        let oracle = oracle_distribution(&scenario, 1000)?;
        let report = compare(&stats, &oracle);
        let row = report.row(Outcome::CaptureObserved).expect("capture row");
        println!(
            "{name:<20} empirical {:.5} oracle {:.5} z {:+6.2}{}",
            row.empirical,
            row.exact,
            row.z,
            if report.any_flagged() { "  FLAGGED" } else { "" }
        );
    }

    let naive = preset_scenario("fig1")?;
    let stats = run_ensemble(&naive)?;
    let truth = oracle_distribution(&naive.with_regime(Regime::ObserverOnly), 1000)?;
    let report = compare(&stats, &truth);
    let row = report.row(Outcome::CaptureObserved).expect("capture row");
    println!(
        "fig1 vs observer-only oracle: empirical {:.5} vs {:.5}, z {:+.1}{}",
        row.empirical,
        row.exact,
        row.z,
        if row.flagged { "  FLAGGED" } else { "" }
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
