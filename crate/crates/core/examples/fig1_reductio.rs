//! The mid-interaction observation scenario under three reduction regimes.
//!
//! With a total capture probability of 0.6 and an observer looking when the
//! capture probability has reached 0.5, the naive combination of current-driven
//! capture collapse and a terminal no-capture collapse makes the observer see
//! a capture 75% of the time. Observer-only and quantum-jump dynamics both
//! give the consistent 50%.
//!
//! cargo run --release --example fig1_reductio

use collapse_lab::cli::scenario_file::preset_scenario;
use collapse_lab::{oracle_distribution, run_ensemble, Outcome};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:<20} {:>10} {:>22} {:>10}", "preset", "capture", "95% interval", "oracle");
    for name in ["fig1", "fig1-observer-only", "fig1-quantum-jump"] {
        let scenario = preset_scenario(name)?;
        let stats = run_ensemble(&scenario)?;
        let oracle = oracle_distribution(&scenario, 1000)?;
        let (lo, hi) = stats.interval(Outcome::CaptureObserved);
        println!(
            "{name:<20} {:>10.5} {:>22} {:>10.5}",
            stats.frequency(Outcome::CaptureObserved),
            format!("[{lo:.5}, {hi:.5}]"),
            oracle.capture
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
