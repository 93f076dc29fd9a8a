//! Loading a scenario document, running it, and writing the CSV report.
//!
//! cargo run --release --example scenario_file

use collapse_lab::cli::output::emit_report;
use collapse_lab::cli::scenario_file::parse_scenario;
use collapse_lab::{compare, oracle_distribution, run_ensemble};

const DOCUMENT: &str = r#"
observer_time = 6.0
rule_a_interpretation = "hazard-rate"
n_trajectories = 40000
master_seed = 7

[profile]
kind = "tabulated"
params = { points = [[0.0, 0.0], [3.0, 0.12], [6.0, 0.08], [9.0, 0.0]] }

[regime]
name = "paper-naive"
"#;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = parse_scenario(DOCUMENT)?;
    let stats = run_ensemble(&scenario)?;
    let oracle = oracle_distribution(&scenario, 1000)?;
    print!("{}", emit_report(&stats, &oracle, &compare(&stats, &oracle)));

    let typo = DOCUMENT.replace("master_seed", "master_sed");
    match parse_scenario(&typo) {
        Ok(_) => println!("typo accepted?"),
        Err(e) => println!("rejected as expected: {e}"),
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
