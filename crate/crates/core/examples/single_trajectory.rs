//! Event timelines of individual trajectories.
//!
//! cargo run --release --example single_trajectory

use collapse_lab::cli::scenario_file::preset_scenario;
use collapse_lab::engine::{run_trajectory, tracked_state};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["fig1", "fig1-quantum-jump", "grw-timing"] {
        let scenario = preset_scenario(name)?;
        println!("{name}");
        for index in 0..8 {
            let record = run_trajectory(&scenario, index)?;
            let events: Vec<String> = record
                .events
                .iter()
                .map(|e| format!("{:?}@{:.3}", e.kind, e.t))
                .collect();
            let midway = tracked_state(&scenario, &record, 0.5 * scenario.horizon())?;
            println!(
                "  #{index}: {} -> {} (state at midpoint: {:?}, p_capture {:.3})",
                events.join(", "),
                record.final_outcome,
                midway.status,
                midway.p_capture
            );
        }
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
