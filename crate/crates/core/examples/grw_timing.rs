//! Timing of a fixed-rate spontaneous collapse versus current-driven capture.
//!
//! A spontaneous collapse fires on its own clock, regardless of how much
//! current has flowed, so at a high rate it reduces the superposition almost
//! immediately and capture becomes rare. The current-driven collapse spreads
//! captures over the whole interaction.
//!
//! cargo run --release --example grw_timing

use collapse_lab::cli::scenario_file::preset_scenario;
use collapse_lab::engine::capture_times;
use collapse_lab::{oracle_distribution, Regime, Scenario};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let base = Scenario {
        n_trajectories: 50_000,
        ..preset_scenario("no-observer")?
    };
    let regimes = [
        ("current-driven", Regime::PaperNaive),
        ("spontaneous 0.1", Regime::SpontaneousRate { rate: 0.1 }),
        ("spontaneous 1", Regime::SpontaneousRate { rate: 1.0 }),
        ("spontaneous 1e6", Regime::SpontaneousRate { rate: 1e6 }),
    ];
    for (label, regime) in regimes {
        let scenario = base.with_regime(regime);
        let times = capture_times(&scenario)?;
        let oracle = oracle_distribution(&scenario, 1000)?;
        println!(
            "{label:<16} captures {:>6} (oracle fraction {:.5}), mean capture time {:.4}",
            times.len(),
            oracle.capture,
            mean(&times)
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
