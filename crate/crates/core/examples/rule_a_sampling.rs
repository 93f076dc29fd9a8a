//! Capture-collapse times sampled from the current, under both readings of
//! the rate: as the density of the collapse time, and as a hazard.
//!
//! cargo run --release --example rule_a_sampling

use collapse_lab::cli::scenario_file::preset_scenario;
use collapse_lab::engine::capture_times;
use collapse_lab::stats::ks_distance;
use collapse_lab::{CurrentProfile, RuleAInterpretation, Scenario};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let base = preset_scenario("no-observer")?;
    let profiles = [
        ("constant", CurrentProfile::constant(0.06, 0.0, 10.0)),
        ("ramp", CurrentProfile::linear_ramp(0.0, 0.12, 0.0, 10.0)),
        ("gaussian", CurrentProfile::gaussian_pulse(5.0, 1.0, 0.6, 0.0, 10.0)),
    ];
    for (label, profile) in profiles {
        let total = profile.validate()?;
        for interpretation in [RuleAInterpretation::UnconditionalDensity, RuleAInterpretation::HazardRate] {
            let scenario = Scenario {
                profile: profile.clone(),
                rule_a_interpretation: interpretation,
                n_trajectories: 50_000,
                ..base.clone()
            };
            let times = capture_times(&scenario)?;
            let fraction = times.len() as f64 / scenario.n_trajectories as f64;
            let expected = match interpretation {
                RuleAInterpretation::UnconditionalDensity => total,
                RuleAInterpretation::HazardRate => 1.0 - (-total).exp(),
            };
            // Reference CDF of the collapse time given that a collapse happens.
            let cdf = |t: f64| {
                let p = profile.capture_probability(t);
                match interpretation {
                    RuleAInterpretation::UnconditionalDensity => p / total,
                    RuleAInterpretation::HazardRate => -(-p).exp_m1() / -(-total).exp_m1(),
                }
            };
            let ks = ks_distance(&times, cdf)?;
            println!(
                "{label:<9} {interpretation:?}: capture fraction {fraction:.4} (expected {expected:.4}), KS {ks:.4}"
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
