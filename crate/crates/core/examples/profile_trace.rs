//! Current profiles and their cumulative capture probability as CSV.
//!
//! cargo run --release --example profile_trace > trace.csv

use collapse_lab::cli::output::emit_trace;
use collapse_lab::CurrentProfile;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let profiles = [
        ("constant", CurrentProfile::constant(0.06, 0.0, 10.0)),
        ("gaussian", CurrentProfile::gaussian_pulse(5.0, 1.0, 0.6, 0.0, 10.0)),
        (
            "tabulated",
            CurrentProfile::tabulated(&[(0.0, 0.0), (2.0, 0.15), (4.0, 0.1), (10.0, 0.0)])?,
        ),
    ];
    for (label, profile) in profiles {
        let total = profile.validate()?;
        println!("# {label}: total capture probability {total}");
        print!("{}", emit_trace(&profile, 11)?);
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
