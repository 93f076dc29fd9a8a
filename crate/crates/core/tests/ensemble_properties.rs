//! Statistical properties of the samplers and ensembles against closed forms
//! and the probability-tree oracle.

use collapse_lab::cli::scenario_file::preset_scenario;
use collapse_lab::collapse_rules::observer_measure;
use collapse_lab::engine::{
    capture_times, compare, oracle_distribution, run_ensemble, run_trajectory, Regime, Scenario,
};
use collapse_lab::stats::{ks_distance, HISTOGRAM_BINS};
use collapse_lab::stream::TrajectoryDraws;
use collapse_lab::{CurrentProfile, Outcome, RuleAInterpretation, TwoComponentState};

fn profiles() -> Vec<CurrentProfile> {
    vec![
        CurrentProfile::constant(0.06, 0.0, 10.0),
        CurrentProfile::linear_ramp(0.15, 0.0, 0.0, 8.0),
        CurrentProfile::gaussian_pulse(5.0, 1.0, 0.6, 0.0, 10.0),
        CurrentProfile::gaussian_pulse(0.5, 2.0, 0.95, 0.0, 6.0),
        CurrentProfile::tabulated(&[(0.0, 0.0), (2.0, 0.2), (5.0, 0.05), (9.0, 0.0)]).unwrap(),
    ]
}

fn no_observer(profile: CurrentProfile, interpretation: RuleAInterpretation, seed: u64) -> Scenario {
    Scenario {
        profile,
        rule_a_interpretation: interpretation,
        master_seed: seed,
        n_trajectories: 100_000,
        ..preset_scenario("no-observer").unwrap()
    }
}

fn within_sigmas(successes: usize, n: u64, p: f64, sigmas: f64) -> bool {
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    ((successes as f64 / n as f64) - p).abs() <= sigmas * sd
}

#[test]
fn unconditional_density_fraction_and_timing() {
    for (i, profile) in profiles().into_iter().enumerate() {
        let total = profile.validate().unwrap();
        let s = no_observer(profile.clone(), RuleAInterpretation::UnconditionalDensity, 500 + i as u64);
        let times = capture_times(&s).unwrap();
        assert!(within_sigmas(times.len(), s.n_trajectories, total, 5.0), "profile {i}");
        let d = ks_distance(&times, |t| profile.capture_probability(t) / total).unwrap();
        assert!(d < 0.01, "profile {i}: KS {d}");
    }
}

#[test]
fn hazard_rate_fraction() {
    for (i, profile) in profiles().into_iter().enumerate() {
        let total = profile.total_probability();
        let s = no_observer(profile.clone(), RuleAInterpretation::HazardRate, 900 + i as u64);
        let times = capture_times(&s).unwrap();
        assert!(within_sigmas(times.len(), s.n_trajectories, 1.0 - (-total).exp(), 5.0), "profile {i}");
        let d = ks_distance(&times, |t| {
            -(-profile.capture_probability(t)).exp_m1() / -(-total).exp_m1()
        })
        .unwrap();
        assert!(d < 0.01, "profile {i}: KS {d}");
    }
}

/// Histogram chi-square against the expected mass per bin, as a check on the
/// capture-time law that does not go through the KS statistic.
#[test]
fn capture_histogram_chi_square() {
    let profile = CurrentProfile::constant(0.06, 0.0, 10.0);
    let s = no_observer(profile.clone(), RuleAInterpretation::UnconditionalDensity, 77);
    let stats = run_ensemble(&s).unwrap();
    let h = &stats.histogram;
    let captured = h.total() as f64;
    assert_eq!(h.total(), stats.counts.capture);
    let total = profile.total_probability();
    let mut chi2 = 0.0;
    for (i, &count) in h.bins().iter().enumerate() {
        let lo = h.bin_start(i);
        let hi = lo + h.bin_width();
        let expected = captured * (profile.capture_probability(hi) - profile.capture_probability(lo)) / total;
        chi2 += (count as f64 - expected).powi(2) / expected;
    }
    let dof = (HISTOGRAM_BINS - 1) as f64;
    assert!(chi2 < dof + 5.0 * (2.0 * dof).sqrt(), "chi2 {chi2}");
}

#[test]
fn born_frequency_converges() {
    let state = TwoComponentState::superposed(0.7, 3.0);
    let n = 100_000u64;
    let captures = (0..n)
        .filter(|&i| {
            let draw = TrajectoryDraws::derive(5, i).observer;
            observer_measure(&state, draw).unwrap().0 == Outcome::CaptureObserved
        })
        .count();
    assert!(within_sigmas(captures, n, 0.7, 5.0));
}

#[test]
fn monte_carlo_matches_oracle_for_every_regime_and_profile() {
    let regimes = [
        Regime::PaperNaive,
        Regime::ObserverOnly,
        Regime::QuantumJump,
        Regime::SpontaneousRate { rate: 0.3 },
        Regime::SpontaneousRate { rate: 20.0 },
    ];
    let mut seed = 10_000;
    for profile in profiles() {
        let observers = [None, Some(profile.t_start + 0.6 * profile.duration())];
        for regime in regimes {
            for observer_time in observers {
                for interpretation in [RuleAInterpretation::UnconditionalDensity, RuleAInterpretation::HazardRate] {
                    seed += 1;
                    let s = Scenario {
                        profile: profile.clone(),
                        regime,
                        observer_time,
                        n_trajectories: 200_000,
                        master_seed: seed,
                        rule_a_interpretation: interpretation,
                    };
                    let stats = run_ensemble(&s).unwrap();
                    let report = compare(&stats, &oracle_distribution(&s, 1000).unwrap());
                    assert!(!report.any_flagged(), "{s:?}: {report:?}");
                }
            }
        }
    }
}

#[test]
fn quantum_jump_and_observer_only_oracles_agree() {
    for profile in profiles() {
        for frac in [0.1, 0.5, 0.9, 1.0] {
            let s = Scenario {
                profile: profile.clone(),
                observer_time: Some(profile.t_start + frac * profile.duration()),
                ..preset_scenario("fig1").unwrap()
            };
            let jump = oracle_distribution(&s.with_regime(Regime::QuantumJump), 1000).unwrap();
            let only = oracle_distribution(&s.with_regime(Regime::ObserverOnly), 1000).unwrap();
            assert!((jump.capture - only.capture).abs() < 1e-12);
            let q = profile.capture_probability(s.observer_time.unwrap());
            assert!((only.capture - q).abs() < 1e-15);
        }
    }
}

#[test]
fn identical_seeds_give_identical_records() {
    let s = preset_scenario("fig1").unwrap();
    let a: Vec<_> = (0..1000).map(|i| run_trajectory(&s, i).unwrap()).collect();
    let b: Vec<_> = (0..1000).map(|i| run_trajectory(&s, i).unwrap()).collect();
    assert_eq!(a, b);
    let other = Scenario { master_seed: s.master_seed + 1, ..s.clone() };
    let c: Vec<_> = (0..1000).map(|i| run_trajectory(&other, i).unwrap()).collect();
    assert_ne!(a, c);
}
