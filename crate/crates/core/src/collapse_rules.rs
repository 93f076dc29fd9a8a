//! Stochastic reduction rules for a single event.
//!
//! Every rule consumes one uniform draw in `[0, 1)` supplied by the caller,
//! so the functions here are pure and a trajectory is reproducible from its
//! draws alone. Collapses are zero-duration events.

use crate::dynamics::{CurrentProfile, Status, TwoComponentState};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("random draw {0} is outside [0, 1)")]
    InvalidDraw(f64),
    #[error("terminal no-capture collapse requested at t = {t}, before the interaction ends at {t_end}")]
    RuleBBeforeEnd { t: f64, t_end: f64 },
    #[error("state has already collapsed")]
    AlreadyCollapsed,
    #[error("spontaneous collapse rate must be non-negative, got {0}")]
    NegativeRate(f64),
}

/// How the current `J(t)` drives the capture collapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RuleAInterpretation {
    /// `J(t)` is the density of the collapse time; the total collapse
    /// probability equals the integral of `J`.
    #[default]
    UnconditionalDensity,
    /// `J(t)` is a hazard conditional on survival; the total collapse
    /// probability is `1 - exp(-integral of J)`.
    HazardRate,
}

/// What the observer finds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    CaptureObserved,
    NoCaptureObserved,
    /// Intermediate only; never a final finding.
    SuperpositionIntact,
}

impl Outcome {
    /// The two final findings, in report order.
    pub const FINAL: [Outcome; 2] = [Outcome::CaptureObserved, Outcome::NoCaptureObserved];

    pub fn of_state(state: &TwoComponentState) -> Self {
        match state.status {
            Status::Superposed => Outcome::SuperpositionIntact,
            Status::CollapsedCapture => Outcome::CaptureObserved,
            Status::CollapsedNoCapture => Outcome::NoCaptureObserved,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::CaptureObserved => "CaptureObserved",
            Outcome::NoCaptureObserved => "NoCaptureObserved",
            Outcome::SuperpositionIntact => "SuperpositionIntact",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_draw(draw: f64) -> Result<(), RuleError> {
    if (0.0..1.0).contains(&draw) {
        Ok(())
    } else {
        Err(RuleError::InvalidDraw(draw))
    }
}

/// Samples the capture-collapse time by inverting the cumulative current.
///
/// Returns `None` when the draw falls beyond what the window can supply. A
/// time landing exactly on `t_end` is also `None`: the terminal collapse
/// owns that instant.
pub fn sample_rule_a_time(
    profile: &CurrentProfile,
    interpretation: RuleAInterpretation,
    draw: f64,
) -> Result<Option<f64>, RuleError> {
    check_draw(draw)?;
    let target = match interpretation {
        RuleAInterpretation::UnconditionalDensity => draw,
        RuleAInterpretation::HazardRate => -(-draw).ln_1p(),
    };
    if target >= profile.total_probability() {
        return Ok(None);
    }
    let t = profile.invert_cumulative(target);
    Ok((t < profile.t_end).then_some(t))
}

/// Terminal collapse to the no-capture component once the interaction is over.
pub fn apply_rule_b(state: &TwoComponentState, t_end: f64) -> Result<TwoComponentState, RuleError> {
    if !state.is_superposed() {
        return Err(RuleError::AlreadyCollapsed);
    }
    if state.t < t_end {
        return Err(RuleError::RuleBBeforeEnd { t: state.t, t_end });
    }
    Ok(TwoComponentState::collapsed_no_capture(t_end))
}

/// Born-rule observation. A collapsed state is reported as is; a
/// superposition yields capture when `draw < p_capture`.
pub fn observer_measure(
    state: &TwoComponentState,
    draw: f64,
) -> Result<(Outcome, TwoComponentState), RuleError> {
    check_draw(draw)?;
    Ok(match state.status {
        Status::CollapsedCapture => (Outcome::CaptureObserved, *state),
        Status::CollapsedNoCapture => (Outcome::NoCaptureObserved, *state),
        Status::Superposed if draw < state.p_capture => (
            Outcome::CaptureObserved,
            TwoComponentState::collapsed_capture(state.t),
        ),
        Status::Superposed => (
            Outcome::NoCaptureObserved,
            TwoComponentState::collapsed_no_capture(state.t),
        ),
    })
}

/// Exponential waiting time of a fixed-rate collapse, counted from `t_start`.
/// Times at or beyond `t_end` are `None`.
pub fn sample_spontaneous_time(
    rate: f64,
    t_start: f64,
    t_end: f64,
    draw: f64,
) -> Result<Option<f64>, RuleError> {
    check_draw(draw)?;
    if rate.is_nan() || rate < 0.0 {
        return Err(RuleError::NegativeRate(rate));
    }
    if rate == 0.0 {
        return Ok(None);
    }
    let t = t_start - (-draw).ln_1p() / rate;
    Ok((t < t_end).then_some(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::state_at;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fig1() -> CurrentProfile {
        CurrentProfile::constant(0.06, 0.0, 10.0)
    }

    #[test]
    fn unconditional_density_inverts_linear_cumulative() {
        let t = sample_rule_a_time(&fig1(), RuleAInterpretation::UnconditionalDensity, 0.30)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(t, 5.0, epsilon = 1e-12);
        assert_eq!(
            sample_rule_a_time(&fig1(), RuleAInterpretation::UnconditionalDensity, 0.90).unwrap(),
            None
        );
    }

    /// Step-by-step thinning: survive each small step with probability
    /// `exp(-J dt)`; the collapse time is where the accumulated hazard first
    /// exceeds the exponential threshold for the draw.
    fn thinning_time(profile: &CurrentProfile, draw: f64, dt: f64) -> Option<f64> {
        let threshold = -(1.0 - draw).ln();
        let mut hazard = 0.0;
        let mut t = profile.t_start;
        while t < profile.t_end {
            let step = dt.min(profile.t_end - t);
            let next = hazard + profile.current(t + 0.5 * step) * step;
            if next >= threshold {
                return Some(t + (threshold - hazard) / (next - hazard) * step);
            }
            hazard = next;
            t += step;
        }
        None
    }

    #[test]
    fn hazard_rate_matches_thinning() {
        let t = sample_rule_a_time(&fig1(), RuleAInterpretation::HazardRate, 0.30)
            .unwrap()
            .unwrap();
        let oracle = thinning_time(&fig1(), 0.30, 1e-4).unwrap();
        assert_abs_diff_eq!(t, 5.944582399, epsilon = 1e-8);
        assert_abs_diff_eq!(t, oracle, epsilon = 1e-6);

        let ramp = CurrentProfile::linear_ramp(0.01, 0.3, 0.0, 5.0);
        for draw in [0.05, 0.2, 0.4, 0.5] {
            let got = sample_rule_a_time(&ramp, RuleAInterpretation::HazardRate, draw).unwrap();
            let want = thinning_time(&ramp, draw, 1e-4);
            match (got, want) {
                (Some(a), Some(b)) => assert_abs_diff_eq!(a, b, epsilon = 1e-6),
                (None, None) => {}
                other => panic!("mismatch for draw {draw}: {other:?}"),
            }
        }
    }

    #[test]
    fn rule_a_rejects_bad_draws() {
        for draw in [-0.1, 1.0, f64::NAN] {
            assert!(matches!(
                sample_rule_a_time(&fig1(), RuleAInterpretation::UnconditionalDensity, draw),
                Err(RuleError::InvalidDraw(_))
            ));
        }
    }

    #[test]
    fn rule_b_only_at_end() {
        let end = state_at(&fig1(), 10.0).unwrap();
        let collapsed = apply_rule_b(&end, 10.0).unwrap();
        assert_eq!(collapsed.status, Status::CollapsedNoCapture);
        assert_eq!(collapsed.p_no_capture, 1.0);
        assert_eq!(collapsed.t, 10.0);

        let mid = TwoComponentState::superposed(0.5, 8.33);
        assert!(matches!(
            apply_rule_b(&mid, 10.0),
            Err(RuleError::RuleBBeforeEnd { .. })
        ));
        let captured = TwoComponentState::collapsed_capture(10.0);
        assert_eq!(apply_rule_b(&captured, 10.0), Err(RuleError::AlreadyCollapsed));
    }

    #[test]
    fn born_measurement() {
        let captured = TwoComponentState::collapsed_capture(5.0);
        for draw in [0.0, 0.5, 0.999] {
            assert_eq!(
                observer_measure(&captured, draw).unwrap(),
                (Outcome::CaptureObserved, captured)
            );
        }
        let even = TwoComponentState::superposed(0.5, 8.0);
        let (o, s) = observer_measure(&even, 0.25).unwrap();
        assert_eq!(o, Outcome::CaptureObserved);
        assert_eq!(s.status, Status::CollapsedCapture);
        let (o, s) = observer_measure(&even, 0.75).unwrap();
        assert_eq!(o, Outcome::NoCaptureObserved);
        assert_eq!(s.status, Status::CollapsedNoCapture);
        assert_eq!(s.t, 8.0);
        assert!(observer_measure(&even, 1.5).is_err());
    }

    #[test]
    fn spontaneous_time_examples() {
        assert_eq!(sample_spontaneous_time(0.0, 0.0, 10.0, 0.7).unwrap(), None);
        // Exact quantile of the window end: 1 - e^{-1} at rate 0.1.
        let boundary = -(-1.0f64).exp_m1();
        assert_eq!(sample_spontaneous_time(0.1, 0.0, 10.0, boundary).unwrap(), None);
        let t = sample_spontaneous_time(1e6, 0.0, 10.0, 0.5).unwrap().unwrap();
        assert_abs_diff_eq!(t, std::f64::consts::LN_2 / 1e6, epsilon = 1e-18);
        assert!(matches!(
            sample_spontaneous_time(-1.0, 0.0, 10.0, 0.5),
            Err(RuleError::NegativeRate(_))
        ));
        assert!(matches!(
            sample_spontaneous_time(1.0, 0.0, 10.0, 1.0),
            Err(RuleError::InvalidDraw(_))
        ));
    }

    #[test]
    fn superposition_maps_to_intact() {
        let s = TwoComponentState::superposed(0.3, 1.0);
        assert_eq!(Outcome::of_state(&s), Outcome::SuperpositionIntact);
    }

    proptest! {
        #[test]
        fn sampled_times_stay_in_window(draw in 0.0f64..1.0, hazard in any::<bool>()) {
            let interp = if hazard {
                RuleAInterpretation::HazardRate
            } else {
                RuleAInterpretation::UnconditionalDensity
            };
            let profiles = [
                fig1(),
                CurrentProfile::gaussian_pulse(5.0, 1.0, 0.6, 0.0, 10.0),
                CurrentProfile::linear_ramp(0.2, 0.0, 1.0, 6.0),
            ];
            for p in &profiles {
                if let Some(t) = sample_rule_a_time(p, interp, draw).unwrap() {
                    prop_assert!(t >= p.t_start && t < p.t_end);
                }
            }
        }

        #[test]
        fn measuring_a_collapsed_state_is_identity(draw in 0.0f64..1.0, t in 0.0f64..10.0, capture in any::<bool>()) {
            let s = if capture {
                TwoComponentState::collapsed_capture(t)
            } else {
                TwoComponentState::collapsed_no_capture(t)
            };
            let (outcome, after) = observer_measure(&s, draw).unwrap();
            prop_assert_eq!(after, s);
            prop_assert_eq!(outcome, Outcome::of_state(&s));
        }
    }
}
