//! Single-event trajectories, ensembles, and the exact probability-tree
//! oracle the Monte Carlo is checked against.

use crate::collapse_rules::{
    apply_rule_b, observer_measure, sample_rule_a_time, sample_spontaneous_time, Outcome,
    RuleAInterpretation, RuleError,
};
use crate::dynamics::{state_at, CurrentProfile, DynamicsError, Status, TwoComponentState};
use crate::stats::{EnsembleStats, StatsError, Tally};
use crate::stream::TrajectoryDraws;
use rayon::prelude::*;
use thiserror::Error;

pub const DEFAULT_ORACLE_STEPS: usize = 1000;
pub const MIN_ORACLE_STEPS: usize = 100;
/// `|z|` above which a comparison row is flagged.
pub const Z_FLAG_THRESHOLD: f64 = 5.0;

/// Trajectories per parallel work unit. Blocks are fixed by index, so the
/// partition never depends on the worker count.
const BLOCK_SIZE: u64 = 8192;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Profile(#[from] DynamicsError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("observer_time {t_obs} must lie in (t_start, t_end] = ({t_start}, {t_end}]")]
    ObserverOutsideWindow { t_obs: f64, t_start: f64, t_end: f64 },
    #[error("n_trajectories must be at least 1")]
    NoTrajectories,
    #[error("spontaneous collapse rate must be finite and non-negative, got {0}")]
    InvalidSpontaneousRate(f64),
    #[error("oracle needs at least {MIN_ORACLE_STEPS} steps, got {0}")]
    TooFewOracleSteps(usize),
    #[error("could not start worker pool: {0}")]
    WorkerPool(String),
}

/// Reduction regime of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Current-driven capture collapse plus terminal no-capture collapse. An
    /// observer arriving mid-interaction measures the *unconditioned*
    /// superposition of uncollapsed trajectories.
    ///
    /// This regime is intentionally inconsistent: capture mass already spent
    /// by collapsed trajectories is counted a second time by the Born
    /// measurement of the uncollapsed ones.
    PaperNaive,
    /// No objective collapse; a single Born measurement at the observation
    /// time (or at `t_end` when there is no observer).
    ObserverOnly,
    /// Current-driven capture collapse with conditioning: a trajectory that
    /// has not jumped is in the pure no-capture state.
    QuantumJump,
    /// Fixed-hazard collapse at an exponential time, to a branch chosen by
    /// the Born weights at that time.
    SpontaneousRate { rate: f64 },
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::PaperNaive => "paper-naive",
            Regime::ObserverOnly => "observer-only",
            Regime::QuantumJump => "quantum-jump",
            Regime::SpontaneousRate { .. } => "spontaneous-rate",
        }
    }
}

/// One complete experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub profile: CurrentProfile,
    pub regime: Regime,
    pub observer_time: Option<f64>,
    pub n_trajectories: u64,
    pub master_seed: u64,
    pub rule_a_interpretation: RuleAInterpretation,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), EngineError> {
        self.profile.validate()?;
        if let Some(t_obs) = self.observer_time {
            let (t_start, t_end) = (self.profile.t_start, self.profile.t_end);
            if !(t_obs > t_start && t_obs <= t_end) {
                return Err(EngineError::ObserverOutsideWindow {
                    t_obs,
                    t_start,
                    t_end,
                });
            }
        }
        if self.n_trajectories == 0 {
            return Err(EngineError::NoTrajectories);
        }
        if let Regime::SpontaneousRate { rate } = self.regime {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(EngineError::InvalidSpontaneousRate(rate));
            }
        }
        Ok(())
    }

    /// End of the simulated interval: the observation time, or `t_end`.
    pub fn horizon(&self) -> f64 {
        self.observer_time.unwrap_or(self.profile.t_end)
    }

    pub fn with_regime(&self, regime: Regime) -> Scenario {
        Scenario {
            regime,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    RuleACollapse,
    RuleBCollapse,
    SpontaneousCollapse,
    ObserverMeasurement(Outcome),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

/// Event timeline of one simulated event.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub events: Vec<Event>,
    pub final_outcome: Outcome,
    /// Time of an objective capture collapse, if one happened.
    pub capture_time: Option<f64>,
}

/// Runs trajectory `trajectory_index` of a scenario with its derived draws.
pub fn run_trajectory(
    scenario: &Scenario,
    trajectory_index: u64,
) -> Result<TrajectoryRecord, EngineError> {
    scenario.validate()?;
    simulate(
        scenario,
        TrajectoryDraws::derive(scenario.master_seed, trajectory_index),
    )
}

/// Runs one trajectory from explicit draws.
pub fn run_trajectory_with_draws(
    scenario: &Scenario,
    draws: TrajectoryDraws,
) -> Result<TrajectoryRecord, EngineError> {
    scenario.validate()?;
    simulate(scenario, draws)
}

fn simulate(scenario: &Scenario, draws: TrajectoryDraws) -> Result<TrajectoryRecord, EngineError> {
    let profile = &scenario.profile;
    let horizon = scenario.horizon();
    let mut events = Vec::with_capacity(2);
    let mut capture_time = None;

    // Objective collapse, if any, strictly before the horizon.
    let collapsed = match scenario.regime {
        Regime::PaperNaive | Regime::QuantumJump => {
            sample_rule_a_time(profile, scenario.rule_a_interpretation, draws.timing)?
                .filter(|&t| t < horizon)
                .map(|t| {
                    events.push(Event {
                        t,
                        kind: EventKind::RuleACollapse,
                    });
                    capture_time = Some(t);
                    TwoComponentState::collapsed_capture(t)
                })
        }
        Regime::SpontaneousRate { rate } => {
            match sample_spontaneous_time(rate, profile.t_start, horizon, draws.timing)? {
                Some(t) => {
                    events.push(Event {
                        t,
                        kind: EventKind::SpontaneousCollapse,
                    });
                    let (_, state) = observer_measure(&state_at(profile, t)?, draws.collapse_branch)?;
                    if state.status == Status::CollapsedCapture {
                        capture_time = Some(t);
                    }
                    Some(state)
                }
                None => None,
            }
        }
        Regime::ObserverOnly => None,
    };

    let final_outcome = match (scenario.observer_time, collapsed) {
        (Some(t_obs), collapsed) => {
            let state = match collapsed {
                Some(state) => state,
                None => uncollapsed_state(scenario, t_obs)?,
            };
            let (outcome, _) = observer_measure(&state, draws.observer)?;
            events.push(Event {
                t: t_obs,
                kind: EventKind::ObserverMeasurement(outcome),
            });
            outcome
        }
        (None, Some(state)) => Outcome::of_state(&state),
        (None, None) if scenario.regime == Regime::ObserverOnly => {
            let (outcome, _) = observer_measure(&state_at(profile, profile.t_end)?, draws.observer)?;
            events.push(Event {
                t: profile.t_end,
                kind: EventKind::ObserverMeasurement(outcome),
            });
            outcome
        }
        (None, None) => {
            let end = uncollapsed_state(scenario, profile.t_end)?;
            let state = apply_rule_b(&end, profile.t_end)?;
            events.push(Event {
                t: profile.t_end,
                kind: EventKind::RuleBCollapse,
            });
            Outcome::of_state(&state)
        }
    };

    Ok(TrajectoryRecord {
        events,
        final_outcome,
        capture_time,
    })
}

/// State of a trajectory that has not collapsed by time `t`.
fn uncollapsed_state(scenario: &Scenario, t: f64) -> Result<TwoComponentState, EngineError> {
    match scenario.regime {
        Regime::QuantumJump => {
            if t < scenario.profile.t_start {
                return Err(DynamicsError::BeforeOnset {
                    t,
                    t_start: scenario.profile.t_start,
                }
                .into());
            }
            Ok(TwoComponentState::superposed(0.0, t))
        }
        _ => Ok(state_at(&scenario.profile, t)?),
    }
}

/// The weights a trajectory carries at time `t`, reconstructed from its
/// record: collapsed after its collapse or measurement event, otherwise the
/// regime's uncollapsed state.
pub fn tracked_state(
    scenario: &Scenario,
    record: &TrajectoryRecord,
    t: f64,
) -> Result<TwoComponentState, EngineError> {
    let last = record.events.iter().rev().find(|e| e.t <= t);
    let Some(event) = last else {
        return uncollapsed_state(scenario, t);
    };
    let capture = match event.kind {
        EventKind::RuleACollapse => true,
        EventKind::RuleBCollapse => false,
        EventKind::SpontaneousCollapse => record.capture_time == Some(event.t),
        EventKind::ObserverMeasurement(outcome) => outcome == Outcome::CaptureObserved,
    };
    Ok(if capture {
        TwoComponentState::collapsed_capture(t)
    } else {
        TwoComponentState::collapsed_no_capture(t)
    })
}

fn block_tally(scenario: &Scenario, block: u64) -> Result<Tally, EngineError> {
    let mut tally = Tally::new(scenario.profile.t_start, scenario.profile.t_end);
    let start = block * BLOCK_SIZE;
    let end = (start + BLOCK_SIZE).min(scenario.n_trajectories);
    for index in start..end {
        let record = simulate(scenario, TrajectoryDraws::derive(scenario.master_seed, index))?;
        tally.record(record.final_outcome, record.capture_time)?;
    }
    Ok(tally)
}

fn n_blocks(scenario: &Scenario) -> u64 {
    scenario.n_trajectories.div_ceil(BLOCK_SIZE)
}

/// Runs every trajectory of the scenario on the global thread pool.
pub fn run_ensemble(scenario: &Scenario) -> Result<EnsembleStats, EngineError> {
    scenario.validate()?;
    let (t_start, t_end) = (scenario.profile.t_start, scenario.profile.t_end);
    let tally = (0..n_blocks(scenario))
        .into_par_iter()
        .map(|b| block_tally(scenario, b))
        .try_reduce(
            || Tally::new(t_start, t_end),
            |a, b| a.merge(&b).map_err(EngineError::from),
        )?;
    Ok(tally.finish()?)
}

/// Same as [`run_ensemble`] on a dedicated pool of `workers` threads.
pub fn run_ensemble_with_workers(
    scenario: &Scenario,
    workers: usize,
) -> Result<EnsembleStats, EngineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EngineError::WorkerPool(e.to_string()))?;
    pool.install(|| run_ensemble(scenario))
}

/// Sorted objective capture times of all trajectories.
pub fn capture_times(scenario: &Scenario) -> Result<Vec<f64>, EngineError> {
    scenario.validate()?;
    let per_block: Vec<Vec<f64>> = (0..n_blocks(scenario))
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_SIZE;
            let end = (start + BLOCK_SIZE).min(scenario.n_trajectories);
            (start..end)
                .filter_map(|i| {
                    simulate(scenario, TrajectoryDraws::derive(scenario.master_seed, i))
                        .map(|r| r.capture_time)
                        .transpose()
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut times: Vec<f64> = per_block.into_iter().flatten().collect();
    times.sort_by(f64::total_cmp);
    Ok(times)
}

/// Exact probabilities of the two final outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDistribution {
    pub capture: f64,
    pub no_capture: f64,
}

impl OutcomeDistribution {
    pub fn get(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::CaptureObserved => self.capture,
            Outcome::NoCaptureObserved => self.no_capture,
            Outcome::SuperpositionIntact => 0.0,
        }
    }

    fn from_tree(collapsed_capture: f64, collapsed_no_capture: f64, surviving: f64, leaf_capture: f64) -> Self {
        let capture = collapsed_capture + surviving * leaf_capture;
        let no_capture = collapsed_no_capture + surviving * (1.0 - leaf_capture);
        Self { capture, no_capture }
    }
}

/// Propagates the probability tree over `n_steps` equal steps of
/// `[t_start, horizon]` and applies the regime's observation law to the
/// surviving leaf. No randomness is involved.
pub fn oracle_distribution(
    scenario: &Scenario,
    n_steps: usize,
) -> Result<OutcomeDistribution, EngineError> {
    scenario.validate()?;
    if n_steps < MIN_ORACLE_STEPS {
        return Err(EngineError::TooFewOracleSteps(n_steps));
    }
    let profile = &scenario.profile;
    let horizon = scenario.horizon();
    let t0 = profile.t_start;
    let h = (horizon - t0) / n_steps as f64;
    let grid = |k: usize| if k == n_steps { horizon } else { t0 + k as f64 * h };

    // Probability that the surviving branch is observed as capture.
    let leaf_capture = |survivor_conditioned: bool| -> f64 {
        match scenario.observer_time {
            Some(t_obs) if !survivor_conditioned => profile.capture_probability(t_obs),
            _ => 0.0,
        }
    };

    let dist = match scenario.regime {
        Regime::ObserverOnly => {
            OutcomeDistribution::from_tree(0.0, 0.0, 1.0, profile.capture_probability(horizon))
        }
        Regime::PaperNaive | Regime::QuantumJump => {
            // Collapse mass leaving the surviving branch in each step.
            let mut collapsed = CompensatedSum::default();
            let mut surviving_product = 1.0;
            for k in 0..n_steps {
                let step_mass = profile.capture_probability(grid(k + 1)) - profile.capture_probability(grid(k));
                match scenario.rule_a_interpretation {
                    RuleAInterpretation::UnconditionalDensity => collapsed.add(step_mass),
                    RuleAInterpretation::HazardRate => surviving_product *= (-step_mass).exp(),
                }
            }
            let collapsed = match scenario.rule_a_interpretation {
                RuleAInterpretation::UnconditionalDensity => collapsed.value(),
                RuleAInterpretation::HazardRate => 1.0 - surviving_product,
            };
            let conditioned = scenario.regime == Regime::QuantumJump;
            OutcomeDistribution::from_tree(collapsed, 0.0, 1.0 - collapsed, leaf_capture(conditioned))
        }
        Regime::SpontaneousRate { rate } => {
            let survival = |t: f64| (-rate * (t - t0)).exp();
            let mut to_capture = CompensatedSum::default();
            let mut to_no_capture = CompensatedSum::default();
            for k in 0..n_steps {
                let (a, b) = (grid(k), grid(k + 1));
                let (pa, pb) = (profile.capture_probability(a), profile.capture_probability(b));
                let (sa, sb) = (survival(a), survival(b));
                let collapse_mass = sa - sb;
                // Integral of rate * survival * P over the step with P linear
                // on the step: P(a) times the collapse mass, plus the slope
                // term.
                let slope_term = if rate > 0.0 {
                    (pb - pa) / (b - a) * sa * ramp_moment(rate * (b - a)) / rate
                } else {
                    0.0
                };
                let capture_mass = pa * collapse_mass + slope_term;
                to_capture.add(capture_mass);
                to_no_capture.add(collapse_mass - capture_mass);
            }
            let surviving = survival(horizon);
            OutcomeDistribution::from_tree(to_capture.value(), to_no_capture.value(), surviving, leaf_capture(false))
        }
    };
    Ok(dist)
}

/// Neumaier summation.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// `1 - e^{-x} (1 + x)`, with a series for small `x`.
fn ramp_moment(x: f64) -> f64 {
    if x < 1e-3 {
        x * x * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0)
    } else {
        -(-x).exp_m1() - x * (-x).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub outcome: Outcome,
    pub empirical: f64,
    pub exact: f64,
    pub std_error: f64,
    pub z: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub n: u64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }

    pub fn row(&self, outcome: Outcome) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.outcome == outcome)
    }
}

/// Per-outcome z-scores of the empirical frequencies against exact
/// probabilities, using the binomial standard error of the exact value.
pub fn compare(stats: &EnsembleStats, oracle: &OutcomeDistribution) -> ComparisonReport {
    let n = stats.n as f64;
    let rows = Outcome::FINAL
        .iter()
        .map(|&outcome| {
            let empirical = stats.frequency(outcome);
            let exact = oracle.get(outcome).clamp(0.0, 1.0);
            let std_error = (exact * (1.0 - exact) / n).sqrt();
            let diff = empirical - exact;
            let z = if std_error > 0.0 {
                diff / std_error
            } else if diff.abs() <= 1e-12 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            };
            ComparisonRow {
                outcome,
                empirical,
                exact,
                std_error,
                z,
                flagged: z.abs() > Z_FLAG_THRESHOLD,
            }
        })
        .collect();
    ComparisonReport { n: stats.n, rows }
}
