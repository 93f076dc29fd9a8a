//! A Monte Carlo laboratory for single-event state reduction in a
//! two-component particle/detector model.
//!
//! Weight flows from the no-capture component into the capture component at
//! a rate given by a [`CurrentProfile`]. Reduction regimes combine a
//! current-driven capture collapse, a terminal no-capture collapse at the end
//! of the interaction, fixed-rate spontaneous collapse, and Born-rule
//! observation. Ensembles of trajectories are compared against an exact
//! probability-tree oracle.

pub mod cli;
pub mod collapse_rules;
pub mod dynamics;
pub mod engine;
pub mod stats;
pub mod stream;

pub use collapse_rules::{Outcome, RuleAInterpretation};
pub use dynamics::{state_at, CurrentProfile, ProfileKind, Status, TwoComponentState};
pub use engine::{
    compare, oracle_distribution, run_ensemble, run_trajectory, ComparisonReport, OutcomeDistribution,
    Regime, Scenario, TrajectoryRecord,
};
pub use stats::EnsembleStats;
