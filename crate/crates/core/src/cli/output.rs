//! CSV emission. Lines end in `\n`; numbers carry 17 significant digits and
//! never depend on locale.

use crate::collapse_rules::Outcome;
use crate::dynamics::CurrentProfile;
use crate::engine::{ComparisonReport, OutcomeDistribution};
use crate::stats::EnsembleStats;
use std::fmt::Write as _;

pub const TRACE_HEADER: &str = "t,current,cumulative_probability";
pub const REPORT_HEADER: &str = "outcome,count,frequency,ci_lo,ci_hi,oracle,z";
pub const ORACLE_HEADER: &str = "outcome,probability";
pub const HISTOGRAM_HEADER: &str = "bin_start,bin_end,count";

/// Formats `value` with 17 significant digits, positionally for moderate
/// magnitudes and in `1.2345678901234567e-8` form otherwise.
pub fn format_number(value: f64) -> String {
    if !value.is_finite() {
        return if value.is_nan() {
            "NaN".into()
        } else if value > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{value:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        let (int, frac) = digits.split_at(split);
        if frac.is_empty() {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        }
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    format!("{sign}{body}")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("a trace needs at least two points, got {0}")]
pub struct TooFewPoints(pub usize);

/// Samples `J(t)` and `P(t)` at `n_points` uniformly spaced times covering
/// the window, endpoints included.
pub fn emit_trace(profile: &CurrentProfile, n_points: usize) -> Result<String, TooFewPoints> {
    if n_points < 2 {
        return Err(TooFewPoints(n_points));
    }
    let mut out = String::with_capacity(64 * n_points);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    let last = n_points - 1;
    for k in 0..n_points {
        let t = if k == last {
            profile.t_end
        } else {
            profile.t_start + profile.duration() * k as f64 / last as f64
        };
        let _ = writeln!(
            out,
            "{},{},{}",
            format_number(t),
            format_number(profile.current(t)),
            format_number(profile.capture_probability(t))
        );
    }
    Ok(out)
}

/// One row per final outcome, capture first.
pub fn emit_report(
    stats: &EnsembleStats,
    oracle: &OutcomeDistribution,
    comparison: &ComparisonReport,
) -> String {
    let mut out = String::new();
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for outcome in Outcome::FINAL {
        let (lo, hi) = stats.interval(outcome);
        let z = comparison.row(outcome).map_or(f64::NAN, |r| r.z);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            outcome.name(),
            stats.counts.get(outcome),
            format_number(stats.frequency(outcome)),
            format_number(lo),
            format_number(hi),
            format_number(oracle.get(outcome)),
            format_number(z)
        );
    }
    out
}

pub fn emit_oracle(oracle: &OutcomeDistribution) -> String {
    let mut out = String::new();
    out.push_str(ORACLE_HEADER);
    out.push('\n');
    for outcome in Outcome::FINAL {
        let _ = writeln!(out, "{},{}", outcome.name(), format_number(oracle.get(outcome)));
    }
    out
}

pub fn emit_histogram(stats: &EnsembleStats) -> String {
    let h = &stats.histogram;
    let mut out = String::new();
    out.push_str(HISTOGRAM_HEADER);
    out.push('\n');
    for (i, count) in h.bins().iter().enumerate() {
        let end = if i + 1 == h.bins().len() {
            h.window().1
        } else {
            h.bin_start(i + 1)
        };
        let _ = writeln!(out, "{},{},{count}", format_number(h.bin_start(i)), format_number(end));
    }
    out
}
