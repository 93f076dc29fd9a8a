//! TOML scenario documents and the built-in presets.
//!
//! ```toml
//! observer_time = 8.333333333333334      # optional
//! rule_a_interpretation = "unconditional-density"   # or "hazard-rate"; optional
//! n_trajectories = 200000                # optional, default 100000
//! master_seed = 1954
//!
//! [profile]
//! kind = "constant"        # constant | linear-ramp | gaussian-pulse | tabulated
//! t_start = 0.0
//! t_end = 10.0
//! params = { rate = 0.06 }
//!
//! [regime]
//! name = "paper-naive"     # paper-naive | observer-only | quantum-jump | spontaneous-rate
//! ```
//!
//! Profile parameters per kind:
//!
//! * `constant`: `rate`
//! * `linear-ramp`: `rate_start`, `rate_end`
//! * `gaussian-pulse`: `center`, `width`, `area`
//! * `tabulated`: `points = [[t, rate], ...]`; the window defaults to the grid span
//!
//! `spontaneous-rate` takes `params = { rate = ... }` in the regime section.

use crate::collapse_rules::RuleAInterpretation;
use crate::dynamics::{CurrentProfile, ProfileKind, TabulatedCurve};
use crate::engine::{EngineError, Regime, Scenario};
use serde::Deserialize;
use std::fmt::Write as _;
use thiserror::Error;

pub const DEFAULT_N_TRAJECTORIES: u64 = 100_000;

pub const PRESET_NAMES: [&str; 5] = [
    "fig1",
    "fig1-observer-only",
    "fig1-quantum-jump",
    "no-observer",
    "grw-timing",
];

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("{0}")]
    Syntax(String),
    #[error("missing required field `{0}`")]
    MissingField(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{field}`: {message}")]
    InvalidValue { field: String, message: String },
    #[error("scenario is invalid: {0}")]
    Invalid(#[from] EngineError),
    #[error("unknown preset `{0}` (available: fig1, fig1-observer-only, fig1-quantum-jump, no-observer, grw-timing)")]
    UnknownPreset(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    profile: ProfileSection,
    regime: RegimeSection,
    observer_time: Option<f64>,
    rule_a_interpretation: Option<String>,
    n_trajectories: Option<i64>,
    master_seed: Seed,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Seed {
    Integer(i64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileSection {
    kind: String,
    t_start: Option<f64>,
    t_end: Option<f64>,
    #[serde(default)]
    params: toml::Table,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegimeSection {
    name: String,
    #[serde(default)]
    params: toml::Table,
}

/// Parameters of one section, checked off as they are read.
struct Params<'a> {
    section: &'static str,
    table: &'a toml::Table,
    allowed: &'static [&'static str],
}

impl<'a> Params<'a> {
    fn new(section: &'static str, table: &'a toml::Table, allowed: &'static [&'static str]) -> Result<Self, ScenarioFileError> {
        if let Some(key) = table.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(ScenarioFileError::UnknownKey(format!("{section}.params.{key}")));
        }
        Ok(Self {
            section,
            table,
            allowed,
        })
    }

    fn path(&self, key: &str) -> String {
        format!("{}.params.{key}", self.section)
    }

    fn number(&self, key: &str) -> Result<f64, ScenarioFileError> {
        debug_assert!(self.allowed.contains(&key));
        match self.table.get(key) {
            None => Err(ScenarioFileError::MissingField(self.path(key))),
            Some(v) => as_number(v).ok_or_else(|| ScenarioFileError::InvalidValue {
                field: self.path(key),
                message: format!("expected a number, found {}", v.type_str()),
            }),
        }
    }
}

fn as_number(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn required(value: Option<f64>, field: &str) -> Result<f64, ScenarioFileError> {
    value.ok_or_else(|| ScenarioFileError::MissingField(field.to_string()))
}

fn parse_profile(section: &ProfileSection) -> Result<CurrentProfile, ScenarioFileError> {
    let window = || -> Result<(f64, f64), ScenarioFileError> {
        Ok((
            required(section.t_start, "profile.t_start")?,
            required(section.t_end, "profile.t_end")?,
        ))
    };
    let kind = match section.kind.as_str() {
        "constant" => {
            let p = Params::new("profile", &section.params, &["rate"])?;
            ProfileKind::Constant {
                rate: p.number("rate")?,
            }
        }
        "linear-ramp" => {
            let p = Params::new("profile", &section.params, &["rate_start", "rate_end"])?;
            ProfileKind::LinearRamp {
                rate_start: p.number("rate_start")?,
                rate_end: p.number("rate_end")?,
            }
        }
        "gaussian-pulse" => {
            let p = Params::new("profile", &section.params, &["center", "width", "area"])?;
            ProfileKind::GaussianPulse {
                center: p.number("center")?,
                width: p.number("width")?,
                area: p.number("area")?,
            }
        }
        "tabulated" => {
            let p = Params::new("profile", &section.params, &["points"])?;
            let points = parse_points(&p)?;
            let curve = TabulatedCurve::new(&points).map_err(|e| ScenarioFileError::InvalidValue {
                field: p.path("points"),
                message: e.to_string(),
            })?;
            let t_start = section.t_start.unwrap_or(points[0].0);
            let t_end = section.t_end.unwrap_or(points[points.len() - 1].0);
            return Ok(CurrentProfile::new(ProfileKind::Tabulated(curve), t_start, t_end));
        }
        other => {
            return Err(ScenarioFileError::InvalidValue {
                field: "profile.kind".into(),
                message: format!(
                    "unknown kind `{other}` (expected constant, linear-ramp, gaussian-pulse or tabulated)"
                ),
            })
        }
    };
    let (t_start, t_end) = window()?;
    Ok(CurrentProfile::new(kind, t_start, t_end))
}

fn parse_points(p: &Params<'_>) -> Result<Vec<(f64, f64)>, ScenarioFileError> {
    let bad = |message: String| ScenarioFileError::InvalidValue {
        field: p.path("points"),
        message,
    };
    let Some(value) = p.table.get("points") else {
        return Err(ScenarioFileError::MissingField(p.path("points")));
    };
    let rows = value
        .as_array()
        .ok_or_else(|| bad("expected an array of [time, rate] pairs".into()))?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| match row.as_array().map(|r| r.as_slice()) {
            Some([t, r]) => match (as_number(t), as_number(r)) {
                (Some(t), Some(r)) => Ok((t, r)),
                _ => Err(bad(format!("entry {i} must hold two numbers"))),
            },
            _ => Err(bad(format!("entry {i} must be a [time, rate] pair"))),
        })
        .collect()
}

fn parse_regime(section: &RegimeSection) -> Result<Regime, ScenarioFileError> {
    let regime = match section.name.as_str() {
        "paper-naive" => Regime::PaperNaive,
        "observer-only" => Regime::ObserverOnly,
        "quantum-jump" => Regime::QuantumJump,
        "spontaneous-rate" => {
            let p = Params::new("regime", &section.params, &["rate"])?;
            return Ok(Regime::SpontaneousRate {
                rate: p.number("rate")?,
            });
        }
        other => {
            return Err(ScenarioFileError::InvalidValue {
                field: "regime.name".into(),
                message: format!(
                    "unknown regime `{other}` (expected paper-naive, observer-only, quantum-jump or spontaneous-rate)"
                ),
            })
        }
    };
    Params::new("regime", &section.params, &[])?;
    Ok(regime)
}

pub fn parse_interpretation(text: &str) -> Option<RuleAInterpretation> {
    match text {
        "unconditional-density" => Some(RuleAInterpretation::UnconditionalDensity),
        "hazard-rate" => Some(RuleAInterpretation::HazardRate),
        _ => None,
    }
}

pub fn interpretation_name(interpretation: RuleAInterpretation) -> &'static str {
    match interpretation {
        RuleAInterpretation::UnconditionalDensity => "unconditional-density",
        RuleAInterpretation::HazardRate => "hazard-rate",
    }
}

/// Parses and fully validates a scenario document.
pub fn parse_scenario(document: &str) -> Result<Scenario, ScenarioFileError> {
    let doc: Document = toml::from_str(document).map_err(|e| {
        let message = e.to_string();
        if let Some(field) = message
            .split("unknown field `")
            .nth(1)
            .and_then(|rest| rest.split('`').next())
        {
            // Keep the location from the TOML error alongside the key.
            ScenarioFileError::Syntax(format!("unknown key `{field}`: {}", message.trim_end()))
        } else {
            ScenarioFileError::Syntax(message.trim_end().to_string())
        }
    })?;
    let profile = parse_profile(&doc.profile)?;
    let regime = parse_regime(&doc.regime)?;
    let rule_a_interpretation = match doc.rule_a_interpretation.as_deref() {
        None => RuleAInterpretation::default(),
        Some(text) => parse_interpretation(text).ok_or_else(|| ScenarioFileError::InvalidValue {
            field: "rule_a_interpretation".into(),
            message: format!("unknown interpretation `{text}` (expected unconditional-density or hazard-rate)"),
        })?,
    };
    let n_trajectories = match doc.n_trajectories {
        None => DEFAULT_N_TRAJECTORIES,
        Some(n) if n >= 1 => n as u64,
        Some(n) => {
            return Err(ScenarioFileError::InvalidValue {
                field: "n_trajectories".into(),
                message: format!("must be at least 1, got {n}"),
            })
        }
    };
    let master_seed = match doc.master_seed {
        Seed::Integer(s) if s >= 0 => s as u64,
        Seed::Text(ref t) if t.parse::<u64>().is_ok() => t.parse().unwrap_or_default(),
        other => {
            return Err(ScenarioFileError::InvalidValue {
                field: "master_seed".into(),
                message: format!("expected a non-negative 64-bit integer, got {other:?}"),
            })
        }
    };
    let scenario = Scenario {
        profile,
        regime,
        observer_time: doc.observer_time,
        n_trajectories,
        master_seed,
        rule_a_interpretation,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Canonical document for a scenario; parsing it gives the same value back.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let mut out = String::new();
    if let Some(t) = scenario.observer_time {
        let _ = writeln!(out, "observer_time = {t:?}");
    }
    let _ = writeln!(
        out,
        "rule_a_interpretation = \"{}\"",
        interpretation_name(scenario.rule_a_interpretation)
    );
    let _ = writeln!(out, "n_trajectories = {}", scenario.n_trajectories);
    if scenario.master_seed <= i64::MAX as u64 {
        let _ = writeln!(out, "master_seed = {}", scenario.master_seed);
    } else {
        let _ = writeln!(out, "master_seed = \"{}\"", scenario.master_seed);
    }
    let p = &scenario.profile;
    out.push_str("\n[profile]\n");
    let (kind, params) = match &p.kind {
        ProfileKind::Constant { rate } => ("constant", format!("{{ rate = {rate:?} }}")),
        ProfileKind::LinearRamp {
            rate_start,
            rate_end,
        } => (
            "linear-ramp",
            format!("{{ rate_start = {rate_start:?}, rate_end = {rate_end:?} }}"),
        ),
        ProfileKind::GaussianPulse {
            center,
            width,
            area,
        } => (
            "gaussian-pulse",
            format!("{{ center = {center:?}, width = {width:?}, area = {area:?} }}"),
        ),
        ProfileKind::Tabulated(curve) => {
            let rows: Vec<String> = curve.points().map(|(t, r)| format!("[{t:?}, {r:?}]")).collect();
            ("tabulated", format!("{{ points = [{}] }}", rows.join(", ")))
        }
    };
    let _ = writeln!(out, "kind = \"{kind}\"");
    let _ = writeln!(out, "t_start = {:?}", p.t_start);
    let _ = writeln!(out, "t_end = {:?}", p.t_end);
    let _ = writeln!(out, "params = {params}");
    out.push_str("\n[regime]\n");
    let _ = writeln!(out, "name = \"{}\"", scenario.regime.name());
    if let Regime::SpontaneousRate { rate } = scenario.regime {
        let _ = writeln!(out, "params = {{ rate = {rate:?} }}");
    }
    out
}

const FIG1_PROFILE: &str = "\
[profile]
kind = \"constant\"
t_start = 0.0
t_end = 10.0
params = { rate = 0.06 }
";

/// Canonical document for a built-in preset.
///
/// The `fig1` family uses a constant current of 0.06 over `[0, 10]`, so the
/// total capture probability is 0.6, and observes at `t = 25/3` where the
/// capture probability is 0.5.
pub fn preset(name: &str) -> Result<String, ScenarioFileError> {
    let header = |regime: &str, observer: bool| {
        let observer_line = if observer {
            "observer_time = 8.333333333333334\n"
        } else {
            ""
        };
        format!(
            "# preset: {name}\n{observer_line}rule_a_interpretation = \"unconditional-density\"\nn_trajectories = 200000\nmaster_seed = 1954\n\n{FIG1_PROFILE}\n[regime]\n{regime}"
        )
    };
    Ok(match name {
        "fig1" => header("name = \"paper-naive\"\n", true),
        "fig1-observer-only" => header("name = \"observer-only\"\n", true),
        "fig1-quantum-jump" => header("name = \"quantum-jump\"\n", true),
        "no-observer" => header("name = \"paper-naive\"\n", false),
        "grw-timing" => header("name = \"spontaneous-rate\"\nparams = { rate = 1.0 }\n", false),
        other => return Err(ScenarioFileError::UnknownPreset(other.to_string())),
    })
}

pub fn preset_scenario(name: &str) -> Result<Scenario, ScenarioFileError> {
    parse_scenario(&preset(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_preset_parses() {
        let s = preset_scenario("fig1").unwrap();
        assert_eq!(s.profile, CurrentProfile::constant(0.06, 0.0, 10.0));
        assert_eq!(s.regime, Regime::PaperNaive);
        assert_eq!(s.observer_time, Some(25.0 / 3.0));
        assert_eq!(s.n_trajectories, 200_000);
        assert_eq!(s.rule_a_interpretation, RuleAInterpretation::UnconditionalDensity);
        assert_eq!(s.profile.total_probability(), 0.6);
        assert_eq!(s.profile.capture_probability(s.observer_time.unwrap()), 0.5);
    }

    #[test]
    fn quantum_jump_preset_differs_only_in_regime() {
        let base = preset_scenario("fig1").unwrap();
        let jump = preset_scenario("fig1-quantum-jump").unwrap();
        assert_eq!(jump, base.with_regime(Regime::QuantumJump));
        assert!(matches!(preset("nope"), Err(ScenarioFileError::UnknownPreset(_))));
    }

    #[test]
    fn missing_profile_is_named() {
        let doc = "master_seed = 1\n[regime]\nname = \"paper-naive\"\n";
        let err = parse_scenario(doc).unwrap_err().to_string();
        assert!(err.contains("profile"), "{err}");
    }

    #[test]
    fn observer_beyond_window_is_rejected() {
        let doc = preset("fig1").unwrap().replace("8.333333333333334", "12.0");
        let err = parse_scenario(&doc).unwrap_err();
        assert!(matches!(
            err,
            ScenarioFileError::Invalid(EngineError::ObserverOutsideWindow { .. })
        ));
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let doc = preset("fig1").unwrap().replace("master_seed", "master_sed");
        let err = parse_scenario(&doc).unwrap_err().to_string();
        assert!(err.contains("master_sed"), "{err}");
        assert!(err.contains("line"), "{err}");
        let doc = preset("fig1").unwrap().replace("rate = 0.06", "rat = 0.06");
        let err = parse_scenario(&doc).unwrap_err();
        assert!(matches!(err, ScenarioFileError::UnknownKey(ref k) if k == "profile.params.rat"));
        let doc = preset("fig1").unwrap() + "params = { rate = 2.0 }\n";
        assert!(matches!(
            parse_scenario(&doc).unwrap_err(),
            ScenarioFileError::UnknownKey(ref k) if k == "regime.params.rate"
        ));
    }

    #[test]
    fn syntax_errors_carry_line() {
        let err = parse_scenario("master_seed = \n").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn defaults_apply() {
        let doc = "master_seed = 3\n[profile]\nkind = \"constant\"\nt_start = 0\nt_end = 1\nparams = { rate = 0.5 }\n[regime]\nname = \"observer-only\"\n";
        let s = parse_scenario(doc).unwrap();
        assert_eq!(s.n_trajectories, DEFAULT_N_TRAJECTORIES);
        assert_eq!(s.rule_a_interpretation, RuleAInterpretation::UnconditionalDensity);
        assert_eq!(s.observer_time, None);
    }

    #[test]
    fn semantic_profile_errors() {
        let doc = preset("fig1").unwrap().replace("rate = 0.06", "rate = 0.2");
        let err = parse_scenario(&doc).unwrap_err().to_string();
        assert!(err.contains("exceeds one"), "{err}");
        let doc = preset("fig1").unwrap().replace("t_end = 10.0\n", "");
        assert!(matches!(
            parse_scenario(&doc).unwrap_err(),
            ScenarioFileError::MissingField(ref f) if f == "profile.t_end"
        ));
    }

    #[test]
    fn tabulated_and_large_seed_round_trip() {
        let s = Scenario {
            profile: CurrentProfile::tabulated(&[(0.0, 0.0), (1.5, 0.2), (4.0, 0.01)]).unwrap(),
            regime: Regime::SpontaneousRate { rate: 0.75 },
            observer_time: Some(3.0),
            n_trajectories: 17,
            master_seed: u64::MAX,
            rule_a_interpretation: RuleAInterpretation::HazardRate,
        };
        let text = serialize_scenario(&s);
        assert_eq!(parse_scenario(&text).unwrap(), s);
    }

    #[test]
    fn every_preset_round_trips() {
        for name in PRESET_NAMES {
            let s = preset_scenario(name).unwrap();
            let again = parse_scenario(&serialize_scenario(&s)).unwrap();
            assert_eq!(again, s, "{name}");
        }
    }
}
