//! Probability-current profiles and the uncollapsed two-component state.
//!
//! A detector interacting with an incoming particle is modelled by two
//! decoherent components: the partially scattered particle with the detector
//! in its ground state, and the detector in its capture state. Only the
//! squared-modulus weights of the two components are tracked. Weight flows
//! from the first component into the second at the rate `J(t)` given by a
//! [`CurrentProfile`].

use statrs::function::erf::erfc;
use thiserror::Error;

/// Tolerance used when checking that the total capture probability stays
/// within `[0, 1]`.
const TOTAL_PROBABILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("current is negative ({rate}) at t = {t}")]
    NegativeCurrent { t: f64, rate: f64 },
    #[error("interaction window is inverted: t_start = {t_start} is not before t_end = {t_end}")]
    WindowInverted { t_start: f64, t_end: f64 },
    #[error("total capture probability {0} exceeds one")]
    TotalProbabilityExceedsOne(f64),
    #[error("profile parameter `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("gaussian pulse width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("gaussian pulse carries no mass inside the interaction window")]
    PulseOutsideWindow,
    #[error("tabulated profile needs at least two grid points, got {0}")]
    TooFewGridPoints(usize),
    #[error("tabulated grid times must be strictly increasing (violated at index {0})")]
    UnorderedGrid(usize),
    #[error("tabulated grid spans [{grid_start}, {grid_end}] but the window is [{t_start}, {t_end}]")]
    GridWindowMismatch {
        grid_start: f64,
        grid_end: f64,
        t_start: f64,
        t_end: f64,
    },
    #[error("state requested at t = {t}, before the interaction onset t_start = {t_start}")]
    BeforeOnset { t: f64, t_start: f64 },
}

/// A rate grid `(time, rate)` with linear interpolation between nodes.
///
/// The cumulative integral at every node is precomputed with the trapezoid
/// rule, which is exact for a piecewise-linear rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCurve {
    times: Vec<f64>,
    rates: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TabulatedCurve {
    pub fn new(points: &[(f64, f64)]) -> Result<Self, DynamicsError> {
        if points.len() < 2 {
            return Err(DynamicsError::TooFewGridPoints(points.len()));
        }
        for (i, &(t, r)) in points.iter().enumerate() {
            if !t.is_finite() {
                return Err(DynamicsError::NonFinite("points.time"));
            }
            if !r.is_finite() {
                return Err(DynamicsError::NonFinite("points.rate"));
            }
            if i > 0 && t <= points[i - 1].0 {
                return Err(DynamicsError::UnorderedGrid(i));
            }
        }
        let times: Vec<f64> = points.iter().map(|p| p.0).collect();
        let rates: Vec<f64> = points.iter().map(|p| p.1).collect();
        let mut cumulative = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        cumulative.push(acc);
        for i in 1..times.len() {
            acc += 0.5 * (rates[i - 1] + rates[i]) * (times[i] - times[i - 1]);
            cumulative.push(acc);
        }
        Ok(Self {
            times,
            rates,
            cumulative,
        })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.rates.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn first_time(&self) -> f64 {
        self.times[0]
    }

    fn last_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Index `i` of the segment `[times[i], times[i + 1]]` containing `t`.
    fn segment(&self, t: f64) -> usize {
        let upper = self.times.partition_point(|&x| x <= t);
        upper.clamp(1, self.times.len() - 1) - 1
    }

    fn rate_at(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let frac = (t - t0) / (t1 - t0);
        self.rates[i] + frac * (self.rates[i + 1] - self.rates[i])
    }

    fn cumulative_at(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.times[i + 1] - self.times[i];
        self.cumulative[i] + ramp_integral(self.rates[i], self.rates[i + 1], h, t - self.times[i])
    }

    fn total(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    fn invert(&self, target: f64) -> f64 {
        // First node whose cumulative reaches the target bounds the segment.
        let upper = self.cumulative.partition_point(|&c| c < target);
        let i = upper.clamp(1, self.times.len() - 1) - 1;
        let h = self.times[i + 1] - self.times[i];
        let local = ramp_inverse(self.rates[i], self.rates[i + 1], h, target - self.cumulative[i]);
        self.times[i] + local.clamp(0.0, h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    Constant { rate: f64 },
    /// Rate varies linearly from `rate_start` at `t_start` to `rate_end` at `t_end`.
    LinearRamp { rate_start: f64, rate_end: f64 },
    /// Gaussian-shaped pulse truncated to the window and scaled so that the
    /// integral over the window equals `area`.
    GaussianPulse { center: f64, width: f64, area: f64 },
    Tabulated(TabulatedCurve),
}

/// The probability current `J(t)` over an interaction window.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentProfile {
    pub kind: ProfileKind,
    pub t_start: f64,
    pub t_end: f64,
}

impl CurrentProfile {
    pub fn new(kind: ProfileKind, t_start: f64, t_end: f64) -> Self {
        Self {
            kind,
            t_start,
            t_end,
        }
    }

    pub fn constant(rate: f64, t_start: f64, t_end: f64) -> Self {
        Self::new(ProfileKind::Constant { rate }, t_start, t_end)
    }

    pub fn linear_ramp(rate_start: f64, rate_end: f64, t_start: f64, t_end: f64) -> Self {
        Self::new(
            ProfileKind::LinearRamp {
                rate_start,
                rate_end,
            },
            t_start,
            t_end,
        )
    }

    pub fn gaussian_pulse(center: f64, width: f64, area: f64, t_start: f64, t_end: f64) -> Self {
        Self::new(
            ProfileKind::GaussianPulse {
                center,
                width,
                area,
            },
            t_start,
            t_end,
        )
    }

    /// Tabulated profile whose window is the span of the grid.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self, DynamicsError> {
        let curve = TabulatedCurve::new(points)?;
        let (t_start, t_end) = (curve.first_time(), curve.last_time());
        Ok(Self::new(ProfileKind::Tabulated(curve), t_start, t_end))
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start && t <= self.t_end
    }

    /// Checks every profile invariant and returns the total capture
    /// probability `P_total` on success.
    pub fn validate(&self) -> Result<f64, DynamicsError> {
        if !self.t_start.is_finite() {
            return Err(DynamicsError::NonFinite("t_start"));
        }
        if !self.t_end.is_finite() {
            return Err(DynamicsError::NonFinite("t_end"));
        }
        if self.t_start >= self.t_end {
            return Err(DynamicsError::WindowInverted {
                t_start: self.t_start,
                t_end: self.t_end,
            });
        }
        match &self.kind {
            ProfileKind::Constant { rate } => {
                finite(*rate, "rate")?;
                non_negative(*rate, self.t_start)?;
            }
            ProfileKind::LinearRamp {
                rate_start,
                rate_end,
            } => {
                finite(*rate_start, "rate_start")?;
                finite(*rate_end, "rate_end")?;
                non_negative(*rate_start, self.t_start)?;
                non_negative(*rate_end, self.t_end)?;
            }
            ProfileKind::GaussianPulse {
                center,
                width,
                area,
            } => {
                finite(*center, "center")?;
                finite(*width, "width")?;
                finite(*area, "area")?;
                if *width <= 0.0 {
                    return Err(DynamicsError::NonPositiveWidth(*width));
                }
                non_negative(*area, *center)?;
                let mass = self.pulse_window_mass(*center, *width);
                if !(mass > 0.0 && mass.is_finite()) {
                    return Err(DynamicsError::PulseOutsideWindow);
                }
            }
            ProfileKind::Tabulated(curve) => {
                if curve.first_time() != self.t_start || curve.last_time() != self.t_end {
                    return Err(DynamicsError::GridWindowMismatch {
                        grid_start: curve.first_time(),
                        grid_end: curve.last_time(),
                        t_start: self.t_start,
                        t_end: self.t_end,
                    });
                }
                for (t, r) in curve.points() {
                    non_negative(r, t)?;
                }
            }
        }
        let total = self.total_probability();
        if total > 1.0 + TOTAL_PROBABILITY_SLACK {
            return Err(DynamicsError::TotalProbabilityExceedsOne(total));
        }
        Ok(total)
    }

    /// `J(t)`; zero outside the interaction window.
    pub fn current(&self, t: f64) -> f64 {
        if !self.contains(t) {
            return 0.0;
        }
        match &self.kind {
            ProfileKind::Constant { rate } => *rate,
            ProfileKind::LinearRamp {
                rate_start,
                rate_end,
            } => rate_start + (rate_end - rate_start) * (t - self.t_start) / self.duration(),
            ProfileKind::GaussianPulse {
                center,
                width,
                area,
            } => {
                let z = (t - center) / width;
                let density = (-0.5 * z * z).exp() / (width * (2.0 * std::f64::consts::PI).sqrt());
                area * density / self.pulse_window_mass(*center, *width)
            }
            ProfileKind::Tabulated(curve) => curve.rate_at(t),
        }
    }

    /// `P(t)`: the integral of the current from `t_start` to `min(t, t_end)`.
    pub fn capture_probability(&self, t: f64) -> f64 {
        if t <= self.t_start {
            return 0.0;
        }
        let t = t.min(self.t_end);
        let elapsed = t - self.t_start;
        match &self.kind {
            ProfileKind::Constant { rate } => rate * elapsed,
            ProfileKind::LinearRamp {
                rate_start,
                rate_end,
            } => ramp_integral(*rate_start, *rate_end, self.duration(), elapsed),
            ProfileKind::GaussianPulse {
                center,
                width,
                area,
            } => {
                let lo = (self.t_start - center) / width;
                let z = (t - center) / width;
                area * normal_mass(lo, z) / self.pulse_window_mass(*center, *width)
            }
            ProfileKind::Tabulated(curve) => curve.cumulative_at(t),
        }
    }

    /// `P_total = P(t_end)`.
    pub fn total_probability(&self) -> f64 {
        match &self.kind {
            ProfileKind::Constant { rate } => rate * self.duration(),
            ProfileKind::LinearRamp {
                rate_start,
                rate_end,
            } => 0.5 * (rate_start + rate_end) * self.duration(),
            ProfileKind::GaussianPulse { area, .. } => *area,
            ProfileKind::Tabulated(curve) => curve.total(),
        }
    }

    /// Earliest time `t` in the window with `P(t) = target`.
    ///
    /// `target` must lie in `[0, P_total]`; the result is clamped to the
    /// window.
    pub fn invert_cumulative(&self, target: f64) -> f64 {
        if target <= 0.0 {
            return self.t_start;
        }
        let t = match &self.kind {
            ProfileKind::Constant { rate } => self.t_start + target / rate,
            ProfileKind::LinearRamp {
                rate_start,
                rate_end,
            } => self.t_start + ramp_inverse(*rate_start, *rate_end, self.duration(), target),
            ProfileKind::GaussianPulse { .. } => self.invert_by_newton(target),
            ProfileKind::Tabulated(curve) => curve.invert(target),
        };
        t.clamp(self.t_start, self.t_end)
    }

    fn pulse_window_mass(&self, center: f64, width: f64) -> f64 {
        normal_mass((self.t_start - center) / width, (self.t_end - center) / width)
    }

    /// Safeguarded Newton iteration on `P(t) - target`, using `J = P'`.
    fn invert_by_newton(&self, target: f64) -> f64 {
        let (mut lo, mut hi) = (self.t_start, self.t_end);
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let residual = self.capture_probability(t) - target;
            if residual == 0.0 {
                return t;
            }
            if residual > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let slope = self.current(t);
            let newton = t - residual / slope;
            t = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
                break;
            }
        }
        t
    }
}

fn finite(value: f64, name: &'static str) -> Result<(), DynamicsError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(DynamicsError::NonFinite(name))
    }
}

fn non_negative(rate: f64, t: f64) -> Result<(), DynamicsError> {
    if rate < 0.0 {
        Err(DynamicsError::NegativeCurrent { t, rate })
    } else {
        Ok(())
    }
}

/// Integral over `[0, tau]` of a rate rising linearly from `r0` to `r1` over
/// a segment of length `h`.
fn ramp_integral(r0: f64, r1: f64, h: f64, tau: f64) -> f64 {
    r0 * tau + 0.5 * (r1 - r0) * tau * tau / h
}

/// Inverse of [`ramp_integral`] in `tau`, in the cancellation-free form
/// `tau = 2y / (r0 + sqrt(r0^2 + 2 (r1 - r0) y / h))`.
fn ramp_inverse(r0: f64, r1: f64, h: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let disc = (r0 * r0 + 2.0 * (r1 - r0) * y / h).max(0.0);
    let denom = r0 + disc.sqrt();
    if denom > 0.0 {
        2.0 * y / denom
    } else {
        h
    }
}

/// Standard normal mass between `a` and `b` (`a <= b`), evaluated on the
/// tail that keeps precision.
fn normal_mass(a: f64, b: f64) -> f64 {
    let upper_tail = |x: f64| 0.5 * erfc(x / std::f64::consts::SQRT_2);
    if a >= 0.0 {
        upper_tail(a) - upper_tail(b)
    } else if b <= 0.0 {
        upper_tail(-b) - upper_tail(-a)
    } else {
        1.0 - upper_tail(-a) - upper_tail(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Superposed,
    CollapsedCapture,
    CollapsedNoCapture,
}

/// Weights of the no-capture and capture components at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoComponentState {
    pub p_no_capture: f64,
    pub p_capture: f64,
    pub status: Status,
    pub t: f64,
}

impl TwoComponentState {
    /// Superposed state with the given capture weight (clamped to `[0, 1]`).
    pub fn superposed(p_capture: f64, t: f64) -> Self {
        let p_capture = p_capture.clamp(0.0, 1.0);
        Self {
            p_no_capture: 1.0 - p_capture,
            p_capture,
            status: Status::Superposed,
            t,
        }
    }

    pub fn collapsed_capture(t: f64) -> Self {
        Self {
            p_no_capture: 0.0,
            p_capture: 1.0,
            status: Status::CollapsedCapture,
            t,
        }
    }

    pub fn collapsed_no_capture(t: f64) -> Self {
        Self {
            p_no_capture: 1.0,
            p_capture: 0.0,
            status: Status::CollapsedNoCapture,
            t,
        }
    }

    pub fn is_superposed(&self) -> bool {
        self.status == Status::Superposed
    }

    pub fn total_weight(&self) -> f64 {
        self.p_no_capture + self.p_capture
    }
}

/// The uncollapsed (unitary) state at time `t`.
pub fn state_at(profile: &CurrentProfile, t: f64) -> Result<TwoComponentState, DynamicsError> {
    if t < profile.t_start || t.is_nan() {
        return Err(DynamicsError::BeforeOnset {
            t,
            t_start: profile.t_start,
        });
    }
    Ok(TwoComponentState::superposed(profile.capture_probability(t), t))
}
