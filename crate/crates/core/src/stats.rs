//! Outcome aggregation, Wilson intervals, capture-time histograms and the
//! Kolmogorov–Smirnov distance.

use crate::collapse_rules::Outcome;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

pub const HISTOGRAM_BINS: usize = 100;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("{successes} successes out of {n} trials is not a valid binomial sample")]
    InvalidCounts { successes: u64, n: u64 },
    #[error("confidence level {0} must lie strictly between 0 and 1")]
    InvalidConfidence(f64),
    #[error("at least one sample is required")]
    EmptySample,
    #[error("samples must be sorted ascending and free of NaN (violated at index {0})")]
    UnsortedSamples(usize),
    #[error("cannot merge statistics collected over different windows")]
    WindowMismatch,
    #[error("{0} is not a final outcome")]
    NotFinal(Outcome),
}

/// Two-sided normal quantile for a confidence level, e.g. 1.95996 at 0.95.
pub fn normal_quantile(confidence: f64) -> Result<f64, StatsError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::InvalidConfidence(confidence));
    }
    let standard = Normal::standard();
    Ok(standard.inverse_cdf(0.5 + 0.5 * confidence))
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64, confidence: f64) -> Result<(f64, f64), StatsError> {
    if n == 0 || successes > n {
        return Err(StatsError::InvalidCounts { successes, n });
    }
    let z = normal_quantile(confidence)?;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2n = z * z / nf;
    let center = (p + 0.5 * z2n) / (1.0 + z2n);
    let half = z / (1.0 + z2n) * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let hi = if successes == n { 1.0 } else { (center + half).clamp(p, 1.0) };
    Ok((lo, hi))
}

/// Two-sided KS statistic between sorted samples and a reference CDF.
pub fn ks_distance<F>(sorted_samples: &[f64], cdf: F) -> Result<f64, StatsError>
where
    F: Fn(f64) -> f64,
{
    if sorted_samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    for (i, w) in sorted_samples.windows(2).enumerate() {
        if w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt()) {
            return Err(StatsError::UnsortedSamples(i + 1));
        }
    }
    if sorted_samples[0].is_nan() {
        return Err(StatsError::UnsortedSamples(0));
    }
    let n = sorted_samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted_samples.iter().enumerate() {
        let f = cdf(x);
        let below = i as f64 / n;
        let above = (i + 1) as f64 / n;
        d = d.max(above - f).max(f - below);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Fixed-width capture-time histogram over the interaction window.
///
/// A time exactly on an interior bin edge goes to the lower bin.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureHistogram {
    t_start: f64,
    t_end: f64,
    bins: Vec<u64>,
}

impl CaptureHistogram {
    pub fn new(t_start: f64, t_end: f64) -> Self {
        Self {
            t_start,
            t_end,
            bins: vec![0; HISTOGRAM_BINS],
        }
    }

    pub fn bin_width(&self) -> f64 {
        (self.t_end - self.t_start) / HISTOGRAM_BINS as f64
    }

    pub fn bin_index(&self, t: f64) -> usize {
        let scaled = (t - self.t_start) / self.bin_width();
        let upper = scaled.ceil();
        if upper < 1.0 {
            0
        } else {
            (upper as usize - 1).min(HISTOGRAM_BINS - 1)
        }
    }

    pub fn record(&mut self, t: f64) {
        let i = self.bin_index(t);
        self.bins[i] += 1;
    }

    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    /// Lower edge of bin `i`.
    pub fn bin_start(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.bin_width()
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    fn merge(&mut self, other: &Self) -> Result<(), StatsError> {
        if self.window() != other.window() {
            return Err(StatsError::WindowMismatch);
        }
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutcomeCounts {
    pub capture: u64,
    pub no_capture: u64,
}

impl OutcomeCounts {
    pub fn get(&self, outcome: Outcome) -> u64 {
        match outcome {
            Outcome::CaptureObserved => self.capture,
            Outcome::NoCaptureObserved => self.no_capture,
            Outcome::SuperpositionIntact => 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.capture + self.no_capture
    }
}

/// Mutable accumulator used while trajectories are being run.
#[derive(Debug, Clone, PartialEq)]
pub struct Tally {
    counts: OutcomeCounts,
    histogram: CaptureHistogram,
}

impl Tally {
    pub fn new(t_start: f64, t_end: f64) -> Self {
        Self {
            counts: OutcomeCounts::default(),
            histogram: CaptureHistogram::new(t_start, t_end),
        }
    }

    pub fn record(&mut self, outcome: Outcome, capture_time: Option<f64>) -> Result<(), StatsError> {
        match outcome {
            Outcome::CaptureObserved => self.counts.capture += 1,
            Outcome::NoCaptureObserved => self.counts.no_capture += 1,
            Outcome::SuperpositionIntact => return Err(StatsError::NotFinal(outcome)),
        }
        if let Some(t) = capture_time {
            self.histogram.record(t);
        }
        Ok(())
    }

    pub fn merge(mut self, other: &Tally) -> Result<Tally, StatsError> {
        self.histogram.merge(&other.histogram)?;
        self.counts.capture += other.counts.capture;
        self.counts.no_capture += other.counts.no_capture;
        Ok(self)
    }

    pub fn finish(self) -> Result<EnsembleStats, StatsError> {
        EnsembleStats::new(self.counts, self.histogram)
    }
}

/// Summary of an ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub counts: OutcomeCounts,
    pub n: u64,
    pub histogram: CaptureHistogram,
    intervals: [(f64, f64); 2],
}

impl EnsembleStats {
    pub fn new(counts: OutcomeCounts, histogram: CaptureHistogram) -> Result<Self, StatsError> {
        let n = counts.total();
        let intervals = [
            wilson_interval(counts.capture, n, DEFAULT_CONFIDENCE)?,
            wilson_interval(counts.no_capture, n, DEFAULT_CONFIDENCE)?,
        ];
        Ok(Self {
            counts,
            n,
            histogram,
            intervals,
        })
    }

    pub fn frequency(&self, outcome: Outcome) -> f64 {
        self.counts.get(outcome) as f64 / self.n as f64
    }

    /// Wilson 95% interval for an outcome; `SuperpositionIntact` never occurs.
    pub fn interval(&self, outcome: Outcome) -> (f64, f64) {
        match outcome {
            Outcome::CaptureObserved => self.intervals[0],
            Outcome::NoCaptureObserved => self.intervals[1],
            Outcome::SuperpositionIntact => (0.0, 0.0),
        }
    }

    pub fn merge(&self, other: &EnsembleStats) -> Result<EnsembleStats, StatsError> {
        let mut histogram = self.histogram.clone();
        histogram.merge(&other.histogram)?;
        let counts = OutcomeCounts {
            capture: self.counts.capture + other.counts.capture,
            no_capture: self.counts.no_capture + other.counts.no_capture,
        };
        EnsembleStats::new(counts, histogram)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Wilson bounds are the roots in p of (phat - p)^2 = z^2 p (1 - p) / n.
    /// Bisection on each side of phat, with z recovered by bisection on the
    /// normal CDF built from erfc.
    fn wilson_by_bisection(k: u64, n: u64, confidence: f64) -> (f64, f64) {
        let cdf = |x: f64| 0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2);
        let target = 0.5 + 0.5 * confidence;
        let (mut a, mut b) = (0.0, 10.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if cdf(m) < target {
                a = m
            } else {
                b = m
            }
        }
        let z = 0.5 * (a + b);
        let phat = k as f64 / n as f64;
        let g = |p: f64| (phat - p).powi(2) - z * z * p * (1.0 - p) / n as f64;
        let root = |mut lo: f64, mut hi: f64| {
            // g(lo) and g(hi) have opposite signs.
            let sign_lo = g(lo) > 0.0;
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if (g(m) > 0.0) == sign_lo {
                    lo = m
                } else {
                    hi = m
                }
            }
            0.5 * (lo + hi)
        };
        (root(0.0, phat), root(phat, 1.0))
    }

    #[test]
    fn wilson_examples() {
        let (lo, _) = wilson_interval(0, 10, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        let (_, hi) = wilson_interval(10, 10, 0.95).unwrap();
        assert_eq!(hi, 1.0);
        let (lo, hi) = wilson_interval(5, 10, 0.95).unwrap();
        assert_abs_diff_eq!(lo, 0.2366, epsilon = 1e-4);
        assert_abs_diff_eq!(hi, 0.7634, epsilon = 1e-4);
        let (blo, bhi) = wilson_by_bisection(5, 10, 0.95);
        assert_abs_diff_eq!(lo, blo, epsilon = 1e-10);
        assert_abs_diff_eq!(hi, bhi, epsilon = 1e-10);
        let (lo, hi) = wilson_interval(37, 113, 0.9).unwrap();
        let (blo, bhi) = wilson_by_bisection(37, 113, 0.9);
        assert_abs_diff_eq!(lo, blo, epsilon = 1e-10);
        assert_abs_diff_eq!(hi, bhi, epsilon = 1e-10);
    }

    #[test]
    fn wilson_rejects_bad_input() {
        assert!(wilson_interval(1, 0, 0.95).is_err());
        assert!(wilson_interval(11, 10, 0.95).is_err());
        assert!(wilson_interval(1, 10, 1.0).is_err());
    }

    #[test]
    fn wilson_width_shrinks() {
        let (lo, hi) = wilson_interval(100_000, 200_000, 0.95).unwrap();
        assert!(hi - lo < 0.006);
    }

    #[test]
    fn ks_on_quantiles() {
        let n = 999;
        let samples: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
        let d = ks_distance(&samples, |x| x).unwrap();
        assert!(d <= 1.0 / (n + 1) as f64 + 1e-12, "{d}");
    }

    #[test]
    fn ks_maximal_mismatch() {
        let samples = vec![0.0; 1000];
        let d = ks_distance(&samples, |x: f64| (x / 10.0).clamp(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(d, 1.0);
        assert!(matches!(ks_distance(&[], |x| x), Err(StatsError::EmptySample)));
        assert!(matches!(
            ks_distance(&[0.3, 0.1], |x| x),
            Err(StatsError::UnsortedSamples(1))
        ));
    }

    #[test]
    fn histogram_edges_go_low() {
        let h = CaptureHistogram::new(0.0, 10.0);
        assert_eq!(h.bin_index(0.0), 0);
        assert_eq!(h.bin_index(0.1), 0);
        assert_eq!(h.bin_index(0.10000001), 1);
        assert_eq!(h.bin_index(0.25), 2);
        assert_eq!(h.bin_index(10.0), 99);
    }

    #[test]
    fn tally_rejects_intact() {
        let mut t = Tally::new(0.0, 1.0);
        assert!(t.record(Outcome::SuperpositionIntact, None).is_err());
    }

    fn tally_from(records: &[(bool, Option<f64>)]) -> Tally {
        let mut t = Tally::new(0.0, 10.0);
        for &(capture, time) in records {
            let outcome = if capture {
                Outcome::CaptureObserved
            } else {
                Outcome::NoCaptureObserved
            };
            t.record(outcome, time).unwrap();
        }
        t
    }

    proptest! {
        #[test]
        fn merge_equals_concatenation(
            a in prop::collection::vec((any::<bool>(), prop::option::of(0.0f64..10.0)), 1..50),
            b in prop::collection::vec((any::<bool>(), prop::option::of(0.0f64..10.0)), 1..50),
        ) {
            let left = tally_from(&a).finish().unwrap();
            let right = tally_from(&b).finish().unwrap();
            let joined: Vec<_> = a.iter().chain(&b).copied().collect();
            let whole = tally_from(&joined).finish().unwrap();
            prop_assert_eq!(&left.merge(&right).unwrap(), &whole);
            prop_assert_eq!(&right.merge(&left).unwrap(), &whole);
            prop_assert_eq!(whole.counts.total(), whole.n);
        }

        #[test]
        fn interval_brackets_estimate(k in 0u64..500, extra in 0u64..500) {
            let n = k + extra + 1;
            let (lo, hi) = wilson_interval(k, n, 0.95).unwrap();
            let p = k as f64 / n as f64;
            prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        }
    }
}
