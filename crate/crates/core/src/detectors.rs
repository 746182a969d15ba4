//! Single-stream sequential detectors as step-wise state machines.
//!
//! [`CuSumState`] is Page's recursion `C' = max{0, C + llr}`. [`DeCuSumState`]
//! is its data-efficient variant: while the statistic is non-negative every
//! observation is taken and accumulated, with undershoots truncated at `-h`;
//! while it is negative the sensor sleeps, and the statistic ramps back toward
//! zero by `mu` per skipped step.
//!
//! Both detectors alarm at the first `n` with statistic strictly greater than
//! the threshold.
//!
//! A sensor that wakes up after a sleep takes one observation, and nothing
//! prevents that single observation from undershooting again and starting a
//! new sleep right away.

use serde::{Deserialize, Serialize};

use crate::models::{DistributionPair, ObservationStream};

/// Values of the sleeping statistic within `SLEEP_SNAP * mu` of zero are
/// treated as having reached zero. The ramp `-h, -h + mu, ...` is built by
/// repeated floating-point addition, so without this a ramp of exactly
/// `h / mu` steps could end one step late on rounding noise.
pub const SLEEP_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectorError {
    #[error("sampling control violated at step {step}: detector expected {}", if *.expected_sample { "an observation" } else { "a skip" })]
    ControlViolation { step: u64, expected_sample: bool },
    #[error("invalid DE-CuSum parameters: {0}")]
    InvalidParams(String),
}

/// Page's CuSum statistic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CuSumState {
    pub value: f64,
    pub steps: u64,
}

impl CuSumState {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn step(self, llr: f64) -> Self {
        cusum_step(self, llr)
    }
}

/// `C' = max{0, C + llr}`.
#[inline]
pub fn cusum_step(state: CuSumState, llr: f64) -> CuSumState {
    // `+ 0.0` maps a -0.0 result to +0.0 so bit patterns are canonical.
    CuSumState { value: (state.value + llr).max(0.0) + 0.0, steps: state.steps + 1 }
}

/// Sleep ramp `mu` and truncation depth `h` of a DE-CuSum detector.
///
/// `h = 0` makes the detector identical to CuSum; `h = f64::INFINITY`
/// disables truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeCuSumParams {
    mu: f64,
    h: f64,
}

impl DeCuSumParams {
    pub fn new(mu: f64, h: f64) -> Result<Self, DetectorError> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(DetectorError::InvalidParams(format!("mu must be finite and > 0, got {mu}")));
        }
        if h.is_nan() || h < 0.0 {
            return Err(DetectorError::InvalidParams(format!("h must be >= 0 (or infinite), got {h}")));
        }
        Ok(Self { mu, h })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Longest possible run of consecutive skips, `ceil(h/mu) + 1`, or
    /// `None` when `h` is infinite.
    pub fn max_skip_run(&self) -> Option<u64> {
        self.h.is_finite().then(|| (self.h / self.mu).ceil() as u64 + 1)
    }
}

/// State of one DE-CuSum detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeCuSumState {
    /// `W_n`, in `[-h, inf)`.
    pub value: f64,
    pub steps: u64,
    /// `S_{n+1}`: whether observation `n + 1` is taken. True iff `value >= 0`.
    pub next_takes_sample: bool,
    /// Number of observations taken so far.
    pub samples_taken: u64,
}

impl Default for DeCuSumState {
    fn default() -> Self {
        Self::new()
    }
}

impl DeCuSumState {
    /// `W_0 = 0`; the first observation is taken.
    pub fn new() -> Self {
        Self::starting_at(0.0)
    }

    /// A detector whose statistic is `value` at time 0 (used to start from a
    /// worst-case pre-change state).
    pub fn starting_at(value: f64) -> Self {
        Self { value, steps: 0, next_takes_sample: value >= 0.0, samples_taken: 0 }
    }

    /// One step driven by a precomputed log-likelihood ratio. `llr` must be
    /// `Some` exactly when `next_takes_sample` is true.
    #[inline]
    pub fn step_llr(self, params: &DeCuSumParams, llr: Option<f64>) -> Result<Self, DetectorError> {
        let step = self.steps + 1;
        let (value, samples_taken) = match (self.next_takes_sample, llr) {
            (true, Some(l)) => ((self.value + l).max(-params.h) + 0.0, self.samples_taken + 1),
            (false, None) => {
                let v = (self.value + params.mu).min(0.0);
                let v = if v > -SLEEP_SNAP * params.mu { 0.0 } else { v };
                (v, self.samples_taken)
            }
            (expected_sample, _) => return Err(DetectorError::ControlViolation { step, expected_sample }),
        };
        Ok(Self { value, steps: step, next_takes_sample: value >= 0.0, samples_taken })
    }
}

/// One DE-CuSum step from a raw observation.
pub fn decusum_step(
    state: DeCuSumState,
    params: &DeCuSumParams,
    observation: Option<f64>,
    pair: &DistributionPair,
) -> Result<DeCuSumState, DetectorError> {
    state.step_llr(params, observation.map(|x| pair.log_likelihood_ratio(x)))
}

/// Outcome of a run that is capped at a step budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopTime {
    /// Statistic exceeded the threshold at this step.
    Alarm(u64),
    /// No alarm within the budget; carries the budget.
    Censored(u64),
}

impl StopTime {
    /// The alarm time, or the budget for censored runs.
    pub fn steps(&self) -> u64 {
        match *self {
            StopTime::Alarm(n) | StopTime::Censored(n) => n,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, StopTime::Censored(_))
    }

    pub fn alarm(&self) -> Option<u64> {
        match *self {
            StopTime::Alarm(n) => Some(n),
            StopTime::Censored(_) => None,
        }
    }
}

/// Which single-stream detector to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detector {
    CuSum,
    DeCuSum(DeCuSumParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub n: u64,
    pub value: f64,
    /// Whether `X_n` was observed.
    pub sampled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub stop: StopTime,
    pub samples_taken: u64,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
}

/// Runs `detector` on `stream` until the statistic exceeds `threshold` or
/// `max_steps` steps have elapsed.
///
/// The stream is advanced once per step whether or not the observation is
/// used, so CuSum and DE-CuSum runs on clones of the same stream see the same
/// `X_n` at the same `n`.
pub fn run_until_stop(
    detector: &Detector,
    stream: &mut ObservationStream,
    threshold: f64,
    max_steps: u64,
    record_trajectory: bool,
) -> RunOutcome {
    assert!(max_steps >= 1);
    let pair = *stream.pair();
    let mut trajectory = record_trajectory.then(Vec::new);
    match detector {
        Detector::CuSum => {
            let mut s = CuSumState::new();
            for n in 1..=max_steps {
                s = s.step(pair.log_likelihood_ratio(stream.draw_next()));
                if let Some(t) = trajectory.as_mut() {
                    t.push(TrajectoryPoint { n, value: s.value, sampled: true });
                }
                if s.value > threshold {
                    return RunOutcome { stop: StopTime::Alarm(n), samples_taken: n, trajectory };
                }
            }
            RunOutcome { stop: StopTime::Censored(max_steps), samples_taken: max_steps, trajectory }
        }
        Detector::DeCuSum(params) => {
            let mut s = DeCuSumState::new();
            for n in 1..=max_steps {
                let x = stream.draw_next();
                let sampled = s.next_takes_sample;
                s = decusum_step(s, params, sampled.then_some(x), &pair).expect("control honored by construction");
                if let Some(t) = trajectory.as_mut() {
                    t.push(TrajectoryPoint { n, value: s.value, sampled });
                }
                if s.value > threshold {
                    return RunOutcome { stop: StopTime::Alarm(n), samples_taken: s.samples_taken, trajectory };
                }
            }
            RunOutcome { stop: StopTime::Censored(max_steps), samples_taken: s.samples_taken, trajectory }
        }
    }
}

/// Longest run of consecutive unsampled steps in a trajectory.
pub fn longest_skip_run(trajectory: &[TrajectoryPoint]) -> u64 {
    let (mut best, mut cur) = (0, 0);
    for p in trajectory {
        if p.sampled {
            cur = 0;
        } else {
            cur += 1;
            best = best.max(cur);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ChangePoint;
    use crate::rng::{Purpose, SeedTree};
    use proptest::prelude::*;

    fn params(mu: f64, h: f64) -> DeCuSumParams {
        DeCuSumParams::new(mu, h).unwrap()
    }

    fn de(value: f64) -> DeCuSumState {
        DeCuSumState::starting_at(value)
    }

    #[test]
    fn cusum_examples() {
        assert_eq!(CuSumState::new().step(-0.08).value, 0.0);
        let s = CuSumState { value: 1.0, steps: 4 }.step(0.32);
        assert!((s.value - 1.32).abs() < 1e-15);
        assert_eq!(s.steps, 5);
        assert_eq!(CuSumState::new().step(-0.0).value.to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn decusum_sample_below_zero_starts_sleep() {
        let s = de(0.0).step_llr(&params(0.05, 0.5), Some(-0.3)).unwrap();
        assert!((s.value + 0.3).abs() < 1e-15);
        assert!(!s.next_takes_sample);
        assert_eq!(s.samples_taken, 1);
    }

    #[test]
    fn decusum_sleep_ramps_by_mu() {
        let s = de(-0.3).step_llr(&params(0.05, 0.5), None).unwrap();
        assert!((s.value + 0.25).abs() < 1e-15);
        assert!(!s.next_takes_sample);
        assert_eq!(s.samples_taken, 0);
    }

    #[test]
    fn decusum_truncates_at_minus_h() {
        let s = de(0.0).step_llr(&params(0.05, 0.5), Some(-0.9)).unwrap();
        assert_eq!(s.value, -0.5);
    }

    #[test]
    fn decusum_wakes_at_zero() {
        let s = de(-0.04).step_llr(&params(0.05, 0.5), None).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.next_takes_sample);
        // Exactly reaching zero also wakes the sensor.
        let s = de(-0.05).step_llr(&params(0.05, 0.5), None).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(s.next_takes_sample);
    }

    #[test]
    fn decusum_ramp_from_minus_h_takes_h_over_mu_steps() {
        for (mu, h) in [(0.05, 0.5), (0.2, 5.0), (0.05, 20.0), (0.2, 20.0), (1.0, 5.0)] {
            let p = params(mu, h);
            let mut s = de(0.0).step_llr(&p, Some(-1e6)).unwrap();
            let mut sleeps = 0;
            while !s.next_takes_sample {
                s = s.step_llr(&p, None).unwrap();
                sleeps += 1;
            }
            assert_eq!(sleeps, (h / mu).round() as u64, "mu={mu} h={h}");
        }
    }

    #[test]
    fn control_violations() {
        let p = params(0.1, 1.0);
        assert_eq!(de(0.0).step_llr(&p, None), Err(DetectorError::ControlViolation { step: 1, expected_sample: true }));
        assert_eq!(
            de(-0.5).step_llr(&p, Some(0.1)),
            Err(DetectorError::ControlViolation { step: 1, expected_sample: false })
        );
    }

    #[test]
    fn invalid_params() {
        assert!(DeCuSumParams::new(0.0, 1.0).is_err());
        assert!(DeCuSumParams::new(-1.0, 1.0).is_err());
        assert!(DeCuSumParams::new(0.1, -1.0).is_err());
        assert!(DeCuSumParams::new(0.1, f64::NAN).is_err());
        assert!(DeCuSumParams::new(0.1, f64::INFINITY).is_ok());
        assert_eq!(params(0.05, 0.5).max_skip_run(), Some(11));
        assert_eq!(params(0.05, f64::INFINITY).max_skip_run(), None);
    }

    fn stream(seed: u64) -> ObservationStream {
        let pair = DistributionPair::gaussian(0.0, 0.4, 1.0).unwrap();
        ObservationStream::for_trial(pair, ChangePoint::at(30), &SeedTree::new(seed), Purpose::Path, 0, 0)
    }

    #[test]
    fn zero_threshold_stops_on_first_positive_llr() {
        for seed in 0..200 {
            let mut probe = stream(seed);
            let x = probe.draw_next();
            let first = probe.pair().log_likelihood_ratio(x);
            let out = run_until_stop(&Detector::CuSum, &mut stream(seed), 0.0, 1000, false);
            if first > 0.0 {
                assert_eq!(out.stop, StopTime::Alarm(1));
            } else {
                assert!(out.stop.steps() > 1);
            }
        }
    }

    #[test]
    fn censoring_is_explicit() {
        let out = run_until_stop(&Detector::CuSum, &mut stream(1), 1e9, 50, true);
        assert_eq!(out.stop, StopTime::Censored(50));
        assert_eq!(out.trajectory.unwrap().len(), 50);
    }

    #[test]
    fn h_zero_matches_cusum_bitwise() {
        for seed in 0..100 {
            let a = run_until_stop(&Detector::CuSum, &mut stream(seed), 5.0, 10_000, true);
            let b = run_until_stop(&Detector::DeCuSum(params(0.3, 0.0)), &mut stream(seed), 5.0, 10_000, true);
            assert_eq!(a.stop, b.stop);
            let (ta, tb) = (a.trajectory.unwrap(), b.trajectory.unwrap());
            assert!(ta.iter().zip(&tb).all(|(x, y)| x.value.to_bits() == y.value.to_bits() && y.sampled));
        }
    }

    proptest! {
        #[test]
        fn cusum_never_negative(llrs in prop::collection::vec(-5.0f64..5.0, 0..200)) {
            let mut s = CuSumState::new();
            for l in llrs {
                s = s.step(l);
                prop_assert!(s.value >= 0.0);
            }
        }

        #[test]
        fn decusum_invariants_hold_on_any_llr_sequence(
            llrs in prop::collection::vec(-3.0f64..3.0, 1..300),
            mu in 0.01f64..2.0,
            h in 0.0f64..10.0,
        ) {
            let p = params(mu, h);
            let (mut c, mut w) = (CuSumState::new(), DeCuSumState::new());
            let mut skip_run = 0;
            for l in llrs {
                let sampled = w.next_takes_sample;
                w = w.step_llr(&p, sampled.then_some(l)).unwrap();
                c = c.step(l);
                prop_assert!(w.value >= -h);
                prop_assert_eq!(w.next_takes_sample, w.value >= 0.0);
                prop_assert!(c.value >= w.value);
                skip_run = if sampled { 0 } else { skip_run + 1 };
                prop_assert!(skip_run <= p.max_skip_run().unwrap());
            }
        }

        #[test]
        fn stop_time_monotone_in_threshold(seed in 0u64..500, a in 0.0f64..6.0, b in 0.0f64..6.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for det in [Detector::CuSum, Detector::DeCuSum(params(0.2, 2.0))] {
                let s_lo = run_until_stop(&det, &mut stream(seed), lo, 5_000, false).stop.steps();
                let s_hi = run_until_stop(&det, &mut stream(seed), hi, 5_000, false).stop.steps();
                prop_assert!(s_lo <= s_hi);
            }
        }
    }
}
