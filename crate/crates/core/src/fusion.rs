//! Sensor network layer: per-sensor statistics and the fusion-center stopping
//! rules.
//!
//! All sensors and the fusion center share one discrete clock. At step `n`
//! every sensor is handed its observation `X_{n,l}`; whether the sensor
//! actually uses it is up to the algorithm. Transmissions `Y_{n,l}` arrive at
//! the fusion center in the same slot.
//!
//! | algorithm         | sensor statistic | uplink         | stop when                      |
//! |-------------------|------------------|----------------|--------------------------------|
//! | `CentralizedCuSum`| none             | raw `X_{n,l}`  | fused CuSum `V_n > A`          |
//! | `All`             | CuSum `C_{n,l}`  | `C > d_l A`    | all `L` bits are 1             |
//! | `DeAll`           | DE-CuSum `W_{n,l}`| `W > d_l A`   | all `L` bits are 1             |
//! | `FractionalAll`   | CuSum, random skips | `C > d_l A` | all `L` bits are 1             |
//! | `EveryNth`        | none             | raw, every `stride`-th step | fused CuSum `V_n > A` |

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detectors::{cusum_step, CuSumState, DeCuSumParams, DeCuSumState, DetectorError, StopTime};
use crate::models::{ChangePoint, DistributionPair, ObservationStream};
use crate::rng::{Lane, Purpose, SeedTree};

/// Tolerance on `sum(d_l) == 1`.
pub const SHARE_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("a network needs at least one sensor")]
    NoSensors,
    #[error("threshold must be >= 0, got {0}")]
    NegativeThreshold(f64),
    #[error("skip probability must lie in [0, 1), got {0}")]
    SkipProbability(f64),
    #[error("stride must be >= 1")]
    ZeroStride,
    #[error("sensor {sensor}: {source}")]
    Sensor { sensor: usize, source: DetectorError },
    #[error("sensor {sensor}: threshold share must lie in (0, 1], got {share}")]
    Share { sensor: usize, share: f64 },
    #[error("threshold shares sum to {0}, not 1; mark them as unnormalized to use them anyway")]
    SharesNotNormalized(f64),
    #[error("expected {expected} threshold shares, got {got}")]
    ShareCount { expected: usize, got: usize },
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[serde(rename = "centralized-cusum", alias = "centralized", alias = "cc")]
    CentralizedCuSum,
    All,
    #[serde(alias = "deall")]
    DeAll,
    #[serde(alias = "fractional")]
    FractionalAll,
    EveryNth,
}

impl Algorithm {
    pub const ALL_VARIANTS: [Algorithm; 5] =
        [Algorithm::CentralizedCuSum, Algorithm::All, Algorithm::DeAll, Algorithm::FractionalAll, Algorithm::EveryNth];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::CentralizedCuSum => "centralized-cusum",
            Algorithm::All => "all",
            Algorithm::DeAll => "de-all",
            Algorithm::FractionalAll => "fractional-all",
            Algorithm::EveryNth => "every-nth",
        }
    }

    /// Sensors send one bit per step (ALL-type rules).
    pub fn is_binary_uplink(&self) -> bool {
        matches!(self, Algorithm::All | Algorithm::DeAll | Algorithm::FractionalAll)
    }

    /// The fusion center runs one CuSum on raw observations.
    pub fn is_centralized(&self) -> bool {
        matches!(self, Algorithm::CentralizedCuSum | Algorithm::EveryNth)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = PolicyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        match norm.as_str() {
            "centralized-cusum" | "centralized" | "cc" => Ok(Algorithm::CentralizedCuSum),
            "all" => Ok(Algorithm::All),
            "de-all" | "deall" => Ok(Algorithm::DeAll),
            "fractional-all" | "fractional" => Ok(Algorithm::FractionalAll),
            "every-nth" | "everynth" => Ok(Algorithm::EveryNth),
            _ => Err(PolicyError::UnknownAlgorithm(s.to_string())),
        }
    }
}

/// One sensor: its observation model, DE-CuSum parameters, and its share
/// `d_l` of the global threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    pub pair: DistributionPair,
    pub params: DeCuSumParams,
    pub share: f64,
}

impl SensorConfig {
    pub fn mu(&self) -> f64 {
        self.params.mu()
    }

    pub fn h(&self) -> f64 {
        self.params.h()
    }
}

/// `d_l = D(f1_l || f0_l) / sum_k D(f1_k || f0_k)`.
pub fn kl_shares(pairs: &[DistributionPair]) -> Vec<f64> {
    let total: f64 = pairs.iter().map(|p| p.kl_f1_f0()).sum();
    pairs.iter().map(|p| p.kl_f1_f0() / total).collect()
}

/// A complete network detection policy.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkPolicy {
    algorithm: Algorithm,
    sensors: Vec<SensorConfig>,
    threshold: f64,
    skip_prob: f64,
    stride: u64,
    warnings: Vec<String>,
}

impl NetworkPolicy {
    /// A policy over sensors given as `(pair, mu, h)`, with KL-proportional
    /// threshold shares. `skip_prob` is 0 and `stride` is 1 until set.
    pub fn new(
        algorithm: Algorithm,
        sensors: &[(DistributionPair, f64, f64)],
        threshold: f64,
    ) -> Result<Self, PolicyError> {
        if sensors.is_empty() {
            return Err(PolicyError::NoSensors);
        }
        if threshold.is_nan() || threshold < 0.0 {
            return Err(PolicyError::NegativeThreshold(threshold));
        }
        let pairs: Vec<_> = sensors.iter().map(|s| s.0).collect();
        let shares = kl_shares(&pairs);
        let sensors = sensors
            .iter()
            .zip(shares)
            .enumerate()
            .map(|(i, (&(pair, mu, h), share))| {
                let params = DeCuSumParams::new(mu, h).map_err(|source| PolicyError::Sensor { sensor: i, source })?;
                Ok(SensorConfig { pair, params, share })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { algorithm, sensors, threshold, skip_prob: 0.0, stride: 1, warnings: Vec::new() })
    }

    /// `count` identical sensors.
    pub fn homogeneous(
        algorithm: Algorithm,
        count: usize,
        pair: DistributionPair,
        mu: f64,
        h: f64,
        threshold: f64,
    ) -> Result<Self, PolicyError> {
        Self::new(algorithm, &vec![(pair, mu, h); count], threshold)
    }

    pub fn with_skip_prob(mut self, skip_prob: f64) -> Result<Self, PolicyError> {
        if !(0.0..1.0).contains(&skip_prob) {
            return Err(PolicyError::SkipProbability(skip_prob));
        }
        self.skip_prob = skip_prob;
        Ok(self)
    }

    pub fn with_stride(mut self, stride: u64) -> Result<Self, PolicyError> {
        if stride == 0 {
            return Err(PolicyError::ZeroStride);
        }
        self.stride = stride;
        Ok(self)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self, PolicyError> {
        if threshold.is_nan() || threshold < 0.0 {
            return Err(PolicyError::NegativeThreshold(threshold));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    /// Overrides the threshold shares. Shares that do not sum to 1 are
    /// rejected unless `allow_unnormalized` is set, in which case a warning
    /// is recorded in [`Self::warnings`].
    pub fn with_shares(mut self, shares: &[f64], allow_unnormalized: bool) -> Result<Self, PolicyError> {
        if shares.len() != self.sensors.len() {
            return Err(PolicyError::ShareCount { expected: self.sensors.len(), got: shares.len() });
        }
        for (i, &d) in shares.iter().enumerate() {
            if !(d > 0.0 && d <= 1.0) {
                return Err(PolicyError::Share { sensor: i, share: d });
            }
        }
        let total: f64 = shares.iter().sum();
        if (total - 1.0).abs() > SHARE_SUM_TOLERANCE {
            if !allow_unnormalized {
                return Err(PolicyError::SharesNotNormalized(total));
            }
            self.warnings.push(format!("threshold shares sum to {total}, not 1"));
        }
        for (s, &d) in self.sensors.iter_mut().zip(shares) {
            s.share = d;
        }
        Ok(self)
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn sensors(&self) -> &[SensorConfig] {
        &self.sensors
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn skip_prob(&self) -> f64 {
        self.skip_prob
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `sum_l D(f1_l || f0_l)`.
    pub fn total_kl(&self) -> f64 {
        self.sensors.iter().map(|s| s.pair.kl_f1_f0()).sum()
    }

    /// True when the sensors run DE-CuSum with some `h_l > 0`.
    pub fn is_data_efficient(&self) -> bool {
        self.algorithm == Algorithm::DeAll && self.sensors.iter().any(|s| s.h() > 0.0)
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} L={} A={}", self.algorithm, self.len(), self.threshold);
        match self.algorithm {
            Algorithm::DeAll => {
                let f = &self.sensors[0];
                s.push_str(&format!(" mu={} h={}", f.mu(), f.h()));
            }
            Algorithm::FractionalAll => s.push_str(&format!(" skip_prob={}", self.skip_prob)),
            Algorithm::EveryNth => s.push_str(&format!(" stride={}", self.stride)),
            _ => {}
        }
        s
    }
}

/// Fused CuSum update `V' = max{0, V + sum_l llr_l(X_l)}` and its stop bit.
pub fn step_centralized(
    state: CuSumState,
    sensors: &[SensorConfig],
    observations: &[f64],
    threshold: f64,
) -> (CuSumState, bool) {
    let llr: f64 = sensors.iter().zip(observations).map(|(s, &x)| s.pair.log_likelihood_ratio(x)).sum();
    let next = cusum_step(state, llr);
    (next, next.value > threshold)
}

/// ALL: per-sensor CuSum, `Y_l = [C_l > d_l A]`, stop when every `Y_l` is 1.
pub fn step_all(
    states: &mut [CuSumState],
    sensors: &[SensorConfig],
    observations: &[f64],
    threshold: f64,
    transmissions: &mut [bool],
) -> bool {
    let mut all = true;
    for ((s, cfg), (&x, y)) in states.iter_mut().zip(sensors).zip(observations.iter().zip(transmissions.iter_mut())) {
        *s = s.step(cfg.pair.log_likelihood_ratio(x));
        *y = s.value > cfg.share * threshold;
        all &= *y;
    }
    all
}

/// DE-All: per-sensor DE-CuSum, `Y_l = [W_l > d_l A]`, stop when every
/// `Y_l` is 1. `observations[l]` must be `Some` exactly when sensor `l` is
/// due to sample.
pub fn step_deall(
    states: &mut [DeCuSumState],
    sensors: &[SensorConfig],
    observations: &[Option<f64>],
    threshold: f64,
    transmissions: &mut [bool],
) -> Result<bool, DetectorError> {
    let mut all = true;
    for ((s, cfg), (&x, y)) in states.iter_mut().zip(sensors).zip(observations.iter().zip(transmissions.iter_mut())) {
        *s = s.step_llr(&cfg.params, x.map(|x| cfg.pair.log_likelihood_ratio(x)))?;
        *y = s.value > cfg.share * threshold;
        all &= *y;
    }
    Ok(all)
}

/// Fractional sampling: ALL where sensor `l` ignores its observation when
/// `skips[l]`. A skipped step leaves the CuSum statistic unchanged.
pub fn step_fractional(
    states: &mut [CuSumState],
    skips: &[bool],
    sensors: &[SensorConfig],
    observations: &[f64],
    threshold: f64,
    transmissions: &mut [bool],
) -> bool {
    let mut all = true;
    for (((s, cfg), &skip), (&x, y)) in
        states.iter_mut().zip(sensors).zip(skips).zip(observations.iter().zip(transmissions.iter_mut()))
    {
        if skip {
            s.steps += 1;
        } else {
            *s = s.step(cfg.pair.log_likelihood_ratio(x));
        }
        *y = s.value > cfg.share * threshold;
        all &= *y;
    }
    all
}

/// Whether step `n` (1-based) is a sampling step under stride `stride`:
/// `n = 1, 1 + stride, 1 + 2 stride, ...`.
#[inline]
pub fn every_nth_samples(n: u64, stride: u64) -> bool {
    (n - 1) % stride == 0
}

/// Every-n-th-sample baseline: the fused CuSum is updated on sampling steps
/// only and holds otherwise.
pub fn step_every_nth(
    state: CuSumState,
    n: u64,
    stride: u64,
    sensors: &[SensorConfig],
    observations: &[f64],
    threshold: f64,
) -> (CuSumState, bool) {
    if every_nth_samples(n, stride) {
        step_centralized(state, sensors, observations, threshold)
    } else {
        let held = CuSumState { value: state.value, steps: state.steps + 1 };
        (held, held.value > threshold)
    }
}

/// How the network's statistics are initialized at time 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartState {
    /// All statistics at 0.
    #[default]
    Fresh,
    /// DE-CuSum sensors start at `-h_l` (deepest sleep); other statistics
    /// start at 0, which is already their worst state.
    Deepest,
}

#[derive(Debug, Clone, PartialEq)]
enum Statistics {
    Fused(CuSumState),
    Local(Vec<CuSumState>),
    DataEfficient(Vec<DeCuSumState>),
}

/// What happened at one step of a [`NetworkState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub n: u64,
    pub stopped: bool,
}

/// The running state of a network under a policy: all sensor statistics,
/// the fusion statistic, and this step's sampling and uplink vectors.
#[derive(Debug, Clone)]
pub struct NetworkState<'p> {
    policy: &'p NetworkPolicy,
    stats: Statistics,
    n: u64,
    sampled: Vec<bool>,
    transmissions: Vec<bool>,
    scratch: Vec<Option<f64>>,
}

impl<'p> NetworkState<'p> {
    pub fn new(policy: &'p NetworkPolicy, start: StartState) -> Self {
        let l = policy.len();
        let stats = match policy.algorithm {
            Algorithm::CentralizedCuSum | Algorithm::EveryNth => Statistics::Fused(CuSumState::new()),
            Algorithm::All | Algorithm::FractionalAll => Statistics::Local(vec![CuSumState::new(); l]),
            Algorithm::DeAll => Statistics::DataEfficient(
                policy
                    .sensors
                    .iter()
                    .map(|s| match start {
                        StartState::Fresh => DeCuSumState::new(),
                        StartState::Deepest => DeCuSumState::starting_at(-s.h()),
                    })
                    .collect(),
            ),
        };
        Self { policy, stats, n: 0, sampled: vec![false; l], transmissions: vec![false; l], scratch: vec![None; l] }
    }

    pub fn policy(&self) -> &NetworkPolicy {
        self.policy
    }

    /// Steps taken so far.
    pub fn steps(&self) -> u64 {
        self.n
    }

    /// Whether sensor `l` will use observation `n + 1`, as far as it is
    /// decided by the sensor itself (random skips are drawn in [`Self::step`]).
    pub fn will_sample(&self, sensor: usize) -> bool {
        match &self.stats {
            Statistics::DataEfficient(w) => w[sensor].next_takes_sample,
            Statistics::Fused(_) if self.policy.algorithm == Algorithm::EveryNth => {
                every_nth_samples(self.n + 1, self.policy.stride)
            }
            _ => true,
        }
    }

    /// Statistic of sensor `l` (`C_{n,l}` or `W_{n,l}`), or the fused `V_n`
    /// for centralized rules.
    pub fn statistic(&self, sensor: usize) -> f64 {
        match &self.stats {
            Statistics::Fused(v) => v.value,
            Statistics::Local(c) => c[sensor].value,
            Statistics::DataEfficient(w) => w[sensor].value,
        }
    }

    /// `S_{n,l}` for the last step.
    pub fn sampled(&self) -> &[bool] {
        &self.sampled
    }

    /// `Y_{n,l}` for the last step (binary-uplink rules; all false otherwise).
    pub fn transmissions(&self) -> &[bool] {
        &self.transmissions
    }

    /// Advances one step. `observations` holds `X_{n,l}` for every sensor,
    /// whether or not it will be used; `skips` is consulted only by the
    /// fractional rule.
    pub fn step(&mut self, observations: &[f64], skips: &[bool]) -> StepOutcome {
        let p = self.policy;
        let n = self.n + 1;
        let stopped = match &mut self.stats {
            Statistics::Fused(v) => {
                let on = p.algorithm == Algorithm::CentralizedCuSum || every_nth_samples(n, p.stride);
                self.sampled.fill(on);
                let (next, stop) = if p.algorithm == Algorithm::CentralizedCuSum {
                    step_centralized(*v, &p.sensors, observations, p.threshold)
                } else {
                    step_every_nth(*v, n, p.stride, &p.sensors, observations, p.threshold)
                };
                *v = next;
                stop
            }
            Statistics::Local(c) => {
                if p.algorithm == Algorithm::FractionalAll {
                    for (s, &k) in self.sampled.iter_mut().zip(skips) {
                        *s = !k;
                    }
                    step_fractional(c, skips, &p.sensors, observations, p.threshold, &mut self.transmissions)
                } else {
                    self.sampled.fill(true);
                    step_all(c, &p.sensors, observations, p.threshold, &mut self.transmissions)
                }
            }
            Statistics::DataEfficient(w) => {
                for ((slot, s), (st, &x)) in
                    self.scratch.iter_mut().zip(self.sampled.iter_mut()).zip(w.iter().zip(observations))
                {
                    *s = st.next_takes_sample;
                    *slot = s.then_some(x);
                }
                step_deall(w, &p.sensors, &self.scratch, p.threshold, &mut self.transmissions)
                    .expect("sampling control honored by construction")
            }
        };
        self.n = n;
        StepOutcome { n, stopped }
    }
}

/// One line of an exported trial trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub n: u64,
    pub sensor: usize,
    /// `C_{n,l}`, `W_{n,l}`, or the fused `V_n` for centralized rules.
    pub value: f64,
    pub sampled: bool,
    /// `Y_{n,l} = 1`; for centralized rules, whether a raw sample was sent.
    pub transmitted: bool,
}

/// A simulated run of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub stop: StopTime,
    pub change_point: ChangePoint,
    pub samples_per_sensor: Vec<u64>,
    /// Explicit 1s sent (binary-uplink rules only; 0 for centralized rules,
    /// whose raw uplink count equals `samples_per_sensor`).
    pub ones_transmitted_per_sensor: Vec<u64>,
    /// `sum_{k < gamma} S_{k,l}`, up to the stop time.
    pub pre_change_samples_per_sensor: Vec<u64>,
    pub trace: Option<Vec<TraceRecord>>,
}

impl TrialRecord {
    /// `tau - gamma` when the alarm came at or after the change.
    pub fn delay(&self) -> Option<u64> {
        match (self.stop, self.change_point) {
            (StopTime::Alarm(t), ChangePoint::At(g)) if t >= g => Some(t - g),
            _ => None,
        }
    }
}

/// Per-trial options of [`run_network_trial_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOptions {
    pub purpose: Purpose,
    pub start: StartState,
    pub trace: bool,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self { purpose: Purpose::Path, start: StartState::Fresh, trace: false }
    }
}

/// The seeded observation streams and skip coins of one trial.
#[derive(Debug, Clone)]
pub struct TrialRandomness {
    streams: Vec<ObservationStream>,
    coins: Vec<ChaCha8Rng>,
    skip_prob: f64,
}

impl TrialRandomness {
    pub fn new(
        policy: &NetworkPolicy,
        change_point: ChangePoint,
        seeds: &SeedTree,
        purpose: Purpose,
        trial: u64,
    ) -> Self {
        let streams = policy
            .sensors
            .iter()
            .enumerate()
            .map(|(l, s)| ObservationStream::for_trial(s.pair, change_point, seeds, purpose, trial, l))
            .collect();
        let coins = if policy.algorithm == Algorithm::FractionalAll && policy.skip_prob > 0.0 {
            (0..policy.len()).map(|l| seeds.substream(purpose, trial, Lane::SkipCoins, l)).collect()
        } else {
            Vec::new()
        };
        Self { streams, coins, skip_prob: policy.skip_prob }
    }

    /// Fills the next `X_{n,l}` and skip decisions.
    #[inline]
    pub fn fill(&mut self, observations: &mut [f64], skips: &mut [bool]) {
        for (o, s) in observations.iter_mut().zip(self.streams.iter_mut()) {
            *o = s.draw_next();
        }
        if self.coins.is_empty() {
            skips.fill(false);
        } else {
            for (k, c) in skips.iter_mut().zip(self.coins.iter_mut()) {
                *k = c.random::<f64>() < self.skip_prob;
            }
        }
    }
}

/// Runs one trial to the stop time or `max_steps`.
pub fn run_network_trial(
    policy: &NetworkPolicy,
    change_point: ChangePoint,
    seeds: &SeedTree,
    trial: u64,
    max_steps: u64,
) -> TrialRecord {
    run_network_trial_with(policy, change_point, seeds, trial, max_steps, TrialOptions::default())
}

pub fn run_network_trial_with(
    policy: &NetworkPolicy,
    change_point: ChangePoint,
    seeds: &SeedTree,
    trial: u64,
    max_steps: u64,
    options: TrialOptions,
) -> TrialRecord {
    assert!(max_steps >= 1, "max_steps must be >= 1");
    let l = policy.len();
    let mut rand = TrialRandomness::new(policy, change_point, seeds, options.purpose, trial);
    let mut state = NetworkState::new(policy, options.start);
    let mut obs = vec![0.0; l];
    let mut skips = vec![false; l];
    let mut samples = vec![0u64; l];
    let mut pre = vec![0u64; l];
    let mut ones = vec![0u64; l];
    let mut trace = options.trace.then(Vec::new);
    let binary = policy.algorithm.is_binary_uplink();
    let mut stop = StopTime::Censored(max_steps);
    for n in 1..=max_steps {
        rand.fill(&mut obs, &mut skips);
        let out = state.step(&obs, &skips);
        let before_change = !change_point.is_post_change(n);
        for i in 0..l {
            if state.sampled[i] {
                samples[i] += 1;
                if before_change {
                    pre[i] += 1;
                }
            }
            if binary && state.transmissions[i] {
                ones[i] += 1;
            }
        }
        if let Some(t) = trace.as_mut() {
            for i in 0..l {
                t.push(TraceRecord {
                    n,
                    sensor: i,
                    value: state.statistic(i),
                    sampled: state.sampled[i],
                    transmitted: if binary { state.transmissions[i] } else { state.sampled[i] },
                });
            }
        }
        if out.stopped {
            stop = StopTime::Alarm(n);
            break;
        }
    }
    TrialRecord {
        stop,
        change_point,
        samples_per_sensor: samples,
        ones_transmitted_per_sensor: ones,
        pre_change_samples_per_sensor: pre,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::{run_until_stop, Detector};

    fn pair() -> DistributionPair {
        DistributionPair::gaussian(0.0, 0.4, 1.0).unwrap()
    }

    fn policy(alg: Algorithm, l: usize, a: f64) -> NetworkPolicy {
        NetworkPolicy::homogeneous(alg, l, pair(), 0.2, 20.0, a).unwrap()
    }

    #[test]
    fn serde_names_match_display() {
        #[derive(Deserialize, Serialize)]
        struct W {
            a: Algorithm,
        }
        for alg in Algorithm::ALL_VARIANTS {
            let text = toml::to_string(&W { a: alg }).unwrap();
            assert_eq!(text.trim(), format!("a = \"{}\"", alg.name()));
            assert_eq!(toml::from_str::<W>(&text).unwrap().a, alg);
        }
        assert_eq!(toml::from_str::<W>("a = \"cc\"").unwrap().a, Algorithm::CentralizedCuSum);
    }

    #[test]
    fn shares_are_kl_proportional_and_normalized() {
        let p = policy(Algorithm::All, 10, 5.0);
        assert!(p.sensors().iter().all(|s| (s.share - 0.1).abs() < 1e-15));
        let mixed = [
            (pair(), 0.2, 1.0),
            (DistributionPair::gaussian(0.0, 0.75, 1.0).unwrap(), 0.2, 1.0),
            (DistributionPair::gaussian(1.0, 0.0, 2.0).unwrap(), 0.2, 1.0),
        ];
        let p = NetworkPolicy::new(Algorithm::All, &mixed, 5.0).unwrap();
        let total: f64 = p.sensors().iter().map(|s| s.share).sum();
        assert!((total - 1.0).abs() < SHARE_SUM_TOLERANCE);
        let d: Vec<f64> = mixed.iter().map(|m| m.0.kl_f1_f0()).collect();
        let sum: f64 = d.iter().sum();
        for (s, di) in p.sensors().iter().zip(&d) {
            assert!((s.share - di / sum).abs() < 1e-15);
        }
    }

    #[test]
    fn share_overrides() {
        let p = policy(Algorithm::All, 2, 5.0);
        assert!(p.clone().with_shares(&[0.3, 0.7], false).unwrap().warnings().is_empty());
        assert!(matches!(p.clone().with_shares(&[0.3, 0.3], false), Err(PolicyError::SharesNotNormalized(_))));
        let w = p.clone().with_shares(&[0.3, 0.3], true).unwrap();
        assert_eq!(w.warnings().len(), 1);
        assert!(matches!(p.clone().with_shares(&[0.3], false), Err(PolicyError::ShareCount { .. })));
        assert!(matches!(p.with_shares(&[0.0, 1.0], false), Err(PolicyError::Share { .. })));
    }

    #[test]
    fn construction_errors() {
        assert_eq!(NetworkPolicy::new(Algorithm::All, &[], 1.0), Err(PolicyError::NoSensors));
        assert!(matches!(
            NetworkPolicy::homogeneous(Algorithm::All, 1, pair(), 0.2, 1.0, -1.0),
            Err(PolicyError::NegativeThreshold(_))
        ));
        let p = policy(Algorithm::FractionalAll, 2, 1.0);
        assert_eq!(p.clone().with_skip_prob(1.0), Err(PolicyError::SkipProbability(1.0)));
        assert_eq!(p.clone().with_skip_prob(-0.1), Err(PolicyError::SkipProbability(-0.1)));
        assert_eq!(p.with_stride(0), Err(PolicyError::ZeroStride));
        assert!(matches!(
            NetworkPolicy::homogeneous(Algorithm::DeAll, 1, pair(), 0.0, 1.0, 1.0),
            Err(PolicyError::Sensor { sensor: 0, .. })
        ));
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL_VARIANTS {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("shiryaev".parse::<Algorithm>().is_err());
    }

    #[test]
    fn centralized_resets_at_zero() {
        let p = policy(Algorithm::CentralizedCuSum, 2, 5.0);
        let (v, stop) = step_centralized(CuSumState::new(), p.sensors(), &[0.0, 0.0], 5.0);
        assert_eq!(v.value, 0.0);
        assert!(!stop);
    }

    #[test]
    fn all_stops_only_when_every_sensor_is_above_its_share() {
        let p = policy(Algorithm::All, 2, 2.0);
        let mut states = [CuSumState { value: 1.5, steps: 0 }, CuSumState { value: 0.5, steps: 0 }];
        let mut y = [false; 2];
        // x = 0.2 has zero llr: values stay 1.5 and 0.5 against shares of 1.0.
        assert!(!step_all(&mut states, p.sensors(), &[0.2, 0.2], 2.0, &mut y));
        assert_eq!(y, [true, false]);
        assert!(step_all(&mut states, p.sensors(), &[0.2, 3.0], 2.0, &mut y));
        assert_eq!(y, [true, true]);
    }

    #[test]
    fn all_censors_when_one_sensor_never_fires() {
        // Sensor 2 watches for a change that never shows in its data.
        let p = NetworkPolicy::new(
            Algorithm::All,
            &[(pair(), 0.2, 1.0), (DistributionPair::gaussian(0.0, -0.4, 1.0).unwrap(), 0.2, 1.0)],
            30.0,
        )
        .unwrap();
        let mut states = [CuSumState::new(); 2];
        let mut y = [false; 2];
        for _ in 0..1000 {
            assert!(!step_all(&mut states, p.sensors(), &[1.0, 1.0], 30.0, &mut y));
        }
        assert!(y[0] && !y[1]);
    }

    #[test]
    fn fractional_skip_holds_statistic() {
        let p = policy(Algorithm::FractionalAll, 2, 100.0);
        let mut states = [CuSumState { value: 1.0, steps: 3 }; 2];
        let mut y = [false; 2];
        step_fractional(&mut states, &[true, false], p.sensors(), &[5.0, 5.0], 100.0, &mut y);
        assert_eq!(states[0].value, 1.0);
        assert_eq!(states[0].steps, 4);
        assert!(states[1].value > 1.0);
    }

    #[test]
    fn every_nth_sampling_pattern() {
        let hits: Vec<u64> = (1..=10).filter(|&n| every_nth_samples(n, 3)).collect();
        assert_eq!(hits, vec![1, 4, 7, 10]);
        assert!((1..=10).all(|n| every_nth_samples(n, 1)));
    }

    #[test]
    fn single_sensor_networks_reduce_to_single_stream_detectors() {
        let seeds = SeedTree::new(3);
        for trial in 0..300 {
            let g = ChangePoint::at(20);
            let stream = || ObservationStream::for_trial(pair(), g, &seeds, Purpose::Path, trial, 0);
            let cusum = run_until_stop(&Detector::CuSum, &mut stream(), 4.0, 20_000, false);
            let de = run_until_stop(
                &Detector::DeCuSum(DeCuSumParams::new(0.2, 20.0).unwrap()),
                &mut stream(),
                4.0,
                20_000,
                false,
            );
            for alg in [Algorithm::CentralizedCuSum, Algorithm::All] {
                let r = run_network_trial(&policy(alg, 1, 4.0), g, &seeds, trial, 20_000);
                assert_eq!(r.stop, cusum.stop, "{alg}");
            }
            let r = run_network_trial(&policy(Algorithm::DeAll, 1, 4.0), g, &seeds, trial, 20_000);
            assert_eq!(r.stop, de.stop);
            assert_eq!(r.samples_per_sensor[0], de.samples_taken);
        }
    }

    #[test]
    fn trial_record_invariants_and_trace() {
        let seeds = SeedTree::new(9);
        for alg in Algorithm::ALL_VARIANTS {
            let p = policy(alg, 3, 3.0).with_skip_prob(0.3).unwrap().with_stride(2).unwrap();
            for trial in 0..50 {
                let g = ChangePoint::at(40);
                let r = run_network_trial_with(
                    &p,
                    g,
                    &seeds,
                    trial,
                    5_000,
                    TrialOptions { trace: true, ..Default::default() },
                );
                let tau = r.stop.steps();
                for l in 0..3 {
                    assert!(r.samples_per_sensor[l] <= tau);
                    assert!(r.pre_change_samples_per_sensor[l] <= 39.min(tau));
                    if !alg.is_binary_uplink() {
                        assert_eq!(r.ones_transmitted_per_sensor[l], 0);
                    }
                }
                let trace = r.trace.unwrap();
                assert_eq!(trace.len() as u64, 3 * tau);
                let sampled = trace.iter().filter(|t| t.sampled).count() as u64;
                assert_eq!(sampled, r.samples_per_sensor.iter().sum::<u64>());
            }
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let seeds = SeedTree::new(1234);
        let p = policy(Algorithm::FractionalAll, 4, 4.0).with_skip_prob(0.35).unwrap();
        let a = run_network_trial(&p, ChangePoint::at(50), &seeds, 17, 10_000);
        let b = run_network_trial(&p, ChangePoint::at(50), &seeds, 17, 10_000);
        assert_eq!(a, b);
    }

    #[test]
    fn change_at_one_uses_every_sample_for_all() {
        let seeds = SeedTree::new(2);
        let p = policy(Algorithm::All, 4, 50.0);
        for trial in 0..20 {
            let r = run_network_trial(&p, ChangePoint::at(1), &seeds, trial, 100_000);
            let tau = r.stop.steps();
            assert!(r.samples_per_sensor.iter().all(|&s| s == tau));
        }
    }
}
