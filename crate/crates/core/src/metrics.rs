//! Monte Carlo estimators for the false alarm rate, detection delays and
//! pre-change duty cycle of a [`NetworkPolicy`], plus the renewal-reward
//! ladder oracle for the duty cycle of DE-CuSum.
//!
//! Trials are independent and each draws from its own substream (see
//! [`crate::rng`]), so running them in parallel gives results identical to a
//! sequential run. Reductions are always done in trial order.

use rayon::prelude::*;
use serde::Serialize;

use crate::detectors::SLEEP_SNAP;
use crate::fusion::{run_network_trial_with, NetworkPolicy, NetworkState, StartState, TrialOptions, TrialRandomness};
use crate::models::{ChangePoint, DistributionPair};
use crate::rng::{Lane, Purpose, SeedTree};

pub const DEFAULT_DELAY_TRIALS: u64 = 20_000;
pub const DEFAULT_FAR_TRIALS: u64 = 2_000;
pub const DEFAULT_PDC_TRIALS: u64 = 1_000;
pub const DEFAULT_PDC_HORIZON: u64 = 100_000;
/// Fraction of the duty-cycle horizon discarded as warm-up.
pub const PDC_WARMUP_FRACTION: f64 = 0.1;
/// Step budget after the change point for delay runs.
pub const DEFAULT_POST_CHANGE_BUDGET: u64 = 1_000_000;
/// Censored fraction above which a FAR estimate carries a quality warning.
pub const CENSORING_WARNING_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("{0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A Monte Carlo mean and its standard error `sd / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Self { mean, se: 0.0 }
    }

    /// Sample mean and standard error of `values`.
    pub fn from_samples<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let mut acc = Welford::default();
        for v in values {
            acc.push(v);
        }
        acc.estimate()
    }

    /// `sqrt(se_a^2 + se_b^2)`.
    pub fn combined_se(&self, other: &Estimate) -> f64 {
        self.se.hypot(other.se)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn estimate(&self) -> Estimate {
        match self.n {
            0 => Estimate { mean: f64::NAN, se: f64::NAN },
            1 => Estimate { mean: self.mean, se: 0.0 },
            n => Estimate { mean: self.mean, se: (self.m2 / (n - 1) as f64 / n as f64).sqrt() },
        }
    }
}

/// Trial count, randomness, and scheduling for one estimator call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub trials: u64,
    pub seeds: SeedTree,
    pub parallel: bool,
}

impl McSettings {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self { trials, seeds: SeedTree::new(seed), parallel: true }
    }

    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }

    fn check(&self) -> Result<(), MetricsError> {
        if self.trials == 0 {
            return Err(MetricsError::InvalidArgument("trials must be >= 1".into()));
        }
        Ok(())
    }
}

/// Runs `f(trial)` for every trial and returns results in trial order.
pub fn map_trials<T, F>(trials: u64, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if parallel {
        (0..trials).into_par_iter().map(f).collect()
    } else {
        (0..trials).map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FarEstimate {
    /// `1 / E_inf[tau]`.
    pub far: f64,
    pub se: f64,
    /// `E_inf[tau]`, counting censored runs at the budget (a lower bound).
    pub mean_run_length: Estimate,
    pub censored_fraction: f64,
    pub trials: u64,
    pub max_steps: u64,
}

impl FarEstimate {
    /// Any run censored: the estimate is an upper bound on the FAR.
    pub fn is_upper_bound(&self) -> bool {
        self.censored_fraction > 0.0
    }

    pub fn quality_warning(&self) -> bool {
        self.censored_fraction > CENSORING_WARNING_FRACTION
    }
}

/// `max_steps = 50 / alpha`, the default FAR budget for a target `alpha`.
pub fn far_budget(alpha: f64) -> u64 {
    (50.0 / alpha).ceil().max(1.0) as u64
}

/// `FAR = 1 / E_inf[tau]` from runs with no change. Censored runs count as
/// `max_steps`, which biases the FAR estimate upward.
pub fn estimate_far(policy: &NetworkPolicy, max_steps: u64, mc: &McSettings) -> Result<FarEstimate, MetricsError> {
    mc.check()?;
    if max_steps == 0 {
        return Err(MetricsError::InvalidArgument("max_steps must be >= 1".into()));
    }
    let opts = TrialOptions { purpose: Purpose::FalseAlarm, ..Default::default() };
    let runs = map_trials(mc.trials, mc.parallel, |t| {
        run_network_trial_with(policy, ChangePoint::Never, &mc.seeds, t, max_steps, opts).stop
    });
    let censored = runs.iter().filter(|s| s.is_censored()).count();
    let arl = Estimate::from_samples(runs.iter().map(|s| s.steps() as f64));
    let far = 1.0 / arl.mean;
    Ok(FarEstimate {
        far,
        se: arl.se / (arl.mean * arl.mean),
        mean_run_length: arl,
        censored_fraction: censored as f64 / mc.trials as f64,
        trials: mc.trials,
        max_steps,
    })
}

/// Where the change happens in a delay run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaddMode {
    /// `gamma = 1`: every statistic starts from its initial value.
    ChangeAtOne,
    /// `gamma = burn_in + 1`: statistics evolve under `f0` first. Runs that
    /// alarm before the change are discarded.
    Stationary { burn_in: u64 },
}

impl CaddMode {
    /// `ChangeAtOne` for CuSum-type rules, whose worst start is the initial
    /// state; `Stationary` with `burn_in = 10 ceil(1 / (mu min_l D_l))` for
    /// DE-All.
    pub fn default_for(policy: &NetworkPolicy) -> Self {
        if !policy.is_data_efficient() {
            return CaddMode::ChangeAtOne;
        }
        let worst = policy.sensors().iter().map(|s| 1.0 / (s.mu() * s.pair.kl_f1_f0())).fold(0.0f64, f64::max);
        CaddMode::Stationary { burn_in: 10 * worst.ceil() as u64 }
    }

    pub fn change_point(&self) -> ChangePoint {
        match *self {
            CaddMode::ChangeAtOne => ChangePoint::at(1),
            CaddMode::Stationary { burn_in } => ChangePoint::at(burn_in + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayEstimate {
    /// Mean of `tau - gamma` over runs with `tau >= gamma`.
    pub delay: Estimate,
    /// Runs that contributed.
    pub used: u64,
    /// Runs that alarmed before the change.
    pub false_alarms: u64,
    /// Runs with no alarm within the post-change budget (counted at the budget).
    pub censored: u64,
    pub trials: u64,
}

impl DelayEstimate {
    /// At least half the runs survived to the change, and none were censored.
    pub fn reliable(&self) -> bool {
        2 * self.used >= self.trials && self.censored == 0
    }
}

fn delay_runs(policy: &NetworkPolicy, gamma: ChangePoint, start: StartState, mc: &McSettings) -> DelayEstimate {
    let g = gamma.index().expect("delay runs need a finite change point");
    let budget = g - 1 + DEFAULT_POST_CHANGE_BUDGET;
    // Change-at-one and worst-start runs share paths so that the two coincide
    // exactly whenever the worst start is the fresh start.
    let purpose = if g == 1 { Purpose::Delay } else { Purpose::Custom(g) };
    let opts = TrialOptions { purpose, start, trace: false };
    let runs =
        map_trials(mc.trials, mc.parallel, |t| run_network_trial_with(policy, gamma, &mc.seeds, t, budget, opts).stop);
    let mut acc = Welford::default();
    let (mut false_alarms, mut censored) = (0, 0);
    for s in &runs {
        if s.steps() < g {
            false_alarms += 1;
            continue;
        }
        if s.is_censored() {
            censored += 1;
        }
        acc.push((s.steps() - g) as f64);
    }
    DelayEstimate { delay: acc.estimate(), used: acc.n, false_alarms, censored, trials: mc.trials }
}

/// `E_gamma[tau - gamma | tau >= gamma]` at the change point given by `mode`.
pub fn estimate_cadd(policy: &NetworkPolicy, mode: CaddMode, mc: &McSettings) -> Result<DelayEstimate, MetricsError> {
    mc.check()?;
    Ok(delay_runs(policy, mode.change_point(), StartState::Fresh, mc))
}

/// Worst-state delay proxy: every DE-CuSum sensor starts at `-h_l` (deepest
/// sleep) when the change happens at `gamma = 1`. For rules without a sleep
/// state the worst state is the initial one and this equals the
/// change-at-one CADD on the same paths.
pub fn estimate_wadd_proxy(policy: &NetworkPolicy, mc: &McSettings) -> Result<DelayEstimate, MetricsError> {
    mc.check()?;
    if policy.is_data_efficient() && policy.sensors().iter().any(|s| s.h().is_infinite()) {
        return Err(MetricsError::Unsupported(
            "worst-state delay proxy needs a finite truncation depth h at every sensor".into(),
        ));
    }
    Ok(delay_runs(policy, ChangePoint::at(1), StartState::Deepest, mc))
}

/// What the duty-cycle run does when the policy raises an alarm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum AlarmHandling {
    /// Keep running; the threshold plays no role.
    #[default]
    Ignore,
    /// Restart every statistic from its initial state after each alarm.
    Restart,
}

/// Fraction of steps at which each sensor samples under `f0`, over
/// `horizon` steps with the first [`PDC_WARMUP_FRACTION`] discarded,
/// averaged over trials.
pub fn estimate_pdc(
    policy: &NetworkPolicy,
    horizon: u64,
    handling: AlarmHandling,
    mc: &McSettings,
) -> Result<Vec<Estimate>, MetricsError> {
    mc.check()?;
    let warmup = (horizon as f64 * PDC_WARMUP_FRACTION).floor() as u64;
    if horizon < 10 {
        return Err(MetricsError::InvalidArgument(format!("horizon must be >= 10 steps, got {horizon}")));
    }
    let l = policy.len();
    let window = (horizon - warmup) as f64;
    let per_trial = map_trials(mc.trials, mc.parallel, |t| {
        let mut rand = TrialRandomness::new(policy, ChangePoint::Never, &mc.seeds, Purpose::DutyCycle, t);
        let mut state = NetworkState::new(policy, StartState::Fresh);
        let mut obs = vec![0.0; l];
        let mut skips = vec![false; l];
        let mut counts = vec![0u64; l];
        for n in 1..=horizon {
            rand.fill(&mut obs, &mut skips);
            let out = state.step(&obs, &skips);
            if n > warmup {
                for (c, &s) in counts.iter_mut().zip(state.sampled()) {
                    *c += s as u64;
                }
            }
            if out.stopped && handling == AlarmHandling::Restart {
                state = NetworkState::new(policy, StartState::Fresh);
            }
        }
        counts
    });
    Ok((0..l)
        .map(|i| {
            let e = Estimate::from_samples(per_trial.iter().map(|c| c[i] as f64 / window));
            if e.se == 0.0 || e.se.is_nan() {
                Estimate::exact(e.mean)
            } else {
                e
            }
        })
        .collect())
}

/// Renewal-reward evaluation of the DE-CuSum duty cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderEstimate {
    /// `E_inf[tau_-]`.
    pub mean_tau_minus: Estimate,
    /// `E_inf[ceil(|W_{tau_-}^{h+}| / mu)]`.
    pub mean_sleep: Estimate,
    /// `E[tau_-] / (E[tau_-] + E[sleep])`.
    pub pdc_formula_value: f64,
    /// Delta-method standard error of `pdc_formula_value`.
    pub pdc_se: f64,
    pub trials: u64,
}

/// Sleep length after an undershoot of depth `depth > 0`: `ceil(depth/mu)`,
/// with the same tolerance as the detector's wake-up test, and never less
/// than one step.
pub fn sleep_steps(depth: f64, mu: f64) -> u64 {
    ((depth / mu - SLEEP_SNAP).ceil()).max(1.0) as u64
}

/// Simulates the descending ladder epoch `tau_-` of the log-likelihood ratio
/// random walk under `f0`, its height truncated at `-h`, and evaluates
/// `PDC = E[tau_-] / (E[tau_-] + E[ceil(|W_{tau_-}^{h+}| / mu)])`.
///
/// Shares nothing with the DE-CuSum state machine.
pub fn ladder_oracle(
    pair: &DistributionPair,
    mu: f64,
    h: f64,
    mc: &McSettings,
) -> Result<LadderEstimate, MetricsError> {
    mc.check()?;
    if !(mu > 0.0 && mu.is_finite()) || h.is_nan() || h < 0.0 {
        return Err(MetricsError::InvalidArgument(format!("need mu > 0 and h >= 0, got mu={mu} h={h}")));
    }
    let samples = map_trials(mc.trials, mc.parallel, |t| {
        let mut rng = mc.seeds.substream(Purpose::Ladder, t, Lane::Observations, 0);
        let mut walk = 0.0;
        let mut tau = 0u64;
        loop {
            tau += 1;
            walk += pair.log_likelihood_ratio(pair.sample(&mut rng, false));
            if walk < 0.0 {
                break;
            }
        }
        let height = walk.max(-h);
        (tau as f64, sleep_steps(-height, mu) as f64)
    });
    let n = samples.len() as f64;
    let tau = Estimate::from_samples(samples.iter().map(|s| s.0));
    let sleep = Estimate::from_samples(samples.iter().map(|s| s.1));
    let cov = if samples.len() > 1 {
        samples.iter().map(|s| (s.0 - tau.mean) * (s.1 - sleep.mean)).sum::<f64>() / (n - 1.0) / n
    } else {
        0.0
    };
    let (a, b) = (tau.mean, sleep.mean);
    let total = a + b;
    let (ga, gb) = (b / (total * total), -a / (total * total));
    let var = ga * ga * tau.se * tau.se + gb * gb * sleep.se * sleep.se + 2.0 * ga * gb * cov;
    Ok(LadderEstimate {
        mean_tau_minus: tau,
        mean_sleep: sleep,
        pdc_formula_value: a / total,
        pdc_se: var.max(0.0).sqrt(),
        trials: mc.trials,
    })
}

/// `mu / (mu + D(f0 || f1))`, the duty-cycle bound without truncation.
pub fn pdc_bound(pair: &DistributionPair, mu: f64) -> f64 {
    mu / (mu + pair.kl_f0_f1())
}

/// `|log alpha| / sum_l D(f1_l || f0_l)`, the first-order lower bound on the
/// detection delay of any policy with `FAR <= alpha`.
pub fn theoretical_lower_bound(alpha: f64, sensors: &[DistributionPair]) -> Result<f64, MetricsError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(MetricsError::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if sensors.is_empty() {
        return Err(MetricsError::InvalidArgument("no sensors".into()));
    }
    let total: f64 = sensors.iter().map(|p| p.kl_f1_f0()).sum();
    Ok(alpha.ln().abs() / total)
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Trial budgets for [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub far_trials: u64,
    pub far_max_steps: u64,
    pub delay_trials: u64,
    pub pdc_trials: u64,
    pub pdc_horizon: u64,
    pub seeds: SeedTree,
    pub parallel: bool,
}

impl EvalSettings {
    pub fn defaults(seed: u64, far_max_steps: u64) -> Self {
        Self {
            far_trials: DEFAULT_FAR_TRIALS,
            far_max_steps,
            delay_trials: DEFAULT_DELAY_TRIALS,
            pdc_trials: DEFAULT_PDC_TRIALS,
            pdc_horizon: DEFAULT_PDC_HORIZON,
            seeds: SeedTree::new(seed),
            parallel: true,
        }
    }

    fn mc(&self, trials: u64) -> McSettings {
        McSettings { trials, seeds: self.seeds, parallel: self.parallel }
    }
}

/// Everything measured about one policy at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub policy: String,
    pub threshold: f64,
    pub far: FarEstimate,
    pub cadd: DelayEstimate,
    pub cadd_mode: CaddMode,
    pub wadd_proxy: Option<DelayEstimate>,
    pub pdc_per_sensor: Vec<Estimate>,
    pub trials: u64,
}

pub fn evaluate(policy: &NetworkPolicy, settings: &EvalSettings) -> Result<MetricsReport, MetricsError> {
    let far = estimate_far(policy, settings.far_max_steps, &settings.mc(settings.far_trials))?;
    let mode = CaddMode::default_for(policy);
    let cadd = estimate_cadd(policy, mode, &settings.mc(settings.delay_trials))?;
    let wadd_proxy = match estimate_wadd_proxy(policy, &settings.mc(settings.delay_trials)) {
        Ok(w) => Some(w),
        Err(MetricsError::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let pdc_per_sensor =
        estimate_pdc(policy, settings.pdc_horizon, AlarmHandling::Ignore, &settings.mc(settings.pdc_trials))?;
    Ok(MetricsReport {
        policy: policy.summary(),
        threshold: policy.threshold(),
        far,
        cadd,
        cadd_mode: mode,
        wadd_proxy,
        pdc_per_sensor,
        trials: settings.delay_trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::Algorithm;

    fn pair() -> DistributionPair {
        DistributionPair::gaussian(0.0, 0.4, 1.0).unwrap()
    }

    #[test]
    fn estimate_from_samples() {
        let e = Estimate::from_samples([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        // sd = sqrt(5/3), se = sd / 2
        assert!((e.se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_closed_forms() {
        let ten = vec![pair(); 10];
        assert!((theoretical_lower_bound(1e-3, &ten).unwrap() - 1e3f64.ln() / 0.8).abs() < 1e-12);
        assert!((theoretical_lower_bound(1e-3, &ten).unwrap() - 8.635).abs() < 1e-3);
        assert_eq!(theoretical_lower_bound(1.0, &ten).unwrap(), 0.0);
        let one = [DistributionPair::gaussian(0.0, 0.75, 1.0).unwrap()];
        assert!((theoretical_lower_bound(1e-2, &one).unwrap() - 16.374).abs() < 1e-3);
        assert!(theoretical_lower_bound(0.0, &one).is_err());
        assert!(theoretical_lower_bound(1.5, &one).is_err());
        assert!(theoretical_lower_bound(-0.1, &one).is_err());
    }

    #[test]
    fn pdc_bound_value() {
        assert!((pdc_bound(&pair(), 0.2) - 0.2 / 0.28).abs() < 1e-15);
        assert!((pdc_bound(&pair(), 0.2) - 0.7143).abs() < 1e-4);
    }

    #[test]
    fn sleep_step_rounding() {
        assert_eq!(sleep_steps(0.5, 0.05), 10);
        assert_eq!(sleep_steps(0.51, 0.05), 11);
        assert_eq!(sleep_steps(20.0, 0.2), 100);
        assert_eq!(sleep_steps(0.5, 1.0), 1);
        assert_eq!(sleep_steps(1e-15, 0.2), 1);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 + 1.25 * v).collect();
        let (s, i) = linear_fit(&x, &y);
        assert!((s - 1.25).abs() < 1e-12 && (i - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pdc_is_one_for_full_sampling_rules() {
        let mc = McSettings::new(5, 1);
        for alg in [Algorithm::All, Algorithm::CentralizedCuSum] {
            let p = NetworkPolicy::homogeneous(alg, 3, pair(), 0.2, 20.0, 3.0).unwrap();
            for e in estimate_pdc(&p, 2_000, AlarmHandling::Ignore, &mc).unwrap() {
                assert_eq!(e, Estimate::exact(1.0));
            }
        }
        let p =
            NetworkPolicy::homogeneous(Algorithm::EveryNth, 2, pair(), 0.2, 20.0, 3.0).unwrap().with_stride(4).unwrap();
        for e in estimate_pdc(&p, 4_000, AlarmHandling::Ignore, &mc).unwrap() {
            assert!((e.mean - 0.25).abs() < 1e-3);
        }
    }

    #[test]
    fn wadd_proxy_rejects_untruncated_de_all() {
        let p = NetworkPolicy::homogeneous(Algorithm::DeAll, 2, pair(), 0.2, f64::INFINITY, 3.0).unwrap();
        assert!(matches!(estimate_wadd_proxy(&p, &McSettings::new(10, 1)), Err(MetricsError::Unsupported(_))));
    }

    #[test]
    fn wadd_proxy_equals_change_at_one_without_sleep_states() {
        let mc = McSettings::new(300, 4);
        for (alg, h) in [(Algorithm::All, 20.0), (Algorithm::DeAll, 0.0), (Algorithm::CentralizedCuSum, 20.0)] {
            let p = NetworkPolicy::homogeneous(alg, 3, pair(), 0.2, h, 4.0).unwrap();
            let w = estimate_wadd_proxy(&p, &mc).unwrap();
            let c = estimate_cadd(&p, CaddMode::ChangeAtOne, &mc).unwrap();
            assert_eq!(w, c);
        }
    }

    #[test]
    fn zero_threshold_far_and_delay_are_extreme() {
        let p = NetworkPolicy::homogeneous(Algorithm::CentralizedCuSum, 1, pair(), 0.2, 0.0, 0.0).unwrap();
        let far = estimate_far(&p, 10_000, &McSettings::new(2_000, 3)).unwrap();
        assert!(far.far <= 1.0);
        // First positive llr stops: P(llr > 0) = P(X > 0.2) ~ 0.42 under f0, so E[tau] ~ 2.4.
        assert!(far.far > 0.3, "far={}", far.far);
        let d = estimate_cadd(&p, CaddMode::ChangeAtOne, &McSettings::new(2_000, 3)).unwrap();
        assert!(d.delay.mean < 2.0);
    }

    #[test]
    fn default_cadd_mode() {
        let de = NetworkPolicy::homogeneous(Algorithm::DeAll, 10, pair(), 0.2, 20.0, 3.0).unwrap();
        assert_eq!(CaddMode::default_for(&de), CaddMode::Stationary { burn_in: 630 });
        let all = de.clone().with_algorithm(Algorithm::All);
        assert_eq!(CaddMode::default_for(&all), CaddMode::ChangeAtOne);
        let h0 = NetworkPolicy::homogeneous(Algorithm::DeAll, 10, pair(), 0.2, 0.0, 3.0).unwrap();
        assert_eq!(CaddMode::default_for(&h0), CaddMode::ChangeAtOne);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let p = NetworkPolicy::homogeneous(Algorithm::DeAll, 3, pair(), 0.2, 5.0, 3.0).unwrap();
        let mc = McSettings::new(200, 77);
        assert_eq!(estimate_far(&p, 5_000, &mc).unwrap(), estimate_far(&p, 5_000, &mc.sequential()).unwrap());
        assert_eq!(
            estimate_pdc(&p, 1_000, AlarmHandling::Ignore, &mc).unwrap(),
            estimate_pdc(&p, 1_000, AlarmHandling::Ignore, &mc.sequential()).unwrap()
        );
    }

    #[test]
    fn invalid_arguments() {
        let p = NetworkPolicy::homogeneous(Algorithm::All, 1, pair(), 0.2, 1.0, 1.0).unwrap();
        assert!(estimate_far(&p, 10, &McSettings::new(0, 1)).is_err());
        assert!(estimate_far(&p, 0, &McSettings::new(1, 1)).is_err());
        assert!(ladder_oracle(&pair(), 0.0, 1.0, &McSettings::new(1, 1)).is_err());
        assert!(estimate_pdc(&p, 5, AlarmHandling::Ignore, &McSettings::new(1, 1)).is_err());
    }
}
