//! Command-line front end. Flags override values from `--config`.
//!
//! Exit codes: 0 success, 1 I/O or runtime error, 2 configuration error,
//! 3 failed assertion (`reproduce-fig2`), 4 FAR estimate too heavily censored.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use decusum::config::{ConfigError, ExperimentConfig};
use decusum::experiment::{self as exp, ExperimentError, SimulationBudget, TrajectorySpec};
use decusum::metrics::{
    estimate_cadd, estimate_far, estimate_pdc, estimate_wadd_proxy, AlarmHandling, CaddMode, McSettings, MetricsError,
};
use decusum::{Algorithm, ChangePoint, DistributionPair, SeedTree};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ASSERTION: u8 = 3;
const EXIT_CENSORING: u8 = 4;

#[derive(Parser)]
#[command(name = "decusum", version, about = "Data-efficient quickest change detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trial count for every estimator.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output file (directory for reproduce-fig2). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    algorithm: Option<Algorithm>,
    #[arg(long, global = true, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    threshold_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    sensors: Option<usize>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Truncation depth; `inf` disables truncation.
    #[arg(long, global = true)]
    h: Option<f64>,
    #[arg(long, global = true)]
    skip_prob: Option<f64>,
    #[arg(long, global = true)]
    stride: Option<u64>,
    /// Run trials on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// CuSum and DE-CuSum on one seeded single-sensor path.
    Trajectory {
        #[arg(long, default_value_t = 40)]
        gamma: u64,
        #[arg(long, default_value_t = 7.0)]
        threshold: f64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
        #[command(flatten)]
        common: Common,
    },
    /// FAR, CADD, worst-state delay and duty cycles over a threshold grid.
    Sweep {
        /// Keep rows already written to --out by the same seed and config.
        #[arg(long)]
        resume: bool,
        #[command(flatten)]
        common: Common,
    },
    /// The ten-sensor ALL / DE-All / fractional sampling comparison.
    #[command(name = "reproduce-fig2")]
    ReproduceFig2 {
        #[command(flatten)]
        common: Common,
    },
    /// Per-sensor pre-change duty cycle.
    Pdc {
        #[arg(long)]
        horizon: Option<u64>,
        /// Restart the statistics after each alarm at the first grid threshold.
        #[arg(long)]
        restart: bool,
        #[command(flatten)]
        common: Common,
    },
    /// False alarm rate under the pre-change law.
    Far {
        #[arg(long)]
        max_steps: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Detection delay: CADD and, where defined, the worst-state proxy.
    Delay {
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// Burn-in for `--mode stationary` (default: automatic).
        #[arg(long)]
        burn_in: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Ladder-formula duty cycle for a single DE-CuSum sensor.
    Oracle {
        /// Also simulate the duty cycle directly.
        #[arg(long)]
        simulate: bool,
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    ChangeAtOne,
    Stationary,
}

#[derive(Debug)]
enum Failure {
    Io(String),
    Config(String),
    Assertion(String),
    Censoring(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Io(e) => Failure::Io(e.to_string()),
            ExperimentError::Config(e) => e.into(),
            ExperimentError::Metrics(MetricsError::InvalidArgument(m)) => Failure::Config(m),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        ExperimentError::from(e).into()
    }
}

impl From<decusum::PolicyError> for Failure {
    fn from(e: decusum::PolicyError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Trajectory { gamma, threshold, max_steps, common } => trajectory(&common, gamma, threshold, max_steps),
        Command::Sweep { resume, common } => sweep(&common, resume),
        Command::ReproduceFig2 { common } => reproduce_fig2(&common),
        Command::Pdc { horizon, restart, common } => pdc(&common, horizon, restart),
        Command::Far { max_steps, common } => far(&common, max_steps),
        Command::Delay { mode, burn_in, common } => delay(&common, mode, burn_in),
        Command::Oracle { simulate, horizon, common } => oracle(&common, simulate, horizon),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, kind, msg) = match f {
                Failure::Io(m) => (EXIT_IO, "error", m),
                Failure::Config(m) => (EXIT_CONFIG, "configuration error", m),
                Failure::Assertion(m) => (EXIT_ASSERTION, "assertion failed", m),
                Failure::Censoring(m) => (EXIT_CENSORING, "censoring", m),
            };
            eprintln!("decusum: {kind}: {msg}");
            ExitCode::from(code)
        }
    }
}

/// The file config (or the ten-sensor preset without a seed), with flag
/// overrides applied.
fn build_config(c: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig { seed: None, ..ExperimentConfig::fig2_preset() },
    };
    if let Some(s) = c.seed {
        cfg.seed = Some(s);
    }
    if let Some(t) = c.trials {
        cfg.trials.delay = t;
        cfg.trials.far = t;
        cfg.trials.pdc = t;
    }
    if let Some(a) = c.algorithm {
        cfg.network.algorithms = vec![a];
    }
    if c.alpha_grid.is_some() && c.threshold_grid.is_some() {
        return Err(Failure::Config("give either --alpha-grid or --threshold-grid, not both".into()));
    }
    if let Some(a) = &c.alpha_grid {
        cfg.grid.alphas = Some(a.clone());
        cfg.grid.thresholds = None;
    }
    if let Some(t) = &c.threshold_grid {
        cfg.grid.thresholds = Some(t.clone());
        cfg.grid.alphas = None;
    }
    if let Some(l) = c.sensors {
        if cfg.network.pairs.is_some() {
            return Err(Failure::Config("--sensors conflicts with per-sensor pairs in the config".into()));
        }
        cfg.network.sensors = l;
    }
    if let Some(m) = c.mu {
        cfg.network.mu = m;
    }
    if let Some(h) = c.h {
        cfg.network.h = h;
    }
    if let Some(p) = c.skip_prob {
        cfg.network.skip_prob = p;
    }
    if let Some(s) = c.stride {
        cfg.network.stride = s;
    }
    if c.sequential {
        cfg.parallel = false;
    }
    if let Some(out) = &c.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate_network()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Outcome {
    match out {
        Some(p) => {
            let mut f = io::BufWriter::new(fs::File::create(p)?);
            write(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            match write(&mut lock) {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}

fn warn_policy(cfg: &ExperimentConfig) -> Outcome {
    for &alg in &cfg.network.algorithms {
        for w in cfg.network.policy(alg, 0.0)?.warnings() {
            eprintln!("decusum: warning: {alg}: {w}");
        }
    }
    Ok(())
}

fn settings(cfg: &ExperimentConfig, trials: u64, seeds: SeedTree) -> McSettings {
    McSettings { trials, seeds, parallel: cfg.parallel }
}

fn trajectory(c: &Common, gamma: u64, threshold: f64, max_steps: u64) -> Outcome {
    if gamma == 0 {
        return Err(Failure::Config("--gamma must be >= 1".into()));
    }
    if c.sensors.is_some_and(|l| l != 1) {
        return Err(Failure::Config("trajectory is a single-sensor command".into()));
    }
    let mut spec = TrajectorySpec { change_point: ChangePoint::at(gamma), threshold, max_steps, ..Default::default() };
    if c.config.is_some() {
        let cfg = build_config(c)?;
        if cfg.network.sensor_count() != 1 {
            return Err(Failure::Config(format!(
                "trajectory needs a single-sensor config, got {} sensors",
                cfg.network.sensor_count()
            )));
        }
        spec.pair = cfg.network.sensor_pairs()[0];
        spec.mu = cfg.network.mu;
        spec.h = cfg.network.h;
        spec.seed = cfg.seed.unwrap_or(spec.seed);
    }
    spec.mu = c.mu.unwrap_or(spec.mu);
    spec.h = c.h.unwrap_or(spec.h);
    spec.seed = c.seed.unwrap_or(spec.seed);
    if !(threshold >= 0.0) {
        return Err(Failure::Config("--threshold must be >= 0".into()));
    }
    let rows = exp::run_trajectory(&spec)?;
    emit(c.out.as_deref(), |w| exp::write_trajectory_csv(w, &spec, &rows))
}

fn sweep(c: &Common, resume: bool) -> Outcome {
    let cfg = build_config(c)?;
    cfg.validate()?;
    let seed = cfg.require_seed()?;
    warn_policy(&cfg)?;
    match cfg.output.clone() {
        Some(path) => {
            exp::sweep_to_file(&cfg, &path, resume)?;
        }
        None => {
            if resume {
                return Err(Failure::Config("--resume needs --out".into()));
            }
            let stdout = io::stdout();
            let mut writer = exp::SweepWriter::create(stdout.lock(), seed, &cfg.hash(), cfg.network.sensor_count())?;
            exp::run_sweep(&cfg, &Default::default(), |row| writer.write_row(row))?;
        }
    }
    Ok(())
}

fn reproduce_fig2(c: &Common) -> Outcome {
    let mut cfg = build_config(c)?;
    if c.config.is_none() {
        // The preset with only explicitly flagged values changed.
        cfg.seed = cfg.seed.or(Some(exp::DEFAULT_FIG2_SEED));
    }
    cfg.validate()?;
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("fig2_out"));
    cfg.output = None;
    let outcome = exp::reproduce_fig2(&cfg, &dir)?;
    print!("{}", fs::read_to_string(&outcome.summary_path)?);
    let failed: Vec<_> = outcome.checks.iter().filter(|k| !k.passed).map(|k| k.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("{} check(s) failed: {}", failed.len(), failed.join(", "))))
    }
}

fn far(c: &Common, max_steps: Option<u64>) -> Outcome {
    let cfg = build_config(c)?;
    cfg.validate()?;
    let seed = cfg.require_seed()?;
    warn_policy(&cfg)?;
    let root = SeedTree::new(seed);
    let mut rows = Vec::new();
    for &alg in &cfg.network.algorithms {
        for (i, point) in cfg.grid.points().into_iter().enumerate() {
            let policy = cfg.network.policy(alg, point.threshold)?;
            let budget = max_steps.unwrap_or_else(|| cfg.trials.far_max_steps_at(&point));
            let far = estimate_far(&policy, budget, &settings(&cfg, cfg.trials.far, root.child(i as u64)))?;
            rows.push(exp::FarRow { algorithm: alg, point, far });
        }
    }
    emit(cfg.output.as_deref(), |w| exp::write_far_csv(w, &rows, seed, &cfg.hash()))?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.far.quality_warning())
        .map(|r| {
            format!("{} at A={} ({:.1}% censored)", r.algorithm, r.point.threshold, 100.0 * r.far.censored_fraction)
        })
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Censoring(format!("FAR is only an upper bound for {}; raise --max-steps", bad.join(", "))))
    }
}

fn delay(c: &Common, mode: ModeArg, burn_in: Option<u64>) -> Outcome {
    let cfg = build_config(c)?;
    cfg.validate()?;
    let seed = cfg.require_seed()?;
    warn_policy(&cfg)?;
    let root = SeedTree::new(seed);
    let mut rows = Vec::new();
    for &alg in &cfg.network.algorithms {
        for (i, point) in cfg.grid.points().into_iter().enumerate() {
            let policy = cfg.network.policy(alg, point.threshold)?;
            let mc = settings(&cfg, cfg.trials.delay, root.child(i as u64));
            let m = match (mode, CaddMode::default_for(&policy)) {
                (ModeArg::Auto, m) => m,
                (ModeArg::ChangeAtOne, _) => CaddMode::ChangeAtOne,
                (ModeArg::Stationary, CaddMode::Stationary { burn_in: auto }) => {
                    CaddMode::Stationary { burn_in: burn_in.unwrap_or(auto) }
                }
                (ModeArg::Stationary, CaddMode::ChangeAtOne) => CaddMode::Stationary { burn_in: burn_in.unwrap_or(0) },
            };
            let cadd = estimate_cadd(&policy, m, &mc)?;
            if !cadd.reliable() {
                eprintln!("decusum: warning: {alg} at A={}: CADD rests on few usable runs", point.threshold);
            }
            rows.push(exp::DelayRow { algorithm: alg, point, measure: "cadd", mode: Some(m), delay: cadd });
            match estimate_wadd_proxy(&policy, &mc) {
                Ok(d) => {
                    rows.push(exp::DelayRow { algorithm: alg, point, measure: "wadd_proxy", mode: None, delay: d })
                }
                Err(MetricsError::Unsupported(m)) => eprintln!("decusum: warning: {alg}: {m}"),
                Err(e) => return Err(e.into()),
            }
        }
    }
    emit(cfg.output.as_deref(), |w| exp::write_delay_csv(w, &rows, seed, &cfg.hash()))
}

fn pdc(c: &Common, horizon: Option<u64>, restart: bool) -> Outcome {
    let mut cfg = build_config(c)?;
    if let Some(h) = horizon {
        cfg.trials.pdc_horizon = h;
        cfg.validate_network()?;
    }
    let seed = cfg.require_seed()?;
    warn_policy(&cfg)?;
    let (handling, threshold) = if restart {
        cfg.grid.validate()?;
        (AlarmHandling::Restart, cfg.grid.points()[0].threshold)
    } else {
        (AlarmHandling::Ignore, f64::INFINITY)
    };
    let mc = settings(&cfg, cfg.trials.pdc, SeedTree::new(seed));
    let mut rows = Vec::new();
    for &alg in &cfg.network.algorithms {
        let policy = cfg.network.policy(alg, threshold)?;
        rows.push((alg, estimate_pdc(&policy, cfg.trials.pdc_horizon, handling, &mc)?));
    }
    emit(cfg.output.as_deref(), |w| {
        exp::write_pdc_csv(w, &rows, cfg.trials.pdc_horizon, cfg.trials.pdc, seed, &cfg.hash())
    })
}

fn oracle(c: &Common, simulate: bool, horizon: u64) -> Outcome {
    let cfg = build_config(c)?;
    let seed = cfg.require_seed()?;
    let pairs = cfg.network.sensor_pairs();
    let mut distinct: Vec<DistributionPair> = Vec::new();
    for p in pairs {
        if !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    let budget = simulate.then_some(SimulationBudget { trials: cfg.trials.pdc, horizon });
    let oracle_trials = c.trials.unwrap_or(1_000_000);
    let mut rows = Vec::new();
    for pair in &distinct {
        let r = exp::compare_oracle(
            pair,
            cfg.network.mu,
            cfg.network.h,
            oracle_trials,
            budget,
            SeedTree::new(seed),
            cfg.parallel,
        )?;
        if let Some(z) = r.z() {
            eprintln!("decusum: {pair}: oracle {:.5}, simulation differs by {z:.2} se", r.oracle.pdc_formula_value);
        }
        rows.push(r);
    }
    emit(cfg.output.as_deref(), |w| exp::write_oracle_csv(w, &rows, seed))
}
