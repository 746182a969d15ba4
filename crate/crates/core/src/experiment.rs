//! Experiment drivers: CuSum vs DE-CuSum trajectories, threshold sweeps,
//! the ten-sensor trade-off reproduction, and their CSV outputs.
//!
//! All CSV files start with a `#` comment line naming the schema version,
//! followed by a header row. Floats are written with Rust's shortest
//! round-trip representation, so parsing a field gives back the exact `f64`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use crate::config::{ConfigError, ExperimentConfig, GridPoint};
use crate::detectors::{CuSumState, DeCuSumParams, DeCuSumState};
use crate::fusion::{Algorithm, NetworkPolicy, PolicyError, TraceRecord};
use crate::metrics::{
    self, estimate_cadd, estimate_far, estimate_pdc, estimate_wadd_proxy, theoretical_lower_bound, AlarmHandling,
    CaddMode, DelayEstimate, Estimate, FarEstimate, LadderEstimate, McSettings, MetricsError,
};
use crate::models::{ChangePoint, DistributionPair, ObservationStream};
use crate::rng::{Purpose, SeedTree};

pub const SWEEP_SCHEMA: &str = "decusum-sweep-v1";
pub const TRAJECTORY_SCHEMA: &str = "decusum-trajectory-v1";
pub const TRACE_SCHEMA: &str = "decusum-trace-v1";
pub const ORACLE_SCHEMA: &str = "decusum-oracle-v1";
pub const DEFAULT_FIG2_SEED: u64 = 2015;
/// Duty-cycle budget the ten-sensor preset is tuned for.
pub const FIG2_PDC_TARGET: f64 = 0.65;
/// Minimum CADD ratio fractional / DE-All at the smallest alpha. A desk-scale
/// stand-in for "significant gain".
pub const FIG2_GAIN_FLOOR: f64 = 1.1;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Invalid(String),
}

/// Formats an `f64` so that parsing the text gives back the same value.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// Trajectories

/// A single-sensor CuSum vs DE-CuSum comparison on one seeded path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub pair: DistributionPair,
    pub change_point: ChangePoint,
    pub threshold: f64,
    pub mu: f64,
    pub h: f64,
    pub max_steps: u64,
    pub seed: u64,
}

impl Default for TrajectorySpec {
    /// `N(0,1) -> N(0.75,1)`, change at 40, `A = 7`, `mu = 0.05`, `h = 0.5`.
    fn default() -> Self {
        Self {
            pair: DistributionPair::gaussian(0.0, 0.75, 1.0).expect("valid pair"),
            change_point: ChangePoint::at(40),
            threshold: 7.0,
            mu: 0.05,
            h: 0.5,
            max_steps: 10_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub n: u64,
    pub cusum: f64,
    pub decusum: f64,
    /// Whether DE-CuSum observed `X_n`.
    pub sampled: bool,
}

/// Runs CuSum and DE-CuSum side by side on the same observations until the
/// DE-CuSum statistic crosses the threshold (or `max_steps`).
pub fn run_trajectory(spec: &TrajectorySpec) -> Result<Vec<TrajectoryRow>, ExperimentError> {
    let params = DeCuSumParams::new(spec.mu, spec.h).map_err(|e| ExperimentError::Invalid(e.to_string()))?;
    if spec.max_steps == 0 {
        return Err(ExperimentError::Invalid("max_steps must be >= 1".into()));
    }
    let mut stream =
        ObservationStream::for_trial(spec.pair, spec.change_point, &SeedTree::new(spec.seed), Purpose::Path, 0, 0);
    let (mut c, mut w) = (CuSumState::new(), DeCuSumState::new());
    let mut rows = Vec::new();
    for n in 1..=spec.max_steps {
        let llr = spec.pair.log_likelihood_ratio(stream.draw_next());
        let sampled = w.next_takes_sample;
        c = c.step(llr);
        w = w.step_llr(&params, sampled.then_some(llr)).expect("control honored");
        rows.push(TrajectoryRow { n, cusum: c.value, decusum: w.value, sampled });
        if w.value > spec.threshold {
            break;
        }
    }
    Ok(rows)
}

pub fn write_trajectory_csv<W: Write + ?Sized>(
    out: &mut W,
    spec: &TrajectorySpec,
    rows: &[TrajectoryRow],
) -> io::Result<()> {
    writeln!(
        out,
        "# {TRAJECTORY_SCHEMA} seed={} pair={} gamma={} A={} mu={} h={}",
        spec.seed,
        spec.pair,
        spec.change_point.index().map_or("inf".to_string(), |g| g.to_string()),
        spec.threshold,
        spec.mu,
        spec.h
    )?;
    writeln!(out, "n,cusum,decusum,sampled")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.n, fmt_f64(r.cusum), fmt_f64(r.decusum), r.sampled as u8)?;
    }
    Ok(())
}

/// Writes a network trial trace: one line per (step, sensor).
pub fn write_trace_csv<W: Write + ?Sized>(out: &mut W, trace: &[TraceRecord]) -> io::Result<()> {
    writeln!(out, "# {TRACE_SCHEMA}")?;
    writeln!(out, "n,sensor,value,sampled,transmitted")?;
    for t in trace {
        writeln!(out, "{},{},{},{},{}", t.n, t.sensor + 1, fmt_f64(t.value), t.sampled as u8, t.transmitted as u8)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sweeps

/// One (algorithm, threshold) point of a trade-off curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub point: GridPoint,
    pub far: FarEstimate,
    pub cadd: DelayEstimate,
    pub cadd_mode: CaddMode,
    pub wadd_proxy: Option<DelayEstimate>,
    pub lower_bound: Option<f64>,
    pub pdc: Vec<Estimate>,
}

impl SweepRow {
    /// Resume key: algorithm name and threshold text.
    pub fn key(&self) -> (String, String) {
        (self.algorithm.name().to_string(), fmt_f64(self.point.threshold))
    }
}

/// Writes sweep rows, one flushed line at a time.
pub struct SweepWriter<W: Write> {
    out: W,
    seed: u64,
    config_hash: String,
    sensors: usize,
}

impl<W: Write> SweepWriter<W> {
    pub fn header_comment(seed: u64, config_hash: &str) -> String {
        format!("# {SWEEP_SCHEMA} seed={seed} config_hash={config_hash}")
    }

    pub fn column_names(sensors: usize) -> String {
        let mut s = String::from(
            "algorithm,alpha,threshold,far,far_se,abs_log_far,censored_fraction,far_trials,far_max_steps,\
             cadd,cadd_se,cadd_mode,cadd_trials_used,wadd_proxy,wadd_proxy_se,lower_bound,trials,seed,config_hash",
        );
        for l in 1..=sensors {
            let _ = write!(s, ",pdc_{l}");
        }
        for l in 1..=sensors {
            let _ = write!(s, ",pdc_se_{l}");
        }
        s
    }

    /// Starts a new file with the schema comment and column header.
    pub fn create(mut out: W, seed: u64, config_hash: &str, sensors: usize) -> io::Result<Self> {
        writeln!(out, "{}", Self::header_comment(seed, config_hash))?;
        writeln!(out, "{}", Self::column_names(sensors))?;
        out.flush()?;
        Ok(Self { out, seed, config_hash: config_hash.to_string(), sensors })
    }

    /// Continues a file whose header has already been written.
    pub fn append(out: W, seed: u64, config_hash: &str, sensors: usize) -> Self {
        Self { out, seed, config_hash: config_hash.to_string(), sensors }
    }

    pub fn write_row(&mut self, row: &SweepRow) -> io::Result<()> {
        assert_eq!(row.pdc.len(), self.sensors);
        let (cadd_mode, burn_in) = match row.cadd_mode {
            CaddMode::ChangeAtOne => ("change-at-one".to_string(), None),
            CaddMode::Stationary { burn_in } => ("stationary".to_string(), Some(burn_in)),
        };
        let mode = burn_in.map_or(cadd_mode.clone(), |b| format!("{cadd_mode}:{b}"));
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.algorithm,
            opt_f64(row.point.alpha),
            fmt_f64(row.point.threshold),
            fmt_f64(row.far.far),
            fmt_f64(row.far.se),
            fmt_f64(row.far.far.ln().abs()),
            fmt_f64(row.far.censored_fraction),
            row.far.trials,
            row.far.max_steps,
            fmt_f64(row.cadd.delay.mean),
            fmt_f64(row.cadd.delay.se),
            mode,
            row.cadd.used,
            opt_f64(row.wadd_proxy.map(|w| w.delay.mean)),
            opt_f64(row.wadd_proxy.map(|w| w.delay.se)),
            opt_f64(row.lower_bound),
            row.cadd.trials,
            self.seed,
            self.config_hash,
        );
        for e in &row.pdc {
            let _ = write!(line, ",{}", fmt_f64(e.mean));
        }
        for e in &row.pdc {
            let _ = write!(line, ",{}", fmt_f64(e.se));
        }
        writeln!(self.out, "{line}")?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// `(algorithm, threshold)` keys of the rows already present in a sweep file
/// written for the same seed and configuration. `None` if the file is absent
/// or belongs to a different run.
pub fn completed_rows(path: &Path, seed: u64, config_hash: &str) -> io::Result<Option<HashSet<(String, String)>>> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut lines = io::BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(first)) if first == SweepWriter::<Vec<u8>>::header_comment(seed, config_hash) => {}
        _ => return Ok(None),
    }
    let _columns = lines.next();
    let mut done = HashSet::new();
    for line in lines {
        let line = line?;
        // A torn last line (interrupted write) has fewer fields and is dropped.
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() >= 19 && !fields[18].is_empty() {
            done.insert((fields[0].to_string(), fields[2].to_string()));
        }
    }
    Ok(Some(done))
}

fn mc(trials: u64, seeds: SeedTree, parallel: bool) -> McSettings {
    McSettings { trials, seeds, parallel }
}

/// Runs a threshold sweep over every configured algorithm and grid point,
/// handing each row to `sink` as soon as it is computed. Rows whose key is in
/// `skip` are not computed.
///
/// All algorithms at one grid point share random paths (grid point `i` uses
/// child seed `i`), which sharpens between-algorithm comparisons. Duty
/// cycles do not depend on the threshold and are computed once per algorithm.
pub fn run_sweep<F>(
    config: &ExperimentConfig,
    skip: &HashSet<(String, String)>,
    mut sink: F,
) -> Result<Vec<SweepRow>, ExperimentError>
where
    F: FnMut(&SweepRow) -> io::Result<()>,
{
    config.validate()?;
    let seed = config.require_seed()?;
    let root = SeedTree::new(seed);
    let t = config.trials;
    let points = config.grid.points();
    let pairs = config.network.sensor_pairs();
    let mut rows = Vec::new();
    for &alg in &config.network.algorithms {
        let pending: Vec<(usize, GridPoint)> = points
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, p)| !skip.contains(&(alg.name().to_string(), fmt_f64(p.threshold))))
            .collect();
        if pending.is_empty() {
            continue;
        }
        let pdc_policy = config.network.policy(alg, f64::INFINITY)?;
        let pdc = estimate_pdc(
            &pdc_policy,
            t.pdc_horizon,
            AlarmHandling::Ignore,
            &mc(t.pdc, root.child(u64::MAX), config.parallel),
        )?;
        for (i, point) in pending {
            let policy = config.network.policy(alg, point.threshold)?;
            let seeds = root.child(i as u64);
            let far = estimate_far(&policy, t.far_max_steps_at(&point), &mc(t.far, seeds, config.parallel))?;
            let mode = CaddMode::default_for(&policy);
            let cadd = estimate_cadd(&policy, mode, &mc(t.delay, seeds, config.parallel))?;
            let wadd_proxy = match estimate_wadd_proxy(&policy, &mc(t.delay, seeds, config.parallel)) {
                Ok(w) => Some(w),
                Err(MetricsError::Unsupported(_)) => None,
                Err(e) => return Err(e.into()),
            };
            let lower_bound = point.alpha.map(|a| theoretical_lower_bound(a, &pairs)).transpose()?;
            let row = SweepRow {
                algorithm: alg,
                point,
                far,
                cadd,
                cadd_mode: mode,
                wadd_proxy,
                lower_bound,
                pdc: pdc.clone(),
            };
            sink(&row)?;
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Runs a sweep into `path`. With `resume`, rows already present in a file
/// from the same seed and configuration are kept and only the missing rows
/// are appended; rows are deterministic, so the result is identical to an
/// uninterrupted run.
pub fn sweep_to_file(config: &ExperimentConfig, path: &Path, resume: bool) -> Result<Vec<SweepRow>, ExperimentError> {
    config.validate()?;
    let seed = config.require_seed()?;
    let hash = config.hash();
    let sensors = config.network.sensor_count();
    let done = if resume { completed_rows(path, seed, &hash)? } else { None };
    let mut writer = match &done {
        Some(_) => {
            truncate_torn_tail(path)?;
            SweepWriter::append(fs::OpenOptions::new().append(true).open(path)?, seed, &hash, sensors)
        }
        None => SweepWriter::create(fs::File::create(path)?, seed, &hash, sensors)?,
    };
    let skip = done.unwrap_or_default();
    run_sweep(config, &skip, |row| writer.write_row(row))
}

/// Drops a trailing partial line left by an interrupted write.
fn truncate_torn_tail(path: &Path) -> io::Result<()> {
    let bytes = fs::read(path)?;
    if bytes.last().is_some_and(|&b| b != b'\n') {
        let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        fs::write(path, &bytes[..keep])?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Ten-sensor trade-off reproduction

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Fig2Outcome {
    pub rows: Vec<SweepRow>,
    pub checks: Vec<Check>,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    pub plot_path: PathBuf,
}

impl Fig2Outcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn find<'a>(rows: &'a [SweepRow], alg: Algorithm, point: &GridPoint) -> Option<&'a SweepRow> {
    rows.iter().find(|r| r.algorithm == alg && r.point == *point)
}

/// Evaluates the trade-off claims on preset rows: DE-All duty cycles within
/// budget, the CADD ordering ALL <= DE-All <= fractional at every grid
/// point, and the DE-All gain at the smallest alpha.
pub fn fig2_checks(config: &ExperimentConfig, rows: &[SweepRow]) -> Vec<Check> {
    let mut checks = Vec::new();
    let points = config.grid.points();
    if let Some(de) = points.first().and_then(|p| find(rows, Algorithm::DeAll, p)) {
        for (l, e) in de.pdc.iter().enumerate() {
            let limit = FIG2_PDC_TARGET + 2.0 * e.se;
            checks.push(Check {
                name: format!("pdc_de_all_sensor_{}", l + 1),
                passed: e.mean <= limit,
                detail: format!("PDC = {:.5} (se {:.5}), limit {FIG2_PDC_TARGET} + 2 se = {:.5}", e.mean, e.se, limit),
            });
        }
    }
    for p in &points {
        let (Some(all), Some(de), Some(fr)) =
            (find(rows, Algorithm::All, p), find(rows, Algorithm::DeAll, p), find(rows, Algorithm::FractionalAll, p))
        else {
            continue;
        };
        let label = p.alpha.map_or(format!("A={}", p.threshold), |a| format!("alpha={a:e}"));
        for (name, lo, hi) in [("all_le_de_all", all, de), ("de_all_le_fractional", de, fr)] {
            let tol = lo.cadd.delay.combined_se(&hi.cadd.delay);
            checks.push(Check {
                name: format!("cadd_{name}@{label}"),
                passed: lo.cadd.delay.mean <= hi.cadd.delay.mean + tol,
                detail: format!(
                    "{} {:.3} vs {} {:.3} (combined se {:.3})",
                    lo.algorithm, lo.cadd.delay.mean, hi.algorithm, hi.cadd.delay.mean, tol
                ),
            });
        }
    }
    let smallest = points.iter().filter(|p| p.alpha.is_some()).min_by(|a, b| a.alpha.partial_cmp(&b.alpha).unwrap());
    if let Some(p) = smallest {
        if let (Some(de), Some(fr)) = (find(rows, Algorithm::DeAll, p), find(rows, Algorithm::FractionalAll, p)) {
            let ratio = fr.cadd.delay.mean / de.cadd.delay.mean;
            checks.push(Check {
                name: format!("fractional_over_de_all_gain@alpha={:e}", p.alpha.unwrap()),
                passed: ratio >= FIG2_GAIN_FLOOR,
                detail: format!(
                    "CADD ratio {ratio:.4}, floor {FIG2_GAIN_FLOOR} (desk-scale proxy for a significant gain)"
                ),
            });
        }
    }
    checks
}

pub fn render_summary(config: &ExperimentConfig, rows: &[SweepRow], checks: &[Check]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "ten-sensor trade-off reproduction");
    let _ = writeln!(s, "seed={} config_hash={}", config.seed.unwrap_or_default(), config.hash());
    let n = &config.network;
    let _ = writeln!(
        s,
        "L={} pair={} mu={} h={} fractional skip_prob={}",
        n.sensor_count(),
        n.pair,
        n.mu,
        n.h,
        n.skip_prob
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<16} {:>10} {:>9} {:>12} {:>9} {:>16} {:>10}",
        "algorithm", "alpha", "A", "cadd", "se", "far", "censored"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<16} {:>10} {:>9.4} {:>12.4} {:>9.4} {:>16} {:>10.3}",
            r.algorithm.name(),
            r.point.alpha.map_or(String::new(), |a| format!("{a:e}")),
            r.point.threshold,
            r.cadd.delay.mean,
            r.cadd.delay.se,
            format!("{}{:.3e}", if r.far.is_upper_bound() { "<=" } else { "" }, r.far.far),
            r.far.censored_fraction
        );
    }
    let _ = writeln!(s);
    for c in checks {
        let _ = writeln!(s, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(s);
    let _ = writeln!(s, "{} of {} checks passed", checks.len() - failed, checks.len());
    s
}

/// Gnuplot script for CADD against |log FAR| and |log alpha|.
pub fn render_plot_script(csv_name: &str) -> String {
    format!(
        r#"# CADD vs |log alpha| (column 2 is alpha) and vs estimated |log FAR| (column 6)
set datafile separator ","
set key top left
set xlabel "|log alpha|"
set ylabel "CADD"
plot for [alg in "all de-all fractional-all"] \
    "< grep '^".alg.",' {csv_name}" using (abs(log($2))):10:11 with yerrorlines title alg
pause -1
"#
    )
}

/// Runs the ten-sensor preset end to end and writes `fig2.csv`,
/// `fig2_summary.txt` and `fig2.gp` into `out_dir`.
pub fn reproduce_fig2(config: &ExperimentConfig, out_dir: &Path) -> Result<Fig2Outcome, ExperimentError> {
    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("fig2.csv");
    let rows = sweep_to_file(config, &csv_path, false)?;
    let checks = fig2_checks(config, &rows);
    let summary_path = out_dir.join("fig2_summary.txt");
    fs::write(&summary_path, render_summary(config, &rows, &checks))?;
    let plot_path = out_dir.join("fig2.gp");
    fs::write(&plot_path, render_plot_script("fig2.csv"))?;
    Ok(Fig2Outcome { rows, checks, csv_path, summary_path, plot_path })
}

// ---------------------------------------------------------------------------
// Single-estimator outputs

/// One FAR estimate at one (algorithm, threshold).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarRow {
    pub algorithm: Algorithm,
    pub point: GridPoint,
    pub far: FarEstimate,
}

/// One delay estimate; `measure` is `cadd` or `wadd_proxy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayRow {
    pub algorithm: Algorithm,
    pub point: GridPoint,
    pub measure: &'static str,
    pub mode: Option<CaddMode>,
    pub delay: DelayEstimate,
}

fn mode_text(mode: Option<CaddMode>) -> String {
    match mode {
        None => String::new(),
        Some(CaddMode::ChangeAtOne) => "change-at-one".into(),
        Some(CaddMode::Stationary { burn_in }) => format!("stationary:{burn_in}"),
    }
}

pub fn write_far_csv<W: Write + ?Sized>(out: &mut W, rows: &[FarRow], seed: u64, hash: &str) -> io::Result<()> {
    writeln!(out, "# decusum-far-v1 seed={seed} config_hash={hash}")?;
    writeln!(
        out,
        "algorithm,alpha,threshold,far,far_se,mean_run_length,mean_run_length_se,censored_fraction,trials,max_steps,seed,config_hash"
    )?;
    for r in rows {
        let f = &r.far;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{seed},{hash}",
            r.algorithm,
            opt_f64(r.point.alpha),
            fmt_f64(r.point.threshold),
            fmt_f64(f.far),
            fmt_f64(f.se),
            fmt_f64(f.mean_run_length.mean),
            fmt_f64(f.mean_run_length.se),
            fmt_f64(f.censored_fraction),
            f.trials,
            f.max_steps
        )?;
    }
    Ok(())
}

pub fn write_delay_csv<W: Write + ?Sized>(out: &mut W, rows: &[DelayRow], seed: u64, hash: &str) -> io::Result<()> {
    writeln!(out, "# decusum-delay-v1 seed={seed} config_hash={hash}")?;
    writeln!(
        out,
        "algorithm,alpha,threshold,measure,mode,delay,delay_se,used,false_alarms,censored,trials,seed,config_hash"
    )?;
    for r in rows {
        let d = &r.delay;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{seed},{hash}",
            r.algorithm,
            opt_f64(r.point.alpha),
            fmt_f64(r.point.threshold),
            r.measure,
            mode_text(r.mode),
            fmt_f64(d.delay.mean),
            fmt_f64(d.delay.se),
            d.used,
            d.false_alarms,
            d.censored,
            d.trials
        )?;
    }
    Ok(())
}

pub fn write_pdc_csv<W: Write + ?Sized>(
    out: &mut W,
    rows: &[(Algorithm, Vec<Estimate>)],
    horizon: u64,
    trials: u64,
    seed: u64,
    hash: &str,
) -> io::Result<()> {
    writeln!(out, "# decusum-pdc-v1 seed={seed} config_hash={hash}")?;
    writeln!(out, "algorithm,sensor,pdc,pdc_se,horizon,trials,seed,config_hash")?;
    for (alg, pdc) in rows {
        for (l, e) in pdc.iter().enumerate() {
            writeln!(out, "{},{},{},{},{horizon},{trials},{seed},{hash}", alg, l + 1, fmt_f64(e.mean), fmt_f64(e.se))?;
        }
    }
    Ok(())
}

/// Oracle and simulated duty cycles for one `(mu, h)`, tagged so plots can
/// overlay formula and simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    pub pair: DistributionPair,
    pub mu: f64,
    pub h: f64,
    pub oracle: LadderEstimate,
    pub simulated: Option<Estimate>,
}

impl OracleComparison {
    /// Oracle minus simulation, in units of combined standard error.
    pub fn z(&self) -> Option<f64> {
        self.simulated.map(|sim| (self.oracle.pdc_formula_value - sim.mean) / self.oracle.pdc_se.hypot(sim.se))
    }
}

/// Simulation settings for [`compare_oracle`]: trial count and horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationBudget {
    pub trials: u64,
    pub horizon: u64,
}

/// Ladder-formula duty cycle, optionally next to the simulated
/// single-sensor DE-CuSum on independent randomness.
pub fn compare_oracle(
    pair: &DistributionPair,
    mu: f64,
    h: f64,
    oracle_trials: u64,
    simulation: Option<SimulationBudget>,
    seeds: SeedTree,
    parallel: bool,
) -> Result<OracleComparison, ExperimentError> {
    let oracle = metrics::ladder_oracle(pair, mu, h, &mc(oracle_trials, seeds, parallel))?;
    let simulated = match simulation {
        Some(b) => {
            let policy = NetworkPolicy::homogeneous(Algorithm::DeAll, 1, *pair, mu, h, f64::INFINITY)?;
            Some(estimate_pdc(&policy, b.horizon, AlarmHandling::Ignore, &mc(b.trials, seeds, parallel))?[0])
        }
        None => None,
    };
    Ok(OracleComparison { pair: *pair, mu, h, oracle, simulated })
}

pub fn write_oracle_csv<W: Write + ?Sized>(out: &mut W, rows: &[OracleComparison], seed: u64) -> io::Result<()> {
    writeln!(out, "# {ORACLE_SCHEMA} seed={seed}")?;
    writeln!(out, "record,mu,h,pdc,pdc_se,mean_tau_minus,mean_sleep,bound_h_inf,trials")?;
    for r in rows {
        let bound = metrics::pdc_bound(&r.pair, r.mu);
        writeln!(
            out,
            "oracle,{},{},{},{},{},{},{},{}",
            fmt_f64(r.mu),
            fmt_f64(r.h),
            fmt_f64(r.oracle.pdc_formula_value),
            fmt_f64(r.oracle.pdc_se),
            fmt_f64(r.oracle.mean_tau_minus.mean),
            fmt_f64(r.oracle.mean_sleep.mean),
            fmt_f64(bound),
            r.oracle.trials
        )?;
        if let Some(sim) = r.simulated {
            writeln!(
                out,
                "simulation,{},{},{},{},,,{},",
                fmt_f64(r.mu),
                fmt_f64(r.h),
                fmt_f64(sim.mean),
                fmt_f64(sim.se),
                fmt_f64(bound)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_trajectory_dominance_and_skip_bound() {
        let rows = run_trajectory(&TrajectorySpec::default()).unwrap();
        assert!(rows.last().unwrap().decusum > 7.0);
        assert!(rows.iter().all(|r| r.cusum >= r.decusum));
        let (mut run, mut longest) = (0, 0);
        for r in &rows {
            run = if r.sampled { 0 } else { run + 1 };
            longest = longest.max(run);
        }
        assert!(longest <= 11);
    }

    #[test]
    fn h_zero_trajectory_columns_coincide() {
        let spec = TrajectorySpec { h: 0.0, ..TrajectorySpec::default() };
        for r in run_trajectory(&spec).unwrap() {
            assert_eq!(r.cusum.to_bits(), r.decusum.to_bits());
            assert!(r.sampled);
        }
    }

    #[test]
    fn trajectory_csv_shape() {
        let spec = TrajectorySpec::default();
        let rows = run_trajectory(&spec).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &spec, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# decusum-trajectory-v1"));
        assert_eq!(lines[1], "n,cusum,decusum,sampled");
        assert_eq!(lines.len(), rows.len() + 2);
        // Full-precision floats parse back exactly.
        let f: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(f[1].parse::<f64>().unwrap(), rows[0].cusum);
    }

    #[test]
    fn fmt_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456789.123456789, -0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(fmt_f64(f64::NAN), "");
    }

    fn tiny_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::fig2_preset();
        c.network.sensors = 2;
        c.grid.alphas = Some(vec![0.05, 0.01]);
        c.trials.delay = 50;
        c.trials.far = 20;
        c.trials.far_max_steps = Some(2_000);
        c.trials.pdc = 4;
        c.trials.pdc_horizon = 500;
        c
    }

    #[test]
    fn sweep_rows_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let c = tiny_config();
        let rows = sweep_to_file(&c, &path, false).unwrap();
        assert_eq!(rows.len(), 6);
        let full = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = full.lines().collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(lines[1], SweepWriter::<Vec<u8>>::column_names(2));
        assert!(lines[2..].iter().all(|l| l.contains(&c.hash())));

        // Simulate an interruption after three rows and a torn fourth line.
        let mut partial = lines[..5].join("\n");
        partial.push('\n');
        partial.push_str(&lines[5][..10]);
        fs::write(&path, partial).unwrap();
        let resumed = sweep_to_file(&c, &path, true).unwrap();
        assert_eq!(resumed.len(), 3);
        assert_eq!(fs::read_to_string(&path).unwrap(), full);
    }

    #[test]
    fn resume_ignores_files_from_other_runs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        fs::write(&path, "# something else\n").unwrap();
        assert_eq!(completed_rows(&path, 1, "abc").unwrap(), None);
        assert_eq!(completed_rows(&dir.path().join("missing.csv"), 1, "abc").unwrap(), None);
    }

    #[test]
    fn sweep_requires_seed_and_grid() {
        let mut c = tiny_config();
        c.seed = None;
        assert!(matches!(run_sweep(&c, &HashSet::new(), |_| Ok(())), Err(ExperimentError::Config(_))));
        let mut c = tiny_config();
        c.grid.thresholds = Some(vec![1.0]);
        assert!(run_sweep(&c, &HashSet::new(), |_| Ok(())).is_err());
    }

    #[test]
    fn single_alpha_single_algorithm_gives_one_row_with_lower_bound() {
        let mut c = tiny_config();
        c.network.algorithms = vec![Algorithm::All];
        c.grid.alphas = Some(vec![1e-3]);
        let rows = run_sweep(&c, &HashSet::new(), |_| Ok(())).unwrap();
        assert_eq!(rows.len(), 1);
        let lb = rows[0].lower_bound.unwrap();
        assert!((lb - 1e3f64.ln() / 0.16).abs() < 1e-12);
    }
}
