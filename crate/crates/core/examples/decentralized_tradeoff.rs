//! ALL, DE-All and fractional sampling on ten sensors at a reduced trial
//! budget. `decusum reproduce-fig2` runs the full-size version.

use decusum::config::ExperimentConfig;
use decusum::experiment::{fig2_checks, render_summary, run_sweep};

fn main() {
    let mut config = ExperimentConfig::fig2_preset();
    config.grid.alphas = Some(vec![1e-3, 1e-6]);
    config.trials.delay = 2000;
    config.trials.pdc = 50;
    config.trials.pdc_horizon = 20_000;

    let rows = run_sweep(&config, &Default::default(), |row| {
        eprintln!("{:<15} A={:.2} CADD={:.2}", row.algorithm, row.point.threshold, row.cadd.delay.mean);
        Ok(())
    })
    .unwrap();
    print!("{}", render_summary(&config, &rows, &fig2_checks(&config, &rows)));
}
