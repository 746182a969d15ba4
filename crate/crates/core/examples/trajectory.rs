//! CuSum and DE-CuSum driven by the same observations.
//!
//! ```text
//! cargo run --example trajectory -- 0.5 > traj.csv
//! ```
//! The optional argument is the truncation depth `h`.

use decusum::experiment::{run_trajectory, write_trajectory_csv, TrajectorySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.5);
    let spec = TrajectorySpec { h, ..TrajectorySpec::default() };
    let rows = run_trajectory(&spec)?;

    let skipped = rows.iter().filter(|r| !r.sampled).count();
    let gap = rows.iter().map(|r| r.cusum - r.decusum).fold(0.0, f64::max);
    eprintln!(
        "stopped at n = {} (change at 40); skipped {skipped} of {} observations; largest C - W = {gap:.3}",
        rows.len(),
        rows.len()
    );
    write_trajectory_csv(&mut std::io::stdout().lock(), &spec, &rows)?;
    Ok(())
}
