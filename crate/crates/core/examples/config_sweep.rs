//! A sweep described in TOML, written row by row to a CSV and resumed.

use decusum::config::ExperimentConfig;
use decusum::experiment::sweep_to_file;

const CONFIG: &str = r#"
seed = 42

[network]
algorithms = ["centralized-cusum", "de-all"]
sensors = 4
mu = 0.2
h = 5.0
pair = { theta0 = 0.0, theta1 = 0.5, sigma = 1.0 }

[grid]
thresholds = [2.0, 4.0, 6.0]

[trials]
delay = 1000
far = 200
pdc = 20
pdc_horizon = 10000
far_max_steps = 50000
"#;

fn main() {
    let config = ExperimentConfig::from_toml(CONFIG).unwrap();
    let path = std::env::temp_dir().join("decusum_config_sweep.csv");
    let rows = sweep_to_file(&config, &path, false).unwrap();
    eprintln!("wrote {} rows to {}", rows.len(), path.display());

    // A second run with resume finds every row present and computes nothing.
    let again = sweep_to_file(&config, &path, true).unwrap();
    eprintln!("resumed run computed {} new rows", again.len());
    print!("{}", std::fs::read_to_string(&path).unwrap());
}
