//! Duty cycle of one DE-CuSum sensor: ladder formula against direct
//! simulation, and the untruncated bound `mu / (mu + D(f0||f1))`.

use decusum::experiment::{compare_oracle, SimulationBudget};
use decusum::metrics::pdc_bound;
use decusum::{DistributionPair, SeedTree};

fn main() {
    let pair = DistributionPair::gaussian(0.0, 0.4, 1.0).unwrap();
    let budget = Some(SimulationBudget { trials: 200, horizon: 50_000 });
    println!("{:>5} {:>5} {:>9} {:>9} {:>9} {:>7}", "mu", "h", "oracle", "simulated", "bound", "z");
    for mu in [0.05, 0.2, 1.0] {
        for h in [0.5, 5.0, 20.0] {
            let r = compare_oracle(&pair, mu, h, 200_000, budget, SeedTree::new(7), true).unwrap();
            println!(
                "{mu:>5} {h:>5} {:>9.5} {:>9.5} {:>9.5} {:>7.2}",
                r.oracle.pdc_formula_value,
                r.simulated.unwrap().mean,
                pdc_bound(&pair, mu),
                r.z().unwrap()
            );
        }
    }
}
