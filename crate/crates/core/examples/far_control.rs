//! False alarm rate of centralized CuSum at `A = |log alpha|`.

use decusum::metrics::{estimate_far, far_budget, McSettings};
use decusum::{Algorithm, DistributionPair, NetworkPolicy};

fn main() {
    let pair = DistributionPair::gaussian(0.0, 0.4, 1.0).unwrap();
    println!("{:>8} {:>8} {:>12} {:>10} {:>10}", "alpha", "A", "FAR", "se", "censored");
    for alpha in [1e-1f64, 1e-2, 1e-3] {
        let a = alpha.ln().abs();
        let policy = NetworkPolicy::homogeneous(Algorithm::CentralizedCuSum, 10, pair, 0.2, 20.0, a).unwrap();
        let far = estimate_far(&policy, far_budget(alpha), &McSettings::new(2000, 11)).unwrap();
        println!("{alpha:>8.0e} {a:>8.3} {:>12.3e} {:>10.1e} {:>10.3}", far.far, far.se, far.censored_fraction);
    }
}
