//! Data-efficient sensing against two naive ways of sampling less: random
//! skips and a fixed stride. Each rule runs at the same threshold.

use decusum::metrics::{estimate_cadd, estimate_pdc, AlarmHandling, CaddMode, McSettings};
use decusum::{Algorithm, DistributionPair, NetworkPolicy};

fn main() {
    let pair = DistributionPair::gaussian(0.0, 0.4, 1.0).unwrap();
    let a = 1e4f64.ln();
    let base = |alg| NetworkPolicy::homogeneous(alg, 10, pair, 0.2, 20.0, a).unwrap();
    let policies = [
        base(Algorithm::All),
        base(Algorithm::DeAll),
        base(Algorithm::FractionalAll).with_skip_prob(0.35).unwrap(),
        base(Algorithm::EveryNth).with_stride(2).unwrap(),
        base(Algorithm::CentralizedCuSum),
    ];
    let mc = McSettings::new(2000, 3);
    println!("{:<40} {:>8} {:>8}", "policy", "PDC", "CADD");
    for p in &policies {
        let pdc = estimate_pdc(p, 20_000, AlarmHandling::Ignore, &McSettings::new(20, 3)).unwrap()[0].mean;
        let cadd = estimate_cadd(p, CaddMode::default_for(p), &mc).unwrap().delay.mean;
        println!("{:<40} {pdc:>8.3} {cadd:>8.2}", p.summary());
    }
}
