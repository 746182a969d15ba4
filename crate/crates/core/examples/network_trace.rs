//! A heterogeneous three-sensor DE-All network with custom threshold shares,
//! stepped by hand and then exported as a trace.

use decusum::experiment::write_trace_csv;
use decusum::fusion::{run_network_trial_with, NetworkState, StartState, TrialOptions};
use decusum::{Algorithm, ChangePoint, DistributionPair, NetworkPolicy, SeedTree};

fn main() {
    let sensors = [
        (DistributionPair::gaussian(0.0, 0.4, 1.0).unwrap(), 0.2, 5.0),
        (DistributionPair::gaussian(0.0, 1.0, 1.0).unwrap(), 0.5, 5.0),
        (DistributionPair::gaussian(1.0, 0.0, 2.0).unwrap(), 0.1, f64::INFINITY),
    ];
    let policy =
        NetworkPolicy::new(Algorithm::DeAll, &sensors, 6.0).unwrap().with_shares(&[0.2, 0.5, 0.3], false).unwrap();
    eprintln!("{}", policy.summary());

    // Stepping manually: a pre-change stretch of zeros, then clear evidence.
    let mut state = NetworkState::new(&policy, StartState::Fresh);
    for n in 1..=40 {
        let x = if n <= 20 { [0.0, 0.0, 1.0] } else { [0.4, 1.0, 0.0] };
        let out = state.step(&x, &[false; 3]);
        if out.stopped {
            eprintln!("hand-fed network stops at n = {n}");
            break;
        }
    }

    let opts = TrialOptions { trace: true, ..Default::default() };
    let record = run_network_trial_with(&policy, ChangePoint::at(100), &SeedTree::new(5), 0, 10_000, opts);
    eprintln!(
        "seeded trial: stop {:?}, samples per sensor {:?}, ones sent {:?}",
        record.stop, record.samples_per_sensor, record.ones_transmitted_per_sensor
    );
    write_trace_csv(&mut std::io::stdout().lock(), &record.trace.unwrap()).unwrap();
}
