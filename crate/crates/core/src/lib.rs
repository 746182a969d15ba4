//! Quickest change detection in sensor networks with data-efficient sensors.
//!
//! The crate provides step-wise CuSum and DE-CuSum detectors, the network
//! stopping rules built on them (Centralized CuSum, ALL, DE-All and two
//! sampling baselines), Monte Carlo estimators for false alarm rate,
//! detection delay and pre-change duty cycle, and experiment drivers that
//! emit CSV trade-off curves.

pub mod config;
pub mod detectors;
pub mod experiment;
pub mod fusion;
pub mod metrics;
pub mod models;
pub mod rng;

pub use detectors::{
    cusum_step, decusum_step, run_until_stop, CuSumState, DeCuSumParams, DeCuSumState, Detector, DetectorError,
    RunOutcome, StopTime, TrajectoryPoint,
};
pub use fusion::{run_network_trial, Algorithm, NetworkPolicy, PolicyError, SensorConfig, TrialRecord};
pub use metrics::{
    estimate_cadd, estimate_far, estimate_pdc, estimate_wadd_proxy, ladder_oracle, theoretical_lower_bound, CaddMode,
    Estimate, McSettings, MetricsReport,
};
pub use models::{ChangePoint, DistributionPair, ObservationStream};
pub use rng::SeedTree;
