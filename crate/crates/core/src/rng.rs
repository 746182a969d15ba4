//! Counter-based substream derivation.
//!
//! Every random quantity in a simulation comes from a ChaCha8 stream whose
//! key is derived from `(master seed, purpose)` and whose 64-bit stream id
//! packs `(trial, lane, sensor)`:
//!
//! ```text
//! stream = trial << 24 | lane << 20 | sensor
//! ```
//!
//! so trial `t` always sees the same numbers no matter which thread runs it
//! or in what order trials are scheduled. Sensors are limited to 2^20 and
//! trials to 2^40.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Maximum number of sensors addressable by a substream id.
pub const MAX_SENSORS: usize = 1 << 20;
/// Maximum number of trials addressable by a substream id.
pub const MAX_TRIALS: u64 = 1 << 40;

/// Independent uses of randomness inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Lane {
    /// The observation path `X_{n,l}`.
    Observations = 0,
    /// Bernoulli skip decisions of the fractional-sampling baseline.
    SkipCoins = 1,
}

/// Separates estimators run from the same master seed so that, e.g., the FAR
/// runs and the delay runs of one sweep row are not built from the same paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Path,
    FalseAlarm,
    Delay,
    WorstCase,
    DutyCycle,
    Ladder,
    Custom(u64),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Path => 0,
            Purpose::FalseAlarm => 1,
            Purpose::Delay => 2,
            Purpose::WorstCase => 3,
            Purpose::DutyCycle => 4,
            Purpose::Ladder => 5,
            Purpose::Custom(t) => 0x100 + t,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Root of all randomness for one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTree {
    master: u64,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// A child tree, e.g. one per sweep row.
    pub fn child(&self, index: u64) -> SeedTree {
        SeedTree::new(splitmix64(self.master ^ splitmix64(index.wrapping_add(0x5EED))))
    }

    /// The stream for `(purpose, trial, lane, sensor)`.
    pub fn substream(&self, purpose: Purpose, trial: u64, lane: Lane, sensor: usize) -> ChaCha8Rng {
        assert!(trial < MAX_TRIALS, "trial index {trial} exceeds substream capacity");
        assert!(sensor < MAX_SENSORS, "sensor index {sensor} exceeds substream capacity");
        let key_seed = splitmix64(self.master) ^ splitmix64(purpose.tag().wrapping_mul(0xA24B_AED4_963E_E407));
        let mut rng = ChaCha8Rng::seed_from_u64(key_seed);
        rng.set_stream((trial << 24) | ((lane as u64) << 20) | sensor as u64);
        rng
    }
}
