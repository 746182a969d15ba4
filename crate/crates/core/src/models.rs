//! Observation models: pre-/post-change distribution pairs, their
//! log-likelihood ratios and KL divergences, and seeded observation streams.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{Lane, Purpose, SeedTree};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("standard deviation must be finite and > 0, got {0}")]
    NonPositiveSigma(f64),
    #[error("pre- and post-change parameters coincide ({0}); the change is undetectable")]
    Undetectable(f64),
    #[error("distribution parameter is not finite: {0}")]
    NonFinite(f64),
}

/// Distribution family of a [`DistributionPair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `N(theta0, sigma^2)` before the change, `N(theta1, sigma^2)` after.
    #[default]
    GaussianMeanShift,
}

/// Pre-change density `f0` and post-change density `f1` of one sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair", into = "RawPair")]
pub struct DistributionPair {
    family: Family,
    theta0: f64,
    theta1: f64,
    sigma: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPair {
    #[serde(default)]
    family: Family,
    theta0: f64,
    theta1: f64,
    sigma: f64,
}

impl TryFrom<RawPair> for DistributionPair {
    type Error = ModelError;
    fn try_from(r: RawPair) -> Result<Self, Self::Error> {
        match r.family {
            Family::GaussianMeanShift => DistributionPair::gaussian(r.theta0, r.theta1, r.sigma),
        }
    }
}

impl From<DistributionPair> for RawPair {
    fn from(p: DistributionPair) -> Self {
        RawPair { family: p.family, theta0: p.theta0, theta1: p.theta1, sigma: p.sigma }
    }
}

impl DistributionPair {
    /// Gaussian mean shift `N(theta0, sigma^2) -> N(theta1, sigma^2)`.
    pub fn gaussian(theta0: f64, theta1: f64, sigma: f64) -> Result<Self, ModelError> {
        for v in [theta0, theta1] {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(v));
            }
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(ModelError::NonPositiveSigma(sigma));
        }
        if theta0 == theta1 {
            return Err(ModelError::Undetectable(theta0));
        }
        Ok(Self { family: Family::GaussianMeanShift, theta0, theta1, sigma })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `log f1(x)/f0(x)`, in closed form.
    #[inline]
    pub fn log_likelihood_ratio(&self, x: f64) -> f64 {
        match self.family {
            Family::GaussianMeanShift => {
                let (a, b) = (self.theta0, self.theta1);
                ((b - a) * x - 0.5 * (b * b - a * a)) / (self.sigma * self.sigma)
            }
        }
    }

    /// `D(f1 || f0)`, the post-change drift of the log-likelihood ratio.
    pub fn kl_f1_f0(&self) -> f64 {
        match self.family {
            Family::GaussianMeanShift => {
                let d = self.theta1 - self.theta0;
                d * d / (2.0 * self.sigma * self.sigma)
            }
        }
    }

    /// `D(f0 || f1)`, minus the pre-change drift of the log-likelihood ratio.
    pub fn kl_f0_f1(&self) -> f64 {
        match self.family {
            Family::GaussianMeanShift => self.kl_f1_f0(),
        }
    }

    /// Draws from `f0` (`post_change == false`) or `f1`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, post_change: bool) -> f64 {
        match self.family {
            Family::GaussianMeanShift => {
                let z: f64 = rng.sample(StandardNormal);
                let mean = if post_change { self.theta1 } else { self.theta0 };
                mean + self.sigma * z
            }
        }
    }
}

impl fmt::Display for DistributionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::GaussianMeanShift => {
                write!(f, "N({},{}^2)->N({},{}^2)", self.theta0, self.sigma, self.theta1, self.sigma)
            }
        }
    }
}

/// The change point `gamma`: observations with index `n < gamma` follow `f0`,
/// those with `n >= gamma` follow `f1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChangePoint {
    At(u64),
    Never,
}

impl ChangePoint {
    /// `gamma = n`, with `n >= 1`.
    pub fn at(n: u64) -> Self {
        assert!(n >= 1, "change point index starts at 1");
        ChangePoint::At(n)
    }

    #[inline]
    pub fn is_post_change(&self, n: u64) -> bool {
        match *self {
            ChangePoint::At(g) => n >= g,
            ChangePoint::Never => false,
        }
    }

    pub fn index(&self) -> Option<u64> {
        match *self {
            ChangePoint::At(g) => Some(g),
            ChangePoint::Never => None,
        }
    }
}

/// A reproducible sequence `X_1, X_2, ...` for one sensor.
///
/// Draws are strictly sequential; identical `(pair, change point, rng)` give
/// bit-identical paths.
#[derive(Debug, Clone)]
pub struct ObservationStream {
    pair: DistributionPair,
    change_point: ChangePoint,
    rng: ChaCha8Rng,
    next_index: u64,
}

impl ObservationStream {
    pub fn new(pair: DistributionPair, change_point: ChangePoint, rng: ChaCha8Rng) -> Self {
        Self { pair, change_point, rng, next_index: 1 }
    }

    /// The stream of sensor `sensor` in trial `trial`.
    pub fn for_trial(
        pair: DistributionPair,
        change_point: ChangePoint,
        seeds: &SeedTree,
        purpose: Purpose,
        trial: u64,
        sensor: usize,
    ) -> Self {
        Self::new(pair, change_point, seeds.substream(purpose, trial, Lane::Observations, sensor))
    }

    pub fn pair(&self) -> &DistributionPair {
        &self.pair
    }

    pub fn change_point(&self) -> ChangePoint {
        self.change_point
    }

    /// Index of the observation the next call to [`Self::draw_next`] returns.
    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    /// Returns `X_n` for `n = next_index()` and advances.
    #[inline]
    pub fn draw_next(&mut self) -> f64 {
        let n = self.next_index;
        self.next_index += 1;
        self.pair.sample(&mut self.rng, self.change_point.is_post_change(n))
    }

    /// Returns `X_n`, discarding any intermediate observations.
    ///
    /// Panics if `n` has already been drawn.
    pub fn draw(&mut self, n: u64) -> f64 {
        assert!(n >= self.next_index, "observation {n} already consumed (next is {})", self.next_index);
        while self.next_index < n {
            self.draw_next();
        }
        self.draw_next()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> DistributionPair {
        DistributionPair::gaussian(0.0, 0.4, 1.0).unwrap()
    }

    /// Numerical log-pdf ratio, evaluated from the densities themselves.
    fn llr_from_densities(p: &DistributionPair, x: f64) -> f64 {
        let pdf = |m: f64| {
            let z = (x - m) / p.sigma();
            (-0.5 * z * z).exp() / (p.sigma() * (2.0 * std::f64::consts::PI).sqrt())
        };
        (pdf(p.theta1()) / pdf(p.theta0())).ln()
    }

    #[test]
    fn llr_examples() {
        let p = pair();
        assert!((p.log_likelihood_ratio(0.0) + 0.08).abs() < 1e-15);
        assert!(p.log_likelihood_ratio(0.2).abs() < 1e-15);
        for x in [-3.0, -0.5, 0.0, 0.2, 1.7, 4.0] {
            assert!((p.log_likelihood_ratio(x) - llr_from_densities(&p, x)).abs() < 1e-12);
        }
        let q = DistributionPair::gaussian(1.0, -2.0, 0.5).unwrap();
        for x in [-3.0, 0.1, 2.0] {
            assert!((q.log_likelihood_ratio(x) - llr_from_densities(&q, x)).abs() < 1e-10);
        }
    }

    #[test]
    fn llr_stays_finite_where_densities_underflow() {
        let p = pair();
        let x = 60.0;
        assert_eq!(llr_from_densities(&p, x).is_finite(), false);
        assert!((p.log_likelihood_ratio(x) - (0.4 * 60.0 - 0.08)).abs() < 1e-12);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(DistributionPair::gaussian(0.0, 0.0, 1.0), Err(ModelError::Undetectable(0.0)));
        assert!(matches!(DistributionPair::gaussian(0.0, 1.0, 0.0), Err(ModelError::NonPositiveSigma(_))));
        assert!(matches!(DistributionPair::gaussian(0.0, 1.0, -1.0), Err(ModelError::NonPositiveSigma(_))));
        assert!(matches!(DistributionPair::gaussian(f64::NAN, 1.0, 1.0), Err(ModelError::NonFinite(_))));
    }

    #[test]
    fn kl_closed_forms() {
        assert!((pair().kl_f1_f0() - 0.08).abs() < 1e-15);
        assert!((pair().kl_f0_f1() - 0.08).abs() < 1e-15);
        let p = DistributionPair::gaussian(0.0, 0.75, 1.0).unwrap();
        assert_eq!(p.kl_f1_f0(), 0.28125);
        assert_eq!(p.kl_f0_f1(), p.kl_f1_f0());
        let q = DistributionPair::gaussian(2.0, 1.0, 2.0).unwrap();
        assert!((q.kl_f1_f0() - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn serde_rejects_degenerate_pairs() {
        let ok: DistributionPair = toml::from_str("theta0 = 0.0\ntheta1 = 0.4\nsigma = 1.0").unwrap();
        assert_eq!(ok, pair());
        assert!(toml::from_str::<DistributionPair>("theta0 = 0.0\ntheta1 = 0.0\nsigma = 1.0").is_err());
    }

    #[test]
    fn stream_is_deterministic_and_switches_at_gamma() {
        let seeds = SeedTree::new(11);
        let mk = |g| ObservationStream::for_trial(pair(), g, &seeds, Purpose::Path, 0, 0);
        let mut a = mk(ChangePoint::Never);
        let mut b = mk(ChangePoint::Never);
        assert_eq!(a.draw(1).to_bits(), b.draw(1).to_bits());

        // Same underlying normals: post-change observations are shifted by theta1 - theta0.
        let mut pre = mk(ChangePoint::Never);
        let mut post = mk(ChangePoint::at(3));
        for n in 1..=6u64 {
            let d = post.draw_next() - pre.draw_next();
            if n < 3 {
                assert_eq!(d, 0.0);
            } else {
                assert!((d - 0.4).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_access_skips_forward() {
        let seeds = SeedTree::new(5);
        let mut a = ObservationStream::for_trial(pair(), ChangePoint::Never, &seeds, Purpose::Path, 0, 0);
        let mut b = a.clone();
        let seq: Vec<f64> = (0..5).map(|_| a.draw_next()).collect();
        assert_eq!(b.draw(5), seq[4]);
        assert_eq!(b.next_index(), 6);
    }
}
