//! Distribution specs for the error increments and context weights, and the
//! seeded random streams that drive every experiment.
//!
//! All randomness comes from ChaCha8 ([`rand_chacha::ChaCha8Rng`]). A trace
//! seed selects the key; each (user, process) pair gets its own ChaCha
//! stream, so the draws a user sees do not depend on what other users or
//! other processes consumed. Gaussian draws use the ziggurat sampler of
//! `rand_distr::StandardNormal`, scaled by σ.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance used when checking the zero-mean requirement of increments.
const MEAN_TOL: f64 = 1e-12;

/// A scalar distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistSpec {
    /// Zero-mean Gaussian with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// `high` with probability `p_high`, `low` otherwise.
    TwoPoint { low: f64, high: f64, p_high: f64 },
    /// Always `value`.
    PointMass { value: f64 },
}

impl DistSpec {
    pub fn standard_gaussian() -> Self {
        DistSpec::Gaussian { sigma: 1.0 }
    }

    /// Weight 9 with probability 0.05, weight 1 otherwise.
    pub fn two_level_weights() -> Self {
        DistSpec::TwoPoint {
            low: 1.0,
            high: 9.0,
            p_high: 0.05,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistSpec::Gaussian { .. } => 0.0,
            DistSpec::TwoPoint { low, high, p_high } => (1.0 - p_high) * low + p_high * high,
            DistSpec::PointMass { value } => value,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            DistSpec::Gaussian { sigma } => sigma * sigma,
            DistSpec::TwoPoint { low, high, p_high } => {
                (1.0 - p_high) * low * low + p_high * high * high
            }
            DistSpec::PointMass { value } => value * value,
        }
    }

    /// Values that can actually be drawn.
    pub fn support(&self) -> Vec<f64> {
        match *self {
            DistSpec::Gaussian { .. } => Vec::new(),
            DistSpec::TwoPoint { low, high, p_high } => {
                let mut s = Vec::with_capacity(2);
                if p_high < 1.0 {
                    s.push(low);
                }
                if p_high > 0.0 {
                    s.push(high);
                }
                s
            }
            DistSpec::PointMass { value } => vec![value],
        }
    }

    fn validate_shape(&self) -> Result<()> {
        match *self {
            DistSpec::Gaussian { sigma } => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "gaussian sigma must be finite and nonnegative, got {sigma}"
                    )));
                }
            }
            DistSpec::TwoPoint { low, high, p_high } => {
                if !(low.is_finite() && high.is_finite()) {
                    return Err(Error::InvalidDistribution(
                        "two-point values must be finite".into(),
                    ));
                }
                if !(0.0..=1.0).contains(&p_high) {
                    return Err(Error::InvalidDistribution(format!(
                        "two-point probability must lie in [0, 1], got {p_high}"
                    )));
                }
            }
            DistSpec::PointMass { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidDistribution(
                        "point mass must be finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistSpec::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma * z
            }
            DistSpec::TwoPoint { low, high, p_high } => {
                if rng.random::<f64>() < p_high {
                    high
                } else {
                    low
                }
            }
            DistSpec::PointMass { value } => value,
        }
    }
}

/// Distribution of the per-slot error increment `A(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementDist {
    spec: DistSpec,
}

impl IncrementDist {
    /// Accepts only zero-mean, finite-variance specs.
    pub fn new(spec: DistSpec) -> Result<Self> {
        spec.validate_shape()?;
        let mean = spec.mean();
        if mean.abs() > MEAN_TOL {
            return Err(Error::InvalidDistribution(format!(
                "increments must be zero-mean, got mean {mean}"
            )));
        }
        Ok(Self { spec })
    }

    /// Skips the zero-mean check. Only meant for degenerate scenarios such as
    /// the constant increment that turns the lapse into the age of information;
    /// the bound of the drift-plus-penalty policy does not apply to these.
    pub fn with_drift(spec: DistSpec) -> Result<Self> {
        spec.validate_shape()?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> DistSpec {
        self.spec
    }

    pub fn second_moment(&self) -> f64 {
        self.spec.second_moment()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.spec.draw(rng)
    }
}

/// Distribution of the context weight `ω(t)`; strictly positive support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightDist {
    spec: DistSpec,
}

impl WeightDist {
    pub fn new(spec: DistSpec) -> Result<Self> {
        spec.validate_shape()?;
        if matches!(spec, DistSpec::Gaussian { .. }) {
            return Err(Error::InvalidDistribution(
                "weights need positive support; gaussian is unsupported".into(),
            ));
        }
        if let Some(bad) = spec.support().into_iter().find(|v| *v <= 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weights must be positive, support contains {bad}"
            )));
        }
        Ok(Self { spec })
    }

    /// Context-unaware case: ω ≡ 1.
    pub fn unit() -> Self {
        Self {
            spec: DistSpec::PointMass { value: 1.0 },
        }
    }

    pub fn spec(&self) -> DistSpec {
        self.spec
    }

    pub fn mean(&self) -> f64 {
        self.spec.mean()
    }

    pub fn support(&self) -> Vec<f64> {
        self.spec.support()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.spec.draw(rng)
    }
}

/// Process tags used to derive independent substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Weight = 0,
    Increment = 1,
    Channel = 2,
    Disturbance = 3,
    Reset = 4,
}

const STREAM_TAGS: u64 = 8;

/// The generator for `(seed, user, tag)`.
pub fn substream(seed: u64, user: usize, tag: StreamTag) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(user as u64 * STREAM_TAGS + tag as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonzero_mean_increments() {
        assert!(IncrementDist::new(DistSpec::PointMass { value: 1.0 }).is_err());
        let skewed = DistSpec::TwoPoint {
            low: -1.0,
            high: 1.0,
            p_high: 0.6,
        };
        assert!(IncrementDist::new(skewed).is_err());
        assert!(IncrementDist::with_drift(skewed).is_ok());
        assert!(IncrementDist::new(DistSpec::Gaussian { sigma: -1.0 }).is_err());
    }

    #[test]
    fn rejects_nonpositive_weights() {
        assert!(WeightDist::new(DistSpec::PointMass { value: 0.0 }).is_err());
        let neg = DistSpec::TwoPoint {
            low: -1.0,
            high: 9.0,
            p_high: 0.5,
        };
        assert!(WeightDist::new(neg).is_err());
        assert!(WeightDist::new(DistSpec::standard_gaussian()).is_err());
    }

    #[test]
    fn degenerate_draws() {
        let mut rng = substream(3, 0, StreamTag::Increment);
        let zero = IncrementDist::new(DistSpec::PointMass { value: 0.0 }).unwrap();
        assert_eq!(zero.sample(&mut rng), 0.0);
        let unit = WeightDist::new(DistSpec::PointMass { value: 1.0 }).unwrap();
        assert_eq!(unit.sample(&mut rng), 1.0);
        let pm = IncrementDist::new(DistSpec::TwoPoint {
            low: -1.0,
            high: 1.0,
            p_high: 0.5,
        })
        .unwrap();
        for _ in 0..1000 {
            let a = pm.sample(&mut rng);
            assert!(a == -1.0 || a == 1.0);
        }
        let w = WeightDist::new(DistSpec::two_level_weights()).unwrap();
        for _ in 0..1000 {
            let v = w.sample(&mut rng);
            assert!(v == 1.0 || v == 9.0);
        }
    }

    #[test]
    fn two_level_weight_mean() {
        let w = WeightDist::new(DistSpec::two_level_weights()).unwrap();
        assert!((w.mean() - 1.4).abs() < 1e-15);
    }

    #[test]
    fn substreams_differ() {
        let mut a = substream(1, 0, StreamTag::Weight);
        let mut b = substream(1, 0, StreamTag::Increment);
        let mut c = substream(1, 1, StreamTag::Weight);
        let x: u64 = a.random();
        assert_ne!(x, b.random::<u64>());
        assert_ne!(x, c.random::<u64>());
        let mut a2 = substream(1, 0, StreamTag::Weight);
        assert_eq!(x, a2.random::<u64>());
    }
}
