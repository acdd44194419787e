//! Noisy range sensing: each agent estimates its distance to the target
//! as the true distance plus zero-mean Gaussian noise, clamped at zero.

use serde::{Deserialize, Serialize};

use crate::geometry::{distance, Vec2};
use crate::Real;
use rand::RngCore;

/// Draws one standard-normal sample by the Box-Muller transform.
///
/// Consumes exactly two uniform draws per sample, so stream positions
/// advance by a fixed amount per measurement no matter what is measured.
pub fn standard_normal<F: Real, R: RngCore + ?Sized>(rng: &mut R) -> F {
    // First draw mapped onto (0, 1] so the logarithm is finite.
    let u1 = F::one() - F::sample_unit(rng);
    let u2 = F::sample_unit(rng);
    let two = F::from_f64(2.0).unwrap();
    (-(two * u1.ln())).sqrt() * (two * F::PI() * u2).cos()
}

/// Range sensor with Gaussian error of standard deviation `sigma` meters.
/// `sigma = 0` yields exact distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeSensor<F = f64> {
    pub sigma: F,
    pub target: Vec2<F>,
}

impl<F: Real> RangeSensor<F> {
    pub fn new(sigma: F, target: Vec2<F>) -> Self {
        Self { sigma, target }
    }

    /// One distance estimate from position `p`, clamped at zero.
    ///
    /// Always consumes one Gaussian draw from `rng` (even at `sigma = 0`),
    /// so a stream stays aligned across noise settings.
    pub fn measure<R: RngCore + ?Sized>(&self, p: Vec2<F>, rng: &mut R) -> F {
        let noise = self.sigma * standard_normal::<F, R>(rng);
        (distance(p, self.target) + noise).max(F::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RunRng;

    #[test]
    fn noiseless_measurement_equals_distance() {
        let sensor = RangeSensor::new(0.0, Vec2::new(400.0, 300.0));
        let mut rng = RunRng::new(1, 0, 0).agent(0);
        assert_eq!(sensor.measure(Vec2::new(400.0, 305.0), &mut rng), 5.0);
    }

    #[test]
    fn noiseless_equivalence_holds_at_arbitrary_points() {
        let target = Vec2::new(123.0, 45.0);
        let sensor = RangeSensor::new(0.0, target);
        let mut rng = RunRng::new(7, 0, 0).agent(3);
        for i in 0..100 {
            let p = Vec2::new(i as f64 * 3.7, 600.0 - i as f64);
            assert_eq!(sensor.measure(p, &mut rng), distance(p, target));
        }
    }

    #[test]
    fn estimates_are_clamped_at_zero() {
        let target = Vec2::new(10.0, 10.0);
        let sensor = RangeSensor::new(1.0, target);
        let mut rng = RunRng::new(3, 0, 0).agent(0);
        for _ in 0..10_000 {
            assert!(sensor.measure(target, &mut rng) >= 0.0);
        }
    }

    #[test]
    fn identical_streams_give_identical_measurements() {
        let sensor: RangeSensor = RangeSensor::new(1.0, Vec2::new(400.0, 300.0));
        let mut a = RunRng::new(42, 2, 5).agent(7);
        let mut b = RunRng::new(42, 2, 5).agent(7);
        let p = Vec2::new(20.0, 30.0);
        for _ in 0..100 {
            assert_eq!(
                sensor.measure(p, &mut a).to_bits(),
                sensor.measure(p, &mut b).to_bits()
            );
        }
    }

    #[test]
    fn error_moments_match_the_noise_model() {
        // Statistical oracle: at true distance 100 m (clamp inactive) the
        // measurement error over 1e5 draws has mean 0 +/- 0.02 and standard
        // deviation 1 +/- 0.02.
        let target = Vec2::new(0.0, 0.0);
        let sensor = RangeSensor::new(1.0, target);
        let p = Vec2::new(100.0, 0.0);
        let mut rng = RunRng::new(2024, 0, 0).agent(0);

        let n = 100_000usize;
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        for _ in 0..n {
            let err = sensor.measure(p, &mut rng) - 100.0;
            sum += err;
            sum_sq += err * err;
        }
        let mean = sum / n as f64;
        let std = ((sum_sq - sum * sum / n as f64) / (n as f64 - 1.0)).sqrt();
        assert!(mean.abs() < 0.02, "error mean {mean} out of band");
        assert!((std - 1.0).abs() < 0.02, "error std {std} out of band");
    }
}
