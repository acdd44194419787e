//! Planar vector math shared by every other module: positions,
//! velocities, Euclidean distances and the speed-limit clamp.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{rel_tol, Real};

/// A point or displacement on the map, in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec2<F = f64> {
    pub x: F,
    pub y: F,
}

impl<F: Real> Vec2<F> {
    pub fn new(x: F, y: F) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self {
            x: F::zero(),
            y: F::zero(),
        }
    }

    /// Euclidean norm.
    pub fn norm(self) -> F {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<F: Real> Add for Vec2<F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<F: Real> Sub for Vec2<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<F: Real> Mul<F> for Vec2<F> {
    type Output = Self;
    fn mul(self, rhs: F) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl<F: Real> Neg for Vec2<F> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Per-round speed limit for every agent, in meters per round.
/// Must be strictly positive; validated at configuration time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimit<F = f64> {
    pub v_max: F,
}

impl<F: Real> SpeedLimit<F> {
    pub fn new(v_max: F) -> Self {
        Self { v_max }
    }
}

/// Euclidean distance between two points. Total over finite inputs,
/// non-negative and symmetric.
pub fn distance<F: Real>(a: Vec2<F>, b: Vec2<F>) -> F {
    (a - b).norm()
}

/// Rescales `v` onto the speed limit when it exceeds it, preserving
/// direction; vectors at or below the limit pass through unchanged.
///
/// The comparison uses the crate-wide relative tolerance so that a vector
/// already produced by a clamp (whose norm may sit a few ulp above
/// `v_max`) is never rescaled again: the operation is bit-for-bit
/// idempotent. The zero vector maps to itself.
pub fn clamp_speed<F: Real>(v: Vec2<F>, limit: SpeedLimit<F>) -> Vec2<F> {
    let mag = v.norm();
    if mag > limit.v_max * (F::one() + rel_tol::<F>()) {
        v * (limit.v_max / mag)
    } else {
        v
    }
}
