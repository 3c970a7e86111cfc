//! Stationary αβ-frame vectors.

use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::scalar::Real;

/// A two-axis quantity in the stationary αβ frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Ab<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> Ab<T> {
    pub const fn new(alpha: T, beta: T) -> Self {
        Self { alpha, beta }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn from_polar(magnitude: T, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(magnitude * c, magnitude * s)
    }

    pub fn dot(self, other: Self) -> T {
        self.alpha * other.alpha + self.beta * other.beta
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.alpha.hypot(self.beta)
    }

    /// `J v` with `J = [[0, -1], [1, 0]]`.
    pub fn quarter_turn(self) -> Self {
        Self::new(-self.beta, self.alpha)
    }

    /// Rotates by `angle` radians (αβ → αβ). `rotate(-θ)` is the Park transform.
    pub fn rotate(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.alpha - s * self.beta, s * self.alpha + c * self.beta)
    }

    pub fn is_finite(self) -> bool {
        self.alpha.is_finite() && self.beta.is_finite()
    }
}

impl<T: Real> Add for Ab<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.alpha + rhs.alpha, self.beta + rhs.beta)
    }
}

impl<T: Real> AddAssign for Ab<T> {
    fn add_assign(&mut self, rhs: Self) {
        self.alpha += rhs.alpha;
        self.beta += rhs.beta;
    }
}

impl<T: Real> Sub for Ab<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.alpha - rhs.alpha, self.beta - rhs.beta)
    }
}

impl<T: Real> SubAssign for Ab<T> {
    fn sub_assign(&mut self, rhs: Self) {
        self.alpha -= rhs.alpha;
        self.beta -= rhs.beta;
    }
}

impl<T: Real> Neg for Ab<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.alpha, -self.beta)
    }
}

impl<T: Real> Mul<T> for Ab<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Self::new(self.alpha * k, self.beta * k)
    }
}

impl<T: Real> Div<T> for Ab<T> {
    type Output = Self;
    fn div(self, k: T) -> Self {
        Self::new(self.alpha / k, self.beta / k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turn_is_orthogonal() {
        let v = Ab::new(3.0, -4.0);
        assert_eq!(v.quarter_turn(), Ab::new(4.0, 3.0));
        assert_eq!(v.dot(v.quarter_turn()), 0.0);
    }

    #[test]
    fn rotate_matches_quarter_turn() {
        let v = Ab::new(1.5_f64, 0.25);
        let r = v.rotate(core::f64::consts::FRAC_PI_2);
        let j = v.quarter_turn();
        assert!((r - j).norm() < 1e-15);
    }
}
