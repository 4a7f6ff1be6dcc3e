//! Minimal 2×2 matrix algebra for the per-coordinate harmonic blocks.

use std::ops::{Add, Mul, Sub};

use crate::scalar::Scalar;

/// Dense 2×2 matrix stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Scalar> Mat2<T> {
    pub const fn new(a11: T, a12: T, a21: T, a22: T) -> Self {
        Self {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn zero() -> Self {
        let z = T::zero();
        Self::new(z, z, z, z)
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self::new(o, z, z, o)
    }

    pub fn diag(a: T, b: T) -> Self {
        Self::new(a, T::zero(), T::zero(), b)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[i][j]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    /// `M · Mᵀ`.
    pub fn gram(&self) -> Self {
        *self * self.transpose()
    }

    #[inline]
    pub fn apply(&self, x: T, y: T) -> (T, T) {
        (
            self.m[0][0] * x + self.m[0][1] * y,
            self.m[1][0] * x + self.m[1][1] * y,
        )
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Max-abs-entry distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        (*self - *other).max_abs()
    }

    /// Induced ∞-norm (max absolute row sum).
    pub fn norm_inf(&self) -> T {
        let r0 = self.m[0][0].abs() + self.m[0][1].abs();
        let r1 = self.m[1][0].abs() + self.m[1][1].abs();
        r0.max(r1)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    /// Lower-triangular factor `L` with `L Lᵀ = self` for a symmetric
    /// positive-semidefinite matrix. Negative pivots from rounding clamp to 0.
    pub fn cholesky_psd(&self) -> Self {
        let a11 = self.m[0][0].max(T::zero());
        let l11 = a11.sqrt();
        let l21 = if l11 > T::zero() {
            self.m[1][0] / l11
        } else {
            T::zero()
        };
        let l22 = (self.m[1][1] - l21 * l21).max(T::zero()).sqrt();
        Self::new(l11, T::zero(), l21, l22)
    }

    pub fn cast<U: Scalar>(&self) -> Mat2<U> {
        let c = |v: T| U::lit(v.as_f64());
        Mat2::new(
            c(self.m[0][0]),
            c(self.m[0][1]),
            c(self.m[1][0]),
            c(self.m[1][1]),
        )
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        Self::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        Self::new(
            a[0][0] - b[0][0],
            a[0][1] - b[0][1],
            a[1][0] - b[1][0],
            a[1][1] - b[1][1],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs_spd_matrix() {
        let s = Mat2::new(4.0_f64, 2.0, 2.0, 3.0);
        let l = s.cholesky_psd();
        assert_eq!(l.get(0, 1), 0.0);
        assert!(l.gram().max_abs_diff(&s) < 1e-15);
    }

    #[test]
    fn cholesky_of_zero_is_zero() {
        assert_eq!(Mat2::<f64>::zero().cholesky_psd(), Mat2::zero());
    }
}
