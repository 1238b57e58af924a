//! Scalar fields for tensor entries.
//!
//! Everything downstream of the exact exponent layer is generic over the
//! scalar field: real (`f64`) or complex (`Complex64`). The trait exposes
//! the handful of field operations the norms and estimators need, including
//! the sign convention `sign(z) = z/|z|`, `sign(0) = 0`.

use std::fmt;
use std::marker::PhantomData;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::accum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    Real,
    Complex,
}

impl ScalarField {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalarField::Real => "real",
            ScalarField::Complex => "complex",
        }
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub trait Scalar:
    Copy
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const FIELD: ScalarField;

    fn zero() -> Self;
    fn one() -> Self;
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
    /// `z/|z|`, with `sign(0) = 0`.
    fn unit_sign(self) -> Self;
    fn scale(self, t: f64) -> Self;
    fn is_finite_scalar(self) -> bool;
    fn real_part(self) -> f64;
    fn imag_part(self) -> f64;
    /// Assembles a scalar from parts; the imaginary part must be zero for
    /// the real field (callers uphold this, checked in debug builds).
    fn compose(re: f64, im: f64) -> Self;
    fn from_real(re: f64) -> Self;
    /// Standard normal entry (independent N(0,1) components).
    fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Unimodular entry: ±1 for reals, uniform phase for complex.
    fn sample_sign<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    const FIELD: ScalarField = ScalarField::Real;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn modulus(self) -> f64 {
        self.abs()
    }

    fn conj(self) -> Self {
        self
    }

    fn unit_sign(self) -> Self {
        if self == 0.0 {
            0.0
        } else {
            self.signum()
        }
    }

    fn scale(self, t: f64) -> Self {
        self * t
    }

    fn is_finite_scalar(self) -> bool {
        self.is_finite()
    }

    fn real_part(self) -> f64 {
        self
    }

    fn imag_part(self) -> f64 {
        0.0
    }

    fn compose(re: f64, im: f64) -> Self {
        debug_assert_eq!(im, 0.0, "real scalars carry no imaginary part");
        re
    }

    fn from_real(re: f64) -> Self {
        re
    }

    fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn sample_sign<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.gen::<bool>() {
            1.0
        } else {
            -1.0
        }
    }
}

impl Scalar for Complex64 {
    const FIELD: ScalarField = ScalarField::Complex;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn modulus(self) -> f64 {
        self.norm()
    }

    fn conj(self) -> Self {
        Complex64::conj(&self)
    }

    fn unit_sign(self) -> Self {
        let m = self.norm();
        if m == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            self / m
        }
    }

    fn scale(self, t: f64) -> Self {
        self * t
    }

    fn is_finite_scalar(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn real_part(self) -> f64 {
        self.re
    }

    fn imag_part(self) -> f64 {
        self.im
    }

    fn compose(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }

    fn from_real(re: f64) -> Self {
        Complex64::new(re, 0.0)
    }

    fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    }

    fn sample_sign<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        Complex64::new(theta.cos(), theta.sin())
    }
}

/// Componentwise compensated sum of scalars.
#[derive(Debug, Clone, Copy)]
pub struct ScalarSum<S: Scalar> {
    re: NeumaierSum,
    im: NeumaierSum,
    _field: PhantomData<S>,
}

impl<S: Scalar> ScalarSum<S> {
    pub fn new() -> Self {
        ScalarSum {
            re: NeumaierSum::new(),
            im: NeumaierSum::new(),
            _field: PhantomData,
        }
    }

    pub fn add(&mut self, s: S) {
        self.re.add(s.real_part());
        self.im.add(s.imag_part());
    }

    pub fn value(&self) -> S {
        S::compose(self.re.value(), self.im.value())
    }
}

impl<S: Scalar> Default for ScalarSum<S> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_convention() {
        assert_eq!(3.5f64.unit_sign(), 1.0);
        assert_eq!((-2.0f64).unit_sign(), -1.0);
        assert_eq!(0.0f64.unit_sign(), 0.0);

        let z = Complex64::new(3.0, 4.0);
        let s = z.unit_sign();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert!((s * 5.0 - z).norm() < 1e-14);
        assert_eq!(Complex64::new(0.0, 0.0).unit_sign(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn modulus_and_conjugation() {
        assert_eq!((-7.0f64).modulus(), 7.0);
        assert_eq!(Complex64::new(3.0, -4.0).modulus(), 5.0);
        let z = Complex64::new(1.0, 2.0);
        assert_eq!(Scalar::conj(z), Complex64::new(1.0, -2.0));
        // conj(z)*z is |z|^2 on the real axis.
        let w = Scalar::conj(z) * z;
        assert!((w.re - 5.0).abs() < 1e-15 && w.im.abs() < 1e-15);
    }

    #[test]
    fn scalar_sum_compensates_both_components() {
        let mut acc = ScalarSum::<Complex64>::new();
        for z in [
            Complex64::new(1.0, -1.0),
            Complex64::new(1e100, 1e100),
            Complex64::new(1.0, -1.0),
            Complex64::new(-1e100, -1e100),
        ] {
            acc.add(z);
        }
        assert_eq!(acc.value(), Complex64::new(2.0, -2.0));
    }
}
