use std::fmt::Debug;

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::Cyclotomic;

/// Coefficient ring for operator construction.
///
/// Implemented for exact [`Cyclotomic`] numbers and for `Complex64`, so the
/// same builders produce both the exact and the floating versions of every
/// operator.
pub trait Scalar: Clone + Debug + PartialEq + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    /// ω^k.
    fn omega_pow(k: i64) -> Self;
    fn from_frac(n: i64, d: i64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn conj(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn to_c64(&self) -> Complex64;
}

impl Scalar for Cyclotomic {
    fn zero() -> Self {
        <Cyclotomic as Zero>::zero()
    }
    fn one() -> Self {
        <Cyclotomic as One>::one()
    }
    fn omega_pow(k: i64) -> Self {
        Cyclotomic::omega_pow(k)
    }
    fn from_frac(n: i64, d: i64) -> Self {
        Cyclotomic::from_frac(n, d)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn conj(&self) -> Self {
        Cyclotomic::conj(self)
    }
    fn is_zero(&self) -> bool {
        <Cyclotomic as Zero>::is_zero(self)
    }
    fn to_c64(&self) -> Complex64 {
        Cyclotomic::to_c64(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn omega_pow(k: i64) -> Self {
        const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;
        match k.rem_euclid(3) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(-0.5, HALF_SQRT3),
            _ => Complex64::new(-0.5, -HALF_SQRT3),
        }
    }
    fn from_frac(n: i64, d: i64) -> Self {
        Complex64::new(n as f64 / d as f64, 0.0)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
}

/// ω as a `Complex64`.
pub fn omega() -> Complex64 {
    <Complex64 as Scalar>::omega_pow(1)
}

pub fn omega_pow(k: i64) -> Complex64 {
    <Complex64 as Scalar>::omega_pow(k)
}
