//! Exact arithmetic in ℚ(ω), ω = e^{2πi/3}.
//!
//! Elements are stored as `a + b·ω` with rational `a`, `b`. The minimal
//! polynomial ω² + ω + 1 = 0 is used to reduce every product back to this
//! two-component form.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// An element `a + b·ω` of the third cyclotomic field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cyclotomic {
    pub a: BigRational,
    pub b: BigRational,
}

impl Cyclotomic {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        Self { a, b }
    }

    /// `n/d` as a purely rational element.
    pub fn from_frac(n: i64, d: i64) -> Self {
        Self {
            a: BigRational::new(BigInt::from(n), BigInt::from(d)),
            b: BigRational::zero(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_frac(n, 1)
    }

    pub fn omega() -> Self {
        Self {
            a: BigRational::zero(),
            b: BigRational::one(),
        }
    }

    /// ω^k for any integer k.
    pub fn omega_pow(k: i64) -> Self {
        match k.rem_euclid(3) {
            0 => Self::one(),
            1 => Self::omega(),
            _ => Self {
                a: -BigRational::one(),
                b: -BigRational::one(),
            },
        }
    }

    /// Complex conjugate: ω̄ = ω² = −1 − ω, so `a + bω ↦ (a − b) − bω`.
    pub fn conj(&self) -> Self {
        Self {
            a: &self.a - &self.b,
            b: -self.b.clone(),
        }
    }

    /// |x|² = a² − ab + b², always a non-negative rational.
    pub fn norm_sqr(&self) -> BigRational {
        &self.a * &self.a - &self.a * &self.b + &self.b * &self.b
    }

    pub fn inv(&self) -> Option<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return None;
        }
        let c = self.conj();
        Some(Self {
            a: c.a / &n,
            b: c.b / n,
        })
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Embedding into the complex numbers.
    pub fn to_c64(&self) -> Complex64 {
        let a = rat_to_f64(&self.a);
        let b = rat_to_f64(&self.b);
        // ω = −1/2 + i√3/2
        Complex64::new(a - 0.5 * b, 0.75_f64.sqrt() * b)
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }
}

fn rat_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

impl Zero for Cyclotomic {
    fn zero() -> Self {
        Self {
            a: BigRational::zero(),
            b: BigRational::zero(),
        }
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

impl One for Cyclotomic {
    fn one() -> Self {
        Self {
            a: BigRational::one(),
            b: BigRational::zero(),
        }
    }
}

impl Add for &Cyclotomic {
    type Output = Cyclotomic;
    fn add(self, rhs: &Cyclotomic) -> Cyclotomic {
        Cyclotomic {
            a: &self.a + &rhs.a,
            b: &self.b + &rhs.b,
        }
    }
}

impl Add for Cyclotomic {
    type Output = Cyclotomic;
    fn add(self, rhs: Cyclotomic) -> Cyclotomic {
        &self + &rhs
    }
}

impl AddAssign<&Cyclotomic> for Cyclotomic {
    fn add_assign(&mut self, rhs: &Cyclotomic) {
        self.a += &rhs.a;
        self.b += &rhs.b;
    }
}

impl Sub for &Cyclotomic {
    type Output = Cyclotomic;
    fn sub(self, rhs: &Cyclotomic) -> Cyclotomic {
        Cyclotomic {
            a: &self.a - &rhs.a,
            b: &self.b - &rhs.b,
        }
    }
}

impl Sub for Cyclotomic {
    type Output = Cyclotomic;
    fn sub(self, rhs: Cyclotomic) -> Cyclotomic {
        &self - &rhs
    }
}

impl Neg for Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Cyclotomic {
        Cyclotomic {
            a: -self.a,
            b: -self.b,
        }
    }
}

impl Mul for &Cyclotomic {
    type Output = Cyclotomic;
    fn mul(self, rhs: &Cyclotomic) -> Cyclotomic {
        // (a + bω)(c + dω) = ac + (ad + bc)ω + bdω², with ω² = −1 − ω
        let ac = &self.a * &rhs.a;
        let bd = &self.b * &rhs.b;
        let cross = &self.a * &rhs.b + &self.b * &rhs.a;
        Cyclotomic {
            a: ac - &bd,
            b: cross - bd,
        }
    }
}

impl Mul for Cyclotomic {
    type Output = Cyclotomic;
    fn mul(self, rhs: Cyclotomic) -> Cyclotomic {
        &self * &rhs
    }
}

impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (true, true) => write!(f, "0"),
            (false, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "{}ω", self.b),
            (false, false) => {
                if self.b.is_negative() {
                    write!(f, "{} - {}ω", self.a, -self.b.clone())
                } else {
                    write!(f, "{} + {}ω", self.a, self.b)
                }
            }
        }
    }
}
