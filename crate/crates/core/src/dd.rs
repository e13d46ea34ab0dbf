//! Double-double arithmetic.
//!
//! A [`DoubleDouble`] is an unevaluated sum `hi + lo` of two `f64` values kept
//! in renormalized form (`hi == fl(hi + lo)`), giving roughly 106 bits of
//! mantissa. Every operation renormalizes its result.
//!
//! Valid magnitude range: the FMA-based [`two_product`] is exact whenever the
//! product does not overflow or underflow. The Dekker-split fallback
//! [`two_product_dekker`] additionally needs `|a|, |b| <= 2^996`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DdError {
    #[error("division by a double-double equal to zero")]
    DivisionByZero,
    #[error("square root of a negative double-double")]
    NegativeSqrt,
}

/// Error-free sum: `s + e == a + b` exactly, `s == fl(a + b)`.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Error-free sum assuming `|a| >= |b|` (or `a == 0`).
#[inline]
pub fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Error-free product via fused multiply-add: `p + e == a * b` exactly.
#[inline]
pub fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1

/// Veltkamp split of `a` into two 26-bit halves.
#[inline]
pub fn split(a: f64) -> (f64, f64) {
    let c = SPLITTER * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

/// Dekker's error-free product, no FMA required.
#[inline]
pub fn two_product_dekker(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleDouble({:e}, {:e})", self.hi, self.lo)
    }
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    /// Builds `hi + lo`, renormalizing.
    pub fn new(hi: f64, lo: f64) -> Self {
        Self::renorm(hi, lo)
    }

    /// Exact embedding of a working-precision value.
    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    #[inline]
    fn renorm(a: f64, b: f64) -> Self {
        if !a.is_finite() {
            return Self { hi: a, lo: 0.0 };
        }
        let (s, e) = two_sum(a, b);
        Self::finish(s, e)
    }

    #[inline]
    fn finish(s: f64, e: f64) -> Self {
        if !s.is_finite() {
            Self { hi: s, lo: 0.0 }
        } else if s == 0.0 {
            // keep the sign of an exact zero sum, never a stray -0 lo
            Self { hi: s, lo: 0.0 }
        } else {
            Self { hi: s, lo: e }
        }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    /// Nearest working-precision value, `fl(hi + lo)`.
    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi
    }

    pub fn is_zero(self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn is_nan(self) -> bool {
        self.hi.is_nan() || self.lo.is_nan()
    }

    /// Renormalization invariant: `hi == fl(hi + lo)` and `lo == 0` when `hi == 0`.
    pub fn is_normalized(self) -> bool {
        if !self.hi.is_finite() {
            return true;
        }
        if self.hi == 0.0 {
            return self.lo == 0.0;
        }
        self.hi + self.lo == self.hi
    }

    pub fn signum(self) -> f64 {
        if self.hi > 0.0 {
            1.0
        } else if self.hi < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Exact sum of two working-precision values.
    #[inline]
    pub fn sum_f64(a: f64, b: f64) -> Self {
        let (s, e) = two_sum(a, b);
        Self::finish(s, e)
    }

    /// Exact product of two working-precision values.
    #[inline]
    pub fn product_f64(a: f64, b: f64) -> Self {
        let (p, e) = two_product(a, b);
        Self::finish(p, e)
    }

    /// `self + y` with a working-precision addend.
    #[inline]
    pub fn add_f64(self, y: f64) -> Self {
        let (sh, sl) = two_sum(self.hi, y);
        if !sh.is_finite() {
            return Self { hi: sh, lo: 0.0 };
        }
        let v = self.lo + sl;
        let (s, e) = fast_two_sum(sh, v);
        Self::finish(s, e)
    }

    /// `self * y` with a working-precision factor.
    #[inline]
    pub fn mul_f64(self, y: f64) -> Self {
        let (ch, cl1) = two_product(self.hi, y);
        if !ch.is_finite() {
            return Self { hi: ch, lo: 0.0 };
        }
        let cl3 = self.lo.mul_add(y, cl1);
        let (s, e) = fast_two_sum(ch, cl3);
        Self::finish(s, e)
    }

    pub fn square(self) -> Self {
        self * self
    }

    /// Division with an explicit error for a zero divisor.
    pub fn checked_div(self, y: Self) -> Result<Self, DdError> {
        if y.is_zero() {
            return Err(DdError::DivisionByZero);
        }
        Ok(self.div_unchecked(y))
    }

    fn div_unchecked(self, y: Self) -> Self {
        let q1 = self.hi / y.hi;
        if !q1.is_finite() || q1 == 0.0 {
            return Self::from_f64(q1);
        }
        let r = self - y.mul_f64(q1);
        let q2 = r.hi / y.hi;
        let r = r - y.mul_f64(q2);
        let q3 = r.hi / y.hi;
        let (s, e) = fast_two_sum(q1, q2);
        Self::finish(s, e).add_f64(q3)
    }

    pub fn recip(self) -> Result<Self, DdError> {
        Self::ONE.checked_div(self)
    }

    /// Square root; one Newton correction on the working-precision root.
    pub fn sqrt(self) -> Result<Self, DdError> {
        if self.hi < 0.0 {
            return Err(DdError::NegativeSqrt);
        }
        if self.hi == 0.0 || !self.hi.is_finite() {
            return Ok(Self::from_f64(self.hi.sqrt()));
        }
        let q = self.hi.sqrt();
        let residual = self - Self::product_f64(q, q);
        let corr = residual.hi / (2.0 * q);
        let (s, e) = fast_two_sum(q, corr);
        Ok(Self::finish(s, e))
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, y: Self) -> Self {
        let (s, e) = two_sum(self.hi, y.hi);
        if !s.is_finite() {
            return Self { hi: s, lo: 0.0 };
        }
        let (t, f) = two_sum(self.lo, y.lo);
        let e = e + t;
        let (s, e) = fast_two_sum(s, e);
        let e = e + f;
        let (s, e) = fast_two_sum(s, e);
        Self::finish(s, e)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, y: Self) -> Self {
        self + (-y)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, y: Self) -> Self {
        let (ch, cl) = two_product(self.hi, y.hi);
        if !ch.is_finite() {
            return Self { hi: ch, lo: 0.0 };
        }
        let tl0 = self.lo * y.lo;
        let tl1 = self.hi.mul_add(y.lo, tl0);
        let cl2 = self.lo.mul_add(y.hi, tl1);
        let cl3 = cl + cl2;
        let (s, e) = fast_two_sum(ch, cl3);
        Self::finish(s, e)
    }
}

/// IEEE-style division: a zero divisor yields an infinity or NaN. Use
/// [`DoubleDouble::checked_div`] to get an error instead.
impl Div for DoubleDouble {
    type Output = Self;
    #[inline]
    fn div(self, y: Self) -> Self {
        if y.is_zero() {
            return Self::from_f64(self.hi / y.hi);
        }
        self.div_unchecked(y)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

impl std::iter::Sum for DoubleDouble {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |acc, x| acc + x)
    }
}
