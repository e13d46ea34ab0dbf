//! Exact-arithmetic references.
//!
//! Every finite `f64` is a dyadic rational, so polynomial values at
//! floating-point arguments, products of arrowhead entries and the like can be
//! computed exactly with a big-integer mantissa and a binary exponent. The
//! solver never calls into this module; it backs the tests and `--verify`.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::dd::DoubleDouble;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no sign change across the bracket")]
    NoSignChange,
    #[error("non-finite value cannot be represented exactly")]
    NonFinite,
    #[error("bisection did not converge within {0} steps")]
    NoConvergence(usize),
}

/// Exact value `mant * 2^exp`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Self {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn from_int(v: i64) -> Self {
        Self::new(BigInt::from(v), 0)
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Self::new(v, 0)
    }

    pub fn new(mant: BigInt, exp: i64) -> Self {
        let mut d = Self { mant, exp };
        d.normalize();
        d
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        if let Some(tz) = self.mant.trailing_zeros() {
            if tz > 0 {
                self.mant >>= tz as usize;
                self.exp += tz as i64;
            }
        }
    }

    pub fn from_f64(x: f64) -> Result<Self, OracleError> {
        if !x.is_finite() {
            return Err(OracleError::NonFinite);
        }
        if x == 0.0 {
            return Ok(Self::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Ok(Self::new(BigInt::from(m) * sign, e))
    }

    /// Exact value of an unevaluated double-double.
    pub fn from_dd(x: DoubleDouble) -> Result<Self, OracleError> {
        Ok(Self::from_f64(x.hi())? + Self::from_f64(x.lo())?)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        Self {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    /// Multiplies by `2^k` exactly.
    pub fn ldexp(&self, k: i64) -> Self {
        Self {
            mant: self.mant.clone(),
            exp: if self.mant.is_zero() { 0 } else { self.exp + k },
        }
    }

    pub fn midpoint(&self, other: &Self) -> Self {
        (self + other).ldexp(-1)
    }

    /// Number of significant bits of the mantissa and the binary exponent of
    /// the most significant bit, `None` for zero.
    pub fn top_exponent(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp + self.mant.bits() as i64 - 1)
        }
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << (self.exp as usize))
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << ((-self.exp) as usize))
        }
    }

    /// Correctly rounded (to nearest, ties to even) conversion.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let neg = self.mant.is_negative();
        let m = self.mant.abs();
        let bits = m.bits() as i64;
        let lsb = (self.exp + bits - 53).max(-1074);
        let (q, lsb) = if lsb > self.exp {
            let shift = (lsb - self.exp) as usize;
            let mut q: BigInt = &m >> shift;
            let rem: BigInt = &m - (&q << shift);
            let half = BigInt::one() << (shift - 1);
            match rem.cmp(&half) {
                Ordering::Greater => q += 1,
                Ordering::Equal if q.bit(0) => q += 1,
                _ => {}
            }
            (q, lsb)
        } else {
            (m, self.exp)
        };
        let qf = q.iter_u64_digits().next().unwrap_or(0) as f64;
        let v = ldexp(qf, lsb);
        if neg {
            -v
        } else {
            v
        }
    }
}

fn ldexp(mut x: f64, mut k: i64) -> f64 {
    while k > 1000 {
        x *= 2f64.powi(1000);
        k -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while k < -1000 {
        x *= 2f64.powi(-1000);
        k += 1000;
    }
    x * 2f64.powi(k as i32)
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self - other;
        d.signum().cmp(&0)
    }
}

fn align(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, i64) {
    if a.is_zero() {
        return (BigInt::zero(), b.mant.clone(), b.exp);
    }
    if b.is_zero() {
        return (a.mant.clone(), BigInt::zero(), a.exp);
    }
    let e = a.exp.min(b.exp);
    (
        &a.mant << ((a.exp - e) as usize),
        &b.mant << ((b.exp - e) as usize),
        e,
    )
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let (x, y, e) = align(self, rhs);
        Dyadic::new(x + y, e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let (x, y, e) = align(self, rhs);
        Dyadic::new(x - y, e)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero();
        }
        Dyadic {
            mant: &self.mant * &rhs.mant,
            exp: self.exp + rhs.exp,
        }
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        &self - &rhs
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        &self * &rhs
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

/// Polynomial with exact dyadic coefficients, descending powers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactPoly {
    coeffs: Vec<Dyadic>,
}

impl ExactPoly {
    pub fn new(coeffs: Vec<Dyadic>) -> Self {
        Self { coeffs }
    }

    pub fn from_f64s(coeffs: &[f64]) -> Result<Self, OracleError> {
        coeffs
            .iter()
            .map(|&c| Dyadic::from_f64(c))
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }

    /// Expanded `prod (x - r_i)`.
    pub fn from_roots(roots: &[Dyadic]) -> Self {
        let mut coeffs = vec![Dyadic::from_int(1)];
        for r in roots {
            let mut next = coeffs.clone();
            next.push(Dyadic::zero());
            for (i, c) in coeffs.iter().enumerate() {
                next[i + 1] = &next[i + 1] - &(c * r);
            }
            coeffs = next;
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Dyadic] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &Dyadic) -> Dyadic {
        let mut acc = Dyadic::zero();
        for c in &self.coeffs {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn sign_at(&self, x: &Dyadic) -> i32 {
        self.eval(x).signum()
    }

    /// Coefficients of the exact derivative.
    pub fn derivative(&self) -> Self {
        let n = self.degree();
        let coeffs = self.coeffs[..n]
            .iter()
            .enumerate()
            .map(|(i, c)| c * &Dyadic::from_int((n - i) as i64))
            .collect();
        Self { coeffs }
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        self.coeffs.iter().map(Dyadic::to_f64).collect()
    }
}

/// Exact Horner evaluation over the rationals.
pub fn rational_horner(coeffs: &[BigRational], x: &BigRational) -> BigRational {
    coeffs
        .iter()
        .fold(BigRational::zero(), |acc, c| acc * x + c)
}

/// Enclosure `[lo, hi]` of a root; `exact` when `lo == hi` is the root itself.
#[derive(Clone, Debug)]
pub struct RootEnclosure {
    pub lo: Dyadic,
    pub hi: Dyadic,
    pub exact: bool,
    pub steps: usize,
}

impl RootEnclosure {
    pub fn midpoint(&self) -> Dyadic {
        self.lo.midpoint(&self.hi)
    }

    /// Nearest `f64` to the enclosed root (exact when the root was hit).
    pub fn to_f64(&self) -> f64 {
        self.midpoint().to_f64()
    }

    pub fn width(&self) -> Dyadic {
        &self.hi - &self.lo
    }
}

const ZERO_FLOOR_EXP: i64 = -1200;
const MAX_BISECTION_STEPS: usize = 6000;

/// Exact bisection for a root of `u` inside `[a, b]`.
///
/// Stops when the width is at most `2^-bits * max(1, |root|)`; once the
/// bracket excludes zero the bound tightens to `2^-bits * min(|lo|, |hi|)`,
/// so tiny roots are still resolved to relative precision.
pub fn bisect_root(
    u: &ExactPoly,
    a: &Dyadic,
    b: &Dyadic,
    bits: u32,
) -> Result<RootEnclosure, OracleError> {
    let (mut lo, mut hi) = if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    };
    let mut s_lo = u.sign_at(&lo);
    let s_hi = u.sign_at(&hi);
    if s_lo == 0 {
        return Ok(RootEnclosure {
            hi: lo.clone(),
            lo,
            exact: true,
            steps: 0,
        });
    }
    if s_hi == 0 {
        return Ok(RootEnclosure {
            lo: hi.clone(),
            hi,
            exact: true,
            steps: 0,
        });
    }
    if s_lo == s_hi {
        return Err(OracleError::NoSignChange);
    }
    let bits = bits as i64;
    for step in 0..MAX_BISECTION_STEPS {
        let width = &hi - &lo;
        let w_exp = width.top_exponent().unwrap_or(i64::MIN);
        let done = if lo.signum() == hi.signum() {
            let m = lo.abs().min(hi.abs());
            w_exp + bits < m.top_exponent().unwrap_or(i64::MIN)
        } else {
            w_exp + bits < ZERO_FLOOR_EXP
        };
        if done {
            return Ok(RootEnclosure {
                lo,
                hi,
                exact: false,
                steps: step,
            });
        }
        let mid = lo.midpoint(&hi);
        let s = u.sign_at(&mid);
        if s == 0 {
            return Ok(RootEnclosure {
                lo: mid.clone(),
                hi: mid,
                exact: true,
                steps: step + 1,
            });
        }
        if s == s_lo {
            lo = mid;
            s_lo = s;
        } else {
            hi = mid;
        }
    }
    Err(OracleError::NoConvergence(MAX_BISECTION_STEPS))
}

/// Exact `det(xI - A)` for the arrowhead matrix with diagonal `d`, arrow `z`
/// and tip `alpha`, all taken at their exact stored values.
pub fn char_poly_exact(
    d: &[f64],
    z: &[DoubleDouble],
    alpha: DoubleDouble,
) -> Result<ExactPoly, OracleError> {
    let dd: Vec<Dyadic> = d
        .iter()
        .map(|&x| Dyadic::from_f64(x))
        .collect::<Result<_, _>>()?;
    let zsq: Vec<Dyadic> = z
        .iter()
        .map(|&x| Dyadic::from_dd(x).map(|v| &v * &v))
        .collect::<Result<_, _>>()?;
    let alpha = Dyadic::from_dd(alpha)?;
    let m = dd.len();
    let mut with_alpha = dd.clone();
    with_alpha.push(alpha);
    let mut coeffs = ExactPoly::from_roots(&with_alpha).coeffs;
    for j in 0..m {
        let others: Vec<Dyadic> = dd
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, x)| x.clone())
            .collect();
        let q = ExactPoly::from_roots(&others);
        // q has degree m - 1, aligned to the low end of the degree-(m+1) result
        let offset = coeffs.len() - q.coeffs.len();
        for (k, c) in q.coeffs.iter().enumerate() {
            coeffs[offset + k] = &coeffs[offset + k] - &(c * &zsq[j]);
        }
    }
    Ok(ExactPoly { coeffs })
}
