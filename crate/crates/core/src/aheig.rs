//! Eigenvalues of an irreducible real symmetric arrowhead matrix, one at a
//! time, by shift-and-invert bisection.
//!
//! For the eigenvalue `lambda_k` the matrix is shifted by its nearest pole
//! `d_i`. The inverse of `A - d_i I` is again an arrowhead matrix (arrow
//! through row `i`) whose entries are all available to high relative
//! accuracy, except possibly the tip `b`, which is recomputed in
//! double-double when its amplification factor `K_b` is large. `lambda_k`
//! is `1/nu + d_i` where `nu` is the largest or smallest eigenvalue of the
//! inverse, found by bisection on its secular function.

use serde::Serialize;
use thiserror::Error;

use crate::dd::{two_sum, DoubleDouble};
use crate::fiedler::ArrowheadMatrix;
use crate::EPS;

/// Default threshold on `K_b` above which `b` is recomputed in double-double.
pub const DEFAULT_TAU_B: f64 = 1.0e3;

/// `kappa_bound * eps` above this flags a root as low-confidence.
pub const LOW_CONFIDENCE: f64 = 1.0e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("secular function evaluated at the pole {pole:e}")]
    AtPole { pole: f64 },
    #[error("eigenvalue index {k} out of range 1..={n}")]
    IndexOutOfRange { k: usize, n: usize },
    #[error("pole index {i} out of range for {poles} poles")]
    PoleOutOfRange { i: usize, poles: usize },
    #[error("no sign change bracketing the {side:?} eigenvalue of the shifted inverse (shift index {index})")]
    Bracket { index: usize, side: Side },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Largest,
    Smallest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularValue {
    pub value: f64,
    pub sign: i8,
}

/// `phi(lambda) = tip - lambda - sum w_j^2 / (p_j - lambda)`.
#[derive(Debug, Clone)]
pub struct SecularFunction {
    poles: Vec<f64>,
    weights_sq: Vec<f64>,
    tip: f64,
}

impl SecularFunction {
    pub fn new(poles: Vec<f64>, weights_sq: Vec<f64>, tip: f64) -> Self {
        debug_assert_eq!(poles.len(), weights_sq.len());
        Self {
            poles,
            weights_sq,
            tip,
        }
    }

    /// Secular function of `A`, built from working-precision `z` and `alpha`.
    pub fn of_matrix(m: &ArrowheadMatrix) -> Self {
        let w = m.z_working().iter().map(|z| z * z).collect();
        Self::new(m.poles().to_vec(), w, m.alpha_working())
    }

    pub fn eval(&self, lam: f64) -> Result<SecularValue, EigenError> {
        let mut value = self.tip - lam;
        for (&p, &w) in self.poles.iter().zip(&self.weights_sq) {
            let gap = p - lam;
            if gap == 0.0 {
                return Err(EigenError::AtPole { pole: p });
            }
            value -= w / gap;
        }
        let sign = if value > 0.0 {
            1
        } else if value < 0.0 {
            -1
        } else {
            0
        };
        Ok(SecularValue { value, sign })
    }

    /// First-order bound on the rounding error of [`Self::eval`] at `lam`.
    pub fn error_bound(&self, lam: f64) -> f64 {
        let n = self.poles.len() as f64 + 2.0;
        let mut mag = self.tip.abs() + lam.abs();
        for (&p, &w) in self.poles.iter().zip(&self.weights_sq) {
            mag += (w / (p - lam)).abs();
        }
        2.0 * n * EPS * mag
    }
}

/// Explicit `(A - d_i I)^{-1}`.
///
/// With the pole `d_i` removed, the remaining poles `d_j` give the diagonal
/// entries `1/(d_j - d_i)`; row and column `i` hold `w_j = -zeta_j / ((d_j -
/// d_i) zeta_i)`, the entry `b` at `(i, i)` and `1/zeta_i` in the last
/// column; the last diagonal entry is zero.
#[derive(Debug, Clone)]
pub struct ShiftedInverse {
    pub index: usize,
    pub shift: f64,
    /// `1/(d_j - d_i)` for `j != i`, in pole order.
    pub inv_gaps: Vec<f64>,
    /// `w_j` for `j != i`, in pole order.
    pub w: Vec<f64>,
    pub b: f64,
    pub inv_zeta: f64,
    pub k_b: f64,
    pub b_escalated: bool,
}

impl ShiftedInverse {
    /// Order of the inverse (same as the arrowhead matrix).
    pub fn order(&self) -> usize {
        self.inv_gaps.len() + 2
    }

    /// Secular function of the inverse viewed as an arrowhead matrix with
    /// shaft at row `i`.
    pub fn secular(&self) -> SecularFunction {
        let mut poles = self.inv_gaps.clone();
        poles.push(0.0);
        let mut w: Vec<f64> = self.w.iter().map(|x| x * x).collect();
        w.push(self.inv_zeta * self.inv_zeta);
        SecularFunction::new(poles, w, self.b)
    }

    /// Gershgorin interval containing every eigenvalue of the inverse.
    pub fn gershgorin(&self) -> (f64, f64) {
        let row_i = self.w.iter().map(|x| x.abs()).sum::<f64>() + self.inv_zeta.abs();
        let mut lo = (self.b - row_i).min(-self.inv_zeta.abs());
        let mut hi = (self.b + row_i).max(self.inv_zeta.abs());
        for (&g, &w) in self.inv_gaps.iter().zip(&self.w) {
            lo = lo.min(g - w.abs());
            hi = hi.max(g + w.abs());
        }
        (lo, hi)
    }

    /// Dense matrix in pole order with the shaft row moved to position `i`
    /// and the tip row last, matching `A`'s indexing.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.order();
        let i = self.index;
        let mut a = vec![vec![0.0; n]; n];
        for (pos, (&g, &w)) in self.inv_gaps.iter().zip(&self.w).enumerate() {
            let j = if pos < i { pos } else { pos + 1 };
            a[j][j] = g;
            a[j][i] = w;
            a[i][j] = w;
        }
        a[i][i] = self.b;
        a[i][n - 1] = self.inv_zeta;
        a[n - 1][i] = self.inv_zeta;
        a
    }
}

/// Forms `(A - d_i I)^{-1}`, escalating `b` to double-double when
/// `K_b > tau_b`.
pub fn shift_invert(m: &ArrowheadMatrix, i: usize, tau_b: f64) -> Result<ShiftedInverse, EigenError> {
    let d = m.poles();
    if i >= d.len() {
        return Err(EigenError::PoleOutOfRange {
            i,
            poles: d.len(),
        });
    }
    let z = m.z_working();
    let alpha = m.alpha_working();
    let di = d[i];
    let zi = z[i];
    let inv_zeta = 1.0 / zi;

    let mut inv_gaps = Vec::with_capacity(d.len() - 1);
    let mut w = Vec::with_capacity(d.len() - 1);
    let mut upper = 0.0; // z1^T D1^{-1} z1
    let mut lower = 0.0; // z2^T D2^{-1} z2
    for (j, (&dj, &zj)) in d.iter().zip(&z).enumerate() {
        if j == i {
            continue;
        }
        let gap = dj - di;
        inv_gaps.push(1.0 / gap);
        w.push(-(zj / gap) / zi);
        let term = zj * zj / gap;
        if j < i {
            upper += term;
        } else {
            lower += term;
        }
    }
    let numer = (di - alpha) + upper + lower;
    let k_b = (alpha.abs() + di.abs() + upper.abs() + lower.abs()) / numer.abs();

    let (b, b_escalated) = if k_b > tau_b {
        (escalated_b(m, i), true)
    } else {
        (numer / (zi * zi), false)
    };
    Ok(ShiftedInverse {
        index: i,
        shift: di,
        inv_gaps,
        w,
        b,
        inv_zeta,
        k_b,
        b_escalated,
    })
}

/// `b` from the double-double `z` and `alpha`, rounded to working precision.
fn escalated_b(m: &ArrowheadMatrix, i: usize) -> f64 {
    let d = m.poles();
    let z = m.z();
    let di = d[i];
    let mut numer = DoubleDouble::from(di) - m.alpha();
    for (j, (&dj, &zj)) in d.iter().zip(z).enumerate() {
        if j == i {
            continue;
        }
        let gap = DoubleDouble::sum_f64(dj, -di);
        numer = numer + zj.square() / gap;
    }
    (numer / z[i].square()).to_f64()
}

/// Result of the exterior bisection on the inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseEigenvalue {
    pub nu: f64,
    pub iterations: usize,
    pub capped: bool,
}

/// Iteration cap: twice the number of binary64 values one would need to
/// step through bit by bit (mantissa plus exponent range).
pub const MAX_BISECTION_STEPS: usize = 2 * (53 + 2098);

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * lo + 0.5 * hi;
    if mid.is_finite() {
        mid
    } else {
        lo + 0.5 * (hi - lo)
    }
}

/// Largest or smallest eigenvalue of the shifted inverse by bisection on its
/// secular function over the exterior interval.
pub fn extremal_inverse_eig(s: &ShiftedInverse, side: Side) -> Result<InverseEigenvalue, EigenError> {
    let f = s.secular();
    let (gersh_lo, gersh_hi) = s.gershgorin();
    // g decreases from +inf to -inf on each exterior interval; positive means
    // the eigenvalue lies to the right.
    let (lo, hi) = match side {
        Side::Largest => {
            let pole = s.inv_gaps.iter().copied().fold(0.0, f64::max);
            let mut hi = gersh_hi.max(pole);
            let mut step = (hi - pole).abs().max(pole.abs() * EPS).max(f64::MIN_POSITIVE);
            let mut tries = 0;
            while hi <= pole || f.eval(hi)?.sign > 0 {
                hi = pole + step;
                step *= 2.0;
                tries += 1;
                if tries > 2100 || !hi.is_finite() {
                    return Err(EigenError::Bracket {
                        index: s.index,
                        side,
                    });
                }
            }
            (pole, hi)
        }
        Side::Smallest => {
            let pole = s.inv_gaps.iter().copied().fold(0.0, f64::min);
            let mut lo = gersh_lo.min(pole);
            let mut step = (pole - lo).abs().max(pole.abs() * EPS).max(f64::MIN_POSITIVE);
            let mut tries = 0;
            while lo >= pole || f.eval(lo)?.sign < 0 {
                lo = pole - step;
                step *= 2.0;
                tries += 1;
                if tries > 2100 || !lo.is_finite() {
                    return Err(EigenError::Bracket {
                        index: s.index,
                        side,
                    });
                }
            }
            (lo, pole)
        }
    };

    // the pole end of the bracket is an infinite value of g
    let (g_lo, g_hi) = match side {
        Side::Largest => (f64::INFINITY, f.eval(hi)?.value),
        Side::Smallest => (f.eval(lo)?.value, f64::NEG_INFINITY),
    };
    bisect_decreasing(lo, hi, g_lo, g_hi, |x| Ok(f.eval(x)?.value))
}

/// Bisection of a decreasing function on `[lo, hi]` down to adjacent
/// floats; returns the endpoint with the smaller residual.
fn bisect_decreasing(
    mut lo: f64,
    mut hi: f64,
    mut g_lo: f64,
    mut g_hi: f64,
    g: impl Fn(f64) -> Result<f64, EigenError>,
) -> Result<InverseEigenvalue, EigenError> {
    if g_lo == 0.0 {
        return Ok(InverseEigenvalue { nu: lo, iterations: 0, capped: false });
    }
    if g_hi == 0.0 {
        return Ok(InverseEigenvalue { nu: hi, iterations: 0, capped: false });
    }
    let mut iterations = 0;
    let mut capped = true;
    while iterations < MAX_BISECTION_STEPS {
        let mid = midpoint(lo, hi);
        if mid <= lo || mid >= hi {
            capped = false;
            break;
        }
        iterations += 1;
        let v = g(mid)?;
        if v > 0.0 {
            lo = mid;
            g_lo = v;
        } else if v < 0.0 {
            hi = mid;
            g_hi = v;
        } else {
            return Ok(InverseEigenvalue { nu: mid, iterations, capped: false });
        }
    }
    let nu = if g_lo.abs() <= g_hi.abs() { lo } else { hi };
    Ok(InverseEigenvalue { nu, iterations, capped })
}

/// `A^{-1} = diag(1/d_j, 0) + v v^T / s` with `v = (zeta_j / d_j, -1)` and
/// `s = phi(0)`. Used for an eigenvalue that is much closer to zero than to
/// any pole, where `1/nu + d_i` would cancel.
#[derive(Debug, Clone)]
pub struct ZeroInverse {
    pub inv_poles: Vec<f64>,
    pub v: Vec<f64>,
    pub s: f64,
    /// `(|alpha| + sum |zeta_j^2 / d_j|) / |s|`.
    pub k_s: f64,
}

impl ZeroInverse {
    pub fn new(m: &ArrowheadMatrix) -> Option<Self> {
        let s = m.secular_at_zero()?.to_f64();
        if s == 0.0 {
            return None;
        }
        let z = m.z_working();
        let inv_poles = m.poles().iter().map(|d| 1.0 / d).collect();
        let v = z.iter().zip(m.poles()).map(|(z, d)| z / d).collect();
        let mag = z
            .iter()
            .zip(m.poles())
            .fold(m.alpha_working().abs(), |acc, (z, d)| acc + (z * z / d).abs());
        Some(Self {
            inv_poles,
            v,
            s,
            k_s: mag / s.abs(),
        })
    }

    /// `s + sum v_j^2 / (1/d_j - mu) - 1/mu`, increasing in `mu` between poles.
    pub fn eval(&self, mu: f64) -> Result<f64, EigenError> {
        if mu == 0.0 {
            return Err(EigenError::AtPole { pole: 0.0 });
        }
        let mut g = self.s - 1.0 / mu;
        for (&p, &v) in self.inv_poles.iter().zip(&self.v) {
            let gap = p - mu;
            if gap == 0.0 {
                return Err(EigenError::AtPole { pole: p });
            }
            g += v * v / gap;
        }
        Ok(g)
    }

    /// The eigenvalue of `A^{-1}` beyond every pole on the side of the sign
    /// of `s`: the reciprocal of the eigenvalue of `A` nearest zero.
    pub fn extremal_eig(&self) -> Result<InverseEigenvalue, EigenError> {
        let vv = self.v.iter().fold(1.0, |acc, v| acc + v * v);
        let reach = vv / self.s.abs();
        let positive = self.s > 0.0;
        let pole = if positive {
            self.inv_poles.iter().copied().fold(0.0, f64::max)
        } else {
            self.inv_poles.iter().copied().fold(0.0, f64::min)
        };
        let dir = if positive { 1.0 } else { -1.0 };
        let mut step = reach.max(pole.abs() * EPS).max(f64::MIN_POSITIVE);
        let mut far = pole + dir * step;
        let mut tries = 0;
        // g is increasing: the far end must have the sign of s
        while far == pole || self.eval(far)? * dir < 0.0 {
            step *= 2.0;
            far = pole + dir * step;
            tries += 1;
            if tries > 2100 || !far.is_finite() {
                return Err(EigenError::Bracket {
                    index: usize::MAX,
                    side: if positive { Side::Largest } else { Side::Smallest },
                });
            }
        }
        // bisect -g, which decreases
        let neg = |x: f64| self.eval(x).map(|g| -g);
        if positive {
            bisect_decreasing(pole, far, f64::INFINITY, neg(far)?, neg)
        } else {
            bisect_decreasing(far, pole, neg(far)?, f64::NEG_INFINITY, neg)
        }
    }
}

/// Options for [`eigenvalue_k`].
#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub tau_b: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tau_b: DEFAULT_TAU_B,
        }
    }
}

/// One computed root with its diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct RootResult {
    /// 1-based position in descending order.
    pub k: usize,
    pub lambda: f64,
    /// `1/nu + d_i` before rounding, as an exact pair.
    #[serde(skip)]
    pub lambda_dd: DoubleDouble,
    /// 0-based pole index used as the shift; `None` for order-1 matrices,
    /// deflated zero roots and the zero shift.
    pub shift_index: Option<usize>,
    pub shift: f64,
    pub side: Side,
    pub k_b: f64,
    pub b_escalated: bool,
    /// Computed from the inverse of the unshifted matrix; `k_b` then holds
    /// the amplification factor of `phi(0)`.
    pub zero_shift: bool,
    /// A priori bound on `|kappa_lambda|`, `|lambda_hat - lambda| <=
    /// kappa_bound * eps * |lambda|`.
    pub kappa_bound: f64,
    /// `max(2 max_{j != i} |kappa_zeta_j|, |kappa_alpha|)` for the
    /// double-double matrix entries, when per-pole conditions are known.
    pub kappa_a_double: Option<f64>,
    /// Whether `kappa_a_double * K_b <= 1/eps`; only set when `b` was
    /// escalated.
    pub final2_ok: Option<bool>,
    /// `|u(lambda)|` by compensated Horner.
    pub residual: Option<f64>,
    /// `u~(lambda) * (kappa_bound + 4n) * eps`.
    pub residual_bound: Option<f64>,
    pub iterations: usize,
    pub capped: bool,
    /// Chosen shift was ambiguous (midpoint test inside its error bound).
    pub tie: bool,
    /// The shift was switched after the post hoc nearest-pole check.
    pub reshifted: bool,
    pub low_confidence: bool,
}

/// Bound on `|kappa_lambda|` for an order-`n` matrix.
pub fn kappa_bound(n: usize, k_b: f64, escalated: bool) -> f64 {
    let nf = n as f64;
    let sq = nf.sqrt();
    let bisection = 3.18 * nf * (sq + 1.0) + 4.0;
    if escalated {
        (6.0 * nf + 21.0) * sq + bisection
    } else {
        3.0 * sq * ((3.0 * nf + 6.0) * k_b + 2.0 * nf + 7.0) + bisection
    }
}

fn kappa_a_double(m: &ArrowheadMatrix, i: usize) -> Option<f64> {
    let n = m.order() as f64;
    let cond = m.cond();
    if cond.iter().any(|c| c.is_nan()) {
        return None;
    }
    let zeta = cond
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &c)| n * c + (n + 1.0) / 2.0)
        .fold(0.0, f64::max);
    let alpha = m.k_alpha() * (n - 1.0);
    Some((2.0 * zeta).max(alpha))
}

/// Picks the shift for `lambda_k` (1-based `k`) in a matrix with at least
/// one pole. Returns `(pole index, side, tie)`.
pub fn choose_shift(m: &ArrowheadMatrix, k: usize) -> Result<(usize, Side, bool), EigenError> {
    let n = m.order();
    if k == 0 || k > n {
        return Err(EigenError::IndexOutOfRange { k, n });
    }
    if k == 1 {
        return Ok((0, Side::Largest, false));
    }
    if k == n {
        return Ok((n - 2, Side::Smallest, false));
    }
    let d = m.poles();
    let (upper, lower) = (k - 2, k - 1);
    let mid = midpoint(d[lower], d[upper]);
    let f = SecularFunction::of_matrix(m);
    if mid <= d[lower] || mid >= d[upper] {
        // adjacent floats: either pole is as near as the other
        return Ok(tie_break(m, upper, lower));
    }
    let v = f.eval(mid)?;
    if v.value.abs() <= f.error_bound(mid) {
        return Ok(tie_break(m, upper, lower));
    }
    if v.sign > 0 {
        Ok((upper, Side::Smallest, false))
    } else {
        Ok((lower, Side::Largest, false))
    }
}

fn tie_break(m: &ArrowheadMatrix, upper: usize, lower: usize) -> (usize, Side, bool) {
    let z = m.z();
    if z[upper].abs() >= z[lower].abs() {
        (upper, Side::Smallest, true)
    } else {
        (lower, Side::Largest, true)
    }
}

fn solve_with_shift(
    m: &ArrowheadMatrix,
    i: usize,
    side: Side,
    tau_b: f64,
) -> Result<(ShiftedInverse, InverseEigenvalue, DoubleDouble), EigenError> {
    let s = shift_invert(m, i, tau_b)?;
    let nu = extremal_inverse_eig(&s, side)?;
    let (hi, lo) = two_sum(1.0 / nu.nu, s.shift);
    Ok((s, nu, DoubleDouble::new(hi, lo)))
}

enum Shift<'a> {
    None,
    Pole(usize, &'a ShiftedInverse),
    Zero(&'a ZeroInverse),
}

/// The `k`-th largest eigenvalue (1-based) of `m`.
pub fn eigenvalue_k(m: &ArrowheadMatrix, k: usize, opts: &EigenOptions) -> Result<RootResult, EigenError> {
    let n = m.order();
    if k == 0 || k > n {
        return Err(EigenError::IndexOutOfRange { k, n });
    }
    if n == 1 {
        return Ok(finish(m, k, m.alpha(), Shift::None, Side::Largest, 0, false, false, false));
    }
    let (mut i, mut side, tie) = choose_shift(m, k)?;
    let (mut s, mut nu, mut lam) = solve_with_shift(m, i, side, opts.tau_b)?;
    let d = m.poles();

    // post hoc: the shift must be the nearest pole
    let mut reshifted = false;
    if k > 1 && k < n {
        let (other, other_side) = if i == k - 2 {
            (k - 1, Side::Largest)
        } else {
            (k - 2, Side::Smallest)
        };
        let l = lam.to_f64();
        if (l - d[other]).abs() < (l - d[i]).abs() {
            let alt = solve_with_shift(m, other, other_side, opts.tau_b)?;
            i = other;
            side = other_side;
            s = alt.0;
            nu = alt.1;
            lam = alt.2;
            reshifted = true;
        }
    }

    // zero inside the interlacing interval and nearer than the pole
    let below = if k < n { d[k - 1] } else { f64::NEG_INFINITY };
    let above = if k > 1 { d[k - 2] } else { f64::INFINITY };
    let l = lam.to_f64();
    if below < 0.0 && 0.0 < above && l.abs() < (l - d[i]).abs() {
        if let Some(zi) = ZeroInverse::new(m) {
            let mu = zi.extremal_eig()?;
            let lam = DoubleDouble::from(mu.nu).recip().unwrap_or(lam);
            let side = if zi.s > 0.0 { Side::Largest } else { Side::Smallest };
            return Ok(finish(m, k, lam, Shift::Zero(&zi), side, mu.iterations, tie, reshifted, mu.capped));
        }
    }
    Ok(finish(m, k, lam, Shift::Pole(i, &s), side, nu.iterations, tie, reshifted, nu.capped))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    m: &ArrowheadMatrix,
    k: usize,
    lambda_dd: DoubleDouble,
    shift: Shift<'_>,
    side: Side,
    iterations: usize,
    tie: bool,
    reshifted: bool,
    capped: bool,
) -> RootResult {
    let n = m.order();
    let lambda = lambda_dd.to_f64();
    let (shift_index, shift_value, k_b, esc, kappa_a) = match shift {
        Shift::None => (None, lambda, 1.0, false, None),
        Shift::Pole(i, s) => (Some(i), s.shift, s.k_b, s.b_escalated, kappa_a_double(m, i)),
        Shift::Zero(z) => (None, 0.0, z.k_s, true, kappa_a_double(m, usize::MAX)),
    };
    let zero_shift = matches!(shift, Shift::Zero(_));
    let kb = kappa_bound(n, k_b, esc);
    let (residual, residual_bound) = match m.source() {
        Some(u) => {
            let (h, c) = u.horner_compensated(lambda);
            let r = (h + c).abs();
            let bound = u.abs_horner(lambda) * (kb + 4.0 * n as f64) * EPS;
            (Some(r), Some(bound))
        }
        None => (None, None),
    };
    RootResult {
        k,
        lambda,
        lambda_dd,
        shift_index,
        shift: shift_value,
        side,
        k_b,
        b_escalated: esc,
        zero_shift,
        kappa_bound: kb,
        kappa_a_double: kappa_a,
        final2_ok: kappa_a.filter(|_| esc).map(|ka| ka * k_b * EPS <= 1.0),
        residual,
        residual_bound,
        iterations,
        capped,
        tie,
        reshifted,
        low_confidence: kb * EPS > LOW_CONFIDENCE,
    }
}
