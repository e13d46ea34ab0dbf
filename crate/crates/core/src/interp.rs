//! Interpolation points that interlace the roots of `u`.
//!
//! Two sources of candidates: the roots of `u'`, and the reciprocals of the
//! roots of the derivative of the reversed polynomial. Both are computed
//! with a conventional working-precision eigensolver on a balanced
//! companion matrix; they only need to interlace, not to be accurate.

use std::fmt;

use nalgebra::{DMatrix, Schur};
use serde::Serialize;
use thiserror::Error;

use crate::polynomial::{PolyError, Polynomial};

/// Default magnitude spread above which the reciprocal strategy goes first.
pub const DEFAULT_SPREAD_THRESHOLD: f64 = 1.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Derivative,
    Reciprocal,
    Auto,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "derivative" => Ok(Self::Derivative),
            "reciprocal" => Ok(Self::Reciprocal),
            "auto" => Ok(Self::Auto),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

/// Where the accepted points came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointSource {
    Derivative,
    Reciprocal,
    Combination,
    Supplied,
}

impl fmt::Display for PointSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Derivative => "derivative",
            Self::Reciprocal => "reciprocal",
            Self::Combination => "combination",
            Self::Supplied => "supplied",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("{0}: computed derivative roots include complex values")]
    ComplexRoots(PointSource),
    #[error("{0}: eigenvalue iteration did not converge")]
    NoConvergence(PointSource),
    #[error("{0}: points do not interlace the roots of u")]
    NotInterlacing(PointSource),
    #[error("{0}: {1}")]
    Poly(PointSource, PolyError),
    #[error("polynomial degree must be at least 2 to need interpolation points")]
    DegreeTooLow,
    #[error("no strategy produced interlacing points: {}", .0.join("; "))]
    AllStrategiesFailed(Vec<String>),
}

#[derive(Debug, Clone, Copy)]
pub struct InterpConfig {
    pub spread_threshold: f64,
}

impl Default for InterpConfig {
    fn default() -> Self {
        Self {
            spread_threshold: DEFAULT_SPREAD_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointCheck {
    pub value: f64,
    /// Sign of `u(d_j)` in double-double.
    pub sign: f64,
    pub expected: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterlacingReport {
    pub ok: bool,
    pub ordered: bool,
    pub points: Vec<PointCheck>,
}

/// Accepted points with the strategy that produced them.
#[derive(Debug, Clone)]
pub struct Selection {
    pub points: Vec<f64>,
    pub source: PointSource,
    pub report: InterlacingReport,
    /// Failures of strategies tried before the accepted one.
    pub failures: Vec<String>,
}

/// Sign `u(d_j)` must have for the 0-based point `j`: one root lies above
/// `d_1`, so `u(d_1) < 0`, and the signs alternate from there.
fn expected_sign(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        -1.0
    } else {
        1.0
    }
}

/// Checks that `d` (descending) interlaces the roots of `u`.
pub fn interlacing_check(u: &Polynomial, d: &[f64]) -> InterlacingReport {
    let ordered = d.windows(2).all(|w| w[0] > w[1]) && d.len() + 1 == u.degree();
    let points: Vec<PointCheck> = d
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let sign = u.horner_dd(x).signum();
            let expected = expected_sign(j);
            PointCheck {
                value: x,
                sign,
                expected,
                ok: sign == expected,
            }
        })
        .collect();
    InterlacingReport {
        ok: ordered && points.iter().all(|p| p.ok),
        ordered,
        points,
    }
}

/// Parlett-Reinsch diagonal balancing with power-of-two scalings.
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c >= g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Real eigenvalues of the companion matrix of the monic `p`, descending.
/// `Err(ComplexRoots)` when any eigenvalue has a nonzero imaginary part.
fn companion_roots(p: &Polynomial, source: PointSource) -> Result<Vec<f64>, InterpError> {
    let c = p.coeffs();
    let m = p.degree();
    let mut roots = match m {
        0 => Vec::new(),
        1 => vec![-c[1]],
        _ => {
            let mut a = DMatrix::<f64>::zeros(m, m);
            for j in 0..m {
                a[(0, j)] = -c[j + 1];
            }
            for i in 1..m {
                a[(i, i - 1)] = 1.0;
            }
            // QR on the row and column forms can differ a lot for badly
            // scaled coefficients; the first form with a real spectrum wins.
            let forms = [a.transpose(), a];
            let mut last = InterpError::NoConvergence(source);
            let mut found = None;
            for mut f in forms {
                balance(&mut f);
                match Schur::try_new(f, f64::EPSILON, 100 * m) {
                    None => last = InterpError::NoConvergence(source),
                    Some(schur) => {
                        let eig = schur.complex_eigenvalues();
                        if eig.iter().any(|z| z.im != 0.0) {
                            last = InterpError::ComplexRoots(source);
                        } else {
                            found = Some(eig.iter().map(|z| z.re).collect::<Vec<f64>>());
                            break;
                        }
                    }
                }
            }
            found.ok_or(last)?
        }
    };
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok(roots)
}

/// Roots of `u'`, descending.
pub fn points_from_derivative(u: &Polynomial) -> Result<Vec<f64>, InterpError> {
    if u.degree() < 2 {
        return Err(InterpError::DegreeTooLow);
    }
    companion_roots(&u.derivative(), PointSource::Derivative)
}

/// Reciprocals of the roots of the derivative of the reversed polynomial,
/// descending.
pub fn points_from_reversed(u: &Polynomial) -> Result<Vec<f64>, InterpError> {
    if u.degree() < 2 {
        return Err(InterpError::DegreeTooLow);
    }
    let rev = u
        .reverse()
        .map_err(|e| InterpError::Poly(PointSource::Reciprocal, e))?;
    let roots = companion_roots(&rev.derivative(), PointSource::Reciprocal)?;
    if roots.contains(&0.0) {
        // a zero root of the reversed derivative has no finite reciprocal
        return Err(InterpError::NotInterlacing(PointSource::Reciprocal));
    }
    let mut d: Vec<f64> = roots.iter().map(|r| 1.0 / r).collect();
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

/// Ratio of Fujiwara's upper bound on the root magnitudes to the
/// corresponding lower bound (from the reversed polynomial).
pub fn root_magnitude_spread(u: &Polynomial) -> f64 {
    fn fujiwara(c: &[f64]) -> f64 {
        c.iter()
            .enumerate()
            .skip(1)
            .map(|(i, a)| a.abs().powf(1.0 / i as f64))
            .fold(0.0, f64::max)
            * 2.0
    }
    let upper = fujiwara(u.coeffs());
    match u.reverse() {
        Ok(rev) => upper * fujiwara(rev.coeffs()),
        Err(_) => f64::INFINITY,
    }
}

/// Replaces a candidate at which `u` vanishes in double-double by an
/// adjacent float with the sign required at position `j`.
fn nudge_root_hit(u: &Polynomial, x: f64, j: usize) -> f64 {
    if !u.horner_dd(x).is_zero() {
        return x;
    }
    let want = expected_sign(j);
    for y in [x.next_down(), x.next_up()] {
        if u.horner_dd(y).signum() == want {
            return y;
        }
    }
    x
}

fn validated(u: &Polynomial, mut d: Vec<f64>, source: PointSource) -> Result<Selection, InterpError> {
    for j in 0..d.len() {
        d[j] = nudge_root_hit(u, d[j], j);
    }
    let report = interlacing_check(u, &d);
    if report.ok {
        Ok(Selection {
            points: d,
            source,
            report,
            failures: Vec::new(),
        })
    } else {
        Err(InterpError::NotInterlacing(source))
    }
}

/// Picks, from the union of candidate lists, a descending subsequence whose
/// signs of `u` follow the interlacing pattern. Greedy matching is optimal
/// for subsequence search.
fn combine(u: &Polynomial, candidates: &[&[f64]]) -> Result<Selection, InterpError> {
    let mut all: Vec<f64> = candidates.iter().flat_map(|c| c.iter().copied()).collect();
    all.retain(|x| x.is_finite());
    all.sort_by(|a, b| b.total_cmp(a));
    all.dedup();
    let need = u.degree() - 1;
    let mut chosen = Vec::with_capacity(need);
    for &x in &all {
        if chosen.len() == need {
            break;
        }
        let j = chosen.len();
        let y = nudge_root_hit(u, x, j);
        if chosen.last().is_some_and(|&prev| y >= prev) {
            continue;
        }
        if u.horner_dd(y).signum() == expected_sign(j) {
            chosen.push(y);
        }
    }
    if chosen.len() < need {
        return Err(InterpError::NotInterlacing(PointSource::Combination));
    }
    validated(u, chosen, PointSource::Combination)
}

/// Interpolation points for `u` according to `strategy`.
pub fn select_points(
    u: &Polynomial,
    strategy: Strategy,
    config: &InterpConfig,
) -> Result<Selection, InterpError> {
    if u.degree() < 2 {
        return Err(InterpError::DegreeTooLow);
    }
    match strategy {
        Strategy::Derivative => validated(u, points_from_derivative(u)?, PointSource::Derivative),
        Strategy::Reciprocal => validated(u, points_from_reversed(u)?, PointSource::Reciprocal),
        Strategy::Auto => {
            let reciprocal_first = root_magnitude_spread(u) > config.spread_threshold;
            let order = if reciprocal_first {
                [PointSource::Reciprocal, PointSource::Derivative]
            } else {
                [PointSource::Derivative, PointSource::Reciprocal]
            };
            let mut failures = Vec::new();
            let mut lists: Vec<Vec<f64>> = Vec::new();
            for source in order {
                let candidates = match source {
                    PointSource::Reciprocal => points_from_reversed(u),
                    _ => points_from_derivative(u),
                };
                match candidates {
                    Ok(d) => match validated(u, d.clone(), source) {
                        Ok(mut sel) => {
                            sel.failures = failures;
                            return Ok(sel);
                        }
                        Err(e) => {
                            failures.push(e.to_string());
                            lists.push(d);
                        }
                    },
                    Err(e) => failures.push(e.to_string()),
                }
            }
            let refs: Vec<&[f64]> = lists.iter().map(|v| v.as_slice()).collect();
            match combine(u, &refs) {
                Ok(mut sel) => {
                    sel.failures = failures;
                    Ok(sel)
                }
                Err(e) => {
                    failures.push(e.to_string());
                    Err(InterpError::AllStrategiesFailed(failures))
                }
            }
        }
    }
}
