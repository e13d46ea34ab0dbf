//! Generalized companion arrowhead matrix of a monic polynomial.
//!
//! For interpolation points `d_1 > ... > d_{n-1}` with `u(d_j) != 0`, the
//! symmetric arrowhead matrix
//!
//! ```text
//!     [ diag(d)  z     ]
//!     [ z^T      alpha ]
//! ```
//!
//! with `zeta_j^2 = -u(d_j) / prod_{i != j} (d_j - d_i)` and
//! `alpha = -a_1 - sum d_j` has characteristic polynomial `u`. It is real
//! exactly when the points interlace the (real, distinct) roots of `u`.
//! `z` and `alpha` are formed in double-double arithmetic.

use thiserror::Error;

use crate::dd::{DdError, DoubleDouble};
use crate::oracle::{self, OracleError};
use crate::polynomial::{PolyError, Polynomial};
use crate::EPS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("expected {expected} interpolation points, got {got}")]
    PointCount { expected: usize, got: usize },
    #[error("interpolation point {value} is not finite")]
    NonFinitePoint { value: f64 },
    #[error("interpolation points are not distinct ({value} repeats)")]
    RepeatedPoint { value: f64 },
    #[error(
        "points do not interlace the roots: -u(d)/v'(d) = {ratio:e} <= 0 at d[{index}] = {point:e}"
    )]
    NotInterlacing { index: usize, point: f64, ratio: f64 },
    #[error("d[{index}] = {point:e} is numerically a root (u(d) == 0 in double-double)")]
    RootHit { index: usize, point: f64 },
    #[error("characteristic polynomial expansion supports degree <= {max}, got {degree}")]
    TooLarge { degree: usize, max: usize },
    #[error(transparent)]
    Dd(#[from] DdError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Largest degree accepted by [`ArrowheadMatrix::char_poly_check`].
pub const CHAR_POLY_MAX_DEGREE: usize = 10;

#[derive(Debug, Clone)]
pub struct ArrowheadMatrix {
    d: Vec<f64>,
    z: Vec<DoubleDouble>,
    alpha: DoubleDouble,
    a1: f64,
    /// `cond(u, d_j)` per pole; NaN when the matrix was built from
    /// precomputed values.
    cond: Vec<f64>,
    /// `perm[j]` is the input position of the sorted pole `d[j]`.
    perm: Vec<usize>,
    source: Option<Polynomial>,
}

/// Sorts points descending and rejects non-finite or repeated values.
pub fn sort_points(points: &[f64]) -> Result<(Vec<f64>, Vec<usize>), BuildError> {
    if let Some(&value) = points.iter().find(|x| !x.is_finite()) {
        return Err(BuildError::NonFinitePoint { value });
    }
    let mut perm: Vec<usize> = (0..points.len()).collect();
    perm.sort_by(|&a, &b| points[b].total_cmp(&points[a]));
    let d: Vec<f64> = perm.iter().map(|&i| points[i]).collect();
    if let Some(w) = d.windows(2).find(|w| w[0] == w[1]) {
        return Err(BuildError::RepeatedPoint { value: w[0] });
    }
    Ok((d, perm))
}

/// `prod_{i != j} (d_j - d_i)` in double-double.
pub fn node_derivative(d: &[f64], j: usize) -> DoubleDouble {
    d.iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .fold(DoubleDouble::ONE, |acc, (_, &di)| {
            acc * DoubleDouble::sum_f64(d[j], -di)
        })
}

/// `(|a_1| + sum |d_j|) / |alpha|` with `alpha = -a_1 - sum d_j` formed in
/// double-double. Infinite when `alpha` rounds to zero.
pub fn k_alpha(a1: f64, d: &[f64]) -> f64 {
    let alpha = d
        .iter()
        .fold(DoubleDouble::from(-a1), |acc, &x| acc.add_f64(-x))
        .to_f64()
        .abs();
    if alpha == 0.0 {
        return f64::INFINITY;
    }
    d.iter().fold(a1.abs(), |s, x| s + x.abs()) / alpha
}

impl ArrowheadMatrix {
    /// Builds the arrowhead matrix of `u` on the interpolation points `points`.
    pub fn build(u: &Polynomial, points: &[f64]) -> Result<Self, BuildError> {
        let n = u.degree();
        if points.len() + 1 != n {
            return Err(BuildError::PointCount {
                expected: n - 1,
                got: points.len(),
            });
        }
        let (d, perm) = sort_points(points)?;
        let values: Vec<DoubleDouble> = d.iter().map(|&x| u.horner_dd(x)).collect();
        let cond = d
            .iter()
            .zip(&values)
            .map(|(&x, v)| {
                let av = v.to_f64().abs();
                if av == 0.0 {
                    f64::INFINITY
                } else {
                    u.abs_horner(x) / av
                }
            })
            .collect();
        let mut m = Self::assemble(d, perm, &values, u.a1())?;
        m.cond = cond;
        m.source = Some(u.clone());
        Ok(m)
    }

    /// Builds from precomputed values `u(d_j)` (already sorted descending to
    /// match `points`). Used when `u` is known in factored form.
    pub fn from_values(points: &[f64], values: &[DoubleDouble], a1: f64) -> Result<Self, BuildError> {
        if points.len() != values.len() {
            return Err(BuildError::PointCount {
                expected: values.len(),
                got: points.len(),
            });
        }
        let (d, perm) = sort_points(points)?;
        let sorted: Vec<DoubleDouble> = perm.iter().map(|&i| values[i]).collect();
        Self::assemble(d, perm, &sorted, a1)
    }

    fn assemble(
        d: Vec<f64>,
        perm: Vec<usize>,
        values: &[DoubleDouble],
        a1: f64,
    ) -> Result<Self, BuildError> {
        let mut z = Vec::with_capacity(d.len());
        for (j, &s) in values.iter().enumerate() {
            if s.is_zero() {
                return Err(BuildError::RootHit {
                    index: j,
                    point: d[j],
                });
            }
            let ratio = (-s).checked_div(node_derivative(&d, j))?;
            if !(ratio.hi() > 0.0) {
                return Err(BuildError::NotInterlacing {
                    index: j,
                    point: d[j],
                    ratio: ratio.to_f64(),
                });
            }
            z.push(ratio.sqrt()?);
        }
        let alpha = d
            .iter()
            .fold(DoubleDouble::from(-a1), |acc, &x| acc.add_f64(-x));
        let cond = vec![f64::NAN; d.len()];
        Ok(Self {
            d,
            z,
            alpha,
            a1,
            cond,
            perm,
            source: None,
        })
    }

    /// Matrix order `n` (the polynomial degree).
    pub fn order(&self) -> usize {
        self.d.len() + 1
    }

    pub fn poles(&self) -> &[f64] {
        &self.d
    }

    pub fn z(&self) -> &[DoubleDouble] {
        &self.z
    }

    pub fn alpha(&self) -> DoubleDouble {
        self.alpha
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn cond(&self) -> &[f64] {
        &self.cond
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn source(&self) -> Option<&Polynomial> {
        self.source.as_ref()
    }

    /// Working-precision copies of `zeta_j`.
    pub fn z_working(&self) -> Vec<f64> {
        self.z.iter().map(|x| x.to_f64()).collect()
    }

    pub fn alpha_working(&self) -> f64 {
        self.alpha.to_f64()
    }

    /// Amplification of the error in `alpha`; see [`k_alpha`].
    pub fn k_alpha(&self) -> f64 {
        k_alpha(self.a1, &self.d)
    }

    /// `true` when `k_alpha <= 1/eps` (the regime where `alpha` keeps full
    /// working accuracy).
    pub fn k_alpha_ok(&self) -> bool {
        self.k_alpha() * EPS <= 1.0
    }

    /// `phi(0) = alpha - sum zeta_j^2 / d_j` in double-double, or `None` when
    /// some pole is zero. With the source polynomial known this is
    /// `(-1)^n u(0) / prod d_j`, free of cancellation.
    pub fn secular_at_zero(&self) -> Option<DoubleDouble> {
        if self.d.contains(&0.0) {
            return None;
        }
        match &self.source {
            Some(u) => {
                let n = self.order();
                let det = if n.is_multiple_of(2) {
                    u.constant_term()
                } else {
                    -u.constant_term()
                };
                let prod = self
                    .d
                    .iter()
                    .fold(DoubleDouble::ONE, |acc, &x| acc.mul_f64(x));
                Some(DoubleDouble::from(det) / prod)
            }
            None => Some(
                self.d
                    .iter()
                    .zip(&self.z)
                    .fold(self.alpha, |acc, (&x, z)| acc - z.square() / DoubleDouble::from(x)),
            ),
        }
    }

    /// Characteristic polynomial of the stored matrix, expanded exactly and
    /// rounded to working precision. Test support for small orders.
    pub fn char_poly_check(&self) -> Result<Polynomial, BuildError> {
        let n = self.order();
        if n > CHAR_POLY_MAX_DEGREE {
            return Err(BuildError::TooLarge {
                degree: n,
                max: CHAR_POLY_MAX_DEGREE,
            });
        }
        let exact = oracle::char_poly_exact(&self.d, &self.z, self.alpha)?;
        Ok(Polynomial::new(exact.to_f64s())?)
    }

    /// Dense copy of the working-precision matrix, arrow in the last row.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.order();
        let z = self.z_working();
        let mut a = vec![vec![0.0; n]; n];
        for (j, &dj) in self.d.iter().enumerate() {
            a[j][j] = dj;
            a[j][n - 1] = z[j];
            a[n - 1][j] = z[j];
        }
        a[n - 1][n - 1] = self.alpha_working();
        a
    }
}
