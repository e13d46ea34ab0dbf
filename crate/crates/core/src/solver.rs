//! End-to-end root finding, Wilkinson test polynomials, verification
//! against the exact oracle and a timing harness.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::aheig::{self, EigenError, EigenOptions, RootResult, Side, DEFAULT_TAU_B};
use crate::dd::DoubleDouble;
use crate::fiedler::{ArrowheadMatrix, BuildError};
use crate::interp::{self, InterpConfig, InterpError, PointSource, Strategy};
use crate::oracle::{self, Dyadic, ExactPoly, OracleError};
use crate::polynomial::{PolyError, Polynomial};
use crate::EPS;

/// Largest Wilkinson degree whose coefficients are generated.
pub const WILKINSON_MAX: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Input(#[from] PolyError),
    #[error(transparent)]
    Strategy(#[from] InterpError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("zero is a multiple root")]
    MultipleZeroRoot,
    #[error("Wilkinson degree must be in 1..={max}, got {n}")]
    WilkinsonDegree { n: usize, max: usize },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl SolveError {
    /// Process exit code: 2 for point-selection failures, 3 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) | Self::WilkinsonDegree { .. } | Self::MultipleZeroRoot => 3,
            Self::Strategy(_) => 2,
            Self::Build(
                BuildError::NotInterlacing { .. }
                | BuildError::RootHit { .. }
                | BuildError::RepeatedPoint { .. }
                | BuildError::NonFinitePoint { .. },
            ) => 2,
            Self::Build(BuildError::PointCount { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub strategy: Strategy,
    /// Interpolation points to use instead of computing them.
    pub points: Option<Vec<f64>>,
    pub tau_b: f64,
    /// Worker threads for the per-root phase; `None` runs sequentially.
    pub threads: Option<usize>,
    pub interp: InterpConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            points: None,
            tau_b: DEFAULT_TAU_B,
            threads: None,
            interp: InterpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DPoint {
    pub value: f64,
    pub cond: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Timings {
    #[serde(serialize_with = "secs")]
    pub build: Duration,
    #[serde(serialize_with = "secs")]
    pub roots: Duration,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub degree: usize,
    /// Descending.
    pub roots: Vec<RootResult>,
    pub d_points: Vec<DPoint>,
    pub strategy_used: Option<PointSource>,
    pub k_alpha: Option<f64>,
    pub max_cond: Option<f64>,
    pub max_k_b: f64,
    pub escalation_count: usize,
    pub zero_root_deflated: bool,
    /// Strategies that were tried and rejected before the accepted one.
    pub strategy_failures: Vec<String>,
    pub timings: Timings,
}

impl SolveReport {
    pub fn values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.lambda).collect()
    }
}

/// A root known exactly without an eigenvalue solve.
fn direct_root(u: &Polynomial, k: usize, lambda: f64) -> RootResult {
    let n = u.degree();
    let kb = aheig::kappa_bound(n, 1.0, false);
    let (h, c) = u.horner_compensated(lambda);
    RootResult {
        k,
        lambda,
        lambda_dd: DoubleDouble::from(lambda),
        shift_index: None,
        shift: lambda,
        side: Side::Largest,
        k_b: 1.0,
        b_escalated: false,
        zero_shift: false,
        kappa_bound: kb,
        kappa_a_double: None,
        final2_ok: None,
        residual: Some((h + c).abs()),
        residual_bound: Some(u.abs_horner(lambda) * (kb + 4.0 * n as f64) * EPS),
        iterations: 0,
        capped: false,
        tie: false,
        reshifted: false,
        low_confidence: false,
    }
}

/// All roots of `u`, descending, with diagnostics.
pub fn solve(u: &Polynomial, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let n = u.degree();
    if n == 1 {
        return Ok(SolveReport {
            degree: 1,
            roots: vec![direct_root(u, 1, -u.a1())],
            d_points: Vec::new(),
            strategy_used: None,
            k_alpha: None,
            max_cond: None,
            max_k_b: 1.0,
            escalation_count: 0,
            zero_root_deflated: false,
            strategy_failures: Vec::new(),
            timings: Timings::default(),
        });
    }
    if u.constant_term() == 0.0 {
        return solve_deflated(u, opts);
    }

    let start = Instant::now();
    let (points, source, failures) = match &opts.points {
        Some(p) => (p.clone(), PointSource::Supplied, Vec::new()),
        None => {
            let sel = interp::select_points(u, opts.strategy, &opts.interp)?;
            (sel.points, sel.source, sel.failures)
        }
    };
    let m = ArrowheadMatrix::build(u, &points)?;
    let build = start.elapsed();

    let start = Instant::now();
    let eig = EigenOptions { tau_b: opts.tau_b };
    let roots = compute_roots(&m, &eig, opts.threads)?;
    let roots_time = start.elapsed();

    let d_points: Vec<DPoint> = m
        .poles()
        .iter()
        .zip(m.cond())
        .map(|(&value, &cond)| DPoint { value, cond })
        .collect();
    let max_cond = d_points.iter().map(|p| p.cond).fold(0.0, f64::max);
    Ok(SolveReport {
        degree: n,
        max_k_b: roots.iter().map(|r| r.k_b).fold(0.0, f64::max),
        escalation_count: roots.iter().filter(|r| r.b_escalated).count(),
        roots,
        d_points,
        strategy_used: Some(source),
        k_alpha: Some(m.k_alpha()),
        max_cond: Some(max_cond),
        zero_root_deflated: false,
        strategy_failures: failures,
        timings: Timings {
            build,
            roots: roots_time,
        },
    })
}

/// Every eigenvalue of `m`, in order `k = 1..n` regardless of scheduling.
pub fn compute_roots(
    m: &ArrowheadMatrix,
    eig: &EigenOptions,
    threads: Option<usize>,
) -> Result<Vec<RootResult>, SolveError> {
    let n = m.order();
    match threads {
        None | Some(0) | Some(1) => (1..=n)
            .map(|k| aheig::eigenvalue_k(m, k, eig).map_err(SolveError::from))
            .collect(),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| SolveError::ThreadPool(e.to_string()))?;
            pool.install(|| {
                (1..=n)
                    .into_par_iter()
                    .map(|k| aheig::eigenvalue_k(m, k, eig).map_err(SolveError::from))
                    .collect()
            })
        }
    }
}

fn solve_deflated(u: &Polynomial, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let c = u.coeffs();
    let n = u.degree();
    if c[n - 1] == 0.0 {
        return Err(SolveError::MultipleZeroRoot);
    }
    let reduced = Polynomial::new(c[..n].to_vec())?;
    let mut opts = opts.clone();
    if let Some(p) = &mut opts.points {
        // the supplied points were chosen for u; drop one to match the
        // reduced degree only if the caller gave exactly n - 2
        if p.len() + 1 != n - 1 {
            return Err(BuildError::PointCount {
                expected: n - 2,
                got: p.len(),
            }
            .into());
        }
    }
    let mut report = solve(&reduced, &opts)?;
    let pos = report.roots.iter().position(|r| r.lambda < 0.0).unwrap_or(n - 1);
    report.roots.insert(pos, direct_root(u, pos + 1, 0.0));
    for (j, r) in report.roots.iter_mut().enumerate() {
        r.k = j + 1;
    }
    report.degree = n;
    report.zero_root_deflated = true;
    Ok(report)
}

/// Expanded `prod_{i=1..n} (x - i)`.
#[derive(Debug, Clone)]
pub struct Wilkinson {
    pub poly: Polynomial,
    pub exact_coeffs: Vec<BigInt>,
    /// Every coefficient is exactly representable in binary64.
    pub representable: bool,
}

pub fn generate_wilkinson(n: usize) -> Result<Wilkinson, SolveError> {
    if n == 0 || n > WILKINSON_MAX {
        return Err(SolveError::WilkinsonDegree {
            n,
            max: WILKINSON_MAX,
        });
    }
    let mut c: Vec<BigInt> = vec![BigInt::from(1)];
    for i in 1..=n {
        let mut next = vec![BigInt::zero(); c.len() + 1];
        for (j, a) in c.iter().enumerate() {
            next[j] += a;
            next[j + 1] -= a * BigInt::from(i);
        }
        c = next;
    }
    let floats: Vec<f64> = c.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).collect();
    let representable = floats
        .iter()
        .zip(&c)
        .all(|(&f, a)| f.is_finite() && BigInt::from(f as i128) == *a);
    Ok(Wilkinson {
        poly: Polynomial::new(floats)?,
        exact_coeffs: c,
        representable,
    })
}

/// Comparison of one computed root against the exact oracle.
#[derive(Debug, Clone, Serialize)]
pub struct RootCheck {
    pub computed: f64,
    pub reference: f64,
    pub rel_dev: f64,
    /// `rel_dev <= kappa_bound * eps`.
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<RootCheck>,
    pub max_rel_dev: f64,
    pub all_within_bound: bool,
}

/// Relative deviation `|a - b| / |b|`, zero when both vanish.
pub fn rel_dev(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Cross-checks every computed root of `u` against exact bisection of the
/// stored coefficients to `bits` bits. Each root is bracketed between the
/// midpoints of its computed neighbours (the outermost by a Cauchy bound).
pub fn verify(u: &Polynomial, report: &SolveReport, bits: u32) -> Result<VerifyReport, SolveError> {
    let exact = ExactPoly::from_f64s(u.coeffs())?;
    let vals = report.values();
    let bound = u.coeffs()[1..].iter().fold(0.0f64, |m, a| m.max(a.abs())) + 1.0;
    let mut checks = Vec::with_capacity(vals.len());
    for (k, r) in report.roots.iter().enumerate() {
        let upper = if k == 0 {
            Dyadic::from_f64(bound)?
        } else {
            Dyadic::from_f64(vals[k - 1])?.midpoint(&Dyadic::from_f64(vals[k])?)
        };
        let lower = if k + 1 == vals.len() {
            Dyadic::from_f64(-bound)?
        } else {
            Dyadic::from_f64(vals[k])?.midpoint(&Dyadic::from_f64(vals[k + 1])?)
        };
        let enc = oracle::bisect_root(&exact, &lower, &upper, bits)?;
        let reference = enc.to_f64();
        let dev = rel_dev(r.lambda, reference);
        checks.push(RootCheck {
            computed: r.lambda,
            reference,
            rel_dev: dev,
            within_bound: dev <= r.kappa_bound * EPS,
        });
    }
    let max_rel_dev = checks.iter().map(|c| c.rel_dev).fold(0.0, f64::max);
    let all_within_bound = checks.iter().all(|c| c.within_bound);
    Ok(VerifyReport {
        checks,
        max_rel_dev,
        all_within_bound,
    })
}

/// Chebyshev points `cos((2k - 1) pi / (2n))`, descending.
pub fn chebyshev_roots(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (1..=n)
        .map(|k| ((2 * k - 1) as f64 * std::f64::consts::PI / (2.0 * nf)).cos())
        .collect()
}

/// Arrowhead matrix of `prod (x - r_k)` on the midpoints of consecutive
/// roots, with `u(d_j)` evaluated from the factored form.
pub fn factored_matrix(roots: &[f64]) -> Result<ArrowheadMatrix, SolveError> {
    let d: Vec<f64> = roots.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let values: Vec<DoubleDouble> = d
        .iter()
        .map(|&x| {
            roots
                .iter()
                .fold(DoubleDouble::ONE, |acc, &r| acc * DoubleDouble::sum_f64(x, -r))
        })
        .collect();
    let a1 = -roots.iter().map(|&r| DoubleDouble::from(r)).sum::<DoubleDouble>();
    Ok(ArrowheadMatrix::from_values(&d, &values, a1.to_f64())?)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub build_secs: f64,
    pub roots_secs: f64,
    pub total_secs: f64,
    pub max_rel_err: f64,
}

/// Times building the matrix and computing every root for Chebyshev-like
/// root sets of each size. Each size is repeated `reps` times and the
/// fastest run is reported.
pub fn bench(sizes: &[usize], reps: usize) -> Result<Vec<BenchRow>, SolveError> {
    let eig = EigenOptions::default();
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        if n < 2 {
            continue;
        }
        let roots = chebyshev_roots(n);
        let mut best: Option<BenchRow> = None;
        for _ in 0..reps.max(1) {
            let t0 = Instant::now();
            let m = factored_matrix(&roots)?;
            let t1 = Instant::now();
            let found = compute_roots(&m, &eig, None)?;
            let t2 = Instant::now();
            let max_rel_err = found
                .iter()
                .zip(&roots)
                .map(|(f, &r)| rel_dev(f.lambda, r))
                .fold(0.0, f64::max);
            let row = BenchRow {
                n,
                build_secs: (t1 - t0).as_secs_f64(),
                roots_secs: (t2 - t1).as_secs_f64(),
                total_secs: (t2 - t0).as_secs_f64(),
                max_rel_err,
            };
            if best.as_ref().is_none_or(|b| row.total_secs < b.total_secs) {
                best = Some(row);
            }
        }
        rows.extend(best);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[f64]) -> Polynomial {
        Polynomial::new(c.to_vec()).unwrap()
    }

    #[test]
    fn quadratic() {
        let r = solve(&poly(&[1.0, -3.0, 2.0]), &SolveOptions::default()).unwrap();
        assert_eq!(r.values(), vec![2.0, 1.0]);
    }

    #[test]
    fn linear_shortcut() {
        let r = solve(&poly(&[2.0, -3.0]), &SolveOptions::default()).unwrap();
        assert_eq!(r.values(), vec![1.5]);
    }

    #[test]
    fn zero_root_is_deflated() {
        // x^3 - x
        let r = solve(&poly(&[1.0, 0.0, -1.0, 0.0]), &SolveOptions::default()).unwrap();
        assert!(r.zero_root_deflated);
        assert_eq!(r.values(), vec![1.0, 0.0, -1.0]);
        assert_eq!(r.roots.iter().map(|x| x.k).collect::<Vec<_>>(), vec![1, 2, 3]);
        // x^2 - x: zero is the smallest root
        let r = solve(&poly(&[1.0, -1.0, 0.0]), &SolveOptions::default()).unwrap();
        assert_eq!(r.values(), vec![1.0, 0.0]);
        assert_eq!(
            solve(&poly(&[1.0, -1.0, 0.0, 0.0]), &SolveOptions::default()).unwrap_err(),
            SolveError::MultipleZeroRoot
        );
    }

    #[test]
    fn wilkinson_small() {
        assert_eq!(generate_wilkinson(2).unwrap().poly.coeffs(), &[1.0, -3.0, 2.0]);
        assert_eq!(generate_wilkinson(3).unwrap().poly.coeffs(), &[1.0, -6.0, 11.0, -6.0]);
        let w18 = generate_wilkinson(18).unwrap();
        assert!(w18.representable);
        assert_eq!(w18.poly.coeffs()[1], -171.0);
        assert_eq!(w18.poly.coeffs()[18], 6402373705728000.0);
        assert!(!generate_wilkinson(20).unwrap().representable);
        assert!(generate_wilkinson(21).is_err());
    }

    #[test]
    fn threads_do_not_change_results() {
        let u = generate_wilkinson(12).unwrap().poly;
        let seq = solve(&u, &SolveOptions::default()).unwrap();
        let par = solve(
            &u,
            &SolveOptions {
                threads: Some(4),
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert_eq!(seq.values(), par.values());
    }

    #[test]
    fn verify_small() {
        let u = poly(&[1.0, -6.0, 11.0, -6.0]);
        let r = solve(&u, &SolveOptions::default()).unwrap();
        let v = verify(&u, &r, 100).unwrap();
        assert_eq!(v.max_rel_dev, 0.0);
        assert!(v.all_within_bound);
    }

    #[test]
    fn factored_matrix_roots() {
        let roots = chebyshev_roots(16);
        let m = factored_matrix(&roots).unwrap();
        let found = compute_roots(&m, &EigenOptions::default(), None).unwrap();
        for (f, r) in found.iter().zip(&roots) {
            assert!(rel_dev(f.lambda, *r) < 1e-12, "{} vs {}", f.lambda, r);
        }
    }
}
