//! Forward-stable real root finding for monic polynomials with distinct
//! real roots.
//!
//! The polynomial is turned into a symmetric arrowhead matrix on points
//! that interlace its roots; each eigenvalue is then found by inverting the
//! matrix about its nearest pole and bisecting the extremal eigenvalue of
//! the inverse. Double-double arithmetic is used only in the parts that run
//! once per root.

pub mod aheig;
pub mod dd;
pub mod fiedler;
pub mod interp;
pub mod oracle;
pub mod polynomial;
pub mod solver;

/// Unit roundoff of binary64.
pub const EPS: f64 = 1.0 / 9_007_199_254_740_992.0;

pub use aheig::{eigenvalue_k, kappa_bound, EigenOptions, RootResult, Side};
pub use dd::DoubleDouble;
pub use fiedler::ArrowheadMatrix;
pub use interp::{select_points, InterpConfig, PointSource, Strategy};
pub use polynomial::Polynomial;
pub use solver::{solve, SolveError, SolveOptions, SolveReport};
