//! Monic real polynomials and Horner evaluation at three accuracy tiers.
//!
//! Coefficients are stored in descending powers, `u(x) = sum a_i x^(n-i)`
//! with `a_0 = 1`. Input that is not monic is divided through by its leading
//! coefficient, which is kept as [`Polynomial::scale`].

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::dd::{two_product, two_sum, DoubleDouble};
use crate::EPS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("polynomial needs at least two coefficients (degree >= 1)")]
    DegreeTooLow,
    #[error("leading coefficient is zero")]
    ZeroLeading,
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
    #[error("constant term is zero: deflate the zero root first")]
    ZeroRoot,
    #[error("line {line}: cannot parse {text:?} as a real number")]
    Parse { line: usize, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalTier {
    Standard,
    Compensated,
    DoubleDouble,
}

/// A polynomial value together with the condition number of the evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub value: DoubleDouble,
    pub cond: f64,
    pub tier: EvalTier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
    scale: f64,
}

impl Polynomial {
    /// Normalizes `coeffs` (descending powers) to monic form.
    pub fn new(coeffs: Vec<f64>) -> Result<Self, PolyError> {
        if coeffs.len() < 2 {
            return Err(PolyError::DegreeTooLow);
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(PolyError::NonFinite { index });
        }
        let lead = coeffs[0];
        if lead == 0.0 {
            return Err(PolyError::ZeroLeading);
        }
        let coeffs = if lead == 1.0 {
            coeffs
        } else {
            let mut c: Vec<f64> = coeffs.iter().map(|&a| a / lead).collect();
            c[0] = 1.0;
            c
        };
        Ok(Self {
            coeffs,
            scale: lead,
        })
    }

    /// Parses the coefficient text format: one value per line, descending
    /// powers, decimal or hexfloat, `#` lines and blank lines ignored.
    pub fn parse(text: &str) -> Result<Self, PolyError> {
        Self::new(parse_values(text)?)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Leading coefficient of the input this polynomial was normalized from.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The coefficient of `x^(n-1)`.
    pub fn a1(&self) -> f64 {
        self.coeffs[1]
    }

    pub fn constant_term(&self) -> f64 {
        self.coeffs[self.degree()]
    }

    pub fn horner(&self, x: f64) -> f64 {
        self.coeffs[1..].iter().fold(self.coeffs[0], |s, &a| s * x + a)
    }

    /// Horner's scheme carried out in double-double arithmetic.
    pub fn horner_dd(&self, x: f64) -> DoubleDouble {
        self.coeffs[1..]
            .iter()
            .fold(DoubleDouble::from(self.coeffs[0]), |s, &a| {
                s.mul_f64(x).add_f64(a)
            })
    }

    /// Compensated Horner: returns the working-precision value `h` and the
    /// accumulated correction `c`; `h + c` is as accurate as a doubled
    /// precision evaluation.
    pub fn horner_compensated(&self, x: f64) -> (f64, f64) {
        let mut h = self.coeffs[0];
        let mut c = 0.0;
        for &a in &self.coeffs[1..] {
            let (p, pi) = two_product(h, x);
            let (s, sigma) = two_sum(p, a);
            h = s;
            c = c * x + (pi + sigma);
        }
        (h, c)
    }

    /// `sum |a_i| |x|^(n-i)`, evaluated in working precision.
    pub fn abs_horner(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs.iter().fold(0.0, |s, &a| s * ax + a.abs())
    }

    /// Condition number of evaluating `u` at `x`; `+inf` when the
    /// double-double value is exactly zero.
    pub fn cond_at(&self, x: f64) -> f64 {
        cond_from(self.abs_horner(x), self.horner_dd(x))
    }

    pub fn evaluate(&self, x: f64, tier: EvalTier) -> EvalResult {
        let value = match tier {
            EvalTier::Standard => DoubleDouble::from(self.horner(x)),
            EvalTier::Compensated => {
                let (h, c) = self.horner_compensated(x);
                DoubleDouble::sum_f64(h, c)
            }
            EvalTier::DoubleDouble => self.horner_dd(x),
        };
        EvalResult {
            value,
            cond: cond_from(self.abs_horner(x), value),
            tier,
        }
    }

    /// A priori relative error bound of an evaluation tier at `x`.
    pub fn error_bound(&self, x: f64, tier: EvalTier) -> f64 {
        let n = self.degree() as f64;
        let cond = self.cond_at(x);
        match tier {
            EvalTier::Standard => cond * 2.0 * n * EPS,
            EvalTier::Compensated | EvalTier::DoubleDouble => cond * 2.0 * n * EPS * EPS,
        }
    }

    /// Monic derivative; `scale` is the degree (the leading coefficient of
    /// the raw derivative of this monic polynomial).
    pub fn derivative(&self) -> Polynomial {
        let n = self.degree();
        if n == 1 {
            // constant derivative: keep a degree-0 stand-in with one coefficient
            return Polynomial {
                coeffs: vec![1.0],
                scale: 1.0,
            };
        }
        let nf = n as f64;
        let mut coeffs: Vec<f64> = self.coeffs[..n]
            .iter()
            .enumerate()
            .map(|(i, &a)| a * (n - i) as f64 / nf)
            .collect();
        coeffs[0] = 1.0;
        Polynomial { coeffs, scale: nf }
    }

    /// Monic form of `x^n u(1/x)`; `scale` is the constant term of `u`.
    pub fn reverse(&self) -> Result<Polynomial, PolyError> {
        let an = self.constant_term();
        if an == 0.0 {
            return Err(PolyError::ZeroRoot);
        }
        let rev: Vec<f64> = self.coeffs.iter().rev().copied().collect();
        let mut p = Polynomial::new(rev)?;
        p.scale = an;
        Ok(p)
    }

    /// Round-trip text in the coefficient file format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.coeffs {
            let _ = writeln!(s, "{c:?}");
        }
        s
    }
}

fn cond_from(abs_value: f64, value: DoubleDouble) -> f64 {
    let v = value.to_f64().abs();
    if v == 0.0 {
        f64::INFINITY
    } else {
        abs_value / v
    }
}

/// Parses one real per line (decimal or hexfloat), skipping `#` comments and
/// blank lines.
pub fn parse_values(text: &str) -> Result<Vec<f64>, PolyError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = parse_real(line).ok_or_else(|| PolyError::Parse {
            line: i + 1,
            text: line.to_string(),
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Parses a decimal or C-style hexfloat (`0x1.8p+3`) literal.
pub fn parse_real(s: &str) -> Option<f64> {
    let lower = s.to_ascii_lowercase();
    let body = lower.trim_start_matches(['+', '-']);
    if body.starts_with("0x") {
        let normalized = if lower.contains('p') {
            lower.trim_start_matches('+').to_string()
        } else {
            format!("{}p0", lower.trim_start_matches('+'))
        };
        hexf_parse::parse_hexf64(&normalized, false).ok()
    } else {
        s.parse::<f64>().ok()
    }
}

/// C99 `%a`-style hexfloat rendering, exact for every finite `f64`.
pub fn format_hexfloat(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if raw_exp == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if raw_exp == 0 {
        (0, -1022)
    } else {
        (1, raw_exp - 1023)
    };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let esign = if exp < 0 { '-' } else { '+' };
    if digits.is_empty() {
        format!("{sign}0x{lead}p{esign}{}", exp.abs())
    } else {
        format!("{sign}0x{lead}.{digits}p{esign}{}", exp.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[f64]) -> Polynomial {
        Polynomial::new(c.to_vec()).unwrap()
    }

    #[test]
    fn horner_examples() {
        assert_eq!(poly(&[1.0, 0.0, -1.0]).horner(0.0), -1.0);
        assert_eq!(poly(&[1.0, -3.0, 2.0]).horner(1.5), -0.25);
        let v = poly(&[1.0, 0.0, -1.0]).horner_dd(0.0);
        assert_eq!((v.hi(), v.lo()), (-1.0, 0.0));
        assert_eq!(poly(&[1.0, 0.0, -1.0]).horner_compensated(0.0), (-1.0, 0.0));
        assert_eq!(poly(&[1.0, 0.0, 0.0, 0.0]).horner_compensated(2.0), (8.0, 0.0));
    }

    #[test]
    fn cond_examples() {
        assert_eq!(poly(&[1.0, 0.0, -2.0]).cond_at(1.0), 3.0);
        assert_eq!(poly(&[1.0, -3.0, 2.0]).cond_at(1.0), f64::INFINITY);
    }

    #[test]
    fn normalizes_non_monic() {
        let p = poly(&[2.0, -6.0, 4.0]);
        assert_eq!(p.coeffs(), &[1.0, -3.0, 2.0]);
        assert_eq!(p.scale(), 2.0);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(Polynomial::new(vec![1.0]), Err(PolyError::DegreeTooLow));
        assert_eq!(Polynomial::new(vec![0.0, 1.0]), Err(PolyError::ZeroLeading));
        assert_eq!(
            Polynomial::new(vec![1.0, f64::NAN]),
            Err(PolyError::NonFinite { index: 1 })
        );
    }

    #[test]
    fn derivative_examples() {
        let d = poly(&[1.0, -3.0, 2.0]).derivative();
        assert_eq!(d.coeffs(), &[1.0, -1.5]);
        assert_eq!(d.scale(), 2.0);
        let d = poly(&[1.0, 0.0, 0.0, 0.0, 0.0]).derivative();
        assert_eq!(d.coeffs(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn reverse_examples() {
        let r = poly(&[1.0, -3.0, 2.0]).reverse().unwrap();
        assert_eq!(r.coeffs(), &[1.0, -1.5, 0.5]);
        assert_eq!(r.scale(), 2.0);
        let rr = r.reverse().unwrap();
        assert_eq!(rr.coeffs(), &[1.0, -3.0, 2.0]);
        assert_eq!(poly(&[1.0, 0.0, -1.0, 0.0]).reverse(), Err(PolyError::ZeroRoot));
    }

    #[test]
    fn parses_text_format() {
        let text = "# W_2\n1\n-0x1.8p+1\n\n  2.0e0  \n";
        let p = Polynomial::parse(text).unwrap();
        assert_eq!(p.coeffs(), &[1.0, -3.0, 2.0]);
        let err = Polynomial::parse("1\nabc\n").unwrap_err();
        assert_eq!(
            err,
            PolyError::Parse {
                line: 2,
                text: "abc".into()
            }
        );
        assert_eq!(parse_real("0x1p-2"), Some(0.25));
        assert_eq!(parse_real("0x10"), Some(16.0));
    }

    #[test]
    fn hexfloat_formatting() {
        assert_eq!(format_hexfloat(1.0), "0x1p+0");
        assert_eq!(format_hexfloat(-3.0), "-0x1.8p+1");
        assert_eq!(format_hexfloat(0.0), "0x0p+0");
        assert_eq!(format_hexfloat(2f64.powi(-1074)), "0x0.0000000000001p-1022");
        assert_eq!(format_hexfloat(0.1), "0x1.999999999999ap-4");
    }
}
