//! Arithmetic backends.
//!
//! Every matrix in the crate is generic over [`Scalar`]. Two backends exist:
//! exact rationals ([`Rational`]) for classical pipelines and certificates,
//! and `f64` for anything touching quantum wires. All tolerance-aware
//! comparisons go through [`within`] and [`negligible`].

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Default comparison tolerance of the float backend.
pub const DEFAULT_FLOAT_TOL: f64 = 1e-9;

/// Which backend a matrix was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arithmetic {
    Rational,
    Float64,
}

impl Arithmetic {
    pub fn as_str(self) -> &'static str {
        match self {
            Arithmetic::Rational => "rational",
            Arithmetic::Float64 => "float64",
        }
    }
}

impl Display for Arithmetic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub trait Scalar:
    Num + Signed + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    const ARITHMETIC: Arithmetic;

    fn from_int(v: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    /// Exact conversion from an arbitrary rational (rounded for `f64`).
    fn from_rational(r: &Rational) -> Self;

    /// `None` when the value is not representable (NaN, infinities).
    fn try_from_f64(v: f64) -> Option<Self>;

    fn as_f64(&self) -> f64;

    /// Square root if it is representable in this backend.
    fn sqrt(&self) -> Option<Self>;

    /// Tolerance used when a caller does not supply one.
    fn default_tol() -> f64 {
        match Self::ARITHMETIC {
            Arithmetic::Rational => 0.0,
            Arithmetic::Float64 => DEFAULT_FLOAT_TOL,
        }
    }
}

impl Scalar for f64 {
    const ARITHMETIC: Arithmetic = Arithmetic::Float64;

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn try_from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn sqrt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| f64::sqrt(*self))
    }
}

impl Scalar for Rational {
    const ARITHMETIC: Arithmetic = Arithmetic::Rational;

    fn from_int(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn try_from_f64(v: f64) -> Option<Self> {
        <Rational as FromPrimitive>::from_f64(v)
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn sqrt(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        (&n * &n == *self.numer() && &d * &d == *self.denom()).then(|| Rational::new(n, d))
    }
}

/// `|x| <= tol`; with `tol == 0` in the exact backend this is `x == 0`.
pub fn negligible<S: Scalar>(x: &S, tol: f64) -> bool {
    if tol == 0.0 {
        return x.is_zero();
    }
    x.abs().as_f64() <= tol
}

/// The one tolerance-aware equality used throughout the crate.
pub fn within<S: Scalar>(a: &S, b: &S, tol: f64) -> bool {
    negligible(&(a.clone() - b.clone()), tol)
}

/// `x >= -tol`.
pub fn nonnegative<S: Scalar>(x: &S, tol: f64) -> bool {
    !x.is_negative() || negligible(x, tol)
}

/// Renders a rational as `p/q` (or `p` when integral).
pub fn rational_to_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, an integer, or a finite decimal literal exactly.
pub fn parse_rational(src: &str) -> Option<Rational> {
    let s = src.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse().ok()?;
    let all = all / BigInt::from(10);
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = Rational::from_integer(all);
    if scale >= 0 {
        r *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}
