//! Complex scalars with an exact Gaussian-rational representation and a
//! floating-point fallback.
//!
//! Every constant that appears in a developing map or a holonomy value is a
//! [`Scalar`]. Arithmetic between two exact values stays exact; as soon as an
//! approximate value (or a transcendental operation such as `exp`) enters,
//! the result is approximate. Comparisons use the tolerance only when at
//! least one side is approximate.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default comparison tolerance.
pub const DEFAULT_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("tolerance must be a positive finite number, got {0}")]
    InvalidTolerance(f64),
    #[error("cannot parse `{0}` as a rational number")]
    BadRational(String),
}

/// Absolute comparison tolerance for approximate values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    eps: f64,
}

impl Tolerance {
    pub fn new(eps: f64) -> Result<Self, NumericsError> {
        if eps > 0.0 && eps.is_finite() {
            Ok(Self { eps })
        } else {
            Err(NumericsError::InvalidTolerance(eps))
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The same tolerance multiplied by `factor` (must stay positive).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            eps: self.eps * factor.max(f64::MIN_POSITIVE),
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { eps: DEFAULT_EPS }
    }
}

/// A complex number, either an exact Gaussian rational or a `Complex64`.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact { re: BigRational, im: BigRational },
    Approx(Complex64),
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact square root of a non-negative rational, if it is a perfect square.
fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer();
    let d = q.denom();
    let rn = n.sqrt();
    let rd = d.sqrt();
    if &(&rn * &rn) == n && &(&rd * &rd) == d {
        Some(BigRational::new(rn, rd))
    } else {
        None
    }
}

impl Scalar {
    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn i() -> Self {
        Self::Exact {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::Exact {
            re: BigRational::from_integer(BigInt::from(n)),
            im: BigRational::zero(),
        }
    }

    /// Exact Gaussian integer `re + im·i`.
    pub fn gaussian(re: i64, im: i64) -> Self {
        Self::Exact {
            re: BigRational::from_integer(BigInt::from(re)),
            im: BigRational::from_integer(BigInt::from(im)),
        }
    }

    /// Exact real rational `num/den`. Panics if `den == 0`.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::Exact {
            re: ratio(num, den),
            im: BigRational::zero(),
        }
    }

    pub fn exact(re: BigRational, im: BigRational) -> Self {
        Self::Exact { re, im }
    }

    pub fn approx(re: f64, im: f64) -> Self {
        Self::Approx(Complex64::new(re, im))
    }

    pub fn from_c64(z: Complex64) -> Self {
        Self::Approx(z)
    }

    /// Exact value of a pair of finite floats (every finite `f64` is a dyadic
    /// rational).
    pub fn from_f64_exact(re: f64, im: f64) -> Option<Self> {
        Some(Self::Exact {
            re: BigRational::from_float(re)?,
            im: BigRational::from_float(im)?,
        })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact { .. })
    }

    pub fn to_c64(&self) -> Complex64 {
        match self {
            Self::Exact { re, im } => Complex64::new(rational_to_f64(re), rational_to_f64(im)),
            Self::Approx(z) => *z,
        }
    }

    pub fn to_approx(&self) -> Self {
        Self::Approx(self.to_c64())
    }

    pub fn re_f64(&self) -> f64 {
        self.to_c64().re
    }

    pub fn im_f64(&self) -> f64 {
        self.to_c64().im
    }

    pub fn real_part(&self) -> Self {
        match self {
            Self::Exact { re, .. } => Self::Exact {
                re: re.clone(),
                im: BigRational::zero(),
            },
            Self::Approx(z) => Self::approx(z.re, 0.0),
        }
    }

    pub fn imag_part(&self) -> Self {
        match self {
            Self::Exact { im, .. } => Self::Exact {
                re: im.clone(),
                im: BigRational::zero(),
            },
            Self::Approx(z) => Self::approx(z.im, 0.0),
        }
    }

    pub fn conj(&self) -> Self {
        match self {
            Self::Exact { re, im } => Self::Exact {
                re: re.clone(),
                im: -im,
            },
            Self::Approx(z) => Self::Approx(z.conj()),
        }
    }

    /// `|z|²` as a real scalar; exact for exact inputs.
    pub fn norm_sqr(&self) -> Self {
        match self {
            Self::Exact { re, im } => Self::Exact {
                re: re * re + im * im,
                im: BigRational::zero(),
            },
            Self::Approx(z) => Self::approx(z.norm_sqr(), 0.0),
        }
    }

    pub fn abs(&self) -> f64 {
        self.to_c64().norm()
    }

    pub fn is_exact_zero(&self) -> bool {
        match self {
            Self::Exact { re, im } => re.is_zero() && im.is_zero(),
            Self::Approx(_) => false,
        }
    }

    pub fn is_zero(&self, tol: Tolerance) -> bool {
        match self {
            Self::Exact { re, im } => re.is_zero() && im.is_zero(),
            Self::Approx(z) => z.norm() <= tol.eps(),
        }
    }

    /// Tolerance-aware equality (see [`approx_eq`]).
    pub fn approx_eq(&self, other: &Self, tol: Tolerance) -> bool {
        approx_eq(self, other, tol)
    }

    pub fn recip(&self) -> Option<Self> {
        match self {
            Self::Exact { re, im } => {
                let n = re * re + im * im;
                if n.is_zero() {
                    None
                } else {
                    Some(Self::Exact {
                        re: re / &n,
                        im: -im / &n,
                    })
                }
            }
            Self::Approx(z) => {
                if z.norm_sqr() == 0.0 {
                    None
                } else {
                    Some(Self::Approx(z.inv()))
                }
            }
        }
    }

    /// Integer power; negative exponents require a nonzero base.
    pub fn powi(&self, n: i64) -> Self {
        if n < 0 {
            let inv = self.recip().expect("negative power of zero");
            return inv.powi(-n);
        }
        let mut result = Self::one();
        let mut base = self.clone();
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Principal square root. Exact whenever the input is the square of a
    /// Gaussian rational, approximate otherwise.
    pub fn sqrt(&self) -> Self {
        match self {
            Self::Exact { re, im } => match exact_gaussian_sqrt(re, im) {
                Some(s) => s,
                None => Self::Approx(self.to_c64().sqrt()),
            },
            Self::Approx(z) => Self::Approx(z.sqrt()),
        }
    }

    pub fn exp(&self) -> Self {
        if self.is_exact_zero() {
            return Self::one();
        }
        Self::Approx(self.to_c64().exp())
    }

    /// Principal logarithm (always approximate).
    pub fn ln(&self) -> Self {
        Self::Approx(self.to_c64().ln())
    }

    /// Compare real parts; exact when both are exact.
    pub fn cmp_re(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Self::Exact { re: a, .. }, Self::Exact { re: b, .. }) => a.cmp(b),
            _ => self
                .re_f64()
                .partial_cmp(&other.re_f64())
                .unwrap_or(Ordering::Equal),
        }
    }

    /// Sign of the real part: exact for exact values, strict float sign
    /// otherwise.
    pub fn re_sign(&self) -> Ordering {
        self.cmp_re(&Self::zero())
    }

    pub fn im_sign(&self) -> Ordering {
        self.imag_part().cmp_re(&Self::zero())
    }

    /// Nearest integer to the real part (halves round away from zero).
    pub fn round_re(&self) -> Option<i64> {
        match self {
            Self::Exact { re, .. } => re.round().to_integer().to_i64(),
            Self::Approx(z) => {
                let r = z.re.round();
                if r.is_finite() && r.abs() < 9.0e15 {
                    Some(r as i64)
                } else {
                    None
                }
            }
        }
    }

    /// Lexicographic order on (re, im), used for deterministic tie-breaks.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.cmp_re(other)
            .then_with(|| self.imag_part().cmp_re(&other.imag_part()))
    }
}

fn exact_gaussian_sqrt(re: &BigRational, im: &BigRational) -> Option<Scalar> {
    if im.is_zero() {
        return if re.is_negative() {
            rational_sqrt(&-re).map(|s| Scalar::Exact {
                re: BigRational::zero(),
                im: s,
            })
        } else {
            rational_sqrt(re).map(|s| Scalar::Exact {
                re: s,
                im: BigRational::zero(),
            })
        };
    }
    // (x + iy)² = re + i·im with x > 0: x² = (re + |z|)/2, y = im / 2x
    let modulus = rational_sqrt(&(re * re + im * im))?;
    let two = BigRational::from_integer(BigInt::from(2));
    let x = rational_sqrt(&((re + &modulus) / &two))?;
    if x.is_zero() {
        return None;
    }
    let y = im / (&two * &x);
    Some(Scalar::Exact { re: x, im: y })
}

/// True iff `|a − b| ≤ eps` (approximate) or `a = b` (both exact).
pub fn approx_eq(a: &Scalar, b: &Scalar, tol: Tolerance) -> bool {
    match (a, b) {
        (Scalar::Exact { re: ar, im: ai }, Scalar::Exact { re: br, im: bi }) => {
            ar == br && ai == bi
        }
        _ => (a.to_c64() - b.to_c64()).norm() <= tol.eps(),
    }
}

/// Smallest `n ≤ max_order` with `zⁿ = 1`, if any.
///
/// Approximate values must satisfy `||z| − 1| ≤ eps`, and the `n`-th power is
/// accepted when `|zⁿ − 1| ≤ n·eps`.
pub fn root_of_unity_order(z: &Scalar, max_order: u32, tol: Tolerance) -> Option<u32> {
    if max_order == 0 {
        return None;
    }
    match z {
        Scalar::Exact { re, im } => {
            // the only Gaussian-rational roots of unity are ±1 and ±i
            let one = BigRational::one();
            let order = if im.is_zero() && *re == one {
                1
            } else if im.is_zero() && *re == -one.clone() {
                2
            } else if re.is_zero() && (im == &one || *im == -one) {
                4
            } else {
                return None;
            };
            (order <= max_order).then_some(order)
        }
        Scalar::Approx(w) => {
            if (w.norm() - 1.0).abs() > tol.eps() {
                return None;
            }
            let mut power = Complex64::new(1.0, 0.0);
            for n in 1..=max_order {
                power *= w;
                if (power - 1.0).norm() <= n as f64 * tol.eps() {
                    return Some(n);
                }
            }
            None
        }
    }
}

/// `exp(2πi·k/n)`, exact for the Gaussian-rational cases.
pub fn root_of_unity(n: u32, k: i64) -> Scalar {
    let k = k.rem_euclid(n as i64);
    match (n, k) {
        (_, 0) => Scalar::one(),
        (2, 1) => Scalar::from_int(-1),
        (4, 1) => Scalar::i(),
        (4, 2) => Scalar::from_int(-1),
        (4, 3) => Scalar::gaussian(0, -1),
        _ => {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Scalar::Approx(Complex64::from_polar(1.0, theta))
        }
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl From<Complex64> for Scalar {
    fn from(z: Complex64) -> Self {
        Self::Approx(z)
    }
}

fn binary_op(
    a: &Scalar,
    b: &Scalar,
    exact: impl FnOnce(&BigRational, &BigRational, &BigRational, &BigRational) -> Scalar,
    approx: impl FnOnce(Complex64, Complex64) -> Complex64,
) -> Scalar {
    match (a, b) {
        (Scalar::Exact { re: ar, im: ai }, Scalar::Exact { re: br, im: bi }) => {
            exact(ar, ai, br, bi)
        }
        _ => Scalar::Approx(approx(a.to_c64(), b.to_c64())),
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        binary_op(
            self,
            rhs,
            |ar, ai, br, bi| Scalar::Exact {
                re: ar + br,
                im: ai + bi,
            },
            |x, y| x + y,
        )
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        binary_op(
            self,
            rhs,
            |ar, ai, br, bi| Scalar::Exact {
                re: ar - br,
                im: ai - bi,
            },
            |x, y| x - y,
        )
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        binary_op(
            self,
            rhs,
            |ar, ai, br, bi| Scalar::Exact {
                re: ar * br - ai * bi,
                im: ar * bi + ai * br,
            },
            |x, y| x * y,
        )
    }
}

impl Div for &Scalar {
    type Output = Scalar;
    /// Panics on division by an exact zero.
    fn div(self, rhs: &Scalar) -> Scalar {
        binary_op(
            self,
            rhs,
            |ar, ai, br, bi| {
                let n = br * br + bi * bi;
                assert!(!n.is_zero(), "division by exact zero");
                Scalar::Exact {
                    re: (ar * br + ai * bi) / &n,
                    im: (ai * br - ar * bi) / &n,
                }
            },
            |x, y| x / y,
        )
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact { re, im } => Scalar::Exact { re: -re, im: -im },
            Scalar::Approx(z) => Scalar::Approx(-z),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

macro_rules! forward_owned {
    ($($tr:ident :: $m:ident),*) => {$(
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar { (&self).$m(&rhs) }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &Scalar) -> Scalar { (&self).$m(rhs) }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar { self.$m(&rhs) }
        }
    )*};
}

forward_owned!(Add::add, Sub::sub, Mul::mul, Div::div);

fn fmt_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exact { re, im } => {
                if im.is_zero() {
                    write!(f, "{}", fmt_rational(re))
                } else if re.is_zero() {
                    write!(f, "{}i", fmt_rational(im))
                } else if im.is_negative() {
                    write!(f, "{} - {}i", fmt_rational(re), fmt_rational(&-im))
                } else {
                    write!(f, "{} + {}i", fmt_rational(re), fmt_rational(im))
                }
            }
            Self::Approx(z) => {
                if z.im < 0.0 {
                    write!(f, "{} - {}i", z.re, -z.im)
                } else {
                    write!(f, "{} + {}i", z.re, z.im)
                }
            }
        }
    }
}

/// Parses `"p"`, `"p/q"` or a finite decimal such as `"-0.125"` or `"1.5e-3"`
/// into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, NumericsError> {
    let bad = || NumericsError::BadRational(s.to_string());
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if all_digits.is_empty() {
        "0"
    } else {
        &all_digits
    })
    .map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut q = BigRational::from_integer(numer);
    if scale >= 0 {
        q *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        q /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -q } else { q })
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut tup = serializer.serialize_tuple(2)?;
        match self {
            Self::Exact { re, im } => {
                tup.serialize_element(&fmt_rational(re))?;
                tup.serialize_element(&fmt_rational(im))?;
            }
            Self::Approx(z) => {
                tup.serialize_element(&z.re)?;
                tup.serialize_element(&z.im)?;
            }
        }
        tup.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Component {
    Text(String),
    Number(f64),
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let parts: Vec<Component> = Vec::deserialize(deserializer)?;
        if parts.len() != 2 {
            return Err(de::Error::custom(format!(
                "complex number must be a two-element array, got {} elements",
                parts.len()
            )));
        }
        match (&parts[0], &parts[1]) {
            (Component::Text(a), Component::Text(b)) => {
                let re = parse_rational(a).map_err(de::Error::custom)?;
                let im = parse_rational(b).map_err(de::Error::custom)?;
                Ok(Scalar::Exact { re, im })
            }
            _ => {
                let to_f64 = |c: &Component| -> Result<f64, D::Error> {
                    match c {
                        Component::Number(x) => Ok(*x),
                        Component::Text(s) => parse_rational(s)
                            .map(|q| rational_to_f64(&q))
                            .map_err(de::Error::custom),
                    }
                };
                let (re, im) = (to_f64(&parts[0])?, to_f64(&parts[1])?);
                if !re.is_finite() || !im.is_finite() {
                    return Err(de::Error::custom("complex components must be finite"));
                }
                Ok(Scalar::approx(re, im))
            }
        }
    }
}

/// Greatest common divisor of two positive integers.
pub fn gcd_u32(a: u32, b: u32) -> u32 {
    a.gcd(&b)
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

/// Rational approximation helper used when a float must be viewed exactly.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_f64(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn approx_eq_examples() {
        assert!(approx_eq(&Scalar::one(), &Scalar::one(), tol()));
        assert!(approx_eq(
            &Scalar::one(),
            &Scalar::approx(1.0, 1e-12),
            tol()
        ));
        assert!(!approx_eq(
            &Scalar::one(),
            &Scalar::approx(1.01, 0.0),
            tol()
        ));
    }

    #[test]
    fn exact_comparison_ignores_tolerance() {
        let a = Scalar::from_ratio(1, 3);
        let b = &Scalar::from_ratio(1, 3)
            + &Scalar::exact(ratio(1, 10_i64.pow(15)), BigRational::zero());
        assert!(!approx_eq(&a, &b, tol()));
        assert!(approx_eq(&a.to_approx(), &b.to_approx(), tol()));
    }

    #[test]
    fn root_of_unity_examples() {
        assert_eq!(root_of_unity_order(&Scalar::i(), 100, tol()), Some(4));
        let w = Scalar::Approx(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0));
        assert_eq!(root_of_unity_order(&w, 100, tol()), Some(3));
        assert_eq!(root_of_unity_order(&Scalar::from_int(2), 100, tol()), None);
        assert_eq!(root_of_unity_order(&Scalar::from_int(-1), 1, tol()), None);
        // exact point on the unit circle that is not a root of unity
        let pythagorean = &Scalar::gaussian(3, 4) / &Scalar::from_int(5);
        assert_eq!(root_of_unity_order(&pythagorean, 200, tol()), None);
    }

    #[test]
    fn exact_arithmetic_stays_exact() {
        let a = &Scalar::gaussian(1, 2) / &Scalar::gaussian(3, -1);
        assert!(a.is_exact());
        let back = &a * &Scalar::gaussian(3, -1);
        assert_eq!(back, Scalar::gaussian(1, 2));
        let mixed = &a + &Scalar::approx(0.0, 0.0);
        assert!(!mixed.is_exact());
    }

    #[test]
    fn exact_square_roots() {
        assert_eq!(Scalar::from_int(-4).sqrt(), Scalar::gaussian(0, 2));
        // (1 + 2i)² = -3 + 4i
        assert_eq!(Scalar::gaussian(-3, 4).sqrt(), Scalar::gaussian(1, 2));
        assert!(!Scalar::i().sqrt().is_exact());
        let s = Scalar::from_int(2).sqrt();
        assert!((s.re_f64() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3").unwrap(), ratio(3, 1));
        assert_eq!(parse_rational("-1/6").unwrap(), ratio(-1, 6));
        assert_eq!(parse_rational("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse_rational("-1.5e2").unwrap(), ratio(-150, 1));
        assert_eq!(parse_rational("2.5E-1").unwrap(), ratio(1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn json_encoding() {
        let z = Scalar::exact(ratio(1, 2), ratio(-3, 1));
        let text = serde_json::to_string(&z).unwrap();
        assert_eq!(text, r#"["1/2","-3"]"#);
        assert_eq!(serde_json::from_str::<Scalar>(&text).unwrap(), z);
        let w: Scalar = serde_json::from_str("[0.5, 2]").unwrap();
        assert_eq!(w, Scalar::approx(0.5, 2.0));
        assert!(serde_json::from_str::<Scalar>("[1]").is_err());
    }

    #[test]
    fn tolerance_must_be_positive() {
        assert!(Tolerance::new(0.0).is_err());
        assert!(Tolerance::new(f64::NAN).is_err());
        assert!(Tolerance::new(1e-6).is_ok());
    }

    fn gaussian_strategy() -> impl Strategy<Value = Scalar> {
        (-50i64..50, 1i64..20, -50i64..50, 1i64..20)
            .prop_map(|(a, b, c, d)| Scalar::exact(ratio(a, b), ratio(c, d)))
    }

    proptest! {
        #[test]
        fn exact_add_sub_roundtrip(a in gaussian_strategy(), b in gaussian_strategy()) {
            prop_assert_eq!(&(&a + &b) - &b, a);
        }

        #[test]
        fn approx_add_sub_within_four_eps(
            ar in -1e3f64..1e3, ai in -1e3f64..1e3, br in -1e3f64..1e3, bi in -1e3f64..1e3
        ) {
            let a = Scalar::approx(ar, ai);
            let b = Scalar::approx(br, bi);
            let back = &(&a + &b) - &b;
            prop_assert!((back.to_c64() - a.to_c64()).norm() <= 4.0 * DEFAULT_EPS);
        }

        #[test]
        fn order_of_powers(n in 1u32..40, j in 0u32..40, k in 1i64..60) {
            let j = j % n;
            let z = Scalar::Approx(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64));
            let order = root_of_unity_order(&z, 200, tol()).unwrap();
            prop_assert_eq!(order, n / gcd_u32(n, j));
            let zk = z.powi(k);
            let expected = order / gcd_u32(order, k as u32);
            prop_assert_eq!(root_of_unity_order(&zk, 200, tol()), Some(expected));
        }
    }
}
