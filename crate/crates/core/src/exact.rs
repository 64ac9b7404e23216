//! Exact scalars.
//!
//! Step-function data lives in [`Rational`] (arbitrary precision). Products of
//! trigonometric members whose amplitude involves `√2` live in the quadratic
//! field `ℚ(√2)`, represented by [`QSqrt2`], which has exact ordering.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LacunaError, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact conversion of a finite float (every finite `f64` is dyadic).
pub fn rat_from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x)
        .ok_or_else(|| LacunaError::InvalidInput(format!("non-finite value {x}")))
}

pub fn rat_to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // ratio of huge integers; fall back to a scaled division
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// `2^{-k}` as a rational.
pub fn pow2_neg(k: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k as usize)
}

/// Parses `"p/q"`, an integer, or a decimal literal (exactly, as a decimal).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || LacunaError::InvalidInput(format!("cannot parse rational '{s}'"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Ok(n) = BigInt::from_str(s) {
        return Ok(Rational::from_integer(n));
    }
    // decimal with optional exponent
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&digits).map_err(|_| bad())?);
    let scale = exp - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if neg { -value } else { value })
}

pub fn format_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Serde adapter: rationals as `"p/q"` strings; numbers accepted on input.
pub mod rational_serde {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        value_to_rational(&v).map_err(serde::de::Error::custom)
    }

    pub fn value_to_rational(v: &serde_json::Value) -> Result<Rational> {
        match v {
            serde_json::Value::String(s) => parse_rational(s),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(rat_int(i))
                } else {
                    parse_rational(&n.to_string())
                }
            }
            other => Err(LacunaError::InvalidInput(format!("expected rational, got {other}"))),
        }
    }
}

pub mod rational_vec_serde {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format_rational(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let vs = Vec::<serde_json::Value>::deserialize(d)?;
        vs.iter()
            .map(|v| rational_serde::value_to_rational(v).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// An element `a + b·√2` of the field ℚ(√2).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QSqrt2 {
    pub a: Rational,
    pub b: Rational,
}

impl QSqrt2 {
    pub fn new(a: Rational, b: Rational) -> Self {
        Self { a, b }
    }

    pub fn rational(a: Rational) -> Self {
        Self { a, b: Rational::zero() }
    }

    pub fn zero() -> Self {
        Self::rational(Rational::zero())
    }

    pub fn one() -> Self {
        Self::rational(Rational::one())
    }

    pub fn sqrt2() -> Self {
        Self { a: Rational::zero(), b: Rational::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self { a: self.a.clone(), b: -self.b.clone() }
    }

    /// Field norm `a² − 2b²`.
    pub fn norm(&self) -> Rational {
        &self.a * &self.a - rat_int(2) * &self.b * &self.b
    }

    pub fn signum(&self) -> i32 {
        let sa = sign(&self.a);
        let sb = sign(&self.b);
        if sa >= 0 && sb >= 0 {
            return if sa == 0 && sb == 0 { 0 } else { 1 };
        }
        if sa <= 0 && sb <= 0 {
            return -1;
        }
        // mixed signs: compare a² with 2b²
        let n = sign(&self.norm());
        if sa > 0 { n } else { -n }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 { -self.clone() } else { self.clone() }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.a) + rat_to_f64(&self.b) * std::f64::consts::SQRT_2
    }

    pub fn recip(&self) -> Option<Self> {
        let n = self.norm();
        if n.is_zero() {
            return None;
        }
        Some(Self { a: &self.a / &n, b: -(&self.b / &n) })
    }

    /// Parses `"sqrt2"`, `"3/2*sqrt2"`, `"p/q"` or a decimal literal.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace(' ', "");
        for tag in ["sqrt2", "sqrt(2)", "√2"] {
            if t == tag {
                return Ok(Self::sqrt2());
            }
            if let Some(coef) = t.strip_suffix(tag) {
                let coef = coef.strip_suffix('*').unwrap_or(coef);
                return Ok(Self { a: Rational::zero(), b: parse_rational(coef)? });
            }
        }
        Ok(Self::rational(parse_rational(&t)?))
    }
}

fn sign(x: &Rational) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", format_rational(&self.a)),
            (true, false) if self.b.is_one() => write!(f, "sqrt2"),
            (true, false) => write!(f, "{}*sqrt2", format_rational(&self.b)),
            (false, false) => write!(f, "{} + {}*sqrt2", format_rational(&self.a), format_rational(&self.b)),
        }
    }
}

impl Serialize for QSqrt2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for QSqrt2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let parsed = match &v {
            serde_json::Value::String(s) => {
                if let Some((a, b)) = s.split_once('+') {
                    let a = parse_rational(a).map_err(serde::de::Error::custom)?;
                    let b = QSqrt2::parse(b).map_err(serde::de::Error::custom)?;
                    Ok(QSqrt2::new(a + b.a, b.b))
                } else {
                    QSqrt2::parse(s)
                }
            }
            serde_json::Value::Number(n) => parse_rational(&n.to_string()).map(QSqrt2::rational),
            other => Err(LacunaError::InvalidInput(format!("expected number, got {other}"))),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

impl PartialOrd for QSqrt2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QSqrt2 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum().cmp(&0)
    }
}

impl From<Rational> for QSqrt2 {
    fn from(a: Rational) -> Self {
        Self::rational(a)
    }
}

impl<'a> Add<&'a QSqrt2> for &'a QSqrt2 {
    type Output = QSqrt2;
    fn add(self, o: &QSqrt2) -> QSqrt2 {
        QSqrt2 { a: &self.a + &o.a, b: &self.b + &o.b }
    }
}

impl Add for QSqrt2 {
    type Output = QSqrt2;
    fn add(self, o: QSqrt2) -> QSqrt2 {
        &self + &o
    }
}

impl<'a> Sub<&'a QSqrt2> for &'a QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, o: &QSqrt2) -> QSqrt2 {
        QSqrt2 { a: &self.a - &o.a, b: &self.b - &o.b }
    }
}

impl Sub for QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, o: QSqrt2) -> QSqrt2 {
        &self - &o
    }
}

impl<'a> Mul<&'a QSqrt2> for &'a QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, o: &QSqrt2) -> QSqrt2 {
        QSqrt2 {
            a: &self.a * &o.a + rat_int(2) * &self.b * &o.b,
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }
}

impl Mul for QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, o: QSqrt2) -> QSqrt2 {
        &self * &o
    }
}

impl<'a> Div<&'a QSqrt2> for &'a QSqrt2 {
    type Output = QSqrt2;
    fn div(self, o: &QSqrt2) -> QSqrt2 {
        self * &o.recip().expect("division by zero in Q(sqrt2)")
    }
}

impl Neg for QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        QSqrt2 { a: -self.a, b: -self.b }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-7").unwrap(), rat_int(-7));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("1.5e-1").unwrap(), rat(3, 20));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert_eq!(QSqrt2::parse("sqrt2").unwrap(), QSqrt2::sqrt2());
        assert_eq!(QSqrt2::parse("1/2*sqrt2").unwrap(), QSqrt2::new(rat_int(0), rat(1, 2)));
    }

    #[test]
    fn field_arithmetic() {
        let r2 = QSqrt2::sqrt2();
        assert_eq!(&r2 * &r2, QSqrt2::rational(rat_int(2)));
        let x = QSqrt2::new(rat_int(1), rat_int(1));
        let y = &QSqrt2::one() / &x;
        assert_eq!(&x * &y, QSqrt2::one());
        // 3 − 2√2 > 0 but tiny
        assert_eq!(QSqrt2::new(rat_int(3), rat_int(-2)).signum(), 1);
        assert_eq!(QSqrt2::new(rat_int(-3), rat_int(2)).signum(), -1);
        assert!(QSqrt2::new(rat_int(1), rat_int(0)) < QSqrt2::sqrt2());
    }

    #[test]
    fn f64_roundtrip_is_exact() {
        let x = 0.1_f64;
        assert_eq!(rat_to_f64(&rat_from_f64(x).unwrap()), x);
    }
}
