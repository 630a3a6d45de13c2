//! The rationals as a proper adelic curve: the archimedean place and every
//! prime, each with measure one.
//!
//! [`LogValue`] is the value type of degrees. Multiples of ln p and rational
//! constants are kept exactly; only genuinely transcendental archimedean
//! contributions live in the float part.

use std::collections::BTreeMap;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

use num::{BigInt, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, fixed_to_f64, ln_fixed, log_abs_factorization, Q, LN_BITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Place {
    Arch,
    Finite { p: u64 },
}

impl Place {
    pub fn finite(p: u64) -> Result<Place> {
        if exact::is_prime(p) {
            Ok(Place::Finite { p })
        } else {
            Err(Error::Invalid(format!("{p} is not prime")))
        }
    }

    /// Measure of the place; one for every place of the rationals.
    pub fn weight(&self) -> Q {
        Q::one()
    }

    /// ln |a|_ω for nonzero rational a, exactly.
    pub fn ln_abs(&self, a: &Q) -> Result<LogValue> {
        if a.is_zero() {
            return Err(Error::ZeroInput);
        }
        match *self {
            Place::Arch => LogValue::ln_abs_rational(a),
            Place::Finite { p } => Ok(LogValue::ln_p(p, -Q::from_integer(exact::vp(p, a).into()))),
        }
    }
}

/// Σ_p q_p ln p + r + a, with q_p and r exact and a a float carrying an error bound.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogValue {
    pub finite: BTreeMap<u64, Q>,
    pub rational: Q,
    pub arch: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Approx {
    pub value: f64,
    pub error: f64,
}

impl LogValue {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_rational(r: Q) -> Self {
        LogValue { rational: r, ..Self::default() }
    }

    pub fn from_f64(a: f64, error: f64) -> Self {
        LogValue { arch: a, error, ..Self::default() }
    }

    /// c · ln p.
    pub fn ln_p(p: u64, c: Q) -> Self {
        let mut v = Self::zero();
        if !c.is_zero() {
            v.finite.insert(p, c);
        }
        v
    }

    /// ln |a| for nonzero rational a, decomposed over primes.
    pub fn ln_abs_rational(a: &Q) -> Result<Self> {
        Ok(LogValue { finite: log_abs_factorization(a)?, ..Self::default() })
    }

    /// Exact part is zero and float part vanishes.
    pub fn is_exact_zero(&self) -> bool {
        self.finite.is_empty() && self.rational.is_zero() && self.arch == 0.0 && self.error == 0.0
    }

    pub fn is_exact(&self) -> bool {
        self.arch == 0.0 && self.error == 0.0
    }

    /// Exact equality of the ln p coefficients and rational constant.
    pub fn exact_part_eq(&self, other: &Self) -> bool {
        self.finite == other.finite && self.rational == other.rational
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let cf = exact::q_to_f64(c);
        LogValue {
            finite: self.finite.iter().map(|(p, v)| (*p, v * c)).collect(),
            rational: &self.rational * c,
            arch: self.arch * cf,
            error: self.error * cf.abs(),
        }
    }

    pub fn add_ln_p(&mut self, p: u64, c: &Q) {
        if c.is_zero() {
            return;
        }
        let e = self.finite.entry(p).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.finite.remove(&p);
        }
    }

    pub fn add_float(&mut self, a: f64, err: f64) {
        self.arch += a;
        self.error += err + a.abs() * f64::EPSILON;
    }

    /// Evaluates with ≥ 40-digit prime logarithms before rounding.
    pub fn eval(&self) -> Approx {
        let mut acc = BigInt::zero();
        for (p, c) in &self.finite {
            acc += ln_fixed(*p) * c.numer() / c.denom();
        }
        acc += (self.rational.numer() << LN_BITS) / self.rational.denom();
        let exact = fixed_to_f64(&acc);
        let value = exact + self.arch;
        let tail: f64 = self.finite.values().map(|c| exact::q_to_f64(c).abs()).sum::<f64>() * 1e-45;
        Approx { value, error: self.error + tail + value.abs() * f64::EPSILON }
    }

    pub fn value(&self) -> f64 {
        self.eval().value
    }

    /// Sign of the value: decided exactly when there is no float part,
    /// otherwise only when |value| exceeds the error bound.
    pub fn sign(&self) -> Option<Ordering> {
        if self.is_exact() {
            if self.finite.is_empty() && self.rational.is_zero() {
                return Some(Ordering::Equal);
            }
            let mut acc = BigInt::zero();
            for (p, c) in &self.finite {
                acc += ln_fixed(*p) * c.numer() / c.denom();
            }
            acc += (self.rational.numer() << LN_BITS) / self.rational.denom();
            // one unit per term of rounding in the fixed-point sum
            let slack = BigInt::from(self.finite.len() as u64 + 2);
            return if acc > slack {
                Some(Ordering::Greater)
            } else if acc < -slack {
                Some(Ordering::Less)
            } else {
                None
            };
        }
        let a = self.eval();
        if a.value > a.error {
            Some(Ordering::Greater)
        } else if a.value < -a.error {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    /// Certified comparison; `None` when the values cannot be separated.
    pub fn cmp_to(&self, other: &Self) -> Option<Ordering> {
        (self - other).sign()
    }

    /// Total order for sorting: certified when possible, else by the float value.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp_to(other).unwrap_or_else(|| self.value().total_cmp(&other.value()))
    }

    pub fn max_with_zero(&self) -> Self {
        if self.sign() == Some(Ordering::Greater) {
            self.clone()
        } else {
            Self::zero()
        }
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.finite.iter().map(|(p, c)| format!("{}·ln{}", exact::fmt_q(c), p)).collect();
        if !self.rational.is_zero() {
            parts.push(exact::fmt_q(&self.rational));
        }
        if self.arch != 0.0 || self.error != 0.0 {
            parts.push(format!("{:.12}±{:.1e}", self.arch, self.error));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl Add for &LogValue {
    type Output = LogValue;
    fn add(self, rhs: &LogValue) -> LogValue {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(mut self, rhs: LogValue) -> LogValue {
        self += &rhs;
        self
    }
}

impl AddAssign<&LogValue> for LogValue {
    fn add_assign(&mut self, rhs: &LogValue) {
        for (p, c) in &rhs.finite {
            self.add_ln_p(*p, c);
        }
        self.rational += &rhs.rational;
        self.arch += rhs.arch;
        self.error += rhs.error;
    }
}

impl Neg for &LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue {
            finite: self.finite.iter().map(|(p, c)| (*p, -c)).collect(),
            rational: -&self.rational,
            arch: -self.arch,
            error: self.error,
        }
    }
}

impl Sub for &LogValue {
    type Output = LogValue;
    fn sub(self, rhs: &LogValue) -> LogValue {
        self + &(-rhs)
    }
}

#[derive(Serialize, Deserialize)]
struct LogValueRepr {
    finite: BTreeMap<String, String>,
    rational: String,
    arch: f64,
    error: f64,
    value: f64,
}

impl Serialize for LogValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LogValueRepr {
            finite: self.finite.iter().map(|(p, c)| (p.to_string(), exact::fmt_q(c))).collect(),
            rational: exact::fmt_q(&self.rational),
            arch: self.arch,
            error: self.error,
            value: self.value(),
        }
        .serialize(s)
    }
}

/// Σ_ω ν(ω) ln|a|_ω; the exact zero for every nonzero a.
pub fn product_formula_check(a: &Q) -> Result<LogValue> {
    let mut total = Place::Arch.ln_abs(a)?;
    for (p, e) in log_abs_factorization(a)? {
        let v = Place::Finite { p }.ln_abs(a)?;
        debug_assert_eq!(v.finite.get(&p), Some(&-e));
        total += &v;
    }
    Ok(total)
}

pub fn log_value_eval(v: &LogValue) -> Approx {
    v.eval()
}

/// A function on the place set with finite support.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlaceFunction {
    #[serde(default, with = "finite_map")]
    pub finite: BTreeMap<u64, Q>,
    #[serde(default = "Q::zero", with = "exact::qstr")]
    pub arch: Q,
}

impl PlaceFunction {
    pub fn constant_arch(c: Q) -> Self {
        PlaceFunction { finite: BTreeMap::new(), arch: c }
    }

    pub fn at(&self, place: &Place) -> Q {
        match place {
            Place::Arch => self.arch.clone(),
            Place::Finite { p } => self.finite.get(p).cloned().unwrap_or_else(Q::zero),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.arch.is_zero() && self.finite.values().all(|v| v.is_zero())
    }

    pub fn scale(&self, c: &Q) -> Self {
        PlaceFunction {
            finite: self.finite.iter().map(|(p, v)| (*p, v * c)).collect(),
            arch: &self.arch * c,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut finite = self.finite.clone();
        for (p, v) in &other.finite {
            *finite.entry(*p).or_insert_with(Q::zero) += v;
        }
        finite.retain(|_, v| !v.is_zero());
        PlaceFunction { finite, arch: &self.arch + &other.arch }
    }

    /// Lower bound of the values over all places (unlisted primes are 0).
    pub fn inf(&self) -> Q {
        self.finite.values().fold(self.arch.clone().min(Q::zero()), |m, v| m.min(v.clone()))
    }

    pub fn sup_abs(&self) -> Q {
        self.finite.values().fold(self.arch.abs(), |m, v| m.max(v.abs()))
    }
}

/// ∫_Ω φ dν as an exact rational.
pub fn integrate_place_function(phi: &PlaceFunction) -> LogValue {
    let total = phi.finite.values().fold(phi.arch.clone(), |acc, v| acc + v);
    LogValue::from_rational(total)
}

mod finite_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<u64, Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: BTreeMap<String, String> = m.iter().map(|(p, c)| (p.to_string(), exact::fmt_q(c))).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<u64, Q>, D::Error> {
        let raw: BTreeMap<String, serde_json::Value> = BTreeMap::deserialize(d)?;
        let mut out = BTreeMap::new();
        for (k, v) in raw {
            let p: u64 = k.parse().map_err(serde::de::Error::custom)?;
            if !exact::is_prime(p) {
                return Err(serde::de::Error::custom(format!("{p} is not prime")));
            }
            let s = match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            out.insert(p, exact::parse_q(&s).map_err(serde::de::Error::custom)?);
        }
        Ok(out)
    }
}
