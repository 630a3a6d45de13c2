//! Divisors with rational coefficients on ℙ¹ over ℚ, Riemann–Roch bases of
//! H⁰(nD) and Green profiles turning them into graded adelic bundles.
//!
//! With E = ⌊nD⌋ and t the affine coordinate, H⁰(E) has the basis
//! f_j = t^{j − m₀} U/V for 0 ≤ j ≤ deg E, where m₀ is the coefficient of E
//! at t = 0, U collects the other finite points with negative coefficient
//! and V those with positive coefficient. The flag point is t = 0, so f_j
//! has valuation α_j = j − m₀ and the basis is already in valuation order.
//!
//! A profile is a concave function θ = min_k (u_k x + v_k); at level n the
//! basis vector of valuation α gets weight n·θ(α/n) = min_k (u_k α + v_k n),
//! i.e. ‖f_α‖_ω = e^{−weight} in the units of the place (p^{−weight} at p).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num::{BigInt, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::adelic_curve::{LogValue, PlaceFunction};
use crate::bundles::{AdelicBundle, DegreeBracket};
use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::norms::{ArchNorm, FiniteNorm, NormFamily};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Point {
    Infinity,
    /// Monic irreducible polynomial, coefficients from the constant term up.
    Irreducible(Vec<Q>),
}

impl Point {
    pub fn t() -> Self {
        Point::Irreducible(vec![Q::zero(), Q::one()])
    }

    /// The point t = a.
    pub fn linear(a: Q) -> Self {
        Point::Irreducible(vec![-a, Q::one()])
    }

    pub fn degree(&self) -> usize {
        match self {
            Point::Infinity => 1,
            Point::Irreducible(p) => p.len() - 1,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t == "∞" {
            return Ok(Point::Infinity);
        }
        let p = poly::parse(t)?;
        poly::check_irreducible(&p)?;
        Ok(Point::Irreducible(p))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Infinity => write!(f, "inf"),
            Point::Irreducible(p) => write!(f, "{}", poly::format(p)),
        }
    }
}

mod poly {
    use super::*;

    pub fn parse(s: &str) -> Result<Vec<Q>> {
        let bad = |m: &str| Error::Parse(format!("polynomial {s:?}: {m}"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad("empty"));
        }
        let mut terms = Vec::new();
        let mut cur = String::new();
        for (i, c) in compact.chars().enumerate() {
            if (c == '+' || c == '-') && i > 0 && !cur.ends_with('^') {
                terms.push(std::mem::take(&mut cur));
            }
            cur.push(c);
        }
        terms.push(cur);
        let mut coeffs: BTreeMap<usize, Q> = BTreeMap::new();
        for term in terms {
            let (sign, body) = match term.strip_prefix('-') {
                Some(r) => (-Q::one(), r.to_string()),
                None => (Q::one(), term.trim_start_matches('+').to_string()),
            };
            let (c, e) = match body.split_once('t') {
                Some((c, rest)) => {
                    let c = c.trim_end_matches('*');
                    let c = if c.is_empty() { Q::one() } else { exact::parse_q(c)? };
                    let e = match rest.strip_prefix('^') {
                        Some(k) => k.parse::<usize>().map_err(|_| bad("bad exponent"))?,
                        None if rest.is_empty() => 1,
                        None => return Err(bad("unexpected text after t")),
                    };
                    (c, e)
                }
                None => (exact::parse_q(&body)?, 0),
            };
            *coeffs.entry(e).or_insert_with(Q::zero) += sign * c;
        }
        let deg = *coeffs.keys().max().expect("nonempty");
        let mut p = vec![Q::zero(); deg + 1];
        for (e, c) in coeffs {
            p[e] = c;
        }
        if deg == 0 || !p[deg].is_one() {
            return Err(bad("points are given by monic polynomials of positive degree"));
        }
        Ok(p)
    }

    pub fn format(p: &[Q]) -> String {
        let mut out = String::new();
        for (e, c) in p.iter().enumerate().rev().filter(|(_, c)| !c.is_zero()) {
            let neg = c.is_negative();
            let a = c.abs();
            if !out.is_empty() || neg {
                out.push(if neg { '-' } else { '+' });
            }
            let mono = match e {
                0 => String::new(),
                1 => "t".to_string(),
                _ => format!("t^{e}"),
            };
            if e == 0 {
                out.push_str(&exact::fmt_q(&a));
            } else if a.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&format!("{}*{}", exact::fmt_q(&a), mono));
            }
        }
        out
    }

    pub fn eval(p: &[Q], x: &Q) -> Q {
        p.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }

    pub fn mul(a: &[Q], b: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    pub fn pow(p: &[Q], e: u64) -> Vec<Q> {
        (0..e).fold(vec![Q::one()], |acc, _| mul(&acc, p))
    }

    fn divisors(n: &BigInt) -> Result<Vec<BigInt>> {
        let mut ds = vec![BigInt::one()];
        for (p, e) in exact::factor(n)? {
            let mut next = Vec::new();
            for d in &ds {
                let mut m = d.clone();
                for _ in 0..=e {
                    next.push(m.clone());
                    m *= BigInt::from(p);
                }
            }
            ds = next;
        }
        Ok(ds)
    }

    /// Degrees 1–3 are decided by the rational root test.
    pub fn check_irreducible(p: &[Q]) -> Result<()> {
        let d = p.len() - 1;
        if d == 1 {
            return Ok(());
        }
        if d > 3 {
            return Err(Error::Unsupported(format!("irreducibility test for degree {d}")));
        }
        let l: BigInt = p.iter().fold(BigInt::one(), |acc: BigInt, c| num::Integer::lcm(&acc, c.denom()));
        let ints: Vec<BigInt> = p.iter().map(|c| (c * Q::from_integer(l.clone())).to_integer()).collect();
        if ints[0].is_zero() {
            return Err(Error::Invalid(format!("{} vanishes at 0", format(p))));
        }
        for a in divisors(&ints[0].abs())? {
            for b in divisors(&ints[d].abs())? {
                for s in [1, -1] {
                    let x = Q::new(&a * BigInt::from(s), b.clone());
                    if eval(p, &x).is_zero() {
                        return Err(Error::Invalid(format!("{} has the rational root {}", format(p), exact::fmt_q(&x))));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Σ c_P [P] with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RDivisorP1 {
    terms: BTreeMap<Point, Q>,
}

impl RDivisorP1 {
    pub fn new(terms: impl IntoIterator<Item = (Point, Q)>) -> Self {
        let mut m: BTreeMap<Point, Q> = BTreeMap::new();
        for (p, c) in terms {
            *m.entry(p).or_insert_with(Q::zero) += c;
        }
        m.retain(|_, c| !c.is_zero());
        RDivisorP1 { terms: m }
    }

    pub fn point(p: Point, c: Q) -> Self {
        Self::new([(p, c)])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Point, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, p: &Point) -> Q {
        self.terms.get(p).cloned().unwrap_or_else(Q::zero)
    }

    pub fn degree(&self) -> Q {
        self.terms.iter().fold(Q::zero(), |acc, (p, c)| acc + c * exact::q(p.degree() as i64))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.terms.iter().chain(other.terms.iter()).map(|(p, c)| (p.clone(), c.clone())))
    }

    pub fn scale(&self, a: &Q) -> Self {
        Self::new(self.terms.iter().map(|(p, c)| (p.clone(), c * a)))
    }

    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    /// Coefficients of ⌊nD⌋.
    pub fn floor_coeffs(&self, n: u64) -> BTreeMap<Point, BigInt> {
        let nq = Q::from_integer(BigInt::from(n));
        self.terms.iter().map(|(p, c)| (p.clone(), exact::floor(&(c * &nq)))).collect()
    }

    pub fn floor_degree(&self, n: u64) -> BigInt {
        self.floor_coeffs(n).iter().map(|(p, m)| m * BigInt::from(p.degree())).sum::<BigInt>()
    }

    /// dim H⁰(nD) = max(0, deg⌊nD⌋ + 1).
    pub fn dim(&self, n: u64) -> usize {
        let d = self.floor_degree(n);
        if d.is_negative() {
            0
        } else {
            (d + BigInt::one()).to_usize().expect("dimension fits in usize")
        }
    }

    /// The Okounkov body [−c₀, −c₀ + deg D], c₀ the coefficient at t = 0.
    pub fn body(&self) -> Option<(Q, Q)> {
        let d = self.degree();
        if d.is_negative() {
            return None;
        }
        let c0 = self.coeff(&Point::t());
        Some((-c0.clone(), d - c0))
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    point: String,
    #[serde(with = "exact::qstr")]
    c: Q,
}

impl Serialize for RDivisorP1 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<TermRepr> = self.terms.iter().map(|(p, c)| TermRepr { point: p.to_string(), c: c.clone() }).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RDivisorP1 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<TermRepr> = Vec::deserialize(d)?;
        let mut terms = Vec::new();
        for (i, t) in v.into_iter().enumerate() {
            let p = Point::parse(&t.point).map_err(|e| serde::de::Error::custom(format!("[{i}].point: {e}")))?;
            terms.push((p, t.c));
        }
        Ok(RDivisorP1::new(terms))
    }
}

/// num / den as polynomials in t.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalFunction {
    #[serde(with = "exact::qvec")]
    pub num: Vec<Q>,
    #[serde(with = "exact::qvec")]
    pub den: Vec<Q>,
}

/// Basis f_j = t^{α_j} U / V of H⁰(⌊nD⌋) with α_j = α_min + j.
#[derive(Debug, Clone, PartialEq)]
pub struct RrBasis {
    pub n: u64,
    pub alpha_min: i64,
    pub dim: usize,
    pub u: Vec<Q>,
    pub v: Vec<Q>,
}

impl RrBasis {
    pub fn alphas(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.dim as i64).map(move |j| self.alpha_min + j)
    }

    pub fn element(&self, j: usize) -> RationalFunction {
        let a = self.alpha_min + j as i64;
        let mono = |e: i64| -> Vec<Q> {
            let mut m = vec![Q::zero(); e as usize + 1];
            m[e as usize] = Q::one();
            m
        };
        if a >= 0 {
            RationalFunction { num: poly::mul(&mono(a), &self.u), den: self.v.clone() }
        } else {
            RationalFunction { num: self.u.clone(), den: poly::mul(&mono(-a), &self.v) }
        }
    }

    pub fn functions(&self) -> Vec<RationalFunction> {
        (0..self.dim).map(|j| self.element(j)).collect()
    }
}

pub fn riemann_roch_basis(d: &RDivisorP1, n: u64) -> RrBasis {
    let e = d.floor_coeffs(n);
    let m0 = e.get(&Point::t()).cloned().unwrap_or_else(BigInt::zero);
    let mut u = vec![Q::one()];
    let mut v = vec![Q::one()];
    for (p, m) in &e {
        let Point::Irreducible(poly) = p else { continue };
        if *p == Point::t() || m.is_zero() {
            continue;
        }
        let k = m.abs().to_u64().expect("small multiplicity");
        if m.is_negative() {
            u = poly::mul(&u, &poly::pow(poly, k));
        } else {
            v = poly::mul(&v, &poly::pow(poly, k));
        }
    }
    RrBasis { n, alpha_min: -m0.to_i64().expect("small multiplicity"), dim: d.dim(n), u, v }
}

/// θ(x) = min_k (u_k x + v_k): a concave piecewise-linear roof function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    pub pieces: Vec<(Q, Q)>,
}

impl Default for Profile {
    fn default() -> Self {
        Profile::linear(Q::zero(), Q::zero())
    }
}

impl Profile {
    pub fn linear(u: Q, v: Q) -> Self {
        Profile { pieces: vec![(u, v)] }
    }

    pub fn constant(c: Q) -> Self {
        Profile::linear(Q::zero(), c)
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|(u, v)| u.is_zero() && v.is_zero())
    }

    /// Weight of valuation α at level n: n·θ(α/n).
    pub fn weight(&self, n: u64, alpha: i64) -> Q {
        let (nq, aq) = (exact::q(n as i64), exact::q(alpha));
        self.pieces.iter().map(|(u, v)| u * &aq + v * &nq).min().expect("nonempty profile")
    }

    pub fn value(&self, x: &Q) -> Q {
        self.pieces.iter().map(|(u, v)| u * x + v).min().expect("nonempty profile")
    }

    /// Knots (x, θ(x)) of θ on [a, b], endpoints included.
    pub fn knots(&self, a: &Q, b: &Q) -> Vec<(Q, Q)> {
        let mut pts = vec![(a.clone(), self.value(a))];
        let mut x = a.clone();
        while x < *b {
            let fx = self.value(&x);
            let (ua, va) = self
                .pieces
                .iter()
                .filter(|(u, v)| u * &x + v == fx)
                .min_by(|p, q| p.0.cmp(&q.0))
                .cloned()
                .expect("minimizer");
            let next = self
                .pieces
                .iter()
                .filter(|(u, _)| *u < ua)
                .map(|(u, v)| (v - &va) / (&ua - u))
                .filter(|y| *y > x)
                .min();
            match next {
                Some(y) if y < *b => {
                    pts.push((y.clone(), self.value(&y)));
                    x = y;
                }
                _ => break,
            }
        }
        if a < b {
            pts.push((b.clone(), self.value(b)));
        }
        pts
    }

    pub fn inf_on(&self, a: &Q, b: &Q) -> Q {
        self.knots(a, b).into_iter().map(|(_, y)| y).min().expect("nonempty")
    }

    pub fn sup_on(&self, a: &Q, b: &Q) -> Q {
        self.knots(a, b).into_iter().map(|(_, y)| y).max().expect("nonempty")
    }

    /// Profile of α·(D, g): x ↦ α θ(x/α).
    pub fn scale(&self, a: &Q) -> Self {
        Profile { pieces: self.pieces.iter().map(|(u, v)| (u.clone(), v * a)).collect() }
    }

    /// Pointwise multiple c·θ.
    pub fn times(&self, c: &Q) -> Self {
        Profile { pieces: self.pieces.iter().map(|(u, v)| (u * c, v * c)).collect() }
    }

    /// ∫_a^b θ, exact.
    pub fn integral(&self, a: &Q, b: &Q) -> Q {
        self.knots(a, b).windows(2).map(|w| (&w[1].0 - &w[0].0) * (&w[0].1 + &w[1].1) / exact::q(2)).sum()
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Self {
        let pieces = self.pieces.iter().flat_map(|(u1, v1)| other.pieces.iter().map(move |(u2, v2)| (u1 + u2, v1 + v2))).collect();
        Profile { pieces }
    }

    /// (θ₁ □ θ₂)(x) = max_{x₁ + x₂ = x} θ₁(x₁) + θ₂(x₂) over the two bodies.
    pub fn sup_convolution(&self, b1: &(Q, Q), other: &Self, b2: &(Q, Q)) -> Self {
        let segs = |k: Vec<(Q, Q)>| -> Vec<(Q, Q)> { k.windows(2).map(|w| (&w[1].0 - &w[0].0, (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0))).collect() };
        let mut all = segs(self.knots(&b1.0, &b1.1));
        all.extend(segs(other.knots(&b2.0, &b2.1)));
        all.sort_by(|a, b| b.1.cmp(&a.1));
        let mut x = &b1.0 + &b2.0;
        let mut y = self.value(&b1.0) + other.value(&b2.0);
        let mut pieces = Vec::new();
        for (len, s) in all {
            pieces.push((s.clone(), &y - &s * &x));
            y += &s * &len;
            x += len;
        }
        if pieces.is_empty() {
            pieces.push((Q::zero(), y));
        }
        Profile { pieces }
    }

    fn from_value(v: &Value, path: &str) -> Result<Self> {
        let rat = |x: &Value, p: String| -> Result<Q> {
            match x {
                Value::String(s) => exact::parse_q(s).map_err(|e| Error::Parse(format!("{p}: {e}"))),
                Value::Number(n) => exact::parse_q(&n.to_string()).map_err(|e| Error::Parse(format!("{p}: {e}"))),
                _ => Err(Error::Parse(format!("{p}: expected a rational"))),
            }
        };
        let piece = |o: &Value, p: &str| -> Result<(Q, Q)> {
            let u = o.get("u").map_or(Ok(Q::zero()), |x| rat(x, format!("{p}.u")))?;
            let v = o.get("v").map_or(Ok(Q::zero()), |x| rat(x, format!("{p}.v")))?;
            Ok((u, v))
        };
        if let Some(ps) = v.get("pieces") {
            let arr = ps.as_array().ok_or_else(|| Error::Parse(format!("{path}.pieces: expected a list")))?;
            if arr.is_empty() {
                return Err(Error::Parse(format!("{path}.pieces: empty")));
            }
            let pieces = arr.iter().enumerate().map(|(i, o)| piece(o, &format!("{path}.pieces[{i}]"))).collect::<Result<_>>()?;
            return Ok(Profile { pieces });
        }
        Ok(Profile { pieces: vec![piece(v, path)?] })
    }

    fn to_value(&self) -> Value {
        let piece = |(u, v): &(Q, Q)| serde_json::json!({"u": exact::fmt_q(u), "v": exact::fmt_q(v)});
        if self.pieces.len() == 1 {
            piece(&self.pieces[0])
        } else {
            serde_json::json!({"pieces": self.pieces.iter().map(piece).collect::<Vec<_>>()})
        }
    }
}

impl Serialize for Profile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Profile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Profile::from_value(&v, "profile").map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchKind {
    /// Weighted ℓ² norm of the coefficients.
    L2,
    /// Weighted ℓ¹ norm of the coefficients.
    L1,
    /// Sup over a circle, compared with the weighted max of the coefficients.
    Circle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchModel {
    pub kind: ArchKind,
    pub profile: Profile,
    /// ‖t‖ scales by this factor; ℓ² only.
    pub radius: Q,
}

impl Default for ArchModel {
    fn default() -> Self {
        ArchModel { kind: ArchKind::L2, profile: Profile::default(), radius: Q::one() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Adelic,
    /// One trivially valued place; its profile is the `arch` profile.
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GreenModel {
    pub finite: BTreeMap<u64, Profile>,
    pub arch: ArchModel,
    pub shift: PlaceFunction,
    pub mode: Mode,
}

impl GreenModel {
    /// The zero Green function.
    pub fn trivial() -> Self {
        Self::default()
    }

    /// Zero weights over a single trivially valued place.
    pub fn one_place() -> Self {
        GreenModel { mode: Mode::Trivial, ..Self::default() }
    }

    /// Weight u·α at p; the toric model used throughout the examples.
    pub fn gauss(p: u64, u: Q) -> Self {
        GreenModel { finite: [(p, Profile::linear(u, Q::zero()))].into(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for p in self.finite.keys() {
            if !exact::is_prime(*p) {
                return Err(Error::Invalid(format!("green.finite.{p}: not a prime")));
            }
        }
        if self.arch.radius <= Q::zero() {
            return Err(Error::Invalid("green.arch.radius: must be positive".into()));
        }
        if !self.arch.radius.is_one() && self.arch.kind != ArchKind::L2 {
            return Err(Error::Unsupported("green.arch.radius: only the l2 kind takes a radius".into()));
        }
        if self.mode == Mode::Trivial && (!self.finite.is_empty() || !self.shift.finite.is_empty()) {
            return Err(Error::ModeMismatch("finite places are configured".into()));
        }
        Ok(())
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let mut g = GreenModel::default();
        if let Some(f) = v.get("finite") {
            let obj = f.as_object().ok_or_else(|| Error::Parse("green.finite: expected an object".into()))?;
            for (k, pv) in obj {
                let p: u64 = k.parse().map_err(|_| Error::Parse(format!("green.finite.{k}: not a prime")))?;
                g.finite.insert(p, Profile::from_value(pv, &format!("green.finite.{k}"))?);
            }
        }
        if let Some(a) = v.get("arch") {
            let kind = match a.get("kind") {
                None => ArchKind::L2,
                Some(k) => serde_json::from_value(k.clone()).map_err(|e| Error::Parse(format!("green.arch.kind: {e}")))?,
            };
            let radius = match a.get("radius") {
                None => Q::one(),
                Some(Value::String(s)) => exact::parse_q(s).map_err(|e| Error::Parse(format!("green.arch.radius: {e}")))?,
                Some(x) => exact::parse_q(&x.to_string()).map_err(|e| Error::Parse(format!("green.arch.radius: {e}")))?,
            };
            g.arch = ArchModel { kind, profile: Profile::from_value(a, "green.arch")?, radius };
        }
        if let Some(s) = v.get("shift") {
            g.shift = serde_json::from_value(s.clone()).map_err(|e| Error::Parse(format!("green.shift: {e}")))?;
        }
        if let Some(m) = v.get("mode") {
            g.mode = serde_json::from_value(m.clone()).map_err(|e| Error::Parse(format!("green.mode: {e}")))?;
        }
        g.validate()?;
        Ok(g)
    }

    pub fn to_value(&self) -> Value {
        let mut arch = self.arch.profile.to_value();
        arch["kind"] = serde_json::to_value(self.arch.kind).expect("kind");
        if !self.arch.radius.is_one() {
            arch["radius"] = Value::String(exact::fmt_q(&self.arch.radius));
        }
        let finite: serde_json::Map<String, Value> = self.finite.iter().map(|(p, pr)| (p.to_string(), pr.to_value())).collect();
        serde_json::json!({
            "finite": finite,
            "arch": arch,
            "shift": serde_json::to_value(&self.shift).expect("shift"),
            "mode": serde_json::to_value(self.mode).expect("mode"),
        })
    }
}

impl Serialize for GreenModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GreenModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        GreenModel::from_value(&v).map_err(serde::de::Error::custom)
    }
}

/// ⊕_n H⁰(nD) with the norms ξ_{ng}; bundles are memoized per level.
#[derive(Debug, Serialize, Deserialize)]
pub struct GradedSeries {
    pub divisor: RDivisorP1,
    #[serde(default)]
    pub green: GreenModel,
    #[serde(skip)]
    cache: RwLock<BTreeMap<u64, Arc<AdelicBundle>>>,
}

impl Clone for GradedSeries {
    fn clone(&self) -> Self {
        GradedSeries::new(self.divisor.clone(), self.green.clone())
    }
}

impl PartialEq for GradedSeries {
    fn eq(&self, other: &Self) -> bool {
        self.divisor == other.divisor && self.green == other.green
    }
}

impl GradedSeries {
    pub fn new(divisor: RDivisorP1, green: GreenModel) -> Self {
        GradedSeries { divisor, green, cache: RwLock::new(BTreeMap::new()) }
    }

    pub fn dim(&self, n: u64) -> usize {
        self.divisor.dim(n)
    }

    pub fn basis(&self, n: u64) -> RrBasis {
        riemann_roch_basis(&self.divisor, n)
    }

    pub fn alphas(&self, n: u64) -> Vec<i64> {
        self.basis(n).alphas().collect()
    }

    /// Submultiplicativity defect of the archimedean norms at level n.
    pub fn delta(&self, n: u64) -> f64 {
        match (self.green.mode, self.green.arch.kind) {
            (Mode::Adelic, ArchKind::L2) => ((n + 1) as f64).ln(),
            _ => 0.0,
        }
    }

    /// deg(f_α) at level n, exact. Also the HN slopes, as the basis is orthogonal.
    pub fn line_degrees(&self, n: u64) -> Result<Vec<LogValue>> {
        self.green.validate()?;
        let nq = exact::q(n as i64);
        let ln_r = if self.green.arch.radius.is_one() { LogValue::zero() } else { LogValue::ln_abs_rational(&self.green.arch.radius)? };
        Ok(self
            .alphas(n)
            .into_iter()
            .map(|a| {
                let mut d = LogValue::from_rational(self.green.arch.profile.weight(n, a) + &self.green.shift.arch * &nq);
                for (p, pr) in &self.green.finite {
                    d.add_ln_p(*p, &pr.weight(n, a));
                }
                for c in self.green.shift.finite.values() {
                    d.rational += c * &nq;
                }
                d += &ln_r.scale(&exact::q(-a));
                d
            })
            .collect())
    }

    /// deg(E_n, ξ_{ng}) with its bracket.
    pub fn degree(&self, n: u64) -> Result<DegreeBracket> {
        let lines = self.line_degrees(n)?;
        let r = lines.len() as f64;
        let sum = lines.iter().fold(LogValue::zero(), |a, b| &a + b);
        if self.green.mode == Mode::Adelic && self.green.arch.kind == ArchKind::Circle && r > 1.0 {
            // coefficient max ≤ circle sup ≤ r · coefficient max, and the max-norm determinant slack
            let mut lower = sum;
            lower.rational -= Q::zero();
            lower.add_float(-r * r.ln(), 0.0);
            return Ok(DegreeBracket { lower, width: 1.5 * r * r.ln() });
        }
        Ok(DegreeBracket::exact(sum))
    }

    /// The adelic bundle (E_n, exp(−nφ) ξ_{ng}).
    pub fn bundle(&self, n: u64) -> Result<Arc<AdelicBundle>> {
        if let Some(b) = self.cache.read().expect("cache lock").get(&n) {
            return Ok(b.clone());
        }
        self.green.validate()?;
        let alphas = self.alphas(n);
        if alphas.is_empty() {
            return Err(Error::EmptySpace);
        }
        let g = &self.green;
        let w = |pr: &Profile| -> Vec<Q> { alphas.iter().map(|&a| pr.weight(n, a)).collect() };
        let dim = alphas.len();
        let arch = match (g.mode, g.arch.kind) {
            // a single trivially valued place: the ℓ¹ form has the same lines and determinant
            (Mode::Trivial, _) | (_, ArchKind::L1) => ArchNorm::WeightedSum { weights: w(&g.arch.profile) },
            (_, ArchKind::Circle) => ArchNorm::WeightedMax { weights: w(&g.arch.profile) },
            (_, ArchKind::L2) => {
                let mut gram = exact::zeros(dim, dim);
                for (i, &a) in alphas.iter().enumerate() {
                    gram[i][i] = num::pow::Pow::pow(&g.arch.radius, 2 * a as i32);
                }
                ArchNorm::Hermitian { gram, weights: w(&g.arch.profile) }
            }
        };
        let mut family = NormFamily { dim, arch, finite: BTreeMap::new() };
        for (p, pr) in &g.finite {
            family = family.with_finite(FiniteNorm::diagonal(*p, w(pr)));
        }
        let family = family.twisted(&g.shift.scale(&exact::q(n as i64)));
        let b = Arc::new(AdelicBundle::new(family));
        self.cache.write().expect("cache lock").insert(n, b.clone());
        Ok(b)
    }

    pub fn with_shift(&self, phi: &PlaceFunction) -> Self {
        let mut g = self.green.clone();
        g.shift = g.shift.add(phi);
        GradedSeries::new(self.divisor.clone(), g)
    }

    pub fn with_green(&self, green: GreenModel) -> Self {
        GradedSeries::new(self.divisor.clone(), green)
    }

    /// α·(D, g).
    pub fn scale(&self, a: &Q) -> Self {
        let g = &self.green;
        let green = GreenModel {
            finite: g.finite.iter().map(|(p, pr)| (*p, pr.scale(a))).collect(),
            arch: ArchModel { profile: g.arch.profile.scale(a), ..g.arch.clone() },
            shift: g.shift.scale(a),
            mode: g.mode,
        };
        GradedSeries::new(self.divisor.scale(a), green)
    }

    /// (D₁ + D₂, g₁ + g₂); profiles combine by sup-convolution over the bodies.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        let (g1, g2) = (&self.green, &other.green);
        if g1.mode != g2.mode || g1.arch.kind != g2.arch.kind || g1.arch.radius != g2.arch.radius {
            return Err(Error::Unsupported("sum of models with different archimedean data".into()));
        }
        let b1 = self.divisor.body().ok_or_else(|| Error::NonPositiveDegree(exact::fmt_q(&self.divisor.degree())))?;
        let b2 = other.divisor.body().ok_or_else(|| Error::NonPositiveDegree(exact::fmt_q(&other.divisor.degree())))?;
        let zero = Profile::default();
        let primes: std::collections::BTreeSet<u64> = g1.finite.keys().chain(g2.finite.keys()).copied().collect();
        let finite = primes
            .into_iter()
            .map(|p| {
                let (a, b) = (g1.finite.get(&p).unwrap_or(&zero), g2.finite.get(&p).unwrap_or(&zero));
                (p, a.sup_convolution(&b1, b, &b2))
            })
            .collect();
        let arch = ArchModel { profile: g1.arch.profile.sup_convolution(&b1, &g2.arch.profile, &b2), ..g1.arch.clone() };
        let green = GreenModel { finite, arch, shift: g1.shift.add(&g2.shift), mode: g1.mode };
        Ok(GradedSeries::new(self.divisor.add(&other.divisor), green))
    }

    /// Coordinates of f_i^{(n)} · f_j^{(m)} in the level n + m basis.
    pub fn product_coordinates(&self, n: u64, i: usize, m: u64, j: usize) -> Vec<Q> {
        let (en, em, enm) = (self.divisor.floor_coeffs(n), self.divisor.floor_coeffs(m), self.divisor.floor_coeffs(n + m));
        let get = |e: &BTreeMap<Point, BigInt>, p: &Point| e.get(p).cloned().unwrap_or_else(BigInt::zero);
        // H = Π_P P^{m_P(n+m) − m_P(n) − m_P(m)} over finite P ≠ t, a polynomial
        let mut h = vec![Q::one()];
        for p in enm.keys().chain(en.keys()) {
            let Point::Irreducible(poly) = p else { continue };
            if *p == Point::t() {
                continue;
            }
            let e = get(&enm, p) - get(&en, p) - get(&em, p);
            h = poly::mul(&h, &poly::pow(poly, e.to_u64().expect("floors are superadditive")));
        }
        let (bn, bm, bnm) = (self.basis(n), self.basis(m), self.basis(n + m));
        let shift = bn.alpha_min + i as i64 + bm.alpha_min + j as i64 - bnm.alpha_min;
        let mut out = vec![Q::zero(); bnm.dim];
        for (k, c) in h.into_iter().enumerate() {
            out[(shift + k as i64) as usize] = c;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurjectivityReport {
    pub surjective: bool,
    pub rank: usize,
    pub target_dim: usize,
    /// A basis element of the target outside the image.
    pub witness: Option<RationalFunction>,
}

/// Is H⁰(nD) ⊗ H⁰(mD) → H⁰((n+m)D) onto?
pub fn multiplication_surjectivity(s: &GradedSeries, n: u64, m: u64) -> SurjectivityReport {
    let (dn, dm, target_dim) = (s.dim(n), s.dim(m), s.dim(n + m));
    let mut rows = Vec::new();
    let mut sums = std::collections::BTreeSet::new();
    for i in 0..dn {
        for j in 0..dm {
            // products with equal valuation sums are equal
            if sums.insert(i + j) {
                rows.push(s.product_coordinates(n, i, m, j));
            }
        }
    }
    let r = exact::rref(&rows);
    let pivots: Vec<usize> = r.iter().map(|row| row.iter().position(|x| !x.is_zero()).expect("nonzero row")).collect();
    let witness = (0..target_dim).find(|c| !pivots.contains(c)).map(|c| s.basis(n + m).element(c));
    SurjectivityReport { surjective: r.len() == target_dim, rank: r.len(), target_dim, witness }
}
