//! Exact rational arithmetic: parsing, p-adic valuations, integer
//! factorization, high-precision logarithms of primes and dense matrix
//! routines over the rationals.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use num::bigint::{BigInt, BigUint, Sign};
use num::{BigRational, Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;
pub type QMatrix = Vec<Vec<Q>>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"a/b"`, `"a"` or a finite decimal such as `"-0.25"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((a, b)) = t.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| bad())?;
        let d: BigInt = b.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        if fp.is_empty() || !fp.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        let digits: BigInt = format!("{}{}", if ip.is_empty() { "0" } else { ip }, fp)
            .parse()
            .map_err(|_| bad())?;
        let den = num::pow(BigInt::from(10), fp.len());
        let v = Q::new(digits, den);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let (n, d) = (ln_bigint(x.numer()), ln_bigint(x.denom()));
        x.signum().to_f64().unwrap_or(1.0) * (n - d).exp()
    })
}

/// Serde adapter storing a rational as a `"num/den"` string.
pub mod qstr {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) => parse_q(&s).map_err(serde::de::Error::custom),
            serde_json::Value::Number(n) => {
                parse_q(&n.to_string()).map_err(serde::de::Error::custom)
            }
            other => Err(serde::de::Error::custom(format!("expected rational, got {other}"))),
        }
    }
}

/// Serde adapter for `Vec<Q>`.
pub mod qvec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct W(#[serde(with = "super::qstr")] Q);

    pub fn serialize<S: Serializer>(x: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<W> = x.iter().cloned().map(W).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let v: Vec<W> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|w| w.0).collect())
    }
}

/// Serde adapter for row-major rational matrices.
pub mod qmat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row(#[serde(with = "super::qvec")] Vec<Q>);

    pub fn serialize<S: Serializer>(m: &QMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<Row> = m.iter().cloned().map(Row).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<QMatrix, D::Error> {
        let v: Vec<Row> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|r| r.0).collect())
    }
}

// ---------------------------------------------------------------------------
// valuations and factorization

/// p-adic valuation of a nonzero integer.
pub fn vp_int(p: u64, n: &BigInt) -> i64 {
    debug_assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut m = n.abs();
    let mut v = 0;
    loop {
        let (quo, rem) = m.div_rem(&p);
        if !rem.is_zero() {
            return v;
        }
        m = quo;
        v += 1;
    }
}

/// p-adic valuation of a nonzero rational.
pub fn vp(p: u64, x: &Q) -> i64 {
    vp_int(p, x.numer()) - vp_int(p, x.denom())
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for sp in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % sp == 0 {
            return n == sp;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    r
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn pollard_brent(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mulmod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u64(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn factor_u64(n: u64, out: &mut BTreeMap<u64, u32>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        *out.entry(n).or_insert(0) += 1;
        return;
    }
    let d = pollard_brent(n);
    factor_u64(d, out);
    factor_u64(n / d, out);
}

/// Prime factorization of a nonzero integer's absolute value.
///
/// Factors larger than 2^64 are reported in the error variant.
pub fn factor(n: &BigInt) -> Result<BTreeMap<u64, u32>> {
    let mut out = BTreeMap::new();
    let mut m: BigUint = n.magnitude().clone();
    if m.is_zero() {
        return Err(Error::ZeroInput);
    }
    for p in small_primes() {
        let bp = BigUint::from(*p);
        if &bp * &bp > m {
            break;
        }
        while (&m % &bp).is_zero() {
            m /= &bp;
            *out.entry(*p).or_insert(0) += 1;
        }
    }
    if m.is_one() {
        return Ok(out);
    }
    match m.to_u64() {
        Some(r) => {
            factor_u64(r, &mut out);
            Ok(out)
        }
        None => Err(Error::Unsupported(format!("integer cofactor {m} exceeds 64 bits"))),
    }
}

fn small_primes() -> &'static [u64] {
    static P: OnceLock<Vec<u64>> = OnceLock::new();
    P.get_or_init(|| {
        let lim = 1 << 16;
        let mut sieve = vec![true; lim];
        let mut ps = Vec::new();
        for i in 2..lim {
            if sieve[i] {
                ps.push(i as u64);
                let mut j = i * i;
                while j < lim {
                    sieve[j] = false;
                    j += i;
                }
            }
        }
        ps
    })
}

/// Exponents of ln p with Σ e_p ln p = ln |x| for a nonzero rational.
pub fn log_abs_factorization(x: &Q) -> Result<BTreeMap<u64, Q>> {
    let mut out: BTreeMap<u64, Q> = BTreeMap::new();
    for (p, e) in factor(x.numer())? {
        *out.entry(p).or_insert_with(Q::zero) += q(e as i64);
    }
    for (p, e) in factor(x.denom())? {
        *out.entry(p).or_insert_with(Q::zero) -= q(e as i64);
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

// ---------------------------------------------------------------------------
// high-precision logarithms

/// Fixed-point scale of the cached prime logarithms: 2^LN_BITS (≈ 48 digits).
pub const LN_BITS: u64 = 160;

fn atanh_fixed(a: &BigInt, b: &BigInt) -> BigInt {
    let one = BigInt::one() << LN_BITS;
    let mut term = &one * a / b;
    let (a2, b2) = (a * a, b * b);
    let mut sum = term.clone();
    let mut k = 1u64;
    loop {
        term = term * &a2 / &b2;
        if term.is_zero() {
            return sum;
        }
        sum += &term / BigInt::from(2 * k + 1);
        k += 1;
    }
}

fn ln2_fixed() -> &'static BigInt {
    static L: OnceLock<BigInt> = OnceLock::new();
    L.get_or_init(|| atanh_fixed(&BigInt::one(), &BigInt::from(3)) * 2)
}

/// ln p scaled by 2^LN_BITS; cached, deterministic.
pub fn ln_fixed(p: u64) -> BigInt {
    static CACHE: OnceLock<Mutex<HashMap<u64, BigInt>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("ln cache poisoned").get(&p) {
        return v.clone();
    }
    let k = 63 - p.leading_zeros() as u64;
    let base = BigInt::from(1u64) << k;
    let pp = BigInt::from(p);
    let v: BigInt = ln2_fixed() * BigInt::from(k) + atanh_fixed(&(&pp - &base), &(&pp + &base)) * 2;
    cache.lock().expect("ln cache poisoned").insert(p, v.clone());
    v
}

pub fn fixed_to_f64(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits > 1000 {
        let shift = bits - 900;
        return (x >> shift).to_f64().unwrap_or(f64::NAN) * 2f64.powi((shift as i64 - LN_BITS as i64) as i32);
    }
    x.to_f64().unwrap_or(f64::NAN) / 2f64.powi(LN_BITS as i32)
}

/// ln |n| in double precision for arbitrary-size integers.
pub fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 60;
    let top = (n.abs() >> shift).to_f64().unwrap_or(1.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_q(x: &Q) -> f64 {
    ln_bigint(x.numer()) - ln_bigint(x.denom())
}

// ---------------------------------------------------------------------------
// matrices

pub fn zeros(r: usize, c: usize) -> QMatrix {
    vec![vec![Q::zero(); c]; r]
}

pub fn identity(n: usize) -> QMatrix {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Q::one();
    }
    m
}

pub fn transpose(m: &QMatrix) -> QMatrix {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_mul(a: &QMatrix, b: &QMatrix) -> QMatrix {
    let (n, k) = (a.len(), b.len());
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut out = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] += &a[i][l] * &b[l][j];
            }
        }
    }
    out
}

pub fn mat_vec(a: &QMatrix, x: &[Q]) -> Vec<Q> {
    a.iter()
        .map(|r| r.iter().zip(x).fold(Q::zero(), |acc, (u, v)| acc + u * v))
        .collect()
}

/// Columns of a matrix as vectors.
pub fn columns(m: &QMatrix) -> Vec<Vec<Q>> {
    transpose(m)
}

pub fn from_columns(cols: &[Vec<Q>], rows: usize) -> QMatrix {
    let mut m = zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for i in 0..rows {
            m[i][j] = c[i].clone();
        }
    }
    m
}

pub fn det(m: &QMatrix) -> Q {
    let n = m.len();
    let mut a = m.clone();
    let mut d = Q::one();
    for c in 0..n {
        let Some(piv) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return Q::zero();
        };
        if piv != c {
            a.swap(piv, c);
            d = -d;
        }
        let pv = a[c][c].clone();
        d *= &pv;
        for r in c + 1..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &pv;
            for j in c..n {
                let t = &f * &a[c][j];
                a[r][j] -= t;
            }
        }
    }
    d
}

pub fn inverse(m: &QMatrix) -> Option<QMatrix> {
    let n = m.len();
    let mut a: QMatrix = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(piv, c);
        let pv = a[c][c].clone();
        for x in a[c].iter_mut() {
            *x /= &pv;
        }
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for j in 0..2 * n {
                    let t = &f * &a[c][j];
                    a[r][j] -= t;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Reduced row echelon form of a list of row vectors; zero rows dropped.
pub fn rref(rows: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let mut a: Vec<Vec<Q>> = rows.to_vec();
    let ncols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..ncols {
        let Some(piv) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(piv, r);
        let pv = a[r][c].clone();
        for x in a[r].iter_mut() {
            *x /= &pv;
        }
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in c..ncols {
                    let t = &f * &a[r][j];
                    a[i][j] -= t;
                }
            }
        }
        r += 1;
        if r == a.len() {
            break;
        }
    }
    a.truncate(r);
    a
}

pub fn rank(rows: &[Vec<Q>]) -> usize {
    rref(rows).len()
}

/// Basis of {x : A x = 0} for a row-major A with `ncols` columns.
pub fn kernel(a: &[Vec<Q>], ncols: usize) -> Vec<Vec<Q>> {
    let r = rref(a);
    let pivots: Vec<usize> = r
        .iter()
        .map(|row| row.iter().position(|x| !x.is_zero()).expect("nonzero row"))
        .collect();
    let mut out = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Q::zero(); ncols];
        v[free] = Q::one();
        for (row, &pc) in r.iter().zip(&pivots) {
            v[pc] = -row[free].clone();
        }
        out.push(v);
    }
    out
}

/// Scales a nonzero rational vector to a primitive integer vector with a
/// positive leading entry.
pub fn primitive(v: &[Q]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let sign = ints.iter().find(|x| !x.is_zero()).map_or(Sign::Plus, |x| x.sign());
    ints.into_iter()
        .map(|x| {
            let y = x / &g;
            if sign == Sign::Minus {
                -y
            } else {
                y
            }
        })
        .collect()
}

/// All k-element subsets of 0..n in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Minor of a row-major matrix on the given rows and columns.
pub fn minor(m: &QMatrix, rows: &[usize], cols: &[usize]) -> Q {
    let sub: QMatrix = rows.iter().map(|&i| cols.iter().map(|&j| m[i][j].clone()).collect()).collect();
    det(&sub)
}

pub fn floor(x: &Q) -> BigInt {
    x.floor().to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_q("3/6").unwrap(), qf(1, 2));
        assert_eq!(parse_q("-0.25").unwrap(), qf(-1, 4));
        assert_eq!(parse_q("7").unwrap(), q(7));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn ln_table_matches_f64() {
        for p in [2u64, 3, 5, 7, 97, 65537, 1_000_003] {
            let v = fixed_to_f64(&ln_fixed(p));
            assert!((v - (p as f64).ln()).abs() < 1e-14, "{p}");
        }
    }

    #[test]
    fn ln2_has_forty_digits() {
        let digits = (ln_fixed(2) * num::pow(BigInt::from(10), 40)) >> LN_BITS;
        assert_eq!(digits.to_string(), "6931471805599453094172321214581765680755");
    }

    #[test]
    fn factorization_round_trips() {
        let n: BigInt = "600851475143".parse().unwrap();
        let f = factor(&n).unwrap();
        let back = f.iter().fold(BigInt::one(), |acc, (p, e)| acc * num::pow(BigInt::from(*p), *e as usize));
        assert_eq!(back, n);
        assert_eq!(f.keys().copied().collect::<Vec<_>>(), vec![71, 839, 1471, 6857]);
    }

    #[test]
    fn kernel_and_rank() {
        let a = vec![vec![q(1), q(1), q(0)], vec![q(0), q(1), q(1)]];
        let k = kernel(&a, 3);
        assert_eq!(k, vec![vec![q(1), q(-1), q(1)]]);
        assert_eq!(rank(&a), 2);
    }

    #[test]
    fn inverse_and_det() {
        let m = vec![vec![q(2), q(1)], vec![q(1), q(1)]];
        assert_eq!(det(&m), q(1));
        let inv = inverse(&m).unwrap();
        assert_eq!(mat_mul(&m, &inv), identity(2));
    }
}
