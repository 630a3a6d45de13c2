//! Adelic vector bundles over ℚ: degrees, slopes, Harder–Narasimhan
//! filtrations, successive minima and twists.
//!
//! Two classes are handled exactly.
//!
//! * Diagonal families, where the standard basis is orthogonal at every
//!   place. Every subspace then has degree at most the sum of its best
//!   coordinate lines, so the filtration is read off sorted line degrees.
//! * Hermitian lattices: identity bases with integral weights at the finite
//!   places and a Gram matrix at ∞. The filtration is found by iterating the
//!   maximal destabilizing sublattice of successive quotient lattices, and
//!   every reported degree is recomputed exactly afterwards.

use std::cmp::Ordering;

use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::adelic_curve::{LogValue, PlaceFunction};
use crate::error::{Error, Result};
use crate::exact::{self, QMatrix, Q};
use crate::fla::{self, FMatrix};
use crate::lattice;
use crate::norms::{self, ArchNorm, FiniteNorm, NormFamily};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdelicBundle {
    #[serde(flatten)]
    pub family: NormFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl AdelicBundle {
    pub fn new(family: NormFamily) -> Self {
        AdelicBundle { family, labels: None }
    }

    pub fn standard(dim: usize) -> Self {
        Self::new(NormFamily::standard(dim))
    }

    pub fn dim(&self) -> usize {
        self.family.dim
    }
}

/// A degree known to lie in [lower, lower + width].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeBracket {
    pub lower: LogValue,
    pub width: f64,
}

impl DegreeBracket {
    pub fn exact(v: LogValue) -> Self {
        DegreeBracket { lower: v, width: 0.0 }
    }

    pub fn upper(&self) -> f64 {
        self.lower.value() + self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HnConfig {
    /// Largest dimension handled by the lattice search without `heuristic`.
    pub cap: usize,
    pub heuristic: bool,
    /// Bound on the number of enumerated lattice vectors per search.
    pub enum_cap: usize,
}

impl Default for HnConfig {
    fn default() -> Self {
        HnConfig { cap: 4, heuristic: false, enum_cap: 200_000 }
    }
}

/// ℱ^t for t in (slope of step j+1, slope of step j] is `subspaces[j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HnFiltration {
    pub dim: usize,
    /// Distinct slopes, strictly decreasing.
    pub breakpoints: Vec<LogValue>,
    /// Nested steps as row-reduced bases; the last is the whole space.
    #[serde(with = "subspace_list")]
    pub subspaces: Vec<QMatrix>,
    /// μ₁ ≥ … ≥ μ_r with multiplicity.
    pub slopes: Vec<LogValue>,
    pub certified: bool,
}

impl HnFiltration {
    pub fn mu_max(&self) -> &LogValue {
        &self.slopes[0]
    }

    pub fn mu_min(&self) -> &LogValue {
        self.slopes.last().expect("nonzero dimension")
    }

    /// Basis rows of ℱ^t; empty above the largest slope.
    pub fn step_at(&self, t: f64) -> QMatrix {
        self.breakpoints
            .iter()
            .rposition(|b| b.value() >= t)
            .map(|j| self.subspaces[j].clone())
            .unwrap_or_default()
    }

    pub fn slope_values(&self) -> Vec<f64> {
        self.slopes.iter().map(LogValue::value).collect()
    }
}

mod subspace_list {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &[QMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let out: Vec<Vec<Vec<String>>> = v.iter().map(|m| m.iter().map(|r| r.iter().map(exact::fmt_q).collect()).collect()).collect();
        out.serialize(s)
    }
}

/// −Σ_ω ln‖s‖_ω.
pub fn degree_of_vector(e: &AdelicBundle, s: &[Q]) -> Result<LogValue> {
    let xi = &e.family;
    if s.len() != xi.dim {
        return Err(Error::DimensionMismatch(s.len(), xi.dim));
    }
    if s.iter().all(Q::is_zero) {
        return Err(Error::ZeroVector);
    }
    let col: QMatrix = s.iter().map(|x| vec![x.clone()]).collect();
    Ok(subspace_degree(xi, &col)?.lower)
}

/// Degree of the column span of `b` (n×k, full column rank) with the
/// restricted norms; the width is nonzero only for weighted-max norms at ∞.
pub fn subspace_degree(xi: &NormFamily, b: &QMatrix) -> Result<DegreeBracket> {
    if b.len() != xi.dim {
        return Err(Error::DimensionMismatch(b.len(), xi.dim));
    }
    let k = b.first().map_or(0, |r| r.len());
    if k == 0 {
        return Ok(DegreeBracket::exact(LogValue::zero()));
    }
    if exact::rank(&exact::transpose(b)) != k {
        return Err(Error::RankDeficient);
    }
    let mut deg = LogValue::zero();
    for (p, n) in &xi.finite {
        let r = norms::restrict_finite(n, b)?;
        // ‖e₁∧…∧e_k‖ = |det T|_p⁻¹ Π p^{-ν_a} e^{-k·shift} for the orthogonal basis T
        let vt = exact::vp(*p, &exact::det(&r.basis));
        let sum_nu: Q = r.weights.iter().fold(Q::zero(), |a, x| a + x);
        deg.add_ln_p(*p, &(sum_nu - Q::from_integer(vt.into())));
        deg.rational += &n.shift * exact::q(k as i64);
    }
    let g = minor_gcd(b)?;
    for (p, c) in exact::log_abs_factorization(&g)? {
        if !xi.finite.contains_key(&p) {
            deg.add_ln_p(p, &c);
        }
    }
    let (ln_wedge, slack) = arch_ln_wedge(&xi.arch, b)?;
    deg += &(-&ln_wedge);
    Ok(DegreeBracket { lower: deg, width: slack })
}

/// gcd of the maximal minors of b, via the Hermite form of its rows.
fn minor_gcd(b: &QMatrix) -> Result<Q> {
    let k = b[0].len();
    let dens: Vec<BigInt> = (0..k).map(|j| b.iter().fold(BigInt::one(), |a, r| a.lcm(r[j].denom()))).collect();
    let rows: Vec<Vec<BigInt>> = b
        .iter()
        .map(|r| r.iter().zip(&dens).map(|(x, d)| (x * Q::from_integer(d.clone())).to_integer()).collect())
        .collect();
    let h = lattice::hnf_rows(&rows);
    if h.len() != k {
        return Err(Error::RankDeficient);
    }
    let gi: BigInt = (0..k).map(|i| h[i][i].abs()).product();
    let den: BigInt = dens.iter().product();
    Ok(Q::new(gi, den))
}

/// ln‖b₁∧…∧b_k‖_∞ and the slack by which the true value may be smaller.
fn arch_ln_wedge(arch: &ArchNorm, b: &QMatrix) -> Result<(LogValue, f64)> {
    let k = b[0].len();
    let support: Vec<usize> = (0..b.len()).filter(|&i| b[i].iter().any(|x| !x.is_zero())).collect();
    let coordinate = support.len() == k;
    if coordinate && arch.is_diagonal() {
        let bi: QMatrix = support.iter().map(|&i| b[i].clone()).collect();
        let mut v = LogValue::ln_abs_rational(&exact::det(&bi))?;
        let w: Q = support.iter().fold(Q::zero(), |a, &i| a + &arch.weights()[i]);
        v.rational -= w;
        let slack = match arch {
            ArchNorm::Hermitian { gram, .. } => {
                let prod: Q = support.iter().fold(Q::one(), |a, &i| a * &gram[i][i]);
                v += &LogValue::ln_abs_rational(&prod)?.scale(&exact::qf(1, 2));
                0.0
            }
            ArchNorm::WeightedMax { .. } => 0.5 * k as f64 * (k as f64).ln(),
            ArchNorm::WeightedSum { .. } => 0.0,
        };
        return Ok((v, slack));
    }
    if k == 1 {
        let s: Vec<Q> = b.iter().map(|r| r[0].clone()).collect();
        return Ok((arch.ln_norm(&s)?, 0.0));
    }
    match arch {
        ArchNorm::Hermitian { gram, weights } => {
            if weights.windows(2).all(|w| w[0] == w[1]) {
                let g = exact::mat_mul(&exact::mat_mul(&exact::transpose(b), gram), b);
                let mut v = LogValue::ln_abs_rational(&exact::det(&g))?.scale(&exact::qf(1, 2));
                v.rational -= &weights[0] * exact::q(k as i64);
                Ok((v, 0.0))
            } else {
                let g = arch.gram_f64().expect("hermitian");
                let bf: FMatrix = b.iter().map(|r| r.iter().map(exact::q_to_f64).collect()).collect();
                let r = fla::mat_mul(&fla::mat_mul(&fla::transpose(&bf), &g), &bf);
                Ok((LogValue::from_f64(0.5 * fla::det(&r).ln(), 1e-11 * k as f64), 0.0))
            }
        }
        _ => Err(Error::Unsupported("weighted archimedean norm on a non-coordinate subspace".into())),
    }
}

/// deg(det Ē); 0 for the zero space.
pub fn arakelov_degree(e: &AdelicBundle) -> Result<DegreeBracket> {
    if e.family.is_diagonal() {
        let lines = diagonal_line_degrees(&e.family)?;
        let k = lines.len() as f64;
        let width = if matches!(e.family.arch, ArchNorm::WeightedMax { .. }) && k > 1.0 { 0.5 * k * k.ln() } else { 0.0 };
        return Ok(DegreeBracket { lower: lines.iter().fold(LogValue::zero(), |a, b| &a + b), width });
    }
    subspace_degree(&e.family, &exact::identity(e.dim()))
}

/// deg(e_i) for a diagonal family, without forming any matrices.
pub fn diagonal_line_degrees(xi: &NormFamily) -> Result<Vec<LogValue>> {
    if !xi.is_diagonal() {
        return Err(Error::Unsupported("line degrees need a diagonal family".into()));
    }
    (0..xi.dim)
        .map(|i| {
            let mut d = LogValue::zero();
            for (p, n) in &xi.finite {
                d.add_ln_p(*p, &n.weights[i]);
                d.rational += &n.shift;
            }
            d.rational += &xi.arch.weights()[i];
            if let ArchNorm::Hermitian { gram, .. } = &xi.arch {
                d += &LogValue::ln_abs_rational(&gram[i][i])?.scale(&exact::qf(-1, 2));
            }
            Ok(d)
        })
        .collect()
}

pub fn twist_by_phi(e: &AdelicBundle, phi: &PlaceFunction) -> AdelicBundle {
    AdelicBundle { family: e.family.twisted(phi), labels: e.labels.clone() }
}

fn is_lattice_class(xi: &NormFamily) -> bool {
    matches!(xi.arch, ArchNorm::Hermitian { .. }) && xi.finite.values().all(FiniteNorm::is_identity_basis)
}

fn has_integral_weights(xi: &NormFamily) -> bool {
    xi.finite.values().all(|n| n.weights.iter().all(|w| w.is_integer()))
}

fn unit(dim: usize, i: usize) -> Vec<Q> {
    (0..dim).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()
}

fn cols_of_rows(rows: &QMatrix, dim: usize) -> QMatrix {
    exact::from_columns(rows, dim)
}

pub fn hn_filtration(e: &AdelicBundle, cfg: &HnConfig) -> Result<HnFiltration> {
    let xi = &e.family;
    let n = xi.dim;
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    if xi.is_diagonal() {
        return diagonal_hn(e);
    }
    if !is_lattice_class(xi) {
        return Err(Error::Unsupported("filtration needs identity bases at finite places and a Hermitian norm at ∞".into()));
    }
    if n > cfg.cap && !cfg.heuristic {
        return Err(Error::Unsupported(format!("dimension {n} exceeds the cap {}", cfg.cap)));
    }
    if !has_integral_weights(xi) && !cfg.heuristic {
        return Err(Error::Unsupported("non-integral finite weights with a non-diagonal Gram matrix".into()));
    }
    lattice_hn(e, cfg)
}

fn diagonal_hn(e: &AdelicBundle) -> Result<HnFiltration> {
    let n = e.dim();
    let mut lines: Vec<(usize, LogValue)> = diagonal_line_degrees(&e.family)?.into_iter().enumerate().collect();
    lines.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let certified = !matches!(e.family.arch, ArchNorm::WeightedMax { .. });
    let mut breakpoints: Vec<LogValue> = Vec::new();
    let mut subspaces = Vec::new();
    let mut members: Vec<usize> = Vec::new();
    for (idx, (i, d)) in lines.iter().enumerate() {
        members.push(*i);
        let last_of_group = lines.get(idx + 1).is_none_or(|(_, nd)| nd.cmp_to(d) != Some(Ordering::Equal));
        if last_of_group {
            let mut m = members.clone();
            m.sort();
            subspaces.push(m.iter().map(|&j| unit(n, j)).collect());
            breakpoints.push(d.clone());
        }
    }
    let slopes = lines.into_iter().map(|(_, d)| d).collect();
    Ok(HnFiltration { dim: n, breakpoints, subspaces, slopes, certified })
}

/// x = R y identifies ℤ^n in y-coordinates with the lattice of vectors of
/// norm ≤ 1 at every finite place.
fn lattice_scales(xi: &NormFamily) -> Vec<Q> {
    (0..xi.dim)
        .map(|i| {
            xi.finite.values().fold(Q::one(), |acc, nrm| {
                let e = exact::floor(&nrm.weights[i]);
                let pq = Q::from_integer(BigInt::from(nrm.p));
                // p^{⌈−w⌉} = p^{−⌊w⌋}
                let ex = (-e).to_i32().expect("small exponent");
                acc * num::pow::Pow::pow(&pq, ex)
            })
        })
        .collect()
}

fn lattice_hn(e: &AdelicBundle, cfg: &HnConfig) -> Result<HnFiltration> {
    let xi = &e.family;
    let n = xi.dim;
    let r = lattice_scales(xi);
    let rf: Vec<f64> = r.iter().map(exact::q_to_f64).collect();
    let m = xi.arch.gram_f64().expect("hermitian");
    let qg: FMatrix = (0..n).map(|i| (0..n).map(|j| rf[i] * m[i][j] * rf[j]).collect()).collect();
    let qinv = fla::inverse(&qg).ok_or_else(|| Error::Invalid("singular Gram matrix".into()))?;
    let mut certified = has_integral_weights(xi) && n <= 5;
    let mut f: QMatrix = Vec::new();
    let mut chain: Vec<QMatrix> = Vec::new();
    while f.len() < n {
        let kern: Vec<Vec<BigInt>> = if f.is_empty() {
            (0..n).map(|i| (0..n).map(|j| BigInt::from((i == j) as i64)).collect()).collect()
        } else {
            exact::kernel(&f, n).iter().map(|v| exact::primitive(v)).collect()
        };
        let mq = kern.len();
        let kf: FMatrix = (0..n).map(|i| kern.iter().map(|v| v[i].to_f64().expect("finite")).collect()).collect();
        let kt = fla::transpose(&kf);
        let gz = fla::inverse(&fla::mat_mul(&fla::mat_mul(&kt, &qinv), &kf)).ok_or_else(|| Error::Invalid("singular quotient".into()))?;
        let krows: Vec<Vec<BigInt>> = (0..n).map(|i| kern.iter().map(|v| v[i].clone()).collect()).collect();
        let h = lattice::hnf_rows(&krows);
        let hf: FMatrix = h.iter().map(|row| row.iter().map(|x| x.to_f64().expect("finite")).collect()).collect();
        let gq = fla::mat_mul(&fla::mat_mul(&hf, &gz), &fla::transpose(&hf));
        let (vs, cert) = lattice::max_destabilizing(&gq, cfg.enum_cap)?;
        certified &= cert;
        // lift z = Σ a_i h_i through Kᵀc = z with c = K(KᵀK)⁻¹z
        let kq: QMatrix = (0..n).map(|i| kern.iter().map(|v| Q::from_integer(v[i].clone())).collect()).collect();
        let ktk = exact::mat_mul(&exact::transpose(&kq), &kq);
        let ktk_inv = exact::inverse(&ktk).ok_or(Error::RankDeficient)?;
        let mut rows = f.clone();
        for a in &vs {
            let z: Vec<Q> = (0..mq).map(|t| a.iter().zip(&h).fold(Q::zero(), |acc, (ai, hr)| acc + Q::from_integer(&hr[t] * BigInt::from(*ai)))).collect();
            let c = exact::mat_vec(&kq, &exact::mat_vec(&ktk_inv, &z));
            rows.push(c);
        }
        let next = exact::rref(&rows);
        if next.len() <= f.len() {
            return Err(Error::Invalid("destabilizing search made no progress".into()));
        }
        f = next;
        chain.push(f.clone());
    }
    let x_chain: Vec<QMatrix> = chain
        .iter()
        .map(|rows| exact::rref(&rows.iter().map(|y| y.iter().zip(&r).map(|(a, b)| a * b).collect()).collect::<Vec<_>>()))
        .collect();
    finish_chain(e, x_chain, certified)
}

/// Exact slopes of a flag; steps whose slopes fail to decrease are merged.
fn finish_chain(e: &AdelicBundle, mut chain: Vec<QMatrix>, mut certified: bool) -> Result<HnFiltration> {
    let n = e.dim();
    let degs = |chain: &[QMatrix]| -> Result<Vec<LogValue>> {
        chain.iter().map(|s| Ok(subspace_degree(&e.family, &cols_of_rows(s, n))?.lower)).collect()
    };
    loop {
        let d = degs(&chain)?;
        let mut slopes = Vec::new();
        let (mut prev_d, mut prev_k) = (LogValue::zero(), 0usize);
        for (s, dv) in chain.iter().zip(&d) {
            let k = s.len();
            slopes.push((dv - &prev_d).scale(&exact::qf(1, (k - prev_k) as i64)));
            prev_d = dv.clone();
            prev_k = k;
        }
        let bad = (1..slopes.len()).find(|&j| slopes[j].cmp_to(&slopes[j - 1]) != Some(Ordering::Less));
        match bad {
            Some(j) => {
                if slopes[j].cmp_to(&slopes[j - 1]) == Some(Ordering::Greater) {
                    certified = false;
                }
                chain.remove(j - 1);
            }
            None => {
                let mut all = Vec::new();
                let mut prev_k = 0;
                for (s, mu) in chain.iter().zip(&slopes) {
                    all.extend(std::iter::repeat_n(mu.clone(), s.len() - prev_k));
                    prev_k = s.len();
                }
                return Ok(HnFiltration { dim: n, breakpoints: slopes, subspaces: chain, slopes: all, certified });
            }
        }
    }
}

/// [Σ max(μ_i, 0), upper]. The bracket is closed when the filtration is
/// certified and degrees are exact; otherwise the Δ bound is added.
pub fn positive_degree_bracket(e: &AdelicBundle, cfg: &HnConfig) -> Result<(LogValue, LogValue)> {
    let hn = hn_filtration(e, cfg)?;
    let lower = hn.slopes.iter().fold(LogValue::zero(), |acc, mu| &acc + &mu.max_with_zero());
    let tight = hn.certified && !matches!(e.family.arch, ArchNorm::WeightedMax { .. });
    let upper = if tight { lower.clone() } else { &lower + &norms::delta_bound_check(&e.family).delta_bound };
    Ok((lower, upper))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum {
    pub nu: LogValue,
    #[serde(with = "exact::qvec")]
    pub vector: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaReport {
    pub minima: Vec<Minimum>,
    pub slopes: Vec<LogValue>,
    /// ν_i ≤ μ̂_i for every i.
    pub below_slopes: bool,
}

/// ν₁ ≥ … ≥ ν_r with attaining vectors. `cap` bounds the dimension.
pub fn successive_minima(e: &AdelicBundle, cap: usize, cfg: &HnConfig) -> Result<MinimaReport> {
    let xi = &e.family;
    let n = xi.dim;
    if n > cap {
        return Err(Error::CapExceeded(format!("dimension {n} exceeds the enumeration cap {cap}")));
    }
    let mut minima: Vec<Minimum> = if xi.is_diagonal() {
        (0..n).map(|i| Ok(Minimum { nu: degree_of_vector(e, &unit(n, i))?, vector: unit(n, i) })).collect::<Result<_>>()?
    } else if is_lattice_class(xi) && has_integral_weights(xi) {
        let r = lattice_scales(xi);
        let rf: Vec<f64> = r.iter().map(exact::q_to_f64).collect();
        let m = xi.arch.gram_f64().expect("hermitian");
        let qg: FMatrix = (0..n).map(|i| (0..n).map(|j| rf[i] * m[i][j] * rf[j]).collect()).collect();
        lattice::successive_minima(&qg, cfg.enum_cap)?
            .into_iter()
            .map(|(_, y)| {
                let v: Vec<Q> = y.iter().zip(&r).map(|(a, s)| exact::q(*a) * s).collect();
                Ok(Minimum { nu: degree_of_vector(e, &v)?, vector: v })
            })
            .collect::<Result<_>>()?
    } else {
        return Err(Error::Unsupported("successive minima outside the diagonal and lattice classes".into()));
    };
    minima.sort_by(|a, b| b.nu.total_cmp(&a.nu));
    let hn = hn_filtration(e, &HnConfig { cap: cap.max(cfg.cap), ..cfg.clone() })?;
    let below_slopes = minima.iter().zip(&hn.slopes).all(|(m, mu)| m.nu.cmp_to(mu) != Some(Ordering::Greater));
    Ok(MinimaReport { minima, slopes: hn.slopes, below_slopes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceCheck {
    pub sub: DegreeBracket,
    pub quotient: DegreeBracket,
    pub total: DegreeBracket,
    /// deg F + deg G ≤ deg E ≤ deg F + deg G + Δ, within `tol`.
    pub holds: bool,
}

/// Degrees along 0 → F → E → E/F → 0 for F spanned by the columns of b.
pub fn exact_sequence_check(e: &AdelicBundle, b: &QMatrix, tol: f64) -> Result<SequenceCheck> {
    let sub = subspace_degree(&e.family, b)?;
    let qf = norms::sub_quotient_norm(&e.family, b, norms::SubQuotient::Quotient)?;
    let quotient = arakelov_degree(&AdelicBundle::new(qf))?;
    let total = arakelov_degree(e)?;
    let delta = norms::delta_bound_check(&e.family).delta_bound.value();
    let s = sub.lower.value() + quotient.lower.value();
    let t = total.lower.value();
    let holds = s <= t + total.width + tol && t <= s + sub.width + quotient.width + delta + tol;
    Ok(SequenceCheck { sub, quotient, total, holds })
}
