//! Per-place norms and the norm-family constructions.
//!
//! Finite-place norms live in the splittable class: an orthogonality basis
//! with rational weights, ‖x‖_p = e^{-shift} · max_i |c_i|_p p^{-w_i}.
//! Archimedean norms are Hermitian `√(xᵀ D G D x)` with `D = diag(e^{-w})`,
//! or weighted max / weighted ℓ¹ norms.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::adelic_curve::{LogValue, Place, PlaceFunction};
use crate::error::{Error, Result};
use crate::exact::{self, qmat, qstr, qvec, QMatrix, Q};
use crate::fla::{self, FMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteNorm {
    #[serde(skip)]
    pub p: u64,
    #[serde(with = "qmat")]
    pub basis: QMatrix,
    #[serde(with = "qvec")]
    pub weights: Vec<Q>,
    #[serde(default = "Q::zero", with = "qstr", skip_serializing_if = "Q::is_zero")]
    pub shift: Q,
}

impl FiniteNorm {
    pub fn standard(p: u64, dim: usize) -> Self {
        FiniteNorm { p, basis: exact::identity(dim), weights: vec![Q::zero(); dim], shift: Q::zero() }
    }

    pub fn diagonal(p: u64, weights: Vec<Q>) -> Self {
        FiniteNorm { p, basis: exact::identity(weights.len()), weights, shift: Q::zero() }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn is_identity_basis(&self) -> bool {
        self.basis == exact::identity(self.dim())
    }

    pub fn is_standard(&self) -> bool {
        self.is_identity_basis() && self.weights.iter().all(Q::is_zero) && self.shift.is_zero()
    }

    pub fn coords(&self, x: &[Q]) -> Result<Vec<Q>> {
        let inv = exact::inverse(&self.basis).ok_or(Error::RankDeficient)?;
        Ok(exact::mat_vec(&inv, x))
    }

    /// e with ‖x‖_p = e^{-shift} p^e for x ≠ 0.
    pub fn exponent(&self, x: &[Q]) -> Result<Q> {
        let c = self.coords(x)?;
        c.iter()
            .zip(&self.weights)
            .filter(|(ci, _)| !ci.is_zero())
            .map(|(ci, w)| -Q::from_integer(exact::vp(self.p, ci).into()) - w)
            .max()
            .ok_or(Error::ZeroVector)
    }

    /// ln ‖x‖_p as an exact value.
    pub fn ln_norm(&self, x: &[Q]) -> Result<LogValue> {
        let mut v = LogValue::ln_p(self.p, self.exponent(x)?);
        v.rational -= &self.shift;
        Ok(v)
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.weights.len() != dim || self.basis.len() != dim || self.basis.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(self.weights.len(), dim));
        }
        if exact::det(&self.basis).is_zero() {
            return Err(Error::RankDeficient);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArchNorm {
    Hermitian {
        #[serde(with = "qmat")]
        gram: QMatrix,
        #[serde(default, with = "qvec", skip_serializing_if = "Vec::is_empty")]
        weights: Vec<Q>,
    },
    #[serde(rename = "max")]
    WeightedMax {
        #[serde(with = "qvec")]
        weights: Vec<Q>,
    },
    #[serde(rename = "sum")]
    WeightedSum {
        #[serde(with = "qvec")]
        weights: Vec<Q>,
    },
}

impl ArchNorm {
    pub fn identity(dim: usize) -> Self {
        ArchNorm::Hermitian { gram: exact::identity(dim), weights: vec![Q::zero(); dim] }
    }

    pub fn hermitian(gram: QMatrix) -> Self {
        let n = gram.len();
        ArchNorm::Hermitian { gram, weights: vec![Q::zero(); n] }
    }

    pub fn weights(&self) -> &[Q] {
        match self {
            ArchNorm::Hermitian { weights, .. } | ArchNorm::WeightedMax { weights } | ArchNorm::WeightedSum { weights } => weights,
        }
    }

    fn weights_mut(&mut self) -> &mut Vec<Q> {
        match self {
            ArchNorm::Hermitian { weights, .. } | ArchNorm::WeightedMax { weights } | ArchNorm::WeightedSum { weights } => weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights().len()
    }

    /// True when the standard basis is orthogonal for this norm.
    pub fn is_diagonal(&self) -> bool {
        match self {
            ArchNorm::Hermitian { gram, .. } => {
                gram.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, x)| i == j || x.is_zero()))
            }
            _ => true,
        }
    }

    fn has_uniform_weights(&self) -> bool {
        self.weights().windows(2).all(|w| w[0] == w[1])
    }

    /// D G D in floating point.
    pub fn gram_f64(&self) -> Option<FMatrix> {
        let ArchNorm::Hermitian { gram, weights } = self else {
            return None;
        };
        let e: Vec<f64> = weights.iter().map(|w| (-exact::q_to_f64(w)).exp()).collect();
        Some(
            gram.iter()
                .enumerate()
                .map(|(i, r)| r.iter().enumerate().map(|(j, g)| exact::q_to_f64(g) * e[i] * e[j]).collect())
                .collect(),
        )
    }

    pub fn norm_f64(&self, x: &[Q]) -> f64 {
        let xf: Vec<f64> = x.iter().map(exact::q_to_f64).collect();
        match self {
            ArchNorm::Hermitian { .. } => fla::quad_form(&self.gram_f64().expect("hermitian"), &xf).sqrt(),
            ArchNorm::WeightedMax { weights } => {
                xf.iter().zip(weights).map(|(c, w)| c.abs() * (-exact::q_to_f64(w)).exp()).fold(0.0, f64::max)
            }
            ArchNorm::WeightedSum { weights } => xf.iter().zip(weights).map(|(c, w)| c.abs() * (-exact::q_to_f64(w)).exp()).sum(),
        }
    }

    /// ln ‖x‖_∞, exact whenever the value lies in the ℚ-span of prime logarithms.
    pub fn ln_norm(&self, x: &[Q]) -> Result<LogValue> {
        if x.iter().all(Q::is_zero) {
            return Err(Error::ZeroVector);
        }
        match self {
            ArchNorm::WeightedMax { weights } => {
                let xf: Vec<f64> = x.iter().map(exact::q_to_f64).collect();
                let i = (0..x.len())
                    .filter(|&i| !x[i].is_zero())
                    .max_by(|&a, &b| {
                        let va = xf[a].abs().ln() - exact::q_to_f64(&weights[a]);
                        let vb = xf[b].abs().ln() - exact::q_to_f64(&weights[b]);
                        va.total_cmp(&vb)
                    })
                    .expect("nonzero vector");
                let mut v = LogValue::ln_abs_rational(&x[i])?;
                v.rational -= &weights[i];
                Ok(v)
            }
            ArchNorm::Hermitian { gram, weights } if self.has_uniform_weights() => {
                let g = exact::mat_vec(gram, x);
                let s: Q = g.iter().zip(x).fold(Q::zero(), |acc, (a, b)| acc + a * b);
                let mut v = LogValue::ln_abs_rational(&s)?.scale(&exact::qf(1, 2));
                v.rational -= weights.first().cloned().unwrap_or_else(Q::zero);
                Ok(v)
            }
            _ => Ok(LogValue::from_f64(self.norm_f64(x).ln(), 1e-13)),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch(self.dim(), dim));
        }
        if let ArchNorm::Hermitian { gram, .. } = self {
            if gram.len() != dim || gram.iter().any(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch(gram.len(), dim));
            }
            for i in 0..dim {
                for j in 0..dim {
                    if gram[i][j] != gram[j][i] {
                        return Err(Error::Invalid("gram matrix is not symmetric".into()));
                    }
                }
            }
            for k in 1..=dim {
                let idx: Vec<usize> = (0..k).collect();
                if !exact::minor(gram, &idx, &idx).is_positive() {
                    return Err(Error::Invalid("gram matrix is not positive definite".into()));
                }
            }
        }
        Ok(())
    }
}

/// A norm at every place; primes not listed carry the standard lattice norm.
#[derive(Debug, Clone, PartialEq)]
pub struct NormFamily {
    pub dim: usize,
    pub arch: ArchNorm,
    pub finite: BTreeMap<u64, FiniteNorm>,
}

#[derive(Serialize, Deserialize)]
struct FamilyRepr {
    dim: usize,
    arch: ArchNorm,
    #[serde(default)]
    finite: BTreeMap<String, FiniteNorm>,
}

impl Serialize for NormFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FamilyRepr {
            dim: self.dim,
            arch: self.arch.clone(),
            finite: self.finite.iter().map(|(p, n)| (p.to_string(), n.clone())).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NormFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut r = FamilyRepr::deserialize(d)?;
        if let ArchNorm::Hermitian { weights, .. } = &mut r.arch {
            if weights.is_empty() {
                *weights = vec![Q::zero(); r.dim];
            }
        }
        let mut finite = BTreeMap::new();
        for (k, mut n) in r.finite {
            let p: u64 = k.parse().map_err(serde::de::Error::custom)?;
            n.p = p;
            finite.insert(p, n);
        }
        let fam = NormFamily { dim: r.dim, arch: r.arch, finite };
        fam.validate().map_err(serde::de::Error::custom)?;
        Ok(fam)
    }
}

impl NormFamily {
    /// Standard lattice at every prime and the identity Gram matrix at ∞.
    pub fn standard(dim: usize) -> Self {
        NormFamily { dim, arch: ArchNorm::identity(dim), finite: BTreeMap::new() }
    }

    pub fn with_arch(mut self, arch: ArchNorm) -> Self {
        self.arch = arch;
        self
    }

    pub fn with_finite(mut self, n: FiniteNorm) -> Self {
        self.finite.insert(n.p, n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.arch.validate(self.dim)?;
        for (p, n) in &self.finite {
            if !exact::is_prime(*p) || n.p != *p {
                return Err(Error::Invalid(format!("finite place {p} is not a prime")));
            }
            n.validate(self.dim)?;
        }
        Ok(())
    }

    pub fn finite_norm(&self, p: u64) -> FiniteNorm {
        self.finite.get(&p).cloned().unwrap_or_else(|| FiniteNorm::standard(p, self.dim))
    }

    /// Places where the family differs from the standard one.
    pub fn support(&self) -> Vec<Place> {
        let mut out: Vec<Place> = self.finite.iter().filter(|(_, n)| !n.is_standard()).map(|(p, _)| Place::Finite { p: *p }).collect();
        out.push(Place::Arch);
        out
    }

    /// Identity bases at every finite place and a diagonal archimedean norm.
    pub fn is_diagonal(&self) -> bool {
        self.arch.is_diagonal() && self.finite.values().all(FiniteNorm::is_identity_basis)
    }

    /// exp(-φ)ξ: every norm at ω multiplied by e^{-φ(ω)}.
    pub fn twisted(&self, phi: &PlaceFunction) -> NormFamily {
        let mut out = self.clone();
        if !phi.arch.is_zero() {
            for w in out.arch.weights_mut() {
                *w += &phi.arch;
            }
        }
        for (p, v) in &phi.finite {
            if v.is_zero() {
                continue;
            }
            let n = out.finite.entry(*p).or_insert_with(|| FiniteNorm::standard(*p, self.dim));
            n.shift += v;
        }
        out
    }
}

pub fn dual_norm(xi: &NormFamily) -> NormFamily {
    let arch = match &xi.arch {
        ArchNorm::Hermitian { gram, weights } => ArchNorm::Hermitian {
            gram: exact::inverse(gram).expect("positive definite gram"),
            weights: weights.iter().map(|w| -w).collect(),
        },
        ArchNorm::WeightedMax { weights } => ArchNorm::WeightedSum { weights: weights.iter().map(|w| -w).collect() },
        ArchNorm::WeightedSum { weights } => ArchNorm::WeightedMax { weights: weights.iter().map(|w| -w).collect() },
    };
    let finite = xi.finite.iter().map(|(p, n)| (*p, dual_finite(n))).collect();
    NormFamily { dim: xi.dim, arch, finite }
}

fn dual_finite(n: &FiniteNorm) -> FiniteNorm {
    let inv = exact::inverse(&n.basis).expect("invertible basis");
    FiniteNorm {
        p: n.p,
        basis: exact::transpose(&inv),
        weights: n.weights.iter().map(|w| -w).collect(),
        shift: -n.shift.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubQuotient {
    Restrict,
    Quotient,
}

/// Restriction to the column span of `basis`, or the quotient by it.
///
/// A restriction is expressed in the coordinates of the given basis; a
/// quotient in the coordinates z = Kᵀx where K spans the annihilator.
pub fn sub_quotient_norm(xi: &NormFamily, basis: &QMatrix, mode: SubQuotient) -> Result<NormFamily> {
    if basis.len() != xi.dim {
        return Err(Error::DimensionMismatch(basis.len(), xi.dim));
    }
    let k = basis.first().map_or(0, |r| r.len());
    if exact::rank(&exact::transpose(basis)) != k {
        return Err(Error::RankDeficient);
    }
    match mode {
        SubQuotient::Restrict => restrict(xi, basis),
        SubQuotient::Quotient => {
            let ann = annihilator(basis, xi.dim);
            let d = restrict(&dual_norm(xi), &ann)?;
            Ok(dual_norm(&d))
        }
    }
}

/// Columns spanning {f : fᵀB = 0}.
pub fn annihilator(basis: &QMatrix, dim: usize) -> QMatrix {
    let kern = exact::kernel(&exact::transpose(basis), dim);
    exact::from_columns(&kern, dim)
}

fn restrict(xi: &NormFamily, b: &QMatrix) -> Result<NormFamily> {
    let k = b.first().map_or(0, |r| r.len());
    let arch = restrict_arch(&xi.arch, b)?;
    let finite = xi
        .finite
        .iter()
        .map(|(p, n)| Ok((*p, restrict_finite(n, b)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let mut out = NormFamily { dim: k, arch, finite };
    // unlisted primes: the standard lattice restricted to span(B) need not be standard
    for p in lattice_primes(b) {
        out.finite.entry(p).or_insert_with(|| restrict_finite(&FiniteNorm::standard(p, xi.dim), b).expect("independent"));
    }
    out.finite.retain(|_, n| !n.is_standard());
    Ok(out)
}

/// Primes at which the standard lattice restricted to span(B) differs from
/// the lattice ℤ^k in B-coordinates.
fn lattice_primes(b: &QMatrix) -> Vec<u64> {
    let mut ps = std::collections::BTreeSet::new();
    for row in b {
        for x in row.iter().filter(|x| !x.is_zero()) {
            for n in [x.numer(), x.denom()] {
                if let Ok(f) = exact::factor(n) {
                    ps.extend(f.keys().copied());
                }
            }
        }
    }
    let k = b.first().map_or(0, |r| r.len());
    for rows in exact::subsets(b.len(), k) {
        let cols: Vec<usize> = (0..k).collect();
        let m = exact::minor(b, &rows, &cols);
        if !m.is_zero() {
            if let Ok(f) = exact::factor(m.numer()) {
                ps.extend(f.keys().copied());
            }
        }
    }
    ps.into_iter().collect()
}

/// Orthogonal basis of the restriction by ultrametric full pivoting.
pub fn restrict_finite(n: &FiniteNorm, b: &QMatrix) -> Result<FiniteNorm> {
    let k = b.first().map_or(0, |r| r.len());
    let inv = exact::inverse(&n.basis).ok_or(Error::RankDeficient)?;
    let c = exact::mat_mul(&inv, b);
    let mut ys: Vec<Vec<Q>> = exact::columns(&c);
    let mut ts: Vec<Vec<Q>> = exact::identity(k);
    let mut done = vec![false; k];
    let mut used = vec![false; n.dim()];
    let mut weights = vec![Q::zero(); k];
    for _ in 0..k {
        let mut best: Option<(Q, usize, usize)> = None;
        for a in (0..k).filter(|&a| !done[a]) {
            for i in (0..n.dim()).filter(|&i| !used[i] && !ys[a][i].is_zero()) {
                let nu = Q::from_integer(exact::vp(n.p, &ys[a][i]).into()) + &n.weights[i];
                if best.as_ref().is_none_or(|(b, _, _)| nu < *b) {
                    best = Some((nu, a, i));
                }
            }
        }
        let (nu, a, i) = best.ok_or(Error::RankDeficient)?;
        for bidx in (0..k).filter(|&x| !done[x] && x != a) {
            if ys[bidx][i].is_zero() {
                continue;
            }
            let lam = &ys[bidx][i] / &ys[a][i];
            for r in 0..n.dim() {
                let t = &lam * &ys[a][r];
                ys[bidx][r] -= t;
            }
            for r in 0..k {
                let t = &lam * &ts[a][r];
                ts[bidx][r] -= t;
            }
        }
        done[a] = true;
        used[i] = true;
        weights[a] = nu;
    }
    Ok(FiniteNorm { p: n.p, basis: exact::from_columns(&ts, k), weights, shift: n.shift.clone() })
}

fn restrict_arch(a: &ArchNorm, b: &QMatrix) -> Result<ArchNorm> {
    let k = b.first().map_or(0, |r| r.len());
    let cols = exact::columns(b);
    let monomial: Option<Vec<(usize, Q)>> = cols
        .iter()
        .map(|c| {
            let nz: Vec<usize> = (0..c.len()).filter(|&i| !c[i].is_zero()).collect();
            (nz.len() == 1).then(|| (nz[0], c[nz[0]].clone()))
        })
        .collect();
    match a {
        ArchNorm::Hermitian { gram, weights } => {
            if a.has_uniform_weights() {
                let g = exact::mat_mul(&exact::mat_mul(&exact::transpose(b), gram), b);
                let w = weights.first().cloned().unwrap_or_else(Q::zero);
                return Ok(ArchNorm::Hermitian { gram: g, weights: vec![w; k] });
            }
            let m = monomial.ok_or_else(|| Error::Unsupported("restriction of a Hermitian norm with unequal weights to a non-coordinate subspace".into()))?;
            let g = (0..k)
                .map(|x| (0..k).map(|y| &m[x].1 * &m[y].1 * &gram[m[x].0][m[y].0]).collect())
                .collect();
            Ok(ArchNorm::Hermitian { gram: g, weights: m.iter().map(|(i, _)| weights[*i].clone()).collect() })
        }
        ArchNorm::WeightedMax { weights } | ArchNorm::WeightedSum { weights } => {
            let m = monomial
                .filter(|m| m.iter().all(|(_, c)| c.abs().is_one()))
                .ok_or_else(|| Error::Unsupported("restriction of a weighted norm to a non-coordinate subspace".into()))?;
            let w: Vec<Q> = m.iter().map(|(i, _)| weights[*i].clone()).collect();
            Ok(match a {
                ArchNorm::WeightedMax { .. } => ArchNorm::WeightedMax { weights: w },
                _ => ArchNorm::WeightedSum { weights: w },
            })
        }
    }
}

/// The determinant line with its norm family; `arch_log_slack` ≥ 0 bounds
/// ln‖e₁∧…∧e_r‖_∞ from below by (stored value − slack).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminantNorm {
    pub family: NormFamily,
    pub arch_log_slack: f64,
}

pub fn determinant_norm(xi: &NormFamily) -> DeterminantNorm {
    let r = xi.dim;
    let finite = xi
        .finite
        .iter()
        .map(|(p, n)| {
            let v = exact::vp(*p, &exact::det(&n.basis));
            let w: Q = n.weights.iter().fold(Q::zero(), |acc, x| acc + x) - Q::from_integer(v.into());
            let shift = &n.shift * exact::q(r as i64);
            (*p, FiniteNorm { p: *p, basis: exact::identity(1), weights: vec![w], shift })
        })
        .collect();
    let sw: Q = xi.arch.weights().iter().fold(Q::zero(), |acc, x| acc + x);
    let (arch, slack) = match &xi.arch {
        ArchNorm::Hermitian { gram, .. } => (ArchNorm::Hermitian { gram: vec![vec![exact::det(gram)]], weights: vec![sw] }, 0.0),
        ArchNorm::WeightedSum { .. } => (ArchNorm::WeightedSum { weights: vec![sw] }, 0.0),
        // Hadamard: |det(x_i)| ≤ Π‖x_i‖₂ ≤ r^{r/2} Π‖x_i‖_max
        ArchNorm::WeightedMax { .. } => (ArchNorm::WeightedMax { weights: vec![sw] }, 0.5 * r as f64 * (r as f64).ln()),
    };
    DeterminantNorm { family: NormFamily { dim: 1, arch, finite }, arch_log_slack: slack }
}

/// ε-tensor at finite places, π-tensor at ∞, for the diagonal class.
pub fn tensor_eps_pi(a: &NormFamily, b: &NormFamily) -> Result<NormFamily> {
    if !a.is_diagonal() || !b.is_diagonal() {
        return Err(Error::Unsupported("tensor product of non-diagonal norm families".into()));
    }
    let combine = |x: &[Q], y: &[Q]| -> Vec<Q> { x.iter().flat_map(|u| y.iter().map(move |v| u + v)).collect() };
    let arch = match (&a.arch, &b.arch) {
        (ArchNorm::Hermitian { gram: g1, weights: w1 }, ArchNorm::Hermitian { gram: g2, weights: w2 }) => {
            let d: Vec<Q> = (0..a.dim).flat_map(|i| (0..b.dim).map(move |j| (i, j))).map(|(i, j)| &g1[i][i] * &g2[j][j]).collect();
            let n = d.len();
            let mut g = exact::zeros(n, n);
            for (i, x) in d.into_iter().enumerate() {
                g[i][i] = x;
            }
            ArchNorm::Hermitian { gram: g, weights: combine(w1, w2) }
        }
        (ArchNorm::WeightedSum { weights: w1 }, ArchNorm::WeightedSum { weights: w2 }) => ArchNorm::WeightedSum { weights: combine(w1, w2) },
        (ArchNorm::WeightedMax { weights: w1 }, ArchNorm::WeightedMax { weights: w2 }) => ArchNorm::WeightedMax { weights: combine(w1, w2) },
        _ => return Err(Error::Unsupported("tensor product of different archimedean kinds".into())),
    };
    let primes: std::collections::BTreeSet<u64> = a.finite.keys().chain(b.finite.keys()).copied().collect();
    let finite = primes
        .into_iter()
        .map(|p| {
            let (x, y) = (a.finite_norm(p), b.finite_norm(p));
            let mut n = FiniteNorm::diagonal(p, combine(&x.weights, &y.weights));
            n.shift = &x.shift + &y.shift;
            (p, n)
        })
        .collect();
    Ok(NormFamily { dim: a.dim * b.dim, arch, finite })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distance {
    pub value: f64,
    pub exact: bool,
}

/// sup_x |ln(‖x‖₁/‖x‖₂)| at the place ω.
pub fn metric_distance(a: &NormFamily, b: &NormFamily, place: Place) -> Result<Distance> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(a.dim, b.dim));
    }
    match place {
        Place::Finite { p } => {
            let (x, y) = (a.finite_norm(p), b.finite_norm(p));
            let up = finite_log_op_norm(&x, &y);
            let down = finite_log_op_norm(&y, &x);
            let lnp = (p as f64).ln();
            let s = exact::q_to_f64(&(&y.shift - &x.shift));
            Ok(Distance { value: (exact::q_to_f64(&up) * lnp + s).max(exact::q_to_f64(&down) * lnp - s).max(0.0), exact: true })
        }
        Place::Arch => arch_distance(&a.arch, &b.arch),
    }
}

/// log_p of sup ‖x‖_a p^{..}/‖x‖_b ignoring shifts; exact for orthogonal bases.
fn finite_log_op_norm(a: &FiniteNorm, b: &FiniteNorm) -> Q {
    let m = exact::mat_mul(&exact::inverse(&a.basis).expect("basis"), &b.basis);
    let mut best: Option<Q> = None;
    for (i, row) in m.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let e = -Q::from_integer(exact::vp(a.p, x).into()) + &b.weights[j] - &a.weights[i];
            if best.as_ref().is_none_or(|v| e > *v) {
                best = Some(e);
            }
        }
    }
    best.unwrap_or_else(Q::zero)
}

fn arch_distance(a: &ArchNorm, b: &ArchNorm) -> Result<Distance> {
    let diff = |w1: &[Q], w2: &[Q]| w1.iter().zip(w2).map(|(x, y)| exact::q_to_f64(&(x - y)).abs()).fold(0.0, f64::max);
    match (a, b) {
        (ArchNorm::WeightedMax { weights: w1 }, ArchNorm::WeightedMax { weights: w2 })
        | (ArchNorm::WeightedSum { weights: w1 }, ArchNorm::WeightedSum { weights: w2 }) => Ok(Distance { value: diff(w1, w2), exact: true }),
        (ArchNorm::Hermitian { .. }, ArchNorm::Hermitian { .. }) => {
            let (ga, gb) = (a.gram_f64().expect("h"), b.gram_f64().expect("h"));
            Ok(Distance { value: hermitian_distance(&ga, &gb), exact: true })
        }
        _ => {
            let (ha, sa) = hermitian_proxy(a);
            let (hb, sb) = hermitian_proxy(b);
            Ok(Distance { value: hermitian_distance(&ha, &hb) + sa + sb, exact: false })
        }
    }
}

fn hermitian_distance(ga: &FMatrix, gb: &FMatrix) -> f64 {
    let l = fla::cholesky(gb).expect("positive definite");
    let n = ga.len();
    let linv: FMatrix = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            fla::forward_sub(&l, &e)
        })
        .collect();
    // linv[j] is column j of L⁻¹
    let m: FMatrix = (0..n)
        .map(|i| (0..n).map(|j| (0..n).flat_map(|k| (0..n).map(move |r| (k, r))).map(|(k, r)| linv[i][k] * ga[k][r] * linv[j][r]).sum()).collect())
        .collect();
    let ev = fla::sym_eigenvalues(&m);
    let (lo, hi) = (ev[0], ev[n - 1]);
    (0.5 * hi.ln()).abs().max((0.5 * lo.ln()).abs())
}

/// Weighted ℓ² comparison norm and the log-distance to it.
fn hermitian_proxy(a: &ArchNorm) -> (FMatrix, f64) {
    let n = a.dim();
    match a {
        ArchNorm::Hermitian { .. } => (a.gram_f64().expect("h"), 0.0),
        ArchNorm::WeightedMax { weights } | ArchNorm::WeightedSum { weights } => {
            let g = (0..n)
                .map(|i| (0..n).map(|j| if i == j { (-2.0 * exact::q_to_f64(&weights[i])).exp() } else { 0.0 }).collect())
                .collect();
            (g, 0.5 * (n as f64).ln())
        }
    }
}

/// Rank-only bounds: ln Δ_ω ≤ r ln r (finite), ½ ln r (∞); ln δ_ω ≤ 0 (finite), ½ r ln r (∞).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub rank: usize,
    pub support_finite: Vec<u64>,
    pub ln_delta_finite: LogValue,
    pub ln_delta_arch: LogValue,
    pub ln_small_delta_finite: LogValue,
    pub ln_small_delta_arch: LogValue,
    pub delta_bound: LogValue,
    pub small_delta_bound: LogValue,
}

pub fn delta_bound_check(xi: &NormFamily) -> DeltaReport {
    let r = xi.dim.max(1);
    let ln_r = LogValue::ln_abs_rational(&exact::q(r as i64)).expect("nonzero");
    let rq = exact::q(r as i64);
    let support_finite: Vec<u64> = xi.finite.iter().filter(|(_, n)| !n.is_standard()).map(|(p, _)| *p).collect();
    let ln_delta_finite = ln_r.scale(&rq);
    let ln_delta_arch = ln_r.scale(&exact::qf(1, 2));
    let ln_small_delta_arch = ln_r.scale(&(&rq / exact::q(2)));
    let delta_bound = &ln_delta_finite.scale(&exact::q(support_finite.len() as i64)) + &ln_delta_arch;
    DeltaReport {
        rank: xi.dim,
        support_finite,
        ln_delta_finite,
        ln_delta_arch,
        ln_small_delta_finite: LogValue::zero(),
        small_delta_bound: ln_small_delta_arch.clone(),
        ln_small_delta_arch,
        delta_bound,
    }
}
