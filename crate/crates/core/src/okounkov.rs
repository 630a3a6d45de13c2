//! Okounkov data of a graded series on ℙ¹ and its concave transform.
//!
//! The flag is the point t = 0, so Γ_n is the set of valuations α of the
//! Riemann–Roch basis at level n and g(n, α) is the jump of the HN
//! filtration read off at pivot α. The transform G is estimated from the
//! finite table: Fekete maxima along rays, then the least concave majorant.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ops::Add;

use num::{ToPrimitive, Zero};
use serde::Serialize;

use crate::adelic_curve::LogValue;
use crate::bundles::{hn_filtration, AdelicBundle, HnConfig, HnFiltration};
use crate::divisor_series::GradedSeries;
use crate::error::{Error, Result};
use crate::exact::{self, Q};

/// Γ_n, the table g(n, α) and the finite-level hull of {α/n}.
#[derive(Debug, Clone, Serialize)]
pub struct OkounkovData {
    pub gamma: BTreeMap<u64, Vec<i64>>,
    #[serde(serialize_with = "table_rows")]
    pub g_table: BTreeMap<(u64, i64), LogValue>,
    #[serde(with = "exact::qvec")]
    pub body: Vec<Q>,
}

fn table_rows<S: serde::Serializer>(t: &BTreeMap<(u64, i64), LogValue>, s: S) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Row {
        n: u64,
        alpha: i64,
        g: f64,
    }
    s.collect_seq(t.iter().map(|(&(n, alpha), g)| Row { n, alpha, g: g.value() }))
}

impl OkounkovData {
    pub fn build(s: &GradedSeries, n_max: u64) -> Result<Self> {
        let mut gamma = BTreeMap::new();
        let mut g_table = BTreeMap::new();
        for n in 1..=n_max {
            let alphas = s.alphas(n);
            if alphas.is_empty() {
                continue;
            }
            for (a, g) in alphas.iter().zip(s.line_degrees(n)?) {
                g_table.insert((n, *a), g);
            }
            gamma.insert(n, alphas);
        }
        let (lo, hi) = okounkov_body(s, n_max)?;
        Ok(OkounkovData { gamma, g_table, body: vec![lo, hi] })
    }

    pub fn g(&self, n: u64, alpha: i64) -> Option<&LogValue> {
        self.g_table.get(&(n, alpha))
    }

    pub fn n_max(&self) -> u64 {
        self.gamma.keys().next_back().copied().unwrap_or(0)
    }
}

/// Reads g(n, α) off an HN filtration: α gets the largest breakpoint whose
/// step has a vector of valuation α, i.e. an echelon pivot in column α.
pub fn pivots_from_hn(hn: &HnFiltration, alphas: &[i64]) -> Result<Vec<(i64, LogValue)>> {
    if hn.dim != alphas.len() {
        return Err(Error::DimensionMismatch(alphas.len(), hn.dim));
    }
    let mut g: Vec<Option<LogValue>> = vec![None; hn.dim];
    for (step, t) in hn.subspaces.iter().zip(&hn.breakpoints) {
        // rows are reduced, so leading columns are the valuations present in the step
        for row in exact::rref(step) {
            let lead = row.iter().position(|x| !x.is_zero()).expect("nonzero row");
            g[lead].get_or_insert_with(|| t.clone());
        }
    }
    alphas
        .iter()
        .zip(g)
        .map(|(a, v)| v.map(|v| (*a, v)).ok_or_else(|| Error::Invalid(format!("valuation {a} missing from the filtration"))))
        .collect()
}

/// g(n, ·) through the HN filtration of an arbitrary bundle whose basis is
/// ordered by increasing valuation.
pub fn valuation_pivots_of(e: &AdelicBundle, alphas: &[i64], cfg: &HnConfig) -> Result<Vec<(i64, LogValue)>> {
    pivots_from_hn(&hn_filtration(e, cfg)?, alphas)
}

/// g(n, ·) for a series. Built-in models have orthogonal monomial-type bases,
/// whose HN steps are coordinate subspaces, so the pivots are the line degrees.
pub fn valuation_pivots(s: &GradedSeries, n: u64, cfg: &HnConfig) -> Result<Vec<(i64, LogValue)>> {
    let alphas = s.alphas(n);
    if alphas.is_empty() {
        return Err(Error::EmptySpace);
    }
    let b = s.bundle(n)?;
    if b.family.is_diagonal() {
        return Ok(alphas.into_iter().zip(s.line_degrees(n)?).collect());
    }
    valuation_pivots_of(&b, &alphas, cfg)
}

/// Hull of {α/n : n ≤ n_max}.
pub fn okounkov_body(s: &GradedSeries, n_max: u64) -> Result<(Q, Q)> {
    let mut hull: Option<(Q, Q)> = None;
    for n in 1..=n_max {
        let b = s.basis(n);
        if b.dim == 0 {
            continue;
        }
        let nq = exact::q(n as i64);
        let lo = exact::q(b.alpha_min) / &nq;
        let hi = exact::q(b.alpha_min + b.dim as i64 - 1) / &nq;
        hull = Some(match hull {
            None => (lo, hi),
            Some((a, c)) => (a.min(lo), c.max(hi)),
        });
    }
    hull.ok_or(Error::NotBig(n_max as u32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSet {
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcaveTransformApprox {
    pub n_used: u64,
    /// Knots of the least concave majorant, increasing in x.
    pub envelope: Vec<(f64, f64)>,
    pub body: (f64, f64),
    pub level_sets: Vec<LevelSet>,
    pub inf_value: f64,
    pub sup_value: f64,
    /// Bound on |∫ envelope − ∫ G| from the truncated body and the δ correction.
    pub grid_error: f64,
}

impl ConcaveTransformApprox {
    /// Builds the transform from refined grid values (x, G̃(x)).
    pub fn from_points(points: &[(f64, f64)], n_used: u64, grid_error: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySpace);
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::UnboundedBelow);
        }
        let envelope = upper_hull(points);
        let body = (envelope[0].0, envelope[envelope.len() - 1].0);
        let inf_value = envelope.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let sup_value = envelope.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let mut t = ConcaveTransformApprox { n_used, envelope, body, level_sets: Vec::new(), inf_value, sup_value, grid_error };
        t.level_sets = (0..=8)
            .map(|k| {
                let lvl = (inf_value + (sup_value - inf_value) * k as f64 / 8.0).min(sup_value);
                let (lo, hi) = t.level_set(lvl).unwrap_or((f64::NAN, f64::NAN));
                LevelSet { t: lvl, lo, hi }
            })
            .collect();
        Ok(t)
    }

    pub fn value(&self, x: f64) -> Option<f64> {
        let e = &self.envelope;
        if x < self.body.0 || x > self.body.1 {
            return None;
        }
        if e.len() == 1 {
            return Some(e[0].1);
        }
        let i = e.partition_point(|p| p.0 < x).clamp(1, e.len() - 1);
        let ((x0, y0), (x1, y1)) = (e[i - 1], e[i]);
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    /// {x : G(x) ≥ t}, an interval by concavity.
    pub fn level_set(&self, t: f64) -> Option<(f64, f64)> {
        let e = &self.envelope;
        if t > self.sup_value {
            return None;
        }
        let top = e.iter().position(|p| p.1 >= t).expect("sup reached");
        let last = e.iter().rposition(|p| p.1 >= t).expect("sup reached");
        let cross = |a: (f64, f64), b: (f64, f64)| a.0 + (t - a.1) * (b.0 - a.0) / (b.1 - a.1);
        let lo = if top == 0 { e[0].0 } else { cross(e[top - 1], e[top]) };
        let hi = if last == e.len() - 1 { e[last].0 } else { cross(e[last], e[last + 1]) };
        Some((lo, hi))
    }

    pub fn is_concave(&self) -> bool {
        self.envelope.windows(3).all(|w| {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            s2 <= s1 + 1e-12 * (1.0 + s1.abs())
        })
    }

    /// Envelope plus a constant.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        let pts: Vec<(f64, f64)> = self.envelope.iter().map(|&(x, y)| (x, y + c)).collect();
        Self::from_points(&pts, self.n_used, self.grid_error)
    }

    /// ∫ f(G(x)) dx over the body, exact for piecewise-linear f.
    pub fn integrate_composition(&self, f: &PiecewiseLinear) -> f64 {
        let mut total = 0.0;
        for w in self.envelope.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            let mut cuts = vec![0.0, 1.0];
            for &(k, _) in &f.knots {
                if (y0 - k) * (y1 - k) < 0.0 {
                    cuts.push((k - y0) / (y1 - y0));
                }
            }
            cuts.sort_by(f64::total_cmp);
            for c in cuts.windows(2) {
                let ya = y0 + (y1 - y0) * c[0];
                let yb = y0 + (y1 - y0) * c[1];
                total += (x1 - x0) * (c[1] - c[0]) * (f.eval(ya) + f.eval(yb)) / 2.0;
            }
        }
        total
    }
}

fn upper_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// G̃ at each reduced grid point α/n as max_k g(kn, kα)/(kn), then the
/// least concave majorant.
pub fn concave_transform(s: &GradedSeries, n_max: u64) -> Result<ConcaveTransformApprox> {
    if s.divisor.degree() <= Q::zero() {
        return Err(Error::NotBig(n_max as u32));
    }
    let mut grid: BTreeMap<Q, f64> = BTreeMap::new();
    for n in 1..=n_max {
        let alphas = s.alphas(n);
        if alphas.is_empty() {
            continue;
        }
        for (a, g) in alphas.iter().zip(s.line_degrees(n)?) {
            let x = Q::new((*a).into(), (n as i64).into());
            let v = g.value() / n as f64;
            grid.entry(x).and_modify(|w| *w = w.max(v)).or_insert(v);
        }
    }
    if grid.is_empty() {
        return Err(Error::NotBig(n_max as u32));
    }
    let pts: Vec<(f64, f64)> = grid.iter().map(|(x, y)| (exact::q_to_f64(x), *y)).collect();
    let peak = pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let nm = n_max as f64;
    // each end of the body is reached to within 1/n_max
    let grid_error = 2.0 * peak / nm + s.delta(n_max) / nm;
    ConcaveTransformApprox::from_points(&pts, n_max, grid_error)
}

/// Length of {G ≥ t}.
pub fn level_set_volume(t: &ConcaveTransformApprox, level: f64) -> f64 {
    t.level_set(level).map_or(0.0, |(lo, hi)| hi - lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracketed {
    pub value: f64,
    pub error: f64,
}

impl Bracketed {
    pub fn lo(&self) -> f64 {
        self.value - self.error
    }

    pub fn hi(&self) -> f64 {
        self.value + self.error
    }
}

/// ∫ G over the body; exact trapezoid sum of the envelope.
pub fn vol_i(t: &ConcaveTransformApprox) -> Result<Bracketed> {
    if !t.inf_value.is_finite() {
        return Err(Error::UnboundedBelow);
    }
    let value = t.envelope.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum();
    Ok(Bracketed { value, error: t.grid_error })
}

/// Piecewise-linear function, constant outside its knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinear {
    pub knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn constant(c: f64) -> Self {
        PiecewiseLinear { knots: vec![(0.0, c)] }
    }

    pub fn clamp01() -> Self {
        PiecewiseLinear { knots: vec![(0.0, 0.0), (1.0, 1.0)] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        if x >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|p| p.0 < x);
        let ((x0, y0), (x1, y1)) = (k[i - 1], k[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionReport {
    pub n: u64,
    pub discrete_mean: f64,
    pub continuous_mean: f64,
    pub gap: f64,
}

/// (1/#Γ_n) Σ f(g(n,α)/n) against (1/η(Δ)) ∫ f∘G at n = n_max.
pub fn distribution_convergence_check(s: &GradedSeries, f: &PiecewiseLinear, n_max: u64) -> Result<DistributionReport> {
    let t = concave_transform(s, n_max)?;
    let degs = s.line_degrees(n_max)?;
    if degs.is_empty() {
        return Err(Error::EmptySpace);
    }
    let discrete_mean = degs.iter().map(|g| f.eval(g.value() / n_max as f64)).sum::<f64>() / degs.len() as f64;
    let len = t.body.1 - t.body.0;
    let continuous_mean = if len > 0.0 { t.integrate_composition(f) / len } else { f.eval(t.envelope[0].1) };
    Ok(DistributionReport { n: n_max, discrete_mean, continuous_mean, gap: (discrete_mean - continuous_mean).abs() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleRow {
    pub r: u64,
    /// ∫ x dη_n for η_n = (1/r) δ_{−r} + ((r−1)/r) δ_1.
    #[serde(with = "exact::qstr")]
    pub mean: Q,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub rows: Vec<CounterexampleRow>,
    /// lim ∫ x dη_n; the means are −1/r_n.
    #[serde(with = "exact::qstr")]
    pub limit_of_means: Q,
    /// ∫ x dη for the weak limit η = δ_1.
    #[serde(with = "exact::qstr")]
    pub weak_limit_mean: Q,
    #[serde(with = "exact::qstr")]
    pub gap: Q,
}

/// Weak convergence does not carry means along: η_n → δ_1 weakly while the
/// means tend to 0.
pub fn weak_convergence_counterexample(rs: &[u64]) -> Result<CounterexampleReport> {
    let mut rows = Vec::new();
    for &r in rs {
        if r == 0 {
            return Err(Error::Invalid("r_n must be positive".into()));
        }
        let rq = exact::q(r as i64);
        let w_far = exact::q(1) / &rq;
        let w_one = (&rq - exact::q(1)) / &rq;
        let mean = &w_far * (-rq.clone()) + w_one;
        rows.push(CounterexampleRow { r, mean });
    }
    // −1/r_n → 0 when r_n → ∞
    let limit_of_means = Q::zero();
    let weak_limit_mean = exact::q(1);
    let gap = &weak_limit_mean - &limit_of_means;
    Ok(CounterexampleReport { rows, limit_of_means, weak_limit_mean, gap })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperadditivityViolation<A> {
    pub n: u64,
    pub alpha: A,
    pub m: u64,
    pub beta: A,
    pub defect: f64,
}

/// Pairs with g(n+m, α+β) < g(n,α) + g(m,β) − δ(n) − δ(m), over n + m ≤ max_level.
/// Keys are any additive, totally ordered valuation type (ℤ, or ℤ^d lexicographic).
pub fn superadditivity_violations<A>(
    table: &BTreeMap<(u64, A), LogValue>,
    delta: impl Fn(u64) -> f64,
    max_level: u64,
) -> Vec<SuperadditivityViolation<A>>
where
    A: Ord + Clone + Add<Output = A>,
{
    let mut levels: BTreeMap<u64, Vec<(&A, &LogValue)>> = BTreeMap::new();
    for ((n, a), g) in table {
        levels.entry(*n).or_default().push((a, g));
    }
    let mut out = Vec::new();
    for (&n, row_n) in &levels {
        for (&m, row_m) in levels.range(n..) {
            if n + m > max_level {
                break;
            }
            let slack = delta(n) + delta(m);
            for (a, ga) in row_n {
                for (b, gb) in row_m {
                    let Some(gs) = table.get(&(n + m, (*a).clone() + (*b).clone())) else { continue };
                    let diff = gs - &(*ga + *gb);
                    let ok = if slack == 0.0 {
                        diff.sign().map_or(diff.value() > -1e-12, |o| o != Ordering::Less)
                    } else {
                        diff.value() + slack >= -diff.eval().error
                    };
                    if !ok {
                        out.push(SuperadditivityViolation { n, alpha: (*a).clone(), m, beta: (*b).clone(), defect: -diff.value() - slack });
                    }
                }
            }
        }
    }
    out
}

/// Exact table from rational values, for semigroups given as data.
pub fn table_from_values<A: Ord + Clone>(rows: &[(u64, A, Q)]) -> BTreeMap<(u64, A), LogValue> {
    rows.iter().map(|(n, a, v)| ((*n, a.clone()), LogValue::from_rational(v.clone()))).collect()
}

/// Midpoint concavity of a knot list, used on exported envelopes.
pub fn midpoint_concave(t: &ConcaveTransformApprox) -> bool {
    t.envelope.windows(2).all(|w| {
        let mid = t.value((w[0].0 + w[1].0) / 2.0).expect("inside body");
        mid + 1e-12 >= (w[0].1 + w[1].1) / 2.0
    })
}

/// Lengths of the finite-level hull minus deg(D).
pub fn body_length_gap(s: &GradedSeries, n_max: u64) -> Result<Q> {
    let (lo, hi) = okounkov_body(s, n_max)?;
    Ok(s.divisor.degree() - (hi - lo))
}

/// Γ_n counted by the Riemann–Roch formula, for cross-checks.
pub fn gamma_size(s: &GradedSeries, n: u64) -> usize {
    s.basis(n).dim
}

/// Exact finite-level value of the hull length at n_max as f64.
pub fn body_length(s: &GradedSeries, n_max: u64) -> Result<f64> {
    let (lo, hi) = okounkov_body(s, n_max)?;
    Ok((hi - lo).to_f64().unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adelic_curve::PlaceFunction;
    use crate::divisor_series::{ArchKind, ArchModel, GreenModel, Point, Profile, RDivisorP1};
    use crate::exact::{q, qf};
    use crate::norms::{ArchNorm, NormFamily};
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn inf(c: Q) -> RDivisorP1 {
        RDivisorP1::point(Point::Infinity, c)
    }

    fn u2() -> GradedSeries {
        GradedSeries::new(inf(q(1)), GreenModel::gauss(2, q(1)))
    }

    #[test]
    fn pivot_examples() {
        let cfg = HnConfig::default();
        let s = GradedSeries::new(inf(q(1)), GreenModel::trivial());
        for (_, g) in valuation_pivots(&s, 2, &cfg).unwrap() {
            assert!(g.is_exact_zero());
        }
        for (j, g) in valuation_pivots(&u2(), 5, &cfg).unwrap() {
            assert_eq!(g, LogValue::ln_p(2, q(j)));
        }
        let green = GreenModel { arch: ArchModel { kind: ArchKind::L2, profile: Profile::default(), radius: q(2) }, ..GreenModel::default() };
        let s = GradedSeries::new(inf(q(1)), green);
        let b = s.bundle(1).unwrap();
        let via_hn = valuation_pivots_of(&b, &[0, 1], &cfg).unwrap();
        assert!(via_hn[0].1.value().abs() < 1e-12);
        assert!((via_hn[1].1.value() + LN2).abs() < 1e-12);
        assert_eq!(valuation_pivots(&s, 1, &cfg).unwrap()[1].1, LogValue::ln_p(2, q(-1)));
    }

    #[test]
    fn pivots_of_a_skew_bundle_match_slopes() {
        let gram = vec![vec![q(2), q(1), q(0)], vec![q(1), q(3), q(1)], vec![q(0), q(1), q(5)]];
        let family = NormFamily { dim: 3, arch: ArchNorm::hermitian(gram), finite: BTreeMap::new() };
        let e = AdelicBundle::new(family);
        let cfg = HnConfig::default();
        let hn = hn_filtration(&e, &cfg).unwrap();
        let mut g: Vec<f64> = valuation_pivots_of(&e, &[0, 1, 2], &cfg).unwrap().iter().map(|p| p.1.value()).collect();
        let mut mu = hn.slope_values();
        g.sort_by(f64::total_cmp);
        mu.sort_by(f64::total_cmp);
        for (a, b) in g.iter().zip(&mu) {
            assert!((a - b).abs() < 1e-9, "{g:?} vs {mu:?}");
        }
    }

    #[test]
    fn body_examples() {
        let b = |d: RDivisorP1| okounkov_body(&GradedSeries::new(d, GreenModel::trivial()), 50).unwrap();
        assert_eq!(b(inf(q(1))), (q(0), q(1)));
        let (lo, hi) = b(inf(qf(3, 2)));
        assert_eq!(lo, q(0));
        assert!(qf(3, 2) - hi <= qf(1, 50));
        assert_eq!(b(RDivisorP1::new([(Point::t(), q(1)), (Point::Infinity, q(1))])), (q(-1), q(1)));
        assert!(matches!(okounkov_body(&GradedSeries::new(inf(q(-1)), GreenModel::trivial()), 10), Err(Error::NotBig(10))));
    }

    #[test]
    fn transform_of_the_gauss_model() {
        let t = concave_transform(&u2(), 40).unwrap();
        assert_eq!(t.body, (0.0, 1.0));
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            assert!((t.value(x).unwrap() - x * LN2).abs() < 1e-12);
        }
        assert!(t.is_concave() && midpoint_concave(&t));
        assert!((level_set_volume(&t, 0.0) - 1.0).abs() < 1e-12);
        assert!((level_set_volume(&t, LN2 / 2.0) - 0.5).abs() < 1e-12);
        assert_eq!(level_set_volume(&t, 1.0), 0.0);
        assert!((vol_i(&t).unwrap().value - LN2 / 2.0).abs() < 1e-12);

        let flat = concave_transform(&GradedSeries::new(inf(q(1)), GreenModel::trivial()), 20).unwrap();
        assert_eq!((flat.inf_value, flat.sup_value), (0.0, 0.0));
        assert_eq!(vol_i(&flat).unwrap().value, 0.0);

        let shifted = concave_transform(&u2().with_shift(&PlaceFunction::constant_arch(q(3))), 40).unwrap();
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            assert!((shifted.value(x).unwrap() - t.value(x).unwrap() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rectangle_and_level_sets() {
        let t = ConcaveTransformApprox::from_points(&[(0.0, 2.0), (1.5, 2.0)], 1, 0.0).unwrap();
        assert!((vol_i(&t).unwrap().value - 3.0).abs() < 1e-12);
        let tri = ConcaveTransformApprox::from_points(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (1.0, -5.0)], 1, 0.0).unwrap();
        assert_eq!(tri.envelope.len(), 3);
        let mut prev = f64::INFINITY;
        for k in 0..=20 {
            let v = level_set_volume(&tri, k as f64 / 20.0);
            assert!(v <= prev);
            prev = v;
        }
        // derivative of H_t = ∫ max(G − t, 0) is −η(Δ(Γ^t))
        let h = |s: f64| tri.integrate_composition(&PiecewiseLinear { knots: vec![(s, 0.0), (s + 10.0, 10.0)] });
        let (s, eps) = (0.3, 1e-6);
        assert!(((h(s + eps) - h(s - eps)) / (2.0 * eps) + level_set_volume(&tri, s)).abs() < 1e-6);
    }

    #[test]
    fn distribution_examples() {
        let r = distribution_convergence_check(&u2(), &PiecewiseLinear::constant(1.0), 30).unwrap();
        assert_eq!(r.gap, 0.0);
        let r1 = distribution_convergence_check(&u2(), &PiecewiseLinear::clamp01(), 20).unwrap();
        let r2 = distribution_convergence_check(&u2(), &PiecewiseLinear::clamp01(), 80).unwrap();
        assert!(r1.gap <= 1.0 / 20.0 && r2.gap <= 1.0 / 80.0);
        let c = weak_convergence_counterexample(&[1, 2, 3, 10]).unwrap();
        assert_eq!(c.rows[3].mean, qf(-1, 10));
        assert_eq!((c.limit_of_means.clone(), c.weak_limit_mean.clone(), c.gap.clone()), (q(0), q(1), q(1)));
    }

    #[test]
    fn superadditivity_on_two_dimensional_keys() {
        let rows: Vec<(u64, [i64; 2], Q)> = vec![
            (1, [0, 0], q(0)),
            (1, [1, 0], q(1)),
            (2, [1, 0], q(1)),
            (2, [2, 0], q(1)),
            (2, [0, 0], q(0)),
        ];
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
        struct V([i64; 2]);
        impl Add for V {
            type Output = V;
            fn add(self, o: V) -> V {
                V([self.0[0] + o.0[0], self.0[1] + o.0[1]])
            }
        }
        let rows: Vec<(u64, V, Q)> = rows.into_iter().map(|(n, a, v)| (n, V(a), v)).collect();
        let bad = superadditivity_violations(&table_from_values(&rows), |_| 0.0, 2);
        // g(2,(2,0)) = 1 < g(1,(1,0)) + g(1,(1,0)) = 2
        assert_eq!(bad.len(), 1);
        assert_eq!((bad[0].alpha.clone(), bad[0].beta.clone()), (V([1, 0]), V([1, 0])));
        assert!(superadditivity_violations(&table_from_values(&rows), |_| 0.5, 2).is_empty());
    }

    #[test]
    fn gauss_table_is_superadditive() {
        let s = GradedSeries::new(inf(qf(3, 2)), GreenModel::gauss(3, qf(-1, 2)));
        let d = OkounkovData::build(&s, 24).unwrap();
        assert!(superadditivity_violations(&d.g_table, |_| 0.0, 24).is_empty());
        assert_eq!(d.gamma[&7].len(), s.dim(7));
    }

    proptest! {
        #[test]
        fn multiset_identity(c in 1i64..=8, den in 1i64..=3, u in -2i64..=2, v in -2i64..=2, n in 1u64..12) {
            let green = GreenModel {
                finite: [(2, Profile { pieces: vec![(q(u), q(0)), (q(-1), q(v))] })].into(),
                ..GreenModel::default()
            };
            let s = GradedSeries::new(inf(qf(c, den)), green);
            prop_assume!(s.dim(n) > 0);
            let cfg = HnConfig::default();
            let mut g: Vec<LogValue> = valuation_pivots(&s, n, &cfg).unwrap().into_iter().map(|p| p.1).collect();
            let hn = hn_filtration(&s.bundle(n).unwrap(), &cfg).unwrap();
            g.sort_by(|a, b| b.total_cmp(a));
            prop_assert_eq!(g.len(), hn.slopes.len());
            for (a, b) in g.iter().zip(&hn.slopes) {
                prop_assert!(a.exact_part_eq(b));
            }
        }

        #[test]
        fn body_length_tends_to_degree(a in -4i64..=4, b in 1i64..=3, c in 1i64..=9, d in 1i64..=3) {
            let div = RDivisorP1::new([(Point::t(), qf(a, b)), (Point::Infinity, qf(c, d))]);
            prop_assume!(div.degree() > Q::zero());
            let s = GradedSeries::new(div, GreenModel::trivial());
            let gap = body_length_gap(&s, 60).unwrap();
            prop_assert!(gap >= Q::zero() && gap <= qf(1, 60));
        }
    }
}
