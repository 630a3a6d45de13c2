//! Acceptance suite. Each test prints one `criterion NN ...: PASS|FAIL` line
//! to stderr, written directly so that it survives output capture.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use adelic_core::adelic_curve::product_formula_check;
use adelic_core::bundles::{arakelov_degree, hn_filtration, successive_minima};
use adelic_core::divisor_series::{GreenModel, Profile};
use adelic_core::exact::{q, qf};
use adelic_core::norms::{delta_bound_check, ArchNorm, FiniteNorm, NormFamily};
use adelic_core::okounkov::{okounkov_body, superadditivity_violations, weak_convergence_counterexample};
use adelic_core::volumes::{
    brunn_minkowski_check, chi_vs_i, continuity_experiment, expectation_inequality, homogeneity_check, shift_identity_check,
    trivially_valued_experiment, vol_chi_estimate, vol_i_estimate, ContinuityConfig,
};
use adelic_core::{decompose_ample, AdelicBundle, GradedSeries, HnConfig, LogValue, OkounkovData, PlaceFunction, Point, RDivisorP1, Q};
use nalgebra::DMatrix;
use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LN2: f64 = std::f64::consts::LN_2;
/// Slope agreement between the filtration and the subspace oracle.
const SLOPE_TOL: f64 = 1e-9;
const VOL_REL_TOL: f64 = 0.01;
const HOMOGENEITY_REL_TOL: f64 = 0.02;
const N_MAX: u64 = 200;

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("criterion {id:02} {name}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} failed: {detail}");
}

fn inf(c: Q) -> RDivisorP1 {
    RDivisorP1::point(Point::Infinity, c)
}

fn toric(a: Q, b: Q) -> RDivisorP1 {
    RDivisorP1::new([(Point::t(), a), (Point::Infinity, b)])
}

/// D = [∞] with weight α·ln 2 at p = 2.
fn u2() -> GradedSeries {
    GradedSeries::new(inf(q(1)), GreenModel::gauss(2, q(1)))
}

fn flat(c: Q) -> GradedSeries {
    GradedSeries::new(inf(c), GreenModel::trivial())
}

fn rel_err(x: f64, target: f64) -> f64 {
    (x - target).abs() / target.abs()
}

// ---------------------------------------------------------------------------
// brute-force subspace oracle for the filtration

struct TestBundle {
    p: u64,
    weights: Vec<i64>,
    gram: Vec<Vec<i64>>,
    bundle: AdelicBundle,
}

struct OracleHn {
    /// Ranks at the vertices of the polygon, ending with the full rank.
    ranks: Vec<usize>,
    /// Reduced echelon rows of the vertex subspaces.
    subspaces: Vec<Vec<Vec<BigRational>>>,
    slopes: Vec<f64>,
    full_degree: f64,
}

fn random_bundle(rng: &mut ChaCha8Rng) -> TestBundle {
    let n = rng.gen_range(1..=4usize);
    let gram = loop {
        let mut g = vec![vec![0i64; n]; n];
        for i in 0..n {
            g[i][i] = rng.gen_range(1..=6);
            for j in 0..i {
                let x = rng.gen_range(-2..=2);
                g[i][j] = x;
                g[j][i] = x;
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| g[i][j] as f64);
        let eig = m.symmetric_eigen().eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        if lo > 0.0 && hi / lo <= 16.0 {
            break g;
        }
    };
    let p = if rng.gen_bool(0.5) { 2 } else { 3 };
    let weights: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
    let qgram: Vec<Vec<Q>> = gram.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
    let family = NormFamily::standard(n)
        .with_arch(ArchNorm::hermitian(qgram))
        .with_finite(FiniteNorm::diagonal(p, weights.iter().map(|&w| q(w)).collect()));
    TestBundle { p, weights, gram, bundle: AdelicBundle::new(family) }
}

fn vp(p: u64, x: &BigInt) -> i64 {
    let pb = BigInt::from(p);
    let mut x = x.abs();
    let mut v = 0;
    while (&x % &pb).is_zero() {
        x /= &pb;
        v += 1;
    }
    v
}

fn det_big(m: &[Vec<BigInt>]) -> BigInt {
    let k = m.len();
    if k == 0 {
        return BigInt::one();
    }
    if k == 1 {
        return m[0][0].clone();
    }
    let mut total = BigInt::zero();
    for c in 0..k {
        if m[0][c].is_zero() {
            continue;
        }
        let minor: Vec<Vec<BigInt>> = m[1..].iter().map(|r| r.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, x)| x.clone()).collect()).collect();
        let t = &m[0][c] * det_big(&minor);
        if c % 2 == 0 {
            total += t;
        } else {
            total -= t;
        }
    }
    total
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in subsets(n, k - 1) {
            if rest.first().is_none_or(|&r| r > first) {
                let mut s = vec![first];
                s.extend(rest);
                out.push(s);
            }
        }
    }
    out
}

fn ln_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        x.to_f64().expect("finite").ln()
    } else {
        let shift = bits - 900;
        (x >> shift).to_f64().expect("finite").ln() + shift as f64 * LN2
    }
}

/// deg of the row span of an integer matrix, from the definition:
/// −ln‖∧‖_∞ − ln‖∧‖_p + Σ_{ℓ≠p} v_ℓ(gcd of minors) ln ℓ.
fn oracle_degree(t: &TestBundle, rows: &[Vec<BigInt>]) -> f64 {
    let n = t.weights.len();
    let k = rows.len();
    let lnp = (t.p as f64).ln();
    let mut g = BigInt::zero();
    let mut best_p: Option<i64> = None;
    for idx in subsets(n, k) {
        let m: Vec<Vec<BigInt>> = rows.iter().map(|r| idx.iter().map(|&j| r[j].clone()).collect()).collect();
        let d = det_big(&m);
        if d.is_zero() {
            continue;
        }
        g = g.gcd(&d);
        let e = -vp(t.p, &d) - idx.iter().map(|&j| t.weights[j]).sum::<i64>();
        best_p = Some(best_p.map_or(e, |b: i64| b.max(e)));
    }
    let gram: Vec<Vec<BigInt>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    let mut s = BigInt::zero();
                    for i in 0..n {
                        for j in 0..n {
                            s += &rows[a][i] * BigInt::from(t.gram[i][j]) * &rows[b][j];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    let arch = 0.5 * ln_big(&det_big(&gram));
    let others = ln_big(&g) - vp(t.p, &g) as f64 * lnp;
    -arch - best_p.expect("full rank") as f64 * lnp + others
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rref(mut m: Vec<Vec<BigRational>>) -> Vec<Vec<BigRational>> {
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, piv);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let s = &f * &m[r][j];
                    m[i][j] -= s;
                }
            }
        }
        r += 1;
    }
    m.truncate(r);
    m
}

fn integral_rows(m: &[Vec<BigRational>]) -> Vec<Vec<BigInt>> {
    m.iter()
        .map(|r| {
            let l = r.iter().fold(BigInt::one(), |a, x| a.lcm(x.denom()));
            r.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect()
        })
        .collect()
}

/// All reduced echelon k×n matrices whose free entries lie in `vals`.
fn echelon_candidates(n: usize, k: usize, vals: &[BigRational]) -> Vec<Vec<Vec<BigRational>>> {
    let mut out = Vec::new();
    for pivots in subsets(n, k) {
        let free: Vec<(usize, usize)> =
            (0..k).flat_map(|r| (pivots[r] + 1..n).filter(|c| !pivots.contains(c)).map(move |c| (r, c))).collect();
        let total = vals.len().pow(free.len() as u32);
        for code in 0..total {
            let mut m = vec![vec![BigRational::zero(); n]; k];
            for (r, &pc) in pivots.iter().enumerate() {
                m[r][pc] = BigRational::one();
            }
            let mut c = code;
            for &(r, col) in &free {
                m[r][col] = vals[c % vals.len()].clone();
                c /= vals.len();
            }
            out.push(m);
        }
    }
    out
}

/// Upper hull of the best degree per rank over bounded echelon subspaces,
/// enumerated in coordinates where the unit ball at p is the standard lattice.
fn oracle_hn(t: &TestBundle) -> OracleHn {
    let n = t.weights.len();
    let vals: Vec<BigRational> = [(0, 1), (1, 1), (-1, 1), (2, 1), (-2, 1), (3, 1), (-3, 1), (1, 2), (-1, 2), (3, 2), (-3, 2), (1, 3), (-1, 3), (2, 3), (-2, 3)]
        .iter()
        .map(|&(a, b)| rat(a, b))
        .collect();
    // x_i = p^{−w_i} y_i
    let scale: Vec<BigRational> = t
        .weights
        .iter()
        .map(|&w| {
            let pw = BigRational::from_integer(num::pow(BigInt::from(t.p), w.unsigned_abs() as usize));
            if w >= 0 {
                pw.recip()
            } else {
                pw
            }
        })
        .collect();
    let to_x = |m: &Vec<Vec<BigRational>>| -> Vec<Vec<BigRational>> { m.iter().map(|r| r.iter().zip(&scale).map(|(a, b)| a * b).collect()).collect() };
    let identity: Vec<Vec<BigInt>> = (0..n).map(|i| (0..n).map(|j| BigInt::from((i == j) as i64)).collect()).collect();
    let full_degree = oracle_degree(t, &identity);
    let mut best: Vec<Option<(f64, Vec<Vec<BigRational>>)>> = vec![None; n + 1];
    best[0] = Some((0.0, Vec::new()));
    best[n] = Some((full_degree, rref(identity.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect())));
    for k in 1..n {
        for cand in echelon_candidates(n, k, &vals) {
            let x = to_x(&cand);
            let d = oracle_degree(t, &integral_rows(&x));
            if best[k].as_ref().is_none_or(|(b, _)| d > *b) {
                best[k] = Some((d, x));
            }
        }
    }
    let pts: Vec<(usize, f64)> = (0..=n).map(|k| (k, best[k].as_ref().expect("filled").0)).collect();
    // vertices of the upper concave hull, dropping points on a chord
    let mut hull: Vec<(usize, f64)> = vec![pts[0]];
    for &pt in &pts[1..] {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let on_or_below = (b.1 - a.1) * (pt.0 - a.0) as f64 <= (pt.1 - a.1) * (b.0 - a.0) as f64 + 1e-9;
            if on_or_below {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let ranks: Vec<usize> = hull[1..].iter().map(|v| v.0).collect();
    let slopes = hull.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0) as f64).collect();
    let subspaces = ranks.iter().map(|&k| rref(best[k].as_ref().expect("filled").1.clone())).collect();
    OracleHn { ranks, subspaces, slopes, full_degree }
}

struct HnCase {
    t: TestBundle,
    oracle: OracleHn,
}

fn hn_cases() -> &'static Vec<HnCase> {
    static CASES: OnceLock<Vec<HnCase>> = OnceLock::new();
    CASES.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        (0..200)
            .map(|_| {
                let t = random_bundle(&mut rng);
                let oracle = oracle_hn(&t);
                HnCase { t, oracle }
            })
            .collect()
    })
}

#[test]
fn criterion_01_product_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let inputs: Vec<Q> = (0..1000)
        .map(|_| {
            let mut a: i64 = 0;
            while a == 0 {
                a = rng.gen_range(-1_000_000..=1_000_000);
            }
            qf(a, rng.gen_range(1..=1_000_000))
        })
        .collect();
    let start = Instant::now();
    let bad = inputs.iter().filter(|a| !product_formula_check(a).map(|v| v.is_exact_zero() && v.arch == 0.0).unwrap_or(false)).count();
    let secs = start.elapsed().as_secs_f64();
    verdict(1, "product formula", bad == 0 && secs < 1.0, &format!("{bad} non-zero of 1000 in {secs:.3}s"));
}

#[test]
fn criterion_02_hn_oracle() {
    let cases = hn_cases();
    let cfg = HnConfig::default();
    // the time budget covers the filtrations, not the oracle
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        let hn = match hn_filtration(&c.t.bundle, &cfg) {
            Ok(h) => h,
            Err(e) => {
                mismatches.push(format!("#{i}: {e}"));
                continue;
            }
        };
        let ranks: Vec<usize> = hn.subspaces.iter().map(|s| s.len()).collect();
        let slopes_ok = hn.breakpoints.len() == c.oracle.slopes.len()
            && hn.breakpoints.iter().zip(&c.oracle.slopes).all(|(a, b)| (a.value() - b).abs() <= SLOPE_TOL);
        let spaces_ok = ranks == c.oracle.ranks && hn.subspaces.iter().zip(&c.oracle.subspaces).all(|(a, b)| a == b);
        if !(slopes_ok && spaces_ok) {
            mismatches.push(format!("#{i}: ranks {ranks:?} vs {:?}", c.oracle.ranks));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("{} mismatches of 200 in {secs:.1}s {}", mismatches.len(), mismatches.iter().take(3).cloned().collect::<Vec<_>>().join("; "));
    verdict(2, "HN oracle equivalence", mismatches.is_empty() && secs < 120.0, &detail);
}

#[test]
fn criterion_03_slope_sandwich() {
    let cfg = HnConfig::default();
    let mut violations = 0;
    let mut oracle_gap: f64 = 0.0;
    for c in hn_cases() {
        let hn = hn_filtration(&c.t.bundle, &cfg).expect("filtration");
        let sum: f64 = hn.slopes.iter().map(LogValue::value).sum();
        let deg = arakelov_degree(&c.t.bundle).expect("degree");
        let delta = delta_bound_check(&c.t.bundle.family).delta_bound.value();
        if !(sum <= deg.upper() + SLOPE_TOL && deg.lower.value() <= sum + delta + SLOPE_TOL) {
            violations += 1;
        }
        oracle_gap = oracle_gap.max((deg.lower.value() - c.oracle.full_degree).abs());
    }
    verdict(3, "slope sandwich", violations == 0 && oracle_gap <= SLOPE_TOL, &format!("{violations} violations, degree vs oracle {oracle_gap:.1e}"));
}

#[test]
fn criterion_04_successive_minima() {
    let cfg = HnConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut diag_bad = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=4usize);
        let p = [2u64, 3, 5][rng.gen_range(0..3)];
        let w: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
        let g: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=9)).collect();
        let gram: Vec<Vec<Q>> = (0..n).map(|i| (0..n).map(|j| if i == j { q(g[i]) } else { q(0) }).collect()).collect();
        let e = AdelicBundle::new(NormFamily::standard(n).with_arch(ArchNorm::hermitian(gram)).with_finite(FiniteNorm::diagonal(p, w.iter().map(|&x| q(x)).collect())));
        // deg e_i = w_i ln p − ½ ln g_ii
        let mut expect: Vec<f64> = (0..n).map(|i| w[i] as f64 * (p as f64).ln() - 0.5 * (g[i] as f64).ln()).collect();
        expect.sort_by(|a, b| b.total_cmp(a));
        let m = successive_minima(&e, 4, &cfg).expect("minima");
        let exact = m.minima.iter().zip(&m.slopes).all(|(nu, mu)| nu.nu == *mu);
        let oracle = m.minima.iter().zip(&expect).all(|(nu, x)| (nu.nu.value() - x).abs() <= 1e-12);
        if !(exact && oracle && m.minima.len() == n) {
            diag_bad += 1;
        }
    }
    let mut herm_bad = 0;
    for c in hn_cases() {
        let m = successive_minima(&c.t.bundle, 4, &cfg).expect("minima");
        let mut oracle_slopes = Vec::new();
        let mut prev = 0;
        for (k, s) in c.oracle.ranks.iter().zip(&c.oracle.slopes) {
            oracle_slopes.extend(std::iter::repeat_n(*s, k - prev));
            prev = *k;
        }
        let below = m.minima.iter().zip(&oracle_slopes).all(|(nu, mu)| nu.nu.value() <= mu + SLOPE_TOL);
        if !(below && m.below_slopes) {
            herm_bad += 1;
        }
    }
    verdict(4, "successive minima", diag_bad == 0 && herm_bad == 0, &format!("diagonal {diag_bad}/100, hermitian {herm_bad}/200 violations"));
}

#[test]
fn criterion_05_shift_identity() {
    let phi = PlaceFunction { finite: [(3, qf(1, 2)), (5, qf(-2, 7))].into(), arch: qf(3, 4) };
    let integral: Q = qf(1, 2) + qf(-2, 7) + qf(3, 4);
    let s = u2();
    let shifted = s.with_shift(&phi);
    let mut bad = 0;
    for n in 1..=N_MAX {
        let base = s.degree(n).expect("degree").lower;
        let moved = shifted.degree(n).expect("degree").lower;
        let mut diff = &moved - &base;
        diff.rational -= &integral * q(n as i64) * q(s.dim(n) as i64);
        if !(diff.is_exact_zero() && diff.arch == 0.0) {
            bad += 1;
        }
    }
    let report = shift_identity_check(&s, &phi, N_MAX).expect("shift report");
    verdict(5, "shift identity", bad == 0 && report.holds, &format!("{bad} inexact levels of {N_MAX}"));
}

#[test]
fn criterion_06_chi_volume() {
    let start = Instant::now();
    let s = u2();
    let chi = vol_chi_estimate(&s, N_MAX).expect("chi");
    let vi = vol_i_estimate(&s, N_MAX).expect("vol_I");
    let cross = chi_vs_i(&chi, &vi);
    let secs = start.elapsed().as_secs_f64();
    let (e1, e2) = (rel_err(chi.point_estimate, LN2), rel_err(vi.point_estimate, LN2 / 2.0));
    let pass = e1 <= VOL_REL_TOL && e2 <= VOL_REL_TOL && chi.contains(LN2) && cross.holds && secs < 30.0;
    verdict(6, "chi volume closed form", pass, &format!("vol_chi {:.6} ({e1:.1e}), vol_I {:.6} ({e2:.1e}), {secs:.1}s", chi.point_estimate, vi.point_estimate));
}

#[test]
fn criterion_07_okounkov_bodies() {
    let unit = flat(q(1));
    let exact_unit = (1..=60).all(|n| okounkov_body(&unit, n).expect("body") == (q(0), q(1)));
    let (lo, hi) = okounkov_body(&flat(qf(3, 2)), N_MAX).expect("body");
    let tol = qf(1, N_MAX as i64);
    let three_halves = lo.abs() <= tol && (hi.clone() - qf(3, 2)).abs() <= tol;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = 0;
    for _ in 0..20 {
        let a = qf(rng.gen_range(-6..=12), rng.gen_range(1..=9));
        let b = qf(rng.gen_range(1..=12), rng.gen_range(1..=9));
        if (&a + &b) <= q(0) {
            continue;
        }
        let s = GradedSeries::new(toric(a.clone(), b.clone()), GreenModel::trivial());
        // sections t^j with −⌊na⌋ ≤ j ≤ ⌊nb⌋: the limit body is [−a, b]
        let (lo, hi) = okounkov_body(&s, N_MAX).expect("body");
        let gap = (&a + &b) - (&hi - &lo);
        if !(gap >= q(0) && gap <= tol && (&lo + &a).abs() <= tol && (&hi - &b).abs() <= tol) {
            bad += 1;
        }
    }
    verdict(7, "Okounkov bodies", exact_unit && three_halves && bad == 0, &format!("[0,3/2] vs [{lo}, {hi}], {bad} random failures"));
}

#[test]
fn criterion_08_delta_superadditivity() {
    let level = 120;
    let concave = Profile { pieces: vec![(q(1), q(0)), (qf(-1, 2), qf(3, 4))] };
    let finite_models = [
        GradedSeries::new(inf(q(1)), GreenModel::gauss(2, q(1))),
        GradedSeries::new(toric(qf(1, 2), qf(1, 2)), GreenModel { finite: [(3, concave.clone())].into(), ..GreenModel::default() }),
    ];
    let mut l2 = GreenModel::gauss(5, qf(-1, 3));
    l2.arch.profile = concave.clone();
    let mut l2_radius = GreenModel::trivial();
    l2_radius.arch.profile = Profile::linear(qf(1, 2), qf(-1, 4));
    let l2_models = [GradedSeries::new(inf(q(1)), l2), GradedSeries::new(toric(qf(1, 3), qf(2, 3)), l2_radius)];
    let mut exact_bad = 0;
    for s in &finite_models {
        let data = OkounkovData::build(s, level).expect("table");
        exact_bad += superadditivity_violations(&data.g_table, |_| 0.0, level).len();
    }
    let mut slack_bad = 0;
    for s in &l2_models {
        let data = OkounkovData::build(s, level).expect("table");
        slack_bad += superadditivity_violations(&data.g_table, |n| ((n + 1) as f64).ln(), level).len();
    }
    verdict(8, "delta superadditivity", exact_bad == 0 && slack_bad == 0, &format!("{exact_bad} exact, {slack_bad} slack violations for n+m <= {level}"));
}

#[test]
fn criterion_09_homogeneity() {
    let base = vol_i_estimate(&u2(), N_MAX).expect("vol_I").point_estimate;
    let mut worst: f64 = 0.0;
    let mut holds = true;
    for a in [qf(1, 2), q(2), q(3)] {
        let af = a.to_f64().expect("finite");
        let scaled = vol_i_estimate(&u2().scale(&a), N_MAX).expect("vol_I").point_estimate;
        worst = worst.max(rel_err(scaled, af * af * base));
        holds &= homogeneity_check(&u2(), &a, N_MAX).expect("report").holds;
    }
    verdict(9, "homogeneity", worst <= HOMOGENEITY_REL_TOL && holds, &format!("max relative error {worst:.2e}"));
}

#[test]
fn criterion_10_superadditivity_on_curves() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let model = |rng: &mut ChaCha8Rng| {
        let d = toric(qf(rng.gen_range(0..=4), 2), qf(rng.gen_range(1..=4), 2));
        let p = [2u64, 3][rng.gen_range(0..2)];
        let pr = Profile { pieces: vec![(qf(rng.gen_range(-2..=2), 2), q(0)), (qf(rng.gen_range(-4..=-1), 2), qf(rng.gen_range(0..=3), 2))] };
        GradedSeries::new(d, GreenModel { finite: [(p, pr)].into(), ..GreenModel::default() })
    };
    let mut bm_bad = 0;
    for _ in 0..20 {
        let (s1, s2) = (model(&mut rng), model(&mut rng));
        let r = brunn_minkowski_check(&s1, &s2, 60).expect("inequality");
        if !r.holds {
            bm_bad += 1;
        }
    }
    // exact expectations over intervals, E over [a,b] of a concave profile
    let mut exp_bad = 0;
    for _ in 0..200 {
        let p1 = Profile { pieces: vec![(q(rng.gen_range(-3..=3)), q(rng.gen_range(-3..=3))), (q(rng.gen_range(-3..=3)), q(rng.gen_range(-3..=3)))] };
        let p2 = Profile::linear(q(rng.gen_range(-3..=3)), q(rng.gen_range(-3..=3)));
        let l1 = rng.gen_range(-4..=2);
        let l2 = rng.gen_range(-4..=2);
        let b1 = (qf(l1, 2), qf(l1 + rng.gen_range(1..=6), 2));
        let b2 = (qf(l2, 3), qf(l2 + rng.gen_range(1..=6), 3));
        if !expectation_inequality(&p1, &b1, &p2, &b2).holds {
            exp_bad += 1;
        }
    }
    verdict(10, "superadditivity on curves", bm_bad == 0 && exp_bad == 0, &format!("{bm_bad}/20 volume, {exp_bad}/200 expectation violations"));
}

fn schedule() -> Vec<Q> {
    (1..=6).map(|k| qf(1, 1 << k)).collect()
}

fn continuity_report() -> &'static adelic_core::volumes::ContinuityReport {
    static R: OnceLock<adelic_core::volumes::ContinuityReport> = OnceLock::new();
    R.get_or_init(|| continuity_experiment(&u2(), &flat(q(1)), &schedule(), N_MAX, &ContinuityConfig::default()).expect("continuity"))
}

#[test]
fn criterion_11_continuity_vol_i() {
    let r = continuity_report();
    let base = r.base_vol_i.point_estimate;
    let bad: Vec<String> = r
        .rows
        .iter()
        .filter(|row| row.i_gap > 4.0 * row.eps.to_f64().expect("finite") * base.abs() + 3.0 / N_MAX as f64)
        .map(|row| format!("eps {}: {:.3e}", row.eps, row.i_gap))
        .collect();
    verdict(11, "continuity of vol_I", bad.is_empty() && r.rows.len() == 6, &format!("{} violations {}", bad.len(), bad.join(", ")));
}

#[test]
fn criterion_12_chi_continuity() {
    let r = continuity_report();
    let base = r.base_vol_chi.point_estimate;
    let gaps_bad = r.rows.iter().filter(|row| row.chi_gap > 4.0 * row.eps.to_f64().expect("finite") * base.abs() + 3.0 / N_MAX as f64).count();
    let path_bad = r.rows.iter().filter(|row| (row.shift_path_vol_chi - row.vol_chi).abs() > row.shift_path_tolerance).count();
    verdict(12, "chi continuity", gaps_bad == 0 && path_bad == 0, &format!("{gaps_bad} gap, {path_bad} shift-path violations"));
}

#[test]
fn criterion_13_weak_convergence() {
    let rs: Vec<u64> = (1..=50).collect();
    let r = weak_convergence_counterexample(&rs).expect("counterexample");
    // ∫ x dη_n = −r/r + (r−1)/r = −1/r, which tends to 0
    let means_ok = r.rows.iter().all(|row| row.mean == qf(-1, row.r as i64));
    let pass = means_ok && r.limit_of_means == q(0) && r.weak_limit_mean == q(1) && r.gap == q(1);
    verdict(13, "weak-convergence counterexample", pass, &format!("limit of means {}, weak-limit mean {}", r.limit_of_means, r.weak_limit_mean));
}

#[test]
fn criterion_14_ample_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let points = [Point::Infinity, Point::t(), Point::linear(q(1)), Point::linear(q(-2)), Point::parse("t^2+1").expect("point"), Point::parse("t^2-2").expect("point")];
    let mut inputs = Vec::new();
    while inputs.len() < 100 {
        let k = rng.gen_range(1..=5);
        let mut terms = BTreeMap::new();
        for _ in 0..k {
            let p = points[rng.gen_range(0..points.len())].clone();
            terms.insert(p, qf(rng.gen_range(-9..=9), rng.gen_range(1..=6)));
        }
        let d = RDivisorP1::new(terms.clone());
        if d.degree() > q(0) {
            inputs.push((terms, d));
        }
    }
    let start = Instant::now();
    let mut failures = 0;
    for (terms, d) in &inputs {
        let r = decompose_ample(d).expect("decomposition");
        let mut sum: BTreeMap<Point, Q> = BTreeMap::new();
        let mut parts_ok = true;
        for part in &r.parts {
            let mut deg = q(0);
            for (p, c) in part.divisor.terms() {
                parts_ok &= c.is_integer();
                deg += c * q(p.degree() as i64);
                *sum.entry(p.clone()).or_insert_with(|| q(0)) += &part.coefficient * c;
            }
            parts_ok &= deg > q(0) && part.coefficient > q(0);
        }
        sum.retain(|_, c| !c.is_zero());
        let expect: BTreeMap<Point, Q> = terms.iter().filter(|(_, c)| !c.is_zero()).map(|(p, c)| (p.clone(), c.clone())).collect();
        if !(parts_ok && sum == expect) {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(14, "ample decomposition", failures == 0 && secs < 5.0, &format!("{failures} failures of 100 in {secs:.3}s"));
}

#[test]
fn criterion_15_trivially_valued() {
    let h = Profile { pieces: vec![(q(1), q(-1)), (q(-1), q(1))] };
    let mut bad = Vec::new();
    for (c, d) in [(qf(3, 4), qf(3, 2)), (q(-1), q(2)), (qf(2, 5), q(1)), (q(0), qf(5, 3))] {
        let mut g = GreenModel::one_place();
        g.arch.profile = Profile::constant(c.clone());
        let s = GradedSeries::new(inf(d.clone()), g);
        let r = trivially_valued_experiment(&s, &h, &schedule(), 120).expect("trivial mode");
        // |h| ≤ 1 on the body
        let h_sup = (0..=60).map(|i| h.value(&(&d * qf(i, 60))).abs()).max().expect("samples");
        let base_ok = r.base_vol_chi == q(2) * &c * &d;
        let gaps_ok = h_sup <= q(1) && r.rows.iter().all(|row| row.gap <= q(2) * &d * &row.eps);
        if !(base_ok && gaps_ok && r.nu_min_ok) {
            bad.push(format!("c={c} deg={d}"));
        }
    }
    verdict(15, "trivially valued mode", bad.is_empty(), &format!("{} failing models {}", bad.len(), bad.join(", ")));
}
