//! Euclidean lattices given by a Gram matrix on ℤ^m: LLL reduction,
//! Fincke–Pohst enumeration, Hermite normal form of generating sets and
//! the densest sublattices of small rank.

use num::{BigInt, Integer, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fla::{self, FMatrix};

pub type IVec = Vec<i64>;

const REL_TOL: f64 = 1e-9;

/// Reduced Gram matrix and the unimodular transform whose rows express the
/// new basis in old coordinates.
pub fn lll(gram: &FMatrix) -> (FMatrix, Vec<IVec>) {
    let m = gram.len();
    let mut u: Vec<IVec> = (0..m).map(|i| (0..m).map(|j| (i == j) as i64).collect()).collect();
    let reduced = |u: &[IVec]| -> FMatrix {
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let mut s = 0.0;
                        for a in 0..m {
                            for b in 0..m {
                                s += u[i][a] as f64 * gram[a][b] * u[j][b] as f64;
                            }
                        }
                        s
                    })
                    .collect()
            })
            .collect()
    };
    let mut k = 1;
    let mut guard = 0;
    while k < m && guard < 10_000 {
        guard += 1;
        for j in (0..k).rev() {
            let g = reduced(&u);
            let (mu, _) = gram_schmidt(&g);
            let qf = mu[k][j].round();
            if qf != 0.0 {
                let qi = qf as i64;
                for t in 0..m {
                    u[k][t] -= qi * u[j][t];
                }
            }
        }
        let g = reduced(&u);
        let (mu, bstar) = gram_schmidt(&g);
        if bstar[k] < (0.75 - mu[k][k - 1] * mu[k][k - 1]) * bstar[k - 1] {
            u.swap(k, k - 1);
            k = k.saturating_sub(1).max(1);
        } else {
            k += 1;
        }
    }
    (reduced(&u), u)
}

fn gram_schmidt(g: &FMatrix) -> (FMatrix, Vec<f64>) {
    let m = g.len();
    let mut mu = vec![vec![0.0; m]; m];
    let mut bstar = vec![0.0; m];
    for i in 0..m {
        for j in 0..i {
            let s: f64 = (0..j).map(|k| mu[j][k] * mu[i][k] * bstar[k]).sum();
            mu[i][j] = (g[i][j] - s) / bstar[j];
        }
        bstar[i] = g[i][i] - (0..i).map(|k| mu[i][k] * mu[i][k] * bstar[k]).sum::<f64>();
    }
    (mu, bstar)
}

/// All nonzero vectors with yᵀGy ≤ r2, one per ± pair, sorted by norm.
pub fn enumerate(gram: &FMatrix, r2: f64, cap: usize) -> Result<Vec<(IVec, f64)>> {
    let m = gram.len();
    let l = fla::cholesky(gram).ok_or_else(|| Error::Invalid("Gram matrix is not positive definite".into()))?;
    let mut out = Vec::new();
    let mut y = vec![0i64; m];
    fn rec(i: usize, l: &FMatrix, r2: f64, acc: f64, y: &mut IVec, out: &mut Vec<(IVec, f64)>, cap: usize) -> Result<()> {
        let m = l.len();
        // coordinate i of R y with R = Lᵀ: Σ_{j ≥ i} L[j][i] y_j
        let s: f64 = (i + 1..m).map(|j| l[j][i] * y[j] as f64).sum();
        let rii = l[i][i];
        let rem = (r2 - acc).max(0.0);
        let rad = rem.sqrt() / rii;
        let center = -s / rii;
        let lo = (center - rad - 1e-12).ceil() as i64;
        let hi = (center + rad + 1e-12).floor() as i64;
        for v in lo..=hi {
            y[i] = v;
            let t = rii * v as f64 + s;
            let nacc = acc + t * t;
            if nacc > r2 * (1.0 + 1e-12) + 1e-300 {
                continue;
            }
            if i == 0 {
                if y.iter().any(|&c| c != 0) && y.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
                    out.push((y.clone(), nacc));
                    if out.len() > cap {
                        return Err(Error::CapExceeded(format!("more than {cap} lattice vectors")));
                    }
                }
            } else {
                rec(i - 1, l, r2, nacc, y, out, cap)?;
            }
        }
        y[i] = 0;
        Ok(())
    }
    if m == 0 {
        return Ok(out);
    }
    rec(m - 1, &l, r2, 0.0, &mut y, &mut out, cap)?;
    for (v, n) in out.iter_mut() {
        let vf: Vec<f64> = v.iter().map(|&c| c as f64).collect();
        *n = fla::quad_form(gram, &vf);
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// Row-style Hermite normal form: a basis of the ℤ-span of the generators.
pub fn hnf_rows(gens: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let mut rows: Vec<Vec<BigInt>> = gens.iter().filter(|r| r.iter().any(|x| !x.is_zero())).cloned().collect();
    let ncols = gens.first().map_or(0, |r| r.len());
    let mut out = Vec::new();
    for c in 0..ncols {
        loop {
            let nz: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i][c].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            let piv = *nz.iter().min_by_key(|&&i| rows[i][c].abs()).expect("nonempty");
            for &i in nz.iter().filter(|&&i| i != piv) {
                let q = rows[i][c].div_floor(&rows[piv][c]);
                let pr = rows[piv].clone();
                for (x, p) in rows[i].iter_mut().zip(pr) {
                    *x -= &q * p;
                }
            }
        }
        if let Some(i) = (0..rows.len()).find(|&i| !rows[i][c].is_zero()) {
            let mut r = rows.remove(i);
            if r[c].is_negative() {
                r.iter_mut().for_each(|x| *x = -x.clone());
            }
            out.push(r);
        }
        rows.retain(|r| r.iter().any(|x| !x.is_zero()));
    }
    out
}

pub fn to_i64(v: &[BigInt]) -> Result<IVec> {
    v.iter().map(|x| x.to_i64().ok_or_else(|| Error::CapExceeded("integer coordinate exceeds 64 bits".into()))).collect()
}

fn apply(u: &[IVec], y: &[i64]) -> IVec {
    let m = u.first().map_or(0, |r| r.len());
    (0..m).map(|t| y.iter().zip(u).map(|(c, row)| c * row[t]).sum()).collect()
}

fn ln_covol(gram: &FMatrix, vs: &[IVec]) -> f64 {
    let g: FMatrix = vs
        .iter()
        .map(|a| {
            vs.iter()
                .map(|b| {
                    let mut s = 0.0;
                    for i in 0..a.len() {
                        for j in 0..b.len() {
                            s += a[i] as f64 * gram[i][j] * b[j] as f64;
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    0.5 * fla::det(&g).ln()
}

/// Densest rank-k sublattice for k ∈ {1, 2}: (−ln covol, spanning vectors).
fn densest_small(g: &FMatrix, k: usize, cap: usize) -> Result<(f64, Vec<IVec>)> {
    let m = g.len();
    let mut diag: Vec<f64> = (0..m).map(|i| g[i][i]).collect();
    diag.sort_by(f64::total_cmp);
    if k == 1 {
        let vs = enumerate(g, diag[0] * (1.0 + REL_TOL), cap)?;
        let (v, n) = vs.into_iter().next().expect("basis vector is within radius");
        return Ok((-0.5 * n.ln(), vec![v]));
    }
    debug_assert_eq!(k, 2);
    // λ₁, λ₂ from the two shortest basis vectors of a reduced basis
    let vs = enumerate(g, diag[1] * (1.0 + REL_TOL), cap)?;
    let l1 = vs[0].1;
    let l2 = vs
        .iter()
        .find(|(v, _)| independent(&vs[0].0, v))
        .map(|x| x.1)
        .expect("two independent vectors within radius");
    // a reduced basis (v₁, v₂) of the densest plane has ‖v₁‖‖v₂‖ ≤ (2/√3) λ₁λ₂
    let t = (2.0 / 3f64.sqrt()) * (l1 * l2).sqrt() * (1.0 + REL_TOL);
    let cand = enumerate(g, (t * t / l1) * (1.0 + REL_TOL), cap)?;
    let mut best: Option<(f64, Vec<IVec>)> = None;
    for (i, (a, na)) in cand.iter().enumerate() {
        if *na > t {
            break;
        }
        for (b, nb) in cand.iter().skip(i + 1) {
            if na.sqrt() * nb.sqrt() > t {
                break;
            }
            if !independent(a, b) {
                continue;
            }
            let d = -ln_covol(g, &[a.clone(), b.clone()]);
            if best.as_ref().is_none_or(|(bd, _)| d > *bd + REL_TOL * (1.0 + bd.abs())) {
                best = Some((d, vec![a.clone(), b.clone()]));
            }
        }
    }
    best.ok_or_else(|| Error::Invalid("no plane found".into()))
}

fn independent(a: &[i64], b: &[i64]) -> bool {
    (0..a.len()).any(|i| (0..a.len()).any(|j| a[i] * b[j] != a[j] * b[i]))
}

/// Integer basis of {y : Σ f_i y_i = 0 for every f in fs}.
pub fn integer_kernel(fs: &[IVec], m: usize) -> Vec<IVec> {
    use crate::exact::{self, Q};
    let rows: Vec<Vec<Q>> = fs.iter().map(|f| f.iter().map(|&x| exact::q(x)).collect()).collect();
    exact::kernel(&rows, m)
        .into_iter()
        .map(|v| exact::primitive(&v).iter().map(|x| x.to_i64().expect("small kernel entry")).collect())
        .collect()
}

/// Maximal destabilizing sublattice of (ℤ^m, G): the largest sublattice of
/// maximal slope, where slope = −ln covol / rank. Returns spanning vectors
/// and whether the search radii certify the answer.
pub fn max_destabilizing(gram: &FMatrix, cap: usize) -> Result<(Vec<IVec>, bool)> {
    let m = gram.len();
    let ident: Vec<IVec> = (0..m).map(|i| (0..m).map(|j| (i == j) as i64).collect()).collect();
    if m == 1 {
        return Ok((ident, true));
    }
    let (g, u) = lll(gram);
    let ginv = fla::inverse(&g).ok_or_else(|| Error::Invalid("singular Gram matrix".into()))?;
    let full = -0.5 * fla::det(&g).ln();
    let mut options: Vec<(usize, f64, Vec<IVec>)> = vec![(m, full, ident)];
    let mut certified = true;
    for k in 1..m {
        if k <= 2 {
            let (d, vs) = densest_small(&g, k, cap)?;
            options.push((k, d, vs));
        } else if m - k <= 2 {
            // covol(Λ ∩ W) = covol(Λ) · covol(Λ* ∩ W^⊥)
            let (d, fs) = densest_small(&ginv, m - k, cap)?;
            options.push((k, full + d, integer_kernel(&fs, m)));
        } else {
            certified = false;
            let (d, vs) = greedy_rank(&g, k, cap)?;
            options.push((k, d, vs));
        }
    }
    let best = options.iter().map(|(k, d, _)| d / *k as f64).fold(f64::NEG_INFINITY, f64::max);
    let tol = REL_TOL * (1.0 + best.abs());
    let (_, _, vs) = options
        .into_iter()
        .filter(|(k, d, _)| d / *k as f64 >= best - tol)
        .max_by_key(|(k, _, _)| *k)
        .expect("nonempty");
    Ok((vs.iter().map(|y| apply(&u, y)).collect(), certified))
}

/// Greedy rank-k sublattice from short vectors; used beyond the certified range.
fn greedy_rank(g: &FMatrix, k: usize, cap: usize) -> Result<(f64, Vec<IVec>)> {
    let m = g.len();
    let maxd = (0..m).map(|i| g[i][i]).fold(0.0, f64::max);
    let vs = enumerate(g, maxd * (1.0 + REL_TOL), cap)?;
    let mut chosen: Vec<IVec> = Vec::new();
    for (v, _) in vs {
        let mut trial = chosen.clone();
        trial.push(v);
        if ln_covol(g, &trial).is_finite() && rank_i64(&trial) == trial.len() {
            chosen = trial;
            if chosen.len() == k {
                break;
            }
        }
    }
    Ok((-ln_covol(g, &chosen), chosen))
}

pub fn rank_i64(vs: &[IVec]) -> usize {
    use crate::exact;
    let rows: Vec<Vec<exact::Q>> = vs.iter().map(|v| v.iter().map(|&x| exact::q(x)).collect()).collect();
    exact::rank(&rows)
}

/// Successive minima λ_i² with attaining vectors; cap bounds the search nodes.
/// The i-th minimum is the shortest vector outside the span of the first i−1.
pub fn successive_minima(gram: &FMatrix, cap: usize) -> Result<Vec<(f64, IVec)>> {
    let m = gram.len();
    let (g, u) = lll(gram);
    let mut chosen: Vec<IVec> = Vec::new();
    let mut out = Vec::new();
    for k in 0..m {
        let basis = adapted_basis(&chosen, m);
        let y = shortest_outside(&g, &basis, k, cap)?;
        let yf: Vec<f64> = y.iter().map(|&c| c as f64).collect();
        out.push((fla::quad_form(&g, &yf), apply(&u, &y)));
        chosen.push(y);
    }
    Ok(out)
}

/// Basis of ℤ^m whose first k vectors span the saturation of `vs` (k independent vectors).
fn adapted_basis(vs: &[IVec], m: usize) -> Vec<IVec> {
    let k = vs.len();
    let mut c: Vec<Vec<i128>> = (0..m).map(|i| vs.iter().map(|v| v[i] as i128).collect()).collect();
    // w = V⁻¹ for the row operations V applied to c, so c = w·[H; 0]
    let mut w: Vec<Vec<i128>> = (0..m).map(|i| (0..m).map(|j| (i == j) as i128).collect()).collect();
    let mut row = 0;
    for col in 0..k {
        for r in row + 1..m {
            if c[r][col] == 0 {
                continue;
            }
            let (a, b) = (c[row][col], c[r][col]);
            let e = a.extended_gcd(&b);
            let (a1, b1) = (a / e.gcd, b / e.gcd);
            for t in 0..k {
                let (p, q) = (c[row][t], c[r][t]);
                c[row][t] = e.x * p + e.y * q;
                c[r][t] = -b1 * p + a1 * q;
            }
            for wt in w.iter_mut() {
                let (p, q) = (wt[row], wt[r]);
                wt[row] = a1 * p + b1 * q;
                wt[r] = -e.y * p + e.x * q;
            }
        }
        if c[row][col] != 0 {
            row += 1;
        }
    }
    (0..m).map(|j| (0..m).map(|i| w[i][j] as i64).collect()).collect()
}

/// Schnorr–Euchner search with a shrinking radius over vectors whose
/// coordinates k.. in `basis` are not all zero.
fn shortest_outside(g: &FMatrix, basis: &[IVec], k: usize, cap: usize) -> Result<IVec> {
    let m = basis.len();
    let bf: Vec<Vec<f64>> = basis.iter().map(|v| v.iter().map(|&c| c as f64).collect()).collect();
    let gb: FMatrix = (0..m).map(|i| (0..m).map(|j| fla::bilinear(g, &bf[i], &bf[j])).collect()).collect();
    let (mu, d) = gram_schmidt(&gb);
    let first = (k..m).min_by(|&a, &b| gb[a][a].total_cmp(&gb[b][b])).ok_or(Error::EmptySpace)?;
    let mut best_x: IVec = (0..m).map(|j| (j == first) as i64).collect();
    let mut best = gb[first][first];
    let mut x = vec![0i64; m];
    let mut nodes = 0usize;

    struct Ctx<'a> {
        mu: &'a FMatrix,
        d: &'a [f64],
        k: usize,
        cap: usize,
    }
    fn rec(c: &Ctx, i: usize, partial: f64, x: &mut IVec, best: &mut f64, best_x: &mut IVec, nodes: &mut usize) -> Result<()> {
        let m = x.len();
        if i + 1 == c.k && x[c.k..].iter().all(|&t| t == 0) {
            return Ok(());
        }
        let center = -(i + 1..m).map(|j| c.mu[j][i] * x[j] as f64).sum::<f64>();
        let up = center.ceil() as i64;
        for (startv, step) in [(up, 1i64), (up - 1, -1)] {
            let mut v = startv;
            loop {
                let dv = v as f64 - center;
                let total = partial + c.d[i] * dv * dv;
                if total > *best * (1.0 + 1e-12) {
                    break;
                }
                *nodes += 1;
                if *nodes > c.cap {
                    return Err(Error::CapExceeded(format!("more than {} search nodes", c.cap)));
                }
                x[i] = v;
                if i == 0 {
                    if total < *best && x.iter().any(|&t| t != 0) {
                        *best = total;
                        best_x.clone_from(x);
                    }
                } else {
                    rec(c, i - 1, total, x, best, best_x, nodes)?;
                }
                v += step;
            }
        }
        x[i] = 0;
        Ok(())
    }
    rec(&Ctx { mu: &mu, d: &d, k, cap }, m - 1, 0.0, &mut x, &mut best, &mut best_x, &mut nodes)?;
    let mut y: IVec = (0..m).map(|t| (0..m).map(|j| best_x[j] * basis[j][t]).sum()).collect();
    if y.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
        y.iter_mut().for_each(|c| *c = -*c);
    }
    Ok(y)
}
