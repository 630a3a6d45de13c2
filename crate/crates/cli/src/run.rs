use adelic_core::bundles::{self, arakelov_degree, hn_filtration, positive_degree_bracket, successive_minima};
use adelic_core::divisor_series::{multiplication_surjectivity, Profile};
use adelic_core::norms::delta_bound_check;
use adelic_core::okounkov::{self, level_set_volume, midpoint_concave, superadditivity_violations, valuation_pivots, vol_i};
use adelic_core::volumes::{self, chi_vs_i, ContinuityConfig};
use adelic_core::{decompose_ample, exact, concave_transform, Error, GradedSeries, HnConfig, LogValue, OkounkovData, Q};
use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::report::{num, Check, Report, Table};
use crate::spec::{ExperimentSpec, Kind};

const DEFAULT_TOL: f64 = 1e-9;

pub fn run(spec: &ExperimentSpec, op: Option<&str>) -> Result<Report> {
    spec.validate()?;
    let op = op.map(str::to_string).or_else(|| spec.op.clone());
    let inputs = serde_json::to_value(spec)?;
    let kind = spec.kind.name();
    let (results, checks, table) = match spec.kind {
        Kind::Bundle => bundle(spec, op.as_deref().unwrap_or("hn"))?,
        Kind::Series => series(spec)?,
        Kind::Okounkov => okounkov(spec)?,
        Kind::Volumes => volumes(spec, op.as_deref().unwrap_or("chi"))?,
        Kind::Continuity => continuity(spec)?,
        Kind::Decompose => decompose(spec)?,
        Kind::TrivialMode => trivial(spec)?,
    };
    Ok(Report::new(kind, inputs, results, checks, table))
}

type Outcome = (Value, Vec<Check>, Option<Table>);

fn field<T>(r: adelic_core::Result<T>, path: &str) -> Result<T> {
    r.map_err(|e: Error| anyhow::anyhow!("{path}: {e}"))
}

fn bundle(spec: &ExperimentSpec, op: &str) -> Result<Outcome> {
    let e = spec.bundle.as_ref().context("schema error at `bundle`: required for kind bundle")?;
    let tol = spec.tol.unwrap_or(DEFAULT_TOL);
    let cfg = HnConfig { cap: spec.cap.unwrap_or(HnConfig::default().cap), ..HnConfig::default() };
    match op {
        "hn" => {
            let hn = field(hn_filtration(e, &cfg), "bundle")?;
            let deg = field(arakelov_degree(e), "bundle")?;
            let delta = delta_bound_check(&e.family).delta_bound.value();
            let total = hn.slopes.iter().fold(LogValue::zero(), |a, b| &a + b).value();
            let (lo, hi) = (deg.lower.value(), deg.upper());
            let pos = field(positive_degree_bracket(e, &cfg), "bundle")?;
            let mut checks = vec![
                Check::new("slope_sum_below_degree", total <= hi + tol),
                Check::new("degree_below_slope_sum_plus_delta", lo <= total + delta + tol),
                Check::new("slopes_decreasing", hn.slopes.windows(2).all(|w| w[0].value() >= w[1].value() - tol)),
            ];
            // seeded spot check: no vector beats the top slope
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or(0));
            let mu_max = hn.mu_max().value();
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..32 {
                let v: Vec<Q> = (0..e.dim()).map(|_| exact::q(rng.gen_range(-5..=5))).collect();
                if v.iter().all(|x| *x == exact::q(0)) {
                    continue;
                }
                worst = worst.max(field(bundles::degree_of_vector(e, &v), "bundle")?.value());
            }
            checks.push(Check::new("random_vectors_below_mu_max", worst <= mu_max + tol).detail(format!("max {} vs {}", num(worst), num(mu_max))));
            let mut table = Table::new(&["n", "value", "lo", "hi"]);
            for (i, s) in hn.slopes.iter().enumerate() {
                let a = s.eval();
                table.push(vec![(i + 1).to_string(), num(a.value), num(a.value - a.error), num(a.value + a.error)]);
            }
            let results = json!({
                "hn": hn,
                "degree": {"lo": lo, "hi": hi},
                "positive_degree": {"lo": pos.0.value(), "hi": pos.1.value()},
                "delta_bound": delta,
            });
            Ok((results, checks, Some(table)))
        }
        "minima" => {
            let cap = spec.cap.unwrap_or(HnConfig::default().cap);
            let m = field(successive_minima(e, cap, &cfg), "bundle")?;
            let mut table = Table::new(&["n", "value", "lo", "hi"]);
            for (i, x) in m.minima.iter().enumerate() {
                let a = x.nu.eval();
                table.push(vec![(i + 1).to_string(), num(a.value), num(a.value - a.error), num(a.value + a.error)]);
            }
            let checks = vec![Check::new("minima_below_slopes", m.below_slopes)];
            Ok((json!({ "minima": m }), checks, Some(table)))
        }
        other => bail!("op: unknown bundle operation {other:?} (expected hn or minima)"),
    }
}

fn series(spec: &ExperimentSpec) -> Result<Outcome> {
    let s = spec.require_series()?;
    let n_max = spec.n_max.unwrap_or(20);
    let mut rows = Vec::new();
    let mut table = Table::new(&["n", "value", "lo", "hi"]);
    for n in 1..=n_max {
        let d = field(s.degree(n), "series")?;
        let a = d.lower.eval();
        let (lo, hi) = (a.value - a.error, a.value + a.error + d.width);
        table.push(vec![n.to_string(), num((lo + hi) / 2.0), num(lo), num(hi)]);
        rows.push(json!({"n": n, "dim": s.dim(n), "degree": {"lo": lo, "hi": hi}, "delta": s.delta(n)}));
    }
    let mut checks = Vec::new();
    let small = n_max.min(8);
    let mut fast_ok = true;
    for n in 1..=small {
        if s.dim(n) == 0 {
            continue;
        }
        let b = field(s.bundle(n), "series")?;
        let slow = field(bundles::subspace_degree(&b.family, &exact::identity(s.dim(n))), "series")?;
        let fast = field(s.degree(n), "series")?;
        fast_ok &= (fast.lower.value() - slow.lower.value()).abs() <= 1e-9 + fast.width + slow.width;
    }
    checks.push(Check::new("line_degrees_match_bundle", fast_ok));
    if !s.green.shift.is_zero() {
        let mut green = s.green.clone();
        green.shift = Default::default();
        let base = s.with_green(green);
        let r = field(volumes::shift_identity_check(&base, &s.green.shift, n_max), "series.green.shift")?;
        checks.push(Check::new("shift_identity", r.holds));
    }
    let surj = if s.dim(1) > 0 { Some(multiplication_surjectivity(s, 1, 1)) } else { None };
    Ok((json!({ "levels": rows, "surjectivity_1_1": surj }), checks, Some(table)))
}

fn okounkov(spec: &ExperimentSpec) -> Result<Outcome> {
    let s = spec.require_series()?;
    let n_max = spec.n_max.unwrap_or(200);
    let data = field(OkounkovData::build(s, n_max), "series")?;
    let t = field(concave_transform(s, n_max), "series")?;
    let v = field(vol_i(&t), "series")?;
    let cfg = HnConfig { cap: spec.cap.unwrap_or(HnConfig::default().cap), ..HnConfig::default() };

    let mut checks = vec![Check::new("envelope_concave", midpoint_concave(&t))];
    let nested = t.level_sets.windows(2).all(|w| w[1].lo >= w[0].lo - 1e-12 && w[1].hi <= w[0].hi + 1e-12);
    checks.push(Check::new("level_sets_nested", nested));
    let mut prev = f64::INFINITY;
    let monotone = (0..=16).all(|k| {
        let lvl = t.inf_value + (t.sup_value - t.inf_value) * k as f64 / 16.0;
        let v = level_set_volume(&t, lvl);
        let ok = v <= prev + 1e-12;
        prev = v;
        ok
    });
    checks.push(Check::new("level_set_volume_monotone", monotone));
    let gap = field(okounkov::body_length_gap(s, n_max), "series")?;
    let bound = exact::qf(1, n_max as i64);
    checks.push(Check::new("body_length_within_1_over_nmax", gap >= Q::from_integer(0.into()) && gap <= bound).detail(exact::fmt_q(&gap)));

    let n_check = n_max.min(12);
    if s.dim(n_check) > 0 {
        let mut g: Vec<LogValue> = field(valuation_pivots(s, n_check, &cfg), "series")?.into_iter().map(|p| p.1).collect();
        let hn = field(hn_filtration(&*field(s.bundle(n_check), "series")?, &cfg), "series")?;
        g.sort_by(|a, b| b.total_cmp(a));
        let same = g.len() == hn.slopes.len() && g.iter().zip(&hn.slopes).all(|(a, b)| (a.value() - b.value()).abs() <= 1e-9);
        checks.push(Check::new("pivot_multiset_equals_slopes", same));
    }
    let level = n_max.min(60);
    let bad = superadditivity_violations(&data.g_table, |n| s.delta(n), level);
    checks.push(Check::new("delta_superadditivity", bad.is_empty()).detail(format!("{} violations for n+m <= {level}", bad.len())));

    let mut table = Table::new(&["n", "alpha", "g"]);
    for ((n, a), g) in &data.g_table {
        table.push(vec![n.to_string(), a.to_string(), num(g.value())]);
    }
    let results = json!({
        "body": [exact::fmt_q(&data.body[0]), exact::fmt_q(&data.body[1])],
        "transform": t,
        "vol_i": v,
    });
    Ok((results, checks, Some(table)))
}

fn volumes(spec: &ExperimentSpec, op: &str) -> Result<Outcome> {
    let s = spec.require_series()?;
    let n_max = spec.n_max.unwrap_or(200);
    let est = match op {
        "chi" => field(volumes::vol_chi_estimate(s, n_max), "series")?,
        "vol" => field(volumes::vol_estimate(s, n_max), "series")?,
        "volI" | "vol-i" | "vol_i" => field(volumes::vol_i_estimate(s, n_max), "series")?,
        other => bail!("op: unknown volume {other:?} (expected chi, vol or volI)"),
    };
    let mut checks = vec![Check::new("point_in_bracket", est.contains(est.point_estimate))];
    let mut extra = Value::Null;
    match op {
        "chi" | "volI" | "vol-i" | "vol_i" => {
            let (chi, vi) = if op == "chi" {
                (est.clone(), field(volumes::vol_i_estimate(s, n_max), "series")?)
            } else {
                (field(volumes::vol_chi_estimate(s, n_max), "series")?, est.clone())
            };
            let c = chi_vs_i(&chi, &vi);
            checks.push(Check::new("chi_equals_two_vol_i", c.holds));
            extra = serde_json::to_value(c)?;
        }
        _ => {
            let chi = field(volumes::vol_chi_estimate(s, n_max), "series")?;
            let below = chi.sequence.iter().zip(&est.sequence).all(|(c, v)| c.lo <= v.hi + 1e-12);
            checks.push(Check::new("chi_below_vol", below));
        }
    }
    let mut table = Table::new(&["n", "value", "lo", "hi"]);
    for p in &est.sequence {
        table.push(vec![p.n.to_string(), num(p.value), num(p.lo), num(p.hi)]);
    }
    Ok((json!({ "estimate": est, "cross_check": extra }), checks, Some(table)))
}

fn continuity(spec: &ExperimentSpec) -> Result<Outcome> {
    let s = spec.require_series()?;
    let e = spec.perturbation.as_ref().context("schema error at `perturbation`: required for kind continuity")?;
    let schedule = spec.schedule_q()?;
    let n_max = spec.n_max.unwrap_or(200);
    let r = field(volumes::continuity_experiment(s, e, &schedule, n_max, &ContinuityConfig::default()), "schedule")?;
    let checks = r.rows.iter().map(|row| Check::new(format!("eps={}", exact::fmt_q(&row.eps)), row.pass)).collect();
    Ok((serde_json::to_value(&r)?, checks, None))
}

fn decompose(spec: &ExperimentSpec) -> Result<Outcome> {
    let d = spec
        .divisor
        .as_ref()
        .or(spec.series.as_ref().map(|s: &GradedSeries| &s.divisor))
        .context("schema error at `divisor`: required for kind decompose")?;
    let r = field(decompose_ample(d), "divisor")?;
    let checks = vec![
        Check::new("reconstruction", r.sum() == *d),
        Check::new("parts_ample", r.verify(d)),
    ];
    Ok((serde_json::to_value(&r)?, checks, None))
}

fn trivial(spec: &ExperimentSpec) -> Result<Outcome> {
    let s = spec.require_series()?;
    let h = spec.profile.clone().unwrap_or_else(Profile::default);
    let schedule = spec.schedule_q()?;
    let n_max = spec.n_max.unwrap_or(120);
    let r = field(volumes::trivially_valued_experiment(s, &h, &schedule, n_max), "series.green")?;
    let mut checks = vec![Check::new("nu_min_above_inf_f", r.nu_min_ok)];
    checks.extend(r.rows.iter().map(|row| Check::new(format!("eps={}", exact::fmt_q(&row.eps)), row.ok)));
    Ok((serde_json::to_value(&r)?, checks, None))
}
