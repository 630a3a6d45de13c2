//! Volume estimators: vol from positive degrees, vol_χ from degrees and
//! vol_I from the concave transform, with the shift, homogeneity,
//! superadditivity and continuity experiments built on them.
//!
//! On a curve vol_χ = 2·vol_I. Every estimate carries a sequence, a point
//! value at n_max and a bracket of three observed O(1/n) drifts.

use std::cmp::Ordering;

use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::adelic_curve::{integrate_place_function, LogValue, PlaceFunction};
use crate::divisor_series::{ArchKind, GradedSeries, Mode, Profile};
use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::okounkov::{concave_transform, vol_i, Bracketed};

/// Bracket half-width in units of the observed drift at n_max.
pub const DRIFT_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeKind {
    Vol,
    VolChi,
    VolI,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeqPoint {
    pub n: u64,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub kind: VolumeKind,
    pub sequence: Vec<SeqPoint>,
    pub point_estimate: f64,
    pub bracket: (f64, f64),
    /// (a, b) with a + b/n through the last two terms.
    pub extrapolation: Option<(f64, f64)>,
    pub drift: f64,
}

impl VolumeEstimate {
    pub fn from_sequence(kind: VolumeKind, sequence: Vec<SeqPoint>) -> Result<Self> {
        let last = *sequence.last().ok_or(Error::EmptySpace)?;
        let (extrapolation, drift) = match sequence.len() {
            1 => (None, 0.0),
            k => {
                let prev = sequence[k - 2];
                let (np, nl) = (prev.n as f64, last.n as f64);
                let b = (prev.value - last.value) / (1.0 / np - 1.0 / nl);
                (Some((last.value - b / nl, b)), b.abs() / nl)
            }
        };
        let bracket = (last.lo - DRIFT_FACTOR * drift, last.hi + DRIFT_FACTOR * drift);
        Ok(VolumeEstimate { kind, sequence, point_estimate: last.value, bracket, extrapolation, drift })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.bracket.0 <= x && x <= self.bracket.1
    }

    pub fn half_width(&self) -> f64 {
        (self.point_estimate - self.bracket.0).max(self.bracket.1 - self.point_estimate)
    }
}

fn require_big(s: &GradedSeries, n_max: u64) -> Result<()> {
    if s.divisor.degree() <= Q::zero() || n_max == 0 {
        return Err(Error::NotBig(n_max.min(u32::MAX as u64) as u32));
    }
    Ok(())
}

fn circle_slack(s: &GradedSeries, dim: usize) -> (f64, f64) {
    if s.green.mode == Mode::Adelic && s.green.arch.kind == ArchKind::Circle && dim > 1 {
        let r = dim as f64;
        (r * r.ln(), 0.5 * r * r.ln())
    } else {
        (0.0, 0.0)
    }
}

/// Bracket of deg(E_n, ξ_{ng}).
pub fn degree_bracket(s: &GradedSeries, n: u64) -> Result<(f64, f64)> {
    let d = s.degree(n)?;
    let a = d.lower.eval();
    Ok((a.value - a.error, a.value + a.error + d.width))
}

/// Bracket of deg₊(E_n, ξ_{ng}): the sum of the positive line degrees.
pub fn positive_degree(s: &GradedSeries, n: u64) -> Result<(f64, f64)> {
    let lines = s.line_degrees(n)?;
    let mut sum = LogValue::zero();
    let mut undecided = 0.0;
    for g in &lines {
        match g.sign() {
            Some(Ordering::Greater) => sum += g,
            Some(_) => {}
            None => undecided += g.value().abs() + g.eval().error,
        }
    }
    let a = sum.eval();
    let (down, up) = circle_slack(s, lines.len());
    Ok((a.value - a.error - down, a.value + a.error + undecided + up))
}

fn normalized(n: u64, (lo, hi): (f64, f64)) -> SeqPoint {
    let f = 2.0 / (n as f64 * n as f64);
    SeqPoint { n, value: (lo + hi) / 2.0 * f, lo: lo * f, hi: hi * f }
}

/// 2·deg(E_n)/n² for n ≤ n_max.
pub fn vol_chi_estimate(s: &GradedSeries, n_max: u64) -> Result<VolumeEstimate> {
    require_big(s, n_max)?;
    let seq = (1..=n_max).map(|n| Ok(normalized(n, degree_bracket(s, n)?))).collect::<Result<_>>()?;
    VolumeEstimate::from_sequence(VolumeKind::VolChi, seq)
}

/// 2·deg₊(E_n)/n² for n ≤ n_max.
pub fn vol_estimate(s: &GradedSeries, n_max: u64) -> Result<VolumeEstimate> {
    require_big(s, n_max)?;
    let seq = (1..=n_max).map(|n| Ok(normalized(n, positive_degree(s, n)?))).collect::<Result<_>>()?;
    VolumeEstimate::from_sequence(VolumeKind::Vol, seq)
}

/// ∫ G at n_max/4, n_max/2 and n_max.
pub fn vol_i_estimate(s: &GradedSeries, n_max: u64) -> Result<VolumeEstimate> {
    require_big(s, n_max)?;
    let mut levels: Vec<u64> = [n_max / 4, n_max / 2, n_max].into_iter().filter(|n| *n >= 1).collect();
    levels.dedup();
    let seq = levels
        .into_iter()
        .map(|n| {
            let v = vol_i(&concave_transform(s, n)?)?;
            Ok(SeqPoint { n, value: v.value, lo: v.lo(), hi: v.hi() })
        })
        .collect::<Result<_>>()?;
    VolumeEstimate::from_sequence(VolumeKind::VolI, seq)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    pub vol_chi: f64,
    pub two_vol_i: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// vol_χ against 2·vol_I within the combined brackets.
pub fn chi_vs_i(chi: &VolumeEstimate, vi: &VolumeEstimate) -> CrossCheck {
    let tolerance = chi.half_width() + 2.0 * vi.half_width();
    let two_vol_i = 2.0 * vi.point_estimate;
    CrossCheck { vol_chi: chi.point_estimate, two_vol_i, tolerance, holds: (chi.point_estimate - two_vol_i).abs() <= tolerance }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftRow {
    pub n: u64,
    pub dim: usize,
    /// n·dim·∫φ.
    pub expected_offset: String,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftReport {
    pub rows: Vec<ShiftRow>,
    pub holds: bool,
    /// 2·deg(D)·∫φ, the offset of the limits.
    pub vol_chi_offset_expected: f64,
    pub vol_chi_offset_observed: f64,
}

/// deg(E_n, e^{−nφ}ξ_{ng}) = deg(E_n, ξ_{ng}) + n·dim(E_n)·∫φ, exactly, for n ≤ n_max.
pub fn shift_identity_check(s: &GradedSeries, phi: &PlaceFunction, n_max: u64) -> Result<ShiftReport> {
    let t = s.with_shift(phi);
    let integral = integrate_place_function(phi);
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let dim = s.dim(n);
        let (d0, d1) = (s.degree(n)?, t.degree(n)?);
        let expected = integral.scale(&exact::q((n as usize * dim) as i64));
        let exact = (&d1.lower - &d0.lower).exact_part_eq(&expected) && d0.width == d1.width;
        rows.push(ShiftRow { n, dim, expected_offset: expected.to_string(), exact });
    }
    let holds = rows.iter().all(|r| r.exact);
    let vol_chi_offset_expected = 2.0 * exact::q_to_f64(&s.divisor.degree()) * integral.value();
    let vol_chi_offset_observed = if s.divisor.degree() > Q::zero() {
        let (a, b) = (vol_chi_estimate(s, n_max)?, vol_chi_estimate(&t, n_max)?);
        let lim = |e: &VolumeEstimate| e.extrapolation.map_or(e.point_estimate, |p| p.0);
        lim(&b) - lim(&a)
    } else {
        0.0
    };
    Ok(ShiftReport { rows, holds, vol_chi_offset_expected, vol_chi_offset_observed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityReport {
    #[serde(with = "exact::qstr")]
    pub alpha: Q,
    pub vol_i_scaled: Bracketed,
    /// α²·vol_I of the unscaled series.
    pub vol_i_expected: Bracketed,
    pub inf_scaled: f64,
    pub inf_expected: f64,
    pub holds: bool,
}

/// vol_I(α·S) against α²·vol_I(S), and inf G(α·S) against α·inf G(S).
pub fn homogeneity_check(s: &GradedSeries, alpha: &Q, n_max: u64) -> Result<HomogeneityReport> {
    if !alpha.is_positive() {
        return Err(Error::Invalid(format!("alpha: {} is not positive", exact::fmt_q(alpha))));
    }
    require_big(s, n_max)?;
    let a = exact::q_to_f64(alpha);
    let (t0, t1) = (concave_transform(s, n_max)?, concave_transform(&s.scale(alpha), n_max)?);
    let (v0, v1) = (vol_i(&t0)?, vol_i(&t1)?);
    let vol_i_expected = Bracketed { value: a * a * v0.value, error: a * a * v0.error };
    let tol = v1.error + vol_i_expected.error + 1e-12 * (1.0 + v1.value.abs());
    let inf_expected = a * t0.inf_value;
    let inf_tol = (t1.grid_error + a * t0.grid_error).max(1e-12);
    let holds = (v1.value - vol_i_expected.value).abs() <= tol && (t1.inf_value - inf_expected).abs() <= inf_tol;
    Ok(HomogeneityReport { alpha: alpha.clone(), vol_i_scaled: v1, vol_i_expected, inf_scaled: t1.inf_value, inf_expected, holds })
}

/// Sup-convolution of two concave knot lists: segments merged by decreasing slope.
pub fn sup_convolve_knots(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let segs = |k: &[(f64, f64)]| -> Vec<(f64, f64)> { k.windows(2).map(|w| (w[1].0 - w[0].0, (w[1].1 - w[0].1) / (w[1].0 - w[0].0))).collect() };
    let mut all = segs(a);
    all.extend(segs(b));
    all.sort_by(|x, y| y.1.total_cmp(&x.1));
    let mut p = (a[0].0 + b[0].0, a[0].1 + b[0].1);
    let mut out = vec![p];
    for (len, slope) in all {
        p = (p.0 + len, p.1 + slope * len);
        out.push(p);
    }
    out
}

fn knots_integral(k: &[(f64, f64)]) -> f64 {
    k.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

fn knots_mean(k: &[(f64, f64)]) -> f64 {
    let len = k[k.len() - 1].0 - k[0].0;
    if len > 0.0 {
        knots_integral(k) / len
    } else {
        k[0].1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationReport {
    pub e1: String,
    pub e2: String,
    pub e_sum: String,
    pub holds: bool,
}

fn profile_mean(p: &Profile, (a, b): &(Q, Q)) -> Q {
    if a == b {
        p.value(a)
    } else {
        p.integral(a, b) / (b - a)
    }
}

/// E_{Δ₁}[θ₁] + E_{Δ₂}[θ₂] ≤ E_{Δ₁+Δ₂}[θ₁ □ θ₂] by exact integration.
pub fn expectation_inequality(p1: &Profile, b1: &(Q, Q), p2: &Profile, b2: &(Q, Q)) -> ExpectationReport {
    let conv = p1.sup_convolution(b1, p2, b2);
    let bs = (&b1.0 + &b2.0, &b1.1 + &b2.1);
    let (e1, e2, es) = (profile_mean(p1, b1), profile_mean(p2, b2), profile_mean(&conv, &bs));
    let holds = &e1 + &e2 <= es;
    ExpectationReport { e1: exact::fmt_q(&e1), e2: exact::fmt_q(&e2), e_sum: exact::fmt_q(&es), holds }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrunnMinkowskiReport {
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub holds: bool,
    /// Expectations of the computed envelopes and of their sup-convolution.
    pub envelope_e1: f64,
    pub envelope_e2: f64,
    pub envelope_e_sum: f64,
    pub envelope_holds: bool,
}

/// vol_I(S₁)/deg D₁ + vol_I(S₂)/deg D₂ ≤ vol_I(S₁+S₂)/deg(D₁+D₂).
pub fn brunn_minkowski_check(s1: &GradedSeries, s2: &GradedSeries, n_max: u64) -> Result<BrunnMinkowskiReport> {
    require_big(s1, n_max)?;
    require_big(s2, n_max)?;
    let s12 = s1.sum(s2)?;
    let (t1, t2, t12) = (concave_transform(s1, n_max)?, concave_transform(s2, n_max)?, concave_transform(&s12, n_max)?);
    let (v1, v2, v12) = (vol_i(&t1)?, vol_i(&t2)?, vol_i(&t12)?);
    let deg = |s: &GradedSeries| exact::q_to_f64(&s.divisor.degree());
    let (d1, d2, d12) = (deg(s1), deg(s2), deg(&s12));
    let lhs = v1.value / d1 + v2.value / d2;
    let rhs = v12.value / d12;
    let tolerance = v1.error / d1 + v2.error / d2 + v12.error / d12;
    let conv = sup_convolve_knots(&t1.envelope, &t2.envelope);
    let (e1, e2, es) = (knots_mean(&t1.envelope), knots_mean(&t2.envelope), knots_mean(&conv));
    Ok(BrunnMinkowskiReport {
        lhs,
        rhs,
        tolerance,
        holds: lhs <= rhs + tolerance,
        envelope_e1: e1,
        envelope_e2: e2,
        envelope_e_sum: es,
        envelope_holds: e1 + e2 <= es + 1e-12 * (1.0 + es.abs()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityConfig {
    /// Gap envelope c1·ε·|vol(D̄)| + c2/n_max.
    pub c1: f64,
    pub c2: f64,
}

impl Default for ContinuityConfig {
    fn default() -> Self {
        ContinuityConfig { c1: 4.0, c2: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityRow {
    #[serde(with = "exact::qstr")]
    pub eps: Q,
    pub vol_chi: f64,
    pub chi_gap: f64,
    pub chi_bound: f64,
    pub vol_i: f64,
    pub i_gap: f64,
    pub i_bound: f64,
    /// μ̂_min(E_{n_max})/n_max of the perturbed series.
    pub mu_min_over_n: f64,
    /// Constant archimedean shift making every slope nonnegative.
    #[serde(with = "exact::qstr")]
    pub shift: Q,
    /// vol of the shifted series minus 2·deg·shift.
    pub shift_path_vol_chi: f64,
    pub shift_path_tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub base_vol_chi: VolumeEstimate,
    pub base_vol_i: VolumeEstimate,
    pub rows: Vec<ContinuityRow>,
    pub pass: bool,
}

fn min_slope_over_n(s: &GradedSeries, n: u64) -> Result<f64> {
    let lines = s.line_degrees(n)?;
    Ok(lines.iter().map(LogValue::value).fold(f64::INFINITY, f64::min) / n as f64)
}

/// vol_χ and vol_I of D̄ + εĒ along the schedule.
pub fn continuity_experiment(sd: &GradedSeries, se: &GradedSeries, schedule: &[Q], n_max: u64, cfg: &ContinuityConfig) -> Result<ContinuityReport> {
    if schedule.is_empty() {
        return Err(Error::ScheduleEmpty);
    }
    require_big(sd, n_max)?;
    let base_vol_chi = vol_chi_estimate(sd, n_max)?;
    let base_vol_i = vol_i_estimate(sd, n_max)?;
    let nm = n_max as f64;
    let mut rows = Vec::new();
    for eps in schedule {
        if eps.is_negative() {
            return Err(Error::Invalid(format!("schedule: {} is negative", exact::fmt_q(eps))));
        }
        let s = sd.sum(&se.scale(eps))?;
        let (chi, vi) = (vol_chi_estimate(&s, n_max)?, vol_i_estimate(&s, n_max)?);
        let e = exact::q_to_f64(eps);
        let chi_gap = (chi.point_estimate - base_vol_chi.point_estimate).abs();
        let i_gap = (vi.point_estimate - base_vol_i.point_estimate).abs();
        let chi_bound = cfg.c1 * e * base_vol_chi.point_estimate.abs() + cfg.c2 / nm;
        let i_bound = cfg.c1 * e * base_vol_i.point_estimate.abs() + cfg.c2 / nm;

        let mu = min_slope_over_n(&s, n_max)?;
        // strictly above −μ̂_min/n on a 1/64 grid
        let shift = Q::new(BigInt::from((-mu * 64.0).max(0.0).floor() as i64 + 1), BigInt::from(64));
        let shifted = s.with_shift(&PlaceFunction::constant_arch(shift.clone()));
        let v = vol_estimate(&shifted, n_max)?;
        let deg = exact::q_to_f64(&s.divisor.degree());
        let shift_path_vol_chi = v.point_estimate - 2.0 * deg * exact::q_to_f64(&shift);
        let shift_path_tolerance = v.half_width() + chi.half_width();
        let agree = (shift_path_vol_chi - chi.point_estimate).abs() <= shift_path_tolerance;

        let pass = chi_gap <= chi_bound && i_gap <= i_bound && agree;
        rows.push(ContinuityRow {
            eps: eps.clone(),
            vol_chi: chi.point_estimate,
            chi_gap,
            chi_bound,
            vol_i: vi.point_estimate,
            i_gap,
            i_bound,
            mu_min_over_n: mu,
            shift,
            shift_path_vol_chi,
            shift_path_tolerance,
            pass,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(ContinuityReport { base_vol_chi, base_vol_i, rows, pass })
}

/// Smallest k ≤ k_cap with vol_I(k·D̄ + Ē) > 0.
pub fn first_big_multiple(sd: &GradedSeries, se: &GradedSeries, k_cap: u64, n_max: u64) -> Result<Option<u64>> {
    for k in 1..=k_cap {
        let s = sd.scale(&exact::q(k as i64)).sum(se)?;
        if s.divisor.degree() <= Q::zero() {
            continue;
        }
        let v = vol_i(&concave_transform(&s, n_max)?)?;
        if v.lo() > 0.0 {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// vol_χ(D̄) ≥ vol_χ(Ē) when D − E is effective, g ≥ h and all slopes are nonnegative.
pub fn effective_monotonicity(sd: &GradedSeries, se: &GradedSeries, n_max: u64) -> Result<bool> {
    let (a, b) = (vol_chi_estimate(sd, n_max)?, vol_chi_estimate(se, n_max)?);
    Ok(a.bracket.1 >= b.bracket.0)
}

/// lim 2·deg(E_n)/n² for models whose degrees are exact rationals.
///
/// On multiples of L (the common denominator of the coefficients and of
/// the profile knots) deg(E_n) is a quadratic polynomial in n, so three
/// samples determine the limit.
pub fn exact_vol_chi(s: &GradedSeries, n_max: u64) -> Result<Q> {
    require_big(s, n_max)?;
    let (a, b) = s.divisor.body().ok_or(Error::NotBig(n_max as u32))?;
    let mut l = BigInt::one();
    for (_, c) in s.divisor.terms() {
        l = l.lcm(c.denom());
    }
    for (x, _) in s.green.arch.profile.knots(&a, &b) {
        l = l.lcm(x.denom());
    }
    let l = l.to_u64().ok_or_else(|| Error::CapExceeded("common denominator".into()))?;
    let top = n_max / l * l;
    if top < 3 * l {
        return Err(Error::CapExceeded(format!("n_max {n_max} is below three multiples of {l}")));
    }
    let ns = [top - 2 * l, top - l, top];
    let mut f = Vec::new();
    for n in ns {
        let d = s.degree(n)?;
        if !d.lower.finite.is_empty() || !d.lower.is_exact() || d.width != 0.0 {
            return Err(Error::Unsupported("exact volumes need rational degrees".into()));
        }
        f.push(d.lower.rational);
    }
    let x: Vec<Q> = ns.iter().map(|n| exact::q(*n as i64)).collect();
    let d01 = (&f[1] - &f[0]) / (&x[1] - &x[0]);
    let d12 = (&f[2] - &f[1]) / (&x[2] - &x[1]);
    let second = (d12 - d01) / (&x[2] - &x[0]);
    Ok(second * exact::q(2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrivialRow {
    #[serde(with = "exact::qstr")]
    pub eps: Q,
    #[serde(with = "exact::qstr")]
    pub vol_chi: Q,
    #[serde(with = "exact::qstr")]
    pub gap: Q,
    #[serde(with = "exact::qstr")]
    pub bound: Q,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrivialReport {
    #[serde(with = "exact::qstr")]
    pub base_vol_chi: Q,
    /// min_α g(n_max, α)/n_max.
    #[serde(with = "exact::qstr")]
    pub nu_min_over_n: Q,
    /// inf of the weight function over the body.
    #[serde(with = "exact::qstr")]
    pub inf_f: Q,
    pub nu_min_ok: bool,
    pub rows: Vec<TrivialRow>,
    pub pass: bool,
}

/// Trivially valued base: vol_χ of (D, f + εh) along the schedule, against
/// |vol_χ(ε) − vol_χ(0)| ≤ 2·deg(D)·ε·sup|h|.
pub fn trivially_valued_experiment(s: &GradedSeries, h: &Profile, schedule: &[Q], n_max: u64) -> Result<TrivialReport> {
    if s.green.mode != Mode::Trivial {
        return Err(Error::ModeMismatch("series is not in trivial mode".into()));
    }
    s.green.validate()?;
    if schedule.is_empty() {
        return Err(Error::ScheduleEmpty);
    }
    require_big(s, n_max)?;
    let body = s.divisor.body().ok_or(Error::NotBig(n_max as u32))?;
    let f = &s.green.arch.profile;
    let base = exact_vol_chi(s, n_max)?;
    let phi = &s.green.shift.arch;
    let inf_f = f.inf_on(&body.0, &body.1) + phi;
    let lines = s.line_degrees(n_max)?;
    let nu_min = lines.iter().map(|g| g.rational.clone()).min().ok_or(Error::EmptySpace)? / exact::q(n_max as i64);
    let h_sup = h.sup_on(&body.0, &body.1).abs().max(h.inf_on(&body.0, &body.1).abs());
    let deg = s.divisor.degree();
    let mut rows = Vec::new();
    for eps in schedule {
        let mut green = s.green.clone();
        green.arch.profile = f.add(&h.times(eps));
        let v = exact_vol_chi(&s.with_green(green), n_max)?;
        let gap = (&v - &base).abs();
        let bound = exact::q(2) * &deg * eps.abs() * &h_sup;
        rows.push(TrivialRow { eps: eps.clone(), vol_chi: v, ok: gap <= bound, gap, bound });
    }
    let nu_min_ok = nu_min >= inf_f;
    let pass = nu_min_ok && rows.iter().all(|r| r.ok);
    Ok(TrivialReport { base_vol_chi: base, nu_min_over_n: nu_min, inf_f, nu_min_ok, rows, pass })
}
