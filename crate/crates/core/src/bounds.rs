//! Computable right-hand sides of the consistency bounds, the lower bound for
//! Type A designs and the exact loss of the tent field.

use std::fmt;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::designs::{
    format_float, intensity, intensity_profile, pair_count_b, random_design, DesignFamilySpec, Growth, PointSet,
    Region,
};
use crate::error::{param, Result};
use crate::spatcov::DecayFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    #[serde(rename = "prop5.1")]
    MeanGeneral,
    #[serde(rename = "prop5.2")]
    MeanRegular,
    #[serde(rename = "prop5.3")]
    MeanRandom,
    #[serde(rename = "prop6.1")]
    CovGeneral,
    #[serde(rename = "prop6.2")]
    CovRegular,
    #[serde(rename = "prop6.3")]
    CovRandom,
    #[serde(rename = "prop6.4")]
    CovCentered,
    #[serde(rename = "lemma2.1")]
    Eigenfunction,
    #[serde(rename = "example2.1")]
    PairCount,
    #[serde(rename = "prop7.2-lower")]
    InconsistencyLower,
    #[serde(rename = "tent-exact")]
    TentExact,
}

impl BoundKind {
    pub fn tag(&self) -> &'static str {
        match self {
            BoundKind::MeanGeneral => "prop5.1",
            BoundKind::MeanRegular => "prop5.2",
            BoundKind::MeanRandom => "prop5.3",
            BoundKind::CovGeneral => "prop6.1",
            BoundKind::CovRegular => "prop6.2",
            BoundKind::CovRandom => "prop6.3",
            BoundKind::CovCentered => "prop6.4",
            BoundKind::Eigenfunction => "lemma2.1",
            BoundKind::PairCount => "example2.1",
            BoundKind::InconsistencyLower => "prop7.2-lower",
            BoundKind::TentExact => "tent-exact",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A bound value with the argument that attained it and the constants used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub which: BoundKind,
    pub value: f64,
    /// `("rho", r)`, `("eps", e)` or `("m", m)` when the bound was minimized
    /// or evaluated at a free argument.
    pub argument: Option<(String, f64)>,
    pub constants: Vec<(String, f64)>,
    /// Violated hypothesis, reported but not fatal.
    pub warning: Option<String>,
    /// Monte Carlo standard error of a simulated ingredient.
    pub standard_error: Option<f64>,
}

impl BoundReport {
    fn new(which: BoundKind, value: f64) -> Self {
        Self {
            which,
            value,
            argument: None,
            constants: Vec::new(),
            warning: None,
            standard_error: None,
        }
    }

    fn at(mut self, name: &str, x: f64) -> Self {
        self.argument = Some((name.to_string(), x));
        self
    }

    fn with(mut self, name: &str, x: f64) -> Self {
        self.constants.push((name.to_string(), x));
        self
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub const CSV_HEADER: [&'static str; 7] =
        ["which", "value", "argument", "argument_value", "constants", "warning", "standard_error"];

    pub fn csv_record(&self) -> Vec<String> {
        let (arg, arg_value) = match &self.argument {
            Some((k, v)) => (k.clone(), format_float(*v)),
            None => (String::new(), String::new()),
        };
        let constants = self
            .constants
            .iter()
            .map(|(k, v)| format!("{k}={}", format_float(*v)))
            .collect::<Vec<_>>()
            .join(";");
        vec![
            self.which.tag().to_string(),
            format_float(self.value),
            arg,
            arg_value,
            constants,
            self.warning.clone().unwrap_or_default(),
            self.standard_error.map(format_float).unwrap_or_default(),
        ]
    }
}

pub fn write_bound_csv<W: Write>(reports: &[BoundReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(BoundReport::CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

/// 32 log-spaced radii from the smallest positive pairwise distance to the
/// diameter; `[0]` when all points coincide.
pub fn default_rho_grid(points: &PointSet) -> Vec<f64> {
    const COUNT: usize = 32;
    let Some(lo) = points.min_positive_distance() else {
        return vec![0.0];
    };
    let hi = points.diameter();
    if hi <= lo {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (COUNT - 1) as f64;
    (0..COUNT)
        .map(|i| if i == COUNT - 1 { hi } else { lo * (ratio * i as f64).exp() })
        .collect()
}

fn sorted_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(param("radius grid is empty"));
    }
    if grid.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(param("radii must be finite and nonnegative"));
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

/// Minimum of `value(rho, I_rho)` over the grid; ties keep the smallest radius.
fn minimize_over_radii(
    points: &PointSet,
    rho_grid: &[f64],
    value: impl Fn(f64, f64) -> f64,
) -> Result<(f64, f64, f64)> {
    let radii = sorted_grid(rho_grid)?;
    let profile = intensity_profile(points, &radii)?;
    let mut best = (f64::INFINITY, radii[0], profile.values[0]);
    for (r, i) in radii.iter().zip(&profile.values) {
        let v = value(*r, *i);
        if v < best.0 {
            best = (v, *r, *i);
        }
    }
    Ok(best)
}

fn general(which: BoundKind, h: &DecayFunction, points: &PointSet, rho_grid: &[f64]) -> Result<BoundReport> {
    if points.is_empty() {
        return Err(param("design is empty"));
    }
    let h0 = h.at_zero();
    let (value, rho, i) = minimize_over_radii(points, rho_grid, |r, i| h.eval(r) + h0 * i)?;
    Ok(BoundReport::new(which, value)
        .at("rho", rho)
        .with("h0", h0)
        .with("intensity", i))
}

/// `min_rho h(rho) + h(0) I_rho(S)`.
pub fn bound_mean_general(h: &DecayFunction, points: &PointSet, rho_grid: &[f64]) -> Result<BoundReport> {
    general(BoundKind::MeanGeneral, h, points, rho_grid)
}

/// `min_rho H(rho) + H(0) I_rho(S)`.
pub fn bound_cov_general(big_h: &DecayFunction, points: &PointSet, rho_grid: &[f64]) -> Result<BoundReport> {
    general(BoundKind::CovGeneral, big_h, points, rho_grid)
}

/// Default `K''` for a reference region: `2 diam(R_0) sqrt(d)`.
pub fn default_kpp(region: Region, dim: usize) -> f64 {
    2.0 * region.diameter(dim) * (dim as f64).sqrt()
}

/// Adaptive Simpson with relative tolerance `rel` and absolute floor `abs`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel: f64, abs: f64) -> f64 {
    fn recurse(
        f: &impl Fn(f64) -> f64,
        (a, fa): (f64, f64),
        (m, fm): (f64, f64),
        (b, fb): (f64, f64),
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, (a, fa), (lm, flm), (m, fm), left, 0.5 * tol, depth - 1)
            + recurse(f, (m, fm), (rm, frm), (b, fb), right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // one refinement pass fixes the tolerance relative to the integral size
    let rough = recurse(f, (a, fa), (m, fm), (b, fb), whole, abs.max(rel * whole.abs()), 8);
    recurse(f, (a, fa), (m, fm), (b, fb), whole, abs.max(rel * rough.abs()), 50)
}

/// `int_0^upper f`, split into geometric panels `[upper 2^{-k-1}, upper 2^{-k}]`
/// so that features near the origin are not skipped on long ranges.
fn integrate_from_zero(f: &impl Fn(f64) -> f64, upper: f64) -> f64 {
    const PANELS: i32 = 48;
    let mut total = 0.0;
    let mut hi = upper;
    for _ in 0..PANELS {
        let lo = 0.5 * hi;
        total += adaptive_simpson(f, lo, hi, 1e-6, 1e-14);
        hi = lo;
    }
    total + adaptive_simpson(f, 0.0, hi, 1e-6, 1e-14)
}

struct SupScan {
    sup: f64,
    monotone_tail: bool,
}

/// Dense scan of `g` on `[0, upper]` with `10^4` nodes, refined around the
/// maximizer; also checks that `g` is nonincreasing after its peak.
fn scan_sup(g: &impl Fn(f64) -> f64, upper: f64) -> SupScan {
    const NODES: usize = 10_000;
    let step = upper / (NODES - 1) as f64;
    let values: Vec<f64> = (0..NODES).map(|i| g(i as f64 * step)).collect();
    let (arg, mut sup) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if *v > bv { (i, *v) } else { (bi, bv) });
    let scale = sup.abs().max(f64::MIN_POSITIVE);
    let monotone_tail = values[arg..].windows(2).all(|w| w[1] <= w[0] + 1e-12 * scale);
    let lo = arg.saturating_sub(1) as f64 * step;
    let hi = ((arg + 1).min(NODES - 1)) as f64 * step;
    let fine = (hi - lo) / (NODES - 1) as f64;
    for i in 0..NODES {
        sup = sup.max(g(lo + i as f64 * fine));
    }
    SupScan { sup, monotone_tail }
}

/// Three-term regular-design bound
/// `(3D)^d d / a^d int_0^{K a / D} x^{d-1} h
///  + 4 d (3D)^{d-1} / (a^{d-1} N^{1/d}) sup_{[0, K a / D]} x^{d-1} h + 2 h(0) / N`
/// with `D` the geometric-mean lattice increment, `a = alpha_N` and `K = K''`.
fn regular(
    which: BoundKind,
    h: &DecayFunction,
    dim: usize,
    delta: f64,
    alpha: f64,
    n: usize,
    kpp: f64,
) -> Result<BoundReport> {
    if dim == 0 {
        return Err(param("dimension must be positive"));
    }
    if !(alpha > 0.0) || !(kpp > 0.0) || !(delta > 0.0) || n == 0 {
        return Err(param("need alpha > 0, K'' > 0, Delta > 0 and N >= 1"));
    }
    let d = dim as f64;
    let nf = n as f64;
    let upper = kpp * alpha / delta;
    let g = |x: f64| x.powi(dim as i32 - 1) * h.eval(x);
    let integral = integrate_from_zero(&g, upper);
    let scan = scan_sup(&g, upper);
    let three = 3.0 * delta;
    let t1 = three.powi(dim as i32) * d / alpha.powi(dim as i32) * integral;
    let t2 = 4.0 * d * three.powi(dim as i32 - 1) / (alpha.powi(dim as i32 - 1) * nf.powf(1.0 / d)) * scan.sup;
    let t3 = 2.0 * h.at_zero() / nf;
    let mut report = BoundReport::new(which, t1 + t2 + t3)
        .with("alpha", alpha)
        .with("N", nf)
        .with("Kpp", kpp)
        .with("Delta", delta)
        .with("integral", integral)
        .with("sup", scan.sup)
        .with("term_integral", t1)
        .with("term_sup", t2)
        .with("term_diagonal", t3);
    if !scan.monotone_tail {
        report.warning = Some("x^(d-1) h(x) is not monotone after its maximum on the scan grid".into());
    }
    Ok(report)
}

pub fn bound_mean_reg(
    h: &DecayFunction,
    dim: usize,
    delta: f64,
    alpha: f64,
    n: usize,
    kpp: f64,
) -> Result<BoundReport> {
    regular(BoundKind::MeanRegular, h, dim, delta, alpha, n, kpp)
}

pub fn bound_cov_reg(
    big_h: &DecayFunction,
    dim: usize,
    delta: f64,
    alpha: f64,
    n: usize,
    kpp: f64,
) -> Result<BoundReport> {
    regular(BoundKind::CovRegular, big_h, dim, delta, alpha, n, kpp)
}

/// Monte Carlo estimate of `V(eps) = Vol{(s, r) in R_0^2 : ||s - r|| <= eps}`
/// at every `eps`, from `mc_n` uniform pairs. Returns `(V, SE)` per radius.
pub fn pair_volume<R: Rng + ?Sized>(
    region: Region,
    dim: usize,
    eps: &[f64],
    mc_n: usize,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    if mc_n == 0 {
        return Err(param("need at least one Monte Carlo pair"));
    }
    let spec = DesignFamilySpec::randomized(dim, region, Growth::Bounded { c: 1.0 });
    let a = random_design(&spec, mc_n, rng)?;
    let b = random_design(&spec, mc_n, rng)?;
    let mut dist: Vec<f64> = (0..mc_n)
        .map(|k| {
            a.point(k)
                .iter()
                .zip(b.point(k))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    dist.sort_by(f64::total_cmp);
    let n = mc_n as f64;
    Ok(eps
        .iter()
        .map(|&e| {
            let p = dist.partition_point(|&x| x <= e) as f64 / n;
            (p, (p * (1.0 - p) / n).sqrt())
        })
        .collect())
}

/// Inputs of the random-design bound `V(eps) sup f^2 + h(alpha eps) + h(0) / N`.
#[derive(Debug, Clone, Copy)]
pub struct RandomDesignSetting<'a> {
    pub region: Region,
    pub dim: usize,
    pub density_sup: f64,
    pub alpha: f64,
    pub n: usize,
    pub eps_grid: &'a [f64],
    pub mc_n: usize,
}

fn random<R: Rng + ?Sized>(
    which: BoundKind,
    h: &DecayFunction,
    s: &RandomDesignSetting<'_>,
    rng: &mut R,
) -> Result<BoundReport> {
    if s.eps_grid.is_empty() || s.eps_grid.iter().any(|e| !(*e > 0.0)) {
        return Err(param("eps grid must be nonempty and positive"));
    }
    if s.mc_n < 10_000 {
        return Err(param("need at least 10^4 Monte Carlo pairs"));
    }
    if !(s.alpha > 0.0) || s.n == 0 || !(s.density_sup > 0.0) {
        return Err(param("need alpha > 0, N >= 1 and a positive density bound"));
    }
    let vols = pair_volume(s.region, s.dim, s.eps_grid, s.mc_n, rng)?;
    let h0 = h.at_zero();
    let f2 = s.density_sup * s.density_sup;
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for (e, (v, se)) in s.eps_grid.iter().zip(vols) {
        let value = v * f2 + h.eval(s.alpha * e) + h0 / s.n as f64;
        if best.is_none_or(|b| value < b.0) {
            best = Some((value, *e, v, se));
        }
    }
    let (value, eps, v, se) = best.expect("nonempty grid");
    let mut report = BoundReport::new(which, value)
        .at("eps", eps)
        .with("V", v)
        .with("f_sup", s.density_sup)
        .with("alpha", s.alpha)
        .with("N", s.n as f64);
    report.standard_error = Some(se * f2);
    Ok(report)
}

pub fn bound_mean_rand<R: Rng + ?Sized>(
    h: &DecayFunction,
    setting: &RandomDesignSetting<'_>,
    rng: &mut R,
) -> Result<BoundReport> {
    random(BoundKind::MeanRandom, h, setting, rng)
}

pub fn bound_cov_rand<R: Rng + ?Sized>(
    big_h: &DecayFunction,
    setting: &RandomDesignSetting<'_>,
    rng: &mut R,
) -> Result<BoundReport> {
    random(BoundKind::CovRandom, big_h, setting, rng)
}

/// `2 (H + H_0 I) + 2 C (h + h_0 I)^{delta / (2 + delta)}` at one radius;
/// `delta = inf` gives exponent 1.
pub fn centered_bound_value(h: f64, h0: f64, big_h: f64, big_h0: f64, i: f64, delta: f64, c_delta: f64) -> f64 {
    let exponent = if delta.is_infinite() { 1.0 } else { delta / (2.0 + delta) };
    2.0 * (big_h + big_h0 * i) + 2.0 * c_delta * (h + h0 * i).powf(exponent)
}

/// Centred covariance bound minimized over the radius grid. `c_delta` is the
/// moment constant (`4 B^2` for curves bounded by `B`), supplied by the caller.
pub fn bound_cov_centered(
    h: &DecayFunction,
    big_h: &DecayFunction,
    points: &PointSet,
    rho_grid: &[f64],
    delta: f64,
    c_delta: Option<f64>,
) -> Result<BoundReport> {
    let c = c_delta.ok_or_else(|| param("the moment constant C(delta) must be supplied"))?;
    if !(delta > 0.0) {
        return Err(param("delta must be positive or infinite"));
    }
    if !(c >= 0.0) {
        return Err(param("C(delta) must be nonnegative"));
    }
    if points.is_empty() {
        return Err(param("design is empty"));
    }
    let (h0, big_h0) = (h.at_zero(), big_h.at_zero());
    let (value, rho, i) = minimize_over_radii(points, rho_grid, |r, i| {
        centered_bound_value(h.eval(r), h0, big_h.eval(r), big_h0, i, delta, c)
    })?;
    Ok(BoundReport::new(BoundKind::CovCentered, value)
        .at("rho", rho)
        .with("delta", delta)
        .with("C_delta", c)
        .with("intensity", i))
}

/// `|B_N(m)| E||X||^4 / N^2`; the constant `N_times_bound` is the normalized form.
pub fn bound_example21(points: &PointSet, m: f64, fourth_moment: f64) -> Result<BoundReport> {
    if !(m >= 0.0) || !(fourth_moment >= 0.0) {
        return Err(param("need m >= 0 and a nonnegative fourth moment"));
    }
    if points.is_empty() {
        return Err(param("design is empty"));
    }
    let n = points.len() as f64;
    let count = pair_count_b(points, m) as f64;
    let value = count * fourth_moment / (n * n);
    Ok(BoundReport::new(BoundKind::PairCount, value)
        .at("m", m)
        .with("pairs", count)
        .with("N_times_bound", n * value))
}

/// `b(rho) I_rho(S)^2`.
pub fn lower_bound_inconsistency(b_at_rho: f64, points: &PointSet, rho: f64) -> Result<BoundReport> {
    if !(b_at_rho >= 0.0) || !(rho >= 0.0) {
        return Err(param("need b(rho) >= 0 and rho >= 0"));
    }
    if points.is_empty() {
        return Err(param("design is empty"));
    }
    let i = intensity(points, rho);
    Ok(BoundReport::new(BoundKind::InconsistencyLower, b_at_rho * i * i)
        .at("rho", rho)
        .with("b", b_at_rho)
        .with("intensity", i))
}

/// `E||Xbar_N - mu||^2` for the tent field at `s_k = k alpha / N`:
/// `1/N + (2/N^2) sum_{h=1}^{min(floor(N/alpha), N-1)} (1 - h alpha / N)(N - h)`.
pub fn exact_tent_loss(n: usize, alpha: f64) -> Result<f64> {
    if n == 0 || !(alpha > 0.0) || !alpha.is_finite() {
        return Err(param("need N >= 1 and finite alpha > 0"));
    }
    let nf = n as f64;
    let top = ((nf / alpha).floor() as usize).min(n - 1);
    let sum: f64 = (1..=top)
        .map(|h| (1.0 - h as f64 * alpha / nf).max(0.0) * (nf - h as f64))
        .sum();
    Ok(1.0 / nf + 2.0 / (nf * nf) * sum)
}
