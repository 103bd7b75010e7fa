//! Sampling designs: point sets, the intensity function, the regular-grid and
//! randomized families, and the Type A / B / C taxonomy.
//!
//! The intensity of a point set `S` at radius `rho` is the largest fraction of
//! `S` inside a closed ball of radius `rho` centred at a point of `S`.
//! A family of designs is Type A when that fraction stays bounded away from
//! zero at some fixed radius, Type B when the domain grows but points still
//! accumulate, and Type C when points keep a minimum separation.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Relative slack for "distance <= radius" comparisons, so that lattice
/// points computed in floating point land on the closed side.
const RADIUS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMeta {
    pub alpha: f64,
    pub kind: String,
}

/// Finite set of sampling locations in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    meta: Option<DesignMeta>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Design("dimension must be at least 1".into()));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::Design(format!(
                "{} coordinates do not form a nonempty set of {dim}-dimensional points",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Design("coordinates must be finite".into()));
        }
        Ok(Self {
            dim,
            coords,
            meta: None,
        })
    }

    /// Points on the real line.
    pub fn on_line(xs: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(1, xs.into_iter().collect())
    }

    pub fn with_meta(mut self, meta: DesignMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn meta(&self) -> Option<&DesignMeta> {
        self.meta.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn distance(&self, k: usize, l: usize) -> f64 {
        euclidean(self.point(k), self.point(l))
    }

    /// Distance from point `k` to an arbitrary location.
    pub fn distance_to(&self, k: usize, location: &[f64]) -> f64 {
        euclidean(self.point(k), location)
    }

    /// The points selected by `indices`, in that order.
    pub fn subset(&self, indices: impl IntoIterator<Item = usize>) -> Result<PointSet> {
        let coords = indices
            .into_iter()
            .flat_map(|k| self.point(k).iter().copied())
            .collect();
        PointSet::new(self.dim, coords)
    }

    /// A copy with `location` inserted as the first point.
    pub fn with_leading(&self, location: &[f64]) -> Result<PointSet> {
        if location.len() != self.dim {
            return Err(Error::Design("location dimension mismatch".into()));
        }
        let mut coords = location.to_vec();
        coords.extend_from_slice(&self.coords);
        Ok(PointSet {
            dim: self.dim,
            coords,
            meta: self.meta.clone(),
        })
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        (0..self.len())
            .into_par_iter()
            .map(|k| (k + 1..self.len()).map(|l| self.distance(k, l)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }

    /// Smallest strictly positive pairwise distance, if any.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let m = (0..self.len())
            .into_par_iter()
            .map(|k| {
                (k + 1..self.len())
                    .map(|l| self.distance(k, l))
                    .filter(|&d| d > 0.0)
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min);
        m.is_finite().then_some(m)
    }

    /// CSV with header `x1,...,xd` and one row per point.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((1..=self.dim).map(|i| format!("x{i}")))?;
        for p in self.points() {
            w.write_record(p.iter().map(|v| format_float(*v)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let dim = header.len();
        for (i, name) in header.iter().enumerate() {
            if name.trim() != format!("x{}", i + 1) {
                return Err(Error::Design(format!("unexpected point CSV column {name:?}")));
            }
        }
        let mut coords = Vec::new();
        for record in r.records() {
            let record = record?;
            for field in record.iter() {
                coords.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Design(format!("bad coordinate {field:?}: {e}")))?,
                );
            }
        }
        PointSet::new(dim, coords)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

pub(crate) fn format_float(v: f64) -> String {
    format!("{v:?}")
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn within(d: f64, rho: f64) -> bool {
    d <= rho + RADIUS_SLACK * rho.max(1.0)
}

/// `I_rho(S)`: exact O(N^2) maximum over points of the fraction of points
/// within distance `rho` (the point itself included).
pub fn intensity(set: &PointSet, rho: f64) -> f64 {
    let n = set.len();
    let best = (0..n)
        .into_par_iter()
        .map(|k| (0..n).filter(|&l| within(set.distance(k, l), rho)).count())
        .max()
        .unwrap_or(0);
    best as f64 / n as f64
}

/// Sampled intensity function `rho -> I_rho(S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl IntensityProfile {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rho", "intensity"])?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            w.write_record([format_float(*r), format_float(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Intensity at every radius of an increasing grid, sharing one pass of
/// sorted distances per point.
pub fn intensity_profile(set: &PointSet, radii: &[f64]) -> Result<IntensityProfile> {
    if radii.windows(2).any(|w| w[1] < w[0]) || radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(param("radii must be nonnegative and increasing"));
    }
    let n = set.len();
    let counts = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut d: Vec<f64> = (0..n).map(|l| set.distance(k, l)).collect();
            d.sort_by(f64::total_cmp);
            radii
                .iter()
                .map(|&rho| d.partition_point(|&x| within(x, rho)))
                .collect::<Vec<_>>()
        })
        .reduce(
            || vec![0; radii.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| *x.max(y)).collect(),
        );
    Ok(IntensityProfile {
        radii: radii.to_vec(),
        values: counts.into_iter().map(|c| c as f64 / n as f64).collect(),
    })
}

/// `|B_N(m)|`: ordered pairs `(k, l)` with `||s_k - s_l|| <= m`, diagonal included.
pub fn pair_count_b(set: &PointSet, m: f64) -> u64 {
    let n = set.len();
    (0..n)
        .into_par_iter()
        .map(|k| (0..n).filter(|&l| within(set.distance(k, l), m)).count() as u64)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// `[-1/2, 1/2]^d`.
    Cube,
    /// Centred ball of unit volume.
    Ball,
}

impl Region {
    /// Radius of the unit-volume ball in `d` dimensions.
    pub fn unit_ball_radius(dim: usize) -> f64 {
        let d = dim as f64;
        (gamma_half_int(d / 2.0 + 1.0) / std::f64::consts::PI.powf(d / 2.0)).powf(1.0 / d)
    }

    pub fn diameter(&self, dim: usize) -> f64 {
        match self {
            Region::Cube => (dim as f64).sqrt(),
            Region::Ball => 2.0 * Self::unit_ball_radius(dim),
        }
    }

    pub fn contains(&self, x: &[f64], scale: f64) -> bool {
        let tol = RADIUS_SLACK * scale.max(1.0);
        match self {
            Region::Cube => x.iter().all(|c| c.abs() <= 0.5 * scale + tol),
            Region::Ball => {
                let r = Self::unit_ball_radius(x.len()) * scale;
                x.iter().map(|c| c * c).sum::<f64>().sqrt() <= r + tol
            }
        }
    }

    fn half_extent(&self, dim: usize) -> f64 {
        match self {
            Region::Cube => 0.5,
            Region::Ball => Self::unit_ball_radius(dim),
        }
    }
}

/// Gamma at a positive integer or half-integer.
fn gamma_half_int(z: f64) -> f64 {
    let (mut g, mut x) = if (z.fract() - 0.5).abs() < 1e-12 {
        (std::f64::consts::PI.sqrt(), 0.5)
    } else {
        (1.0, 1.0)
    };
    while x + 0.5 < z {
        g *= x;
        x += 1.0;
    }
    g
}

/// Growth of the scaling `alpha_N` of the sampling region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "growth", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Growth {
    /// `alpha_N = c`.
    Bounded { c: f64 },
    /// `alpha_N = N^beta`.
    Power { beta: f64 },
    /// `alpha_N = N^beta ln N`.
    PowerLog { beta: f64 },
}

impl Growth {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Growth::Bounded { c } if !(c > 0.0 && c.is_finite()) => {
                Err(Error::Design(format!("bounded scaling must be positive, got {c}")))
            }
            Growth::Power { beta } | Growth::PowerLog { beta } if !(beta >= 0.0 && beta.is_finite()) => {
                Err(Error::Design(format!("growth exponent must be >= 0, got {beta}")))
            }
            _ => Ok(()),
        }
    }

    pub fn alpha(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            Growth::Bounded { c } => c,
            Growth::Power { beta } => nf.powf(beta),
            Growth::PowerLog { beta } => nf.powf(beta) * nf.ln(),
        }
    }
}

/// Piecewise-constant density on `[-1/2, 1/2]^d`, `bins` cells per axis,
/// cell weights in row-major order (first axis slowest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "density", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Density {
    Uniform,
    Grid { bins: usize, weights: Vec<f64> },
}

impl Default for Density {
    fn default() -> Self {
        Density::Uniform
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DesignKind {
    /// Lattice with per-axis increments `delta` (all 1 when omitted).
    RegularGrid {
        #[serde(default)]
        increments: Option<Vec<f64>>,
    },
    Randomized {
        #[serde(default)]
        density: Density,
    },
}

/// Parametric design family `N -> S_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFamilySpec {
    pub design: DesignKind,
    pub region: Region,
    pub dim: usize,
    pub alpha: Growth,
}

impl DesignFamilySpec {
    pub fn regular(dim: usize, region: Region, alpha: Growth) -> Self {
        Self {
            design: DesignKind::RegularGrid { increments: None },
            region,
            dim,
            alpha,
        }
    }

    pub fn randomized(dim: usize, region: Region, alpha: Growth) -> Self {
        Self {
            design: DesignKind::Randomized {
                density: Density::Uniform,
            },
            region,
            dim,
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Design("dimension must be at least 1".into()));
        }
        self.alpha.validate()?;
        match &self.design {
            DesignKind::RegularGrid { increments: Some(inc) } => {
                if inc.len() != self.dim || inc.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                    return Err(Error::Design(format!("need {} positive increments", self.dim)));
                }
                Ok(())
            }
            DesignKind::RegularGrid { increments: None } => Ok(()),
            DesignKind::Randomized { density } => validate_density(density, self.dim, self.region),
        }
    }

    pub fn increments(&self) -> Vec<f64> {
        match &self.design {
            DesignKind::RegularGrid { increments: Some(inc) } => inc.clone(),
            _ => vec![1.0; self.dim],
        }
    }

    /// Geometric-mean increment `Delta`, so that `Delta^d = prod delta_i`.
    pub fn delta(&self) -> f64 {
        let inc = self.increments();
        inc.iter().product::<f64>().powf(1.0 / self.dim as f64)
    }

    pub fn is_regular(&self) -> bool {
        matches!(self.design, DesignKind::RegularGrid { .. })
    }

    /// Supremum of the sampling density on the unit region.
    pub fn density_sup(&self) -> f64 {
        match &self.design {
            DesignKind::Randomized {
                density: Density::Grid { weights, .. },
            } => {
                let total: f64 = weights.iter().sum();
                weights.iter().fold(0.0f64, |m, w| m.max(*w)) * weights.len() as f64 / total
            }
            _ => 1.0,
        }
    }
}

fn validate_density(density: &Density, dim: usize, region: Region) -> Result<()> {
    match density {
        Density::Uniform => Ok(()),
        Density::Grid { bins, weights } => {
            if region != Region::Cube {
                return Err(Error::Density("grid densities are defined on the cube only".into()));
            }
            let cells = bins.checked_pow(dim as u32).unwrap_or(usize::MAX);
            if *bins == 0 || weights.len() != cells {
                return Err(Error::Density(format!(
                    "expected {cells} cell weights for {bins} bins in {dim} dimensions, got {}",
                    weights.len()
                )));
            }
            if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::Density("negative or non-finite cell mass".into()));
            }
            if weights.iter().any(|w| *w == 0.0) {
                return Err(Error::Density("density must be bounded away from zero on the region".into()));
            }
            Ok(())
        }
    }
}

/// Lattice `Z(eta_N delta) cap alpha_N R_0`, centred at the origin, with
/// `eta_N = alpha_N / (Delta N^{1/d})`.
pub fn grid_design(spec: &DesignFamilySpec, n: usize) -> Result<PointSet> {
    spec.validate()?;
    if !spec.is_regular() {
        return Err(Error::Design("grid_design needs a regular-grid family".into()));
    }
    if n == 0 {
        return Err(Error::Design("target size must be positive".into()));
    }
    let d = spec.dim;
    let alpha = spec.alpha.alpha(n);
    let eta = alpha / (spec.delta() * (n as f64).powf(1.0 / d as f64));
    let steps: Vec<f64> = spec.increments().iter().map(|delta| eta * delta).collect();
    let half = spec.region.half_extent(d) * alpha;
    let bounds: Vec<i64> = steps
        .iter()
        .map(|s| (half / s + RADIUS_SLACK).floor() as i64)
        .collect();
    let expected: f64 = bounds.iter().map(|b| (2 * b + 1) as f64).product();
    if expected > 5e7 {
        return Err(Error::Design(format!("lattice bounding box too large ({expected:.0} nodes)")));
    }

    let mut coords = Vec::new();
    let mut index: Vec<i64> = bounds.iter().map(|b| -b).collect();
    let mut point = vec![0.0; d];
    'outer: loop {
        for i in 0..d {
            point[i] = index[i] as f64 * steps[i];
        }
        if spec.region.contains(&point, alpha) {
            coords.extend_from_slice(&point);
        }
        for i in (0..d).rev() {
            if index[i] < bounds[i] {
                index[i] += 1;
                continue 'outer;
            }
            index[i] = -bounds[i];
        }
        break;
    }
    if coords.is_empty() {
        return Err(Error::Design(format!("no lattice points for N = {n}")));
    }
    Ok(PointSet::new(d, coords)?.with_meta(DesignMeta {
        alpha,
        kind: "regular-grid".into(),
    }))
}

/// `N` iid draws from the family's density on `R_0`, scaled by `alpha_N`.
pub fn random_design<R: Rng + ?Sized>(spec: &DesignFamilySpec, n: usize, rng: &mut R) -> Result<PointSet> {
    spec.validate()?;
    let density = match &spec.design {
        DesignKind::Randomized { density } => density,
        _ => return Err(Error::Design("random_design needs a randomized family".into())),
    };
    if n == 0 {
        return Err(Error::Design("sample size must be positive".into()));
    }
    let d = spec.dim;
    let alpha = spec.alpha.alpha(n);
    let mut coords = Vec::with_capacity(n * d);
    let mut p = vec![0.0; d];
    match density {
        Density::Uniform => {
            let half = spec.region.half_extent(d);
            for _ in 0..n {
                loop {
                    for c in p.iter_mut() {
                        *c = rng.random_range(-half..half);
                    }
                    if spec.region.contains(&p, 1.0) {
                        break;
                    }
                }
                coords.extend(p.iter().map(|c| c * alpha));
            }
        }
        Density::Grid { bins, weights } => {
            let total: f64 = weights.iter().sum();
            let cdf: Vec<f64> = weights
                .iter()
                .scan(0.0, |acc, w| {
                    *acc += w / total;
                    Some(*acc)
                })
                .collect();
            let width = 1.0 / *bins as f64;
            for _ in 0..n {
                let u: f64 = rng.random();
                let mut cell = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
                for i in (0..d).rev() {
                    let b = cell % bins;
                    cell /= bins;
                    p[i] = -0.5 + (b as f64 + rng.random::<f64>()) * width;
                }
                coords.extend(p.iter().map(|c| c * alpha));
            }
        }
    }
    Ok(PointSet::new(d, coords)?.with_meta(DesignMeta {
        alpha,
        kind: "randomized".into(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingType {
    A,
    B,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub sampling_type: SamplingType,
    /// Set when the answer is not backed by an equivalence (randomized
    /// designs growing at least as fast as `N^{1/d}`).
    pub heuristic: bool,
}

/// Analytic Type A/B/C classification of a parametric family from its growth:
/// bounded scaling gives A, `alpha_N -> inf` with `alpha_N = o(N^{1/d})` gives
/// B, and `alpha_N >> N^{1/d}` gives C.
pub fn classify_family(spec: &DesignFamilySpec) -> Result<Classification> {
    spec.validate()?;
    let critical = 1.0 / spec.dim as f64;
    let at_least_critical = |beta: f64| beta >= critical - 1e-12;
    let sampling_type = match spec.alpha {
        Growth::Bounded { .. } => SamplingType::A,
        Growth::Power { beta } if beta == 0.0 => SamplingType::A,
        Growth::Power { beta } | Growth::PowerLog { beta } => {
            if at_least_critical(beta) {
                SamplingType::C
            } else {
                SamplingType::B
            }
        }
    };
    let heuristic = !spec.is_regular() && sampling_type == SamplingType::C;
    Ok(Classification {
        sampling_type,
        heuristic,
    })
}

/// `s_k = k alpha / N`, `k = 1..=N`, on the line.
pub fn scaled_line(n: usize, alpha: f64) -> Result<PointSet> {
    if n == 0 || !(alpha > 0.0) {
        return Err(Error::Design("need N >= 1 and alpha > 0".into()));
    }
    Ok(PointSet::on_line((1..=n).map(|k| k as f64 * alpha / n as f64))?.with_meta(DesignMeta {
        alpha,
        kind: "scaled-line".into(),
    }))
}

/// `s_n = 1 / n`, `n = 1..=N`, on the line: points accumulating at the origin.
pub fn origin_cluster(n: usize) -> Result<PointSet> {
    PointSet::on_line((1..=n).map(|k| 1.0 / k as f64))
}

/// Two interleaved sequences on the line, `s_{2k} = 1/k` and `s_{2k+1} = k`
/// for `k = 1..=N`: half the points pile up in `[0, 1]`, the rest spread out.
pub fn two_scale_line(n: usize) -> Result<PointSet> {
    PointSet::on_line((1..=n).flat_map(|k| [1.0 / k as f64, k as f64]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_intensity(xs: &[f64], rho: f64) -> f64 {
        let mut best = 0;
        for a in xs {
            best = best.max(xs.iter().filter(|b| (a - *b).abs() <= rho).count());
        }
        best as f64 / xs.len() as f64
    }

    #[test]
    fn intensity_examples() {
        let xs: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let s = PointSet::on_line(xs.clone()).unwrap();
        assert_eq!(intensity(&s, 1.0), brute_intensity(&xs, 1.0));
        assert_eq!(intensity(&s, 1.0), 0.3);
        assert_eq!(intensity(&s, 0.0), 0.1);

        let two = two_scale_line(500).unwrap();
        let i1 = intensity(&two, 1.0);
        assert!((0.45..=0.55).contains(&i1), "{i1}");
    }

    #[test]
    fn profile_matches_pointwise() {
        let s = two_scale_line(40).unwrap();
        let radii = [0.0, 0.1, 0.5, 1.0, 3.0, 100.0];
        let prof = intensity_profile(&s, &radii).unwrap();
        for (r, v) in radii.iter().zip(&prof.values) {
            assert_eq!(*v, intensity(&s, *r));
        }
        assert!(prof.values.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*prof.values.last().unwrap(), 1.0);
        assert!(intensity_profile(&s, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn pair_count_examples() {
        let s = PointSet::on_line((0..10).map(|k| k as f64)).unwrap();
        assert_eq!(pair_count_b(&s, 0.0), 10);
        assert_eq!(pair_count_b(&s, 1.0), 28);
        assert_eq!(pair_count_b(&s, s.diameter()), 100);
        let m = 3.0;
        let big = PointSet::on_line((0..1000).map(|k| k as f64)).unwrap();
        let ratio = pair_count_b(&big, m) as f64 / 1000.0;
        assert!((ratio - (2.0 * m + 1.0)).abs() < 0.02 * (2.0 * m + 1.0));
    }

    #[test]
    fn grid_line_spacing() {
        let spec = DesignFamilySpec::regular(1, Region::Cube, Growth::Power { beta: 1.0 });
        let s = grid_design(&spec, 200).unwrap();
        assert_eq!(s.len(), 201);
        assert!((s.min_positive_distance().unwrap() - 1.0).abs() < 1e-12);
        assert!((s.diameter() - 200.0).abs() < 1e-9);
    }

    #[test]
    fn grid_square_count() {
        let spec = DesignFamilySpec::regular(2, Region::Cube, Growth::Bounded { c: 20.0 });
        let s = grid_design(&spec, 400).unwrap();
        let ratio = s.len() as f64 / 400.0;
        assert!((0.8..=1.25).contains(&ratio), "{ratio}");

        for region in [Region::Cube, Region::Ball] {
            for d in 1..=3 {
                let spec = DesignFamilySpec::regular(d, region, Growth::Power { beta: 0.5 / d as f64 });
                for n in [100, 1000, 5000] {
                    let count = grid_design(&spec, n).unwrap().len();
                    if region == Region::Cube && d == 3 && n == 1000 {
                        // closed cube with N^{1/d} even keeps both faces: 11^3 nodes
                        assert_eq!(count, 1331);
                        continue;
                    }
                    let r = count as f64 / n as f64;
                    assert!((0.8..=1.25).contains(&r), "{region:?} d={d} n={n}: {r}");
                }
            }
        }
    }

    #[test]
    fn bounded_grid_keeps_intensity() {
        let spec = DesignFamilySpec::regular(1, Region::Cube, Growth::Bounded { c: 1.0 });
        for n in [100, 1000, 4000] {
            let s = grid_design(&spec, n).unwrap();
            assert!(intensity(&s, 0.1) > 0.15);
        }
    }

    #[test]
    fn unit_ball_volume() {
        assert!((Region::unit_ball_radius(1) - 0.5).abs() < 1e-15);
        let r2 = Region::unit_ball_radius(2);
        assert!((std::f64::consts::PI * r2 * r2 - 1.0).abs() < 1e-12);
        let r3 = Region::unit_ball_radius(3);
        assert!((4.0 / 3.0 * std::f64::consts::PI * r3.powi(3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_design_properties() {
        let spec = DesignFamilySpec::randomized(1, Region::Cube, Growth::Bounded { c: 1.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_design(&spec, 10_000, &mut rng).unwrap();
        let mean = s.points().map(|p| p[0]).sum::<f64>() / 1e4;
        assert!(mean.abs() < 3.0 / (12.0f64 * 1e4).sqrt());

        let again = random_design(&spec, 10_000, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(s, again);

        let spread = DesignFamilySpec::randomized(1, Region::Cube, Growth::Power { beta: 1.0 });
        let s = random_design(&spread, 1000, &mut rng).unwrap();
        assert!(intensity(&s, 1.0) < 0.02);

        let ball = DesignFamilySpec::randomized(2, Region::Ball, Growth::Bounded { c: 3.0 });
        let s = random_design(&ball, 500, &mut rng).unwrap();
        assert!(s.points().all(|p| Region::Ball.contains(p, 3.0)));
    }

    #[test]
    fn grid_density() {
        let mut spec = DesignFamilySpec::randomized(2, Region::Cube, Growth::Bounded { c: 1.0 });
        spec.design = DesignKind::Randomized {
            density: Density::Grid {
                bins: 2,
                weights: vec![1.0, 1.0, 1.0, 5.0],
            },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_design(&spec, 8000, &mut rng).unwrap();
        let upper_right = s.points().filter(|p| p[0] > 0.0 && p[1] > 0.0).count() as f64 / 8000.0;
        assert!((upper_right - 5.0 / 8.0).abs() < 0.03);
        assert!((spec.density_sup() - 2.5).abs() < 1e-12);

        for bad in [vec![1.0, -1.0, 1.0, 1.0], vec![1.0, 0.0, 1.0, 1.0], vec![1.0; 3]] {
            spec.design = DesignKind::Randomized {
                density: Density::Grid { bins: 2, weights: bad },
            };
            assert!(matches!(random_design(&spec, 10, &mut rng), Err(Error::Density(_))));
        }
    }

    #[test]
    fn classification() {
        let reg = |d, g| classify_family(&DesignFamilySpec::regular(d, Region::Cube, g)).unwrap();
        assert_eq!(reg(1, Growth::Bounded { c: 2.0 }).sampling_type, SamplingType::A);
        assert_eq!(reg(2, Growth::Power { beta: 0.25 }).sampling_type, SamplingType::B);
        assert_eq!(reg(1, Growth::Power { beta: 1.0 }).sampling_type, SamplingType::C);
        assert_eq!(reg(2, Growth::PowerLog { beta: 0.0 }).sampling_type, SamplingType::B);
        assert_eq!(reg(2, Growth::PowerLog { beta: 0.5 }).sampling_type, SamplingType::C);
        let rand_c = classify_family(&DesignFamilySpec::randomized(1, Region::Cube, Growth::Power { beta: 1.0 })).unwrap();
        assert_eq!(rand_c.sampling_type, SamplingType::C);
        assert!(rand_c.heuristic);
        assert!(classify_family(&DesignFamilySpec::regular(1, Region::Cube, Growth::Power { beta: -1.0 })).is_err());
        assert!(classify_family(&DesignFamilySpec::regular(1, Region::Cube, Growth::Bounded { c: 0.0 })).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let s = PointSet::new(2, vec![0.0, 1.5, -2.25, 1e-3]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("x1,x2\n"));
        assert_eq!(PointSet::read_csv(buf.as_slice()).unwrap(), s);
        assert!(PointSet::read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
