//! Realizations of functional random fields.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::designs::{format_float, PointSet};
use crate::error::{param, Error, Result};
use crate::funcspace::{make_fourier_basis, BasisSystem, Curve, TimeGrid};
use crate::linalg::cholesky_with_jitter;
use crate::operators::{rank_one, KernelOperator};
use crate::rng::StreamSeeder;
use crate::spatcov::CovFamily;

/// One score field `xi_j` attached to basis element `e_j` (1-based index).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreComponent {
    pub index: usize,
    pub family: CovFamily,
}

/// `X(s) = mu + sum_j xi_j(s) e_j` with mutually independent, stationary,
/// mean-zero Gaussian score fields, `E[xi_j(s1) xi_j(s2)] = phi_j(||s1 - s2||)`.
#[derive(Debug, Clone)]
pub struct FieldModel {
    basis: BasisSystem,
    mean: Curve,
    scores: Vec<ScoreComponent>,
}

impl FieldModel {
    pub fn new(basis: BasisSystem, mean: Curve, scores: Vec<ScoreComponent>) -> Result<Self> {
        basis.grid().check_same(&mean.grid())?;
        let mut seen = vec![false; basis.order() + 1];
        for s in &scores {
            if s.index == 0 || s.index > basis.order() {
                return Err(param(format!("score index {} outside 1..={}", s.index, basis.order())));
            }
            if std::mem::replace(&mut seen[s.index], true) {
                return Err(param(format!("duplicate score index {}", s.index)));
            }
            s.family.validate()?;
        }
        Ok(Self { basis, mean, scores })
    }

    /// Zero-mean model on the trigonometric basis.
    pub fn centered(order: usize, grid_size: usize, scores: Vec<ScoreComponent>) -> Result<Self> {
        let basis = make_fourier_basis(order, grid_size)?;
        let mean = Curve::zeros(basis.grid());
        Self::new(basis, mean, scores)
    }

    /// `X(s; t) = zeta_1(s) e_1(t) + sqrt(lambda) zeta_2(s) e_2(t)` with
    /// `E[zeta_j(s) zeta_j(s + h)] = exp(-h^2)`.
    pub fn two_component(lambda: f64, grid_size: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(param(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        let sq = |variance| CovFamily::SquaredExponential { variance, scale: 1.0 };
        Self::centered(
            2,
            grid_size,
            vec![
                ScoreComponent {
                    index: 1,
                    family: sq(1.0),
                },
                ScoreComponent {
                    index: 2,
                    family: sq(lambda),
                },
            ],
        )
    }

    pub fn grid(&self) -> TimeGrid {
        self.basis.grid()
    }

    pub fn basis(&self) -> &BasisSystem {
        &self.basis
    }

    pub fn mean(&self) -> &Curve {
        &self.mean
    }

    pub fn scores(&self) -> &[ScoreComponent] {
        &self.scores
    }

    pub fn families(&self) -> Vec<CovFamily> {
        self.scores.iter().map(|s| s.family).collect()
    }

    /// `K(s, s') = E<X(s) - mu, X(s') - mu> = sum_j phi_j(||s - s'||)`.
    pub fn curve_covariance(&self, distance: f64) -> f64 {
        self.scores.iter().map(|s| s.family.eval(distance)).sum()
    }

    /// Population covariance operator `sum_j sigma_j^2 e_j (x) e_j`.
    pub fn population_operator(&self) -> KernelOperator {
        let mut op = KernelOperator::zeros(self.grid());
        for s in &self.scores {
            let e = self.basis.element(s.index).expect("validated index");
            op = op
                .add(&rank_one(e, e).expect("same grid").scaled(s.family.variance()))
                .expect("same grid");
        }
        op
    }

    /// `E||X(s) - mu||^4` for Gaussian scores: `2 sum sigma_j^4 + (sum sigma_j^2)^2`.
    pub fn fourth_moment(&self) -> f64 {
        let (s, q) = self.scores.iter().fold((0.0, 0.0), |(s, q), c| {
            let v = c.family.variance();
            (s + v, q + v * v)
        });
        2.0 * q + s * s
    }
}

/// Lower Cholesky factor of `Sigma_kl = phi(||s_k - s_l||)` for repeated draws.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    lower: Option<DMatrix<f64>>,
    size: usize,
    jitter: f64,
}

impl CovarianceFactor {
    pub fn new(family: &CovFamily, points: &PointSet) -> Result<Self> {
        family.validate()?;
        let n = points.len();
        if family.variance() == 0.0 {
            return Ok(Self {
                lower: None,
                size: n,
                jitter: 0.0,
            });
        }
        let sigma = DMatrix::from_fn(n, n, |k, l| family.eval(points.distance(k, l)));
        match cholesky_with_jitter(&sigma) {
            Some(c) => Ok(Self {
                lower: Some(c.factor.unpack()),
                size: n,
                jitter: c.jitter,
            }),
            None => {
                let (first, second) = most_correlated_pair(&sigma);
                Err(Error::NotPositiveDefinite {
                    family: family.to_string(),
                    first,
                    second,
                })
            }
        }
    }

    /// Relative diagonal jitter that was needed, 0 if none.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let Some(lower) = &self.lower else {
            return vec![0.0; self.size];
        };
        let z = DVector::from_iterator(self.size, (0..self.size).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let mut out = vec![0.0; self.size];
        for (k, o) in out.iter_mut().enumerate() {
            let row = lower.row(k);
            *o = (0..=k).map(|l| row[l] * z[l]).sum();
        }
        out
    }
}

fn most_correlated_pair(sigma: &DMatrix<f64>) -> (usize, usize) {
    let n = sigma.nrows();
    let mut best = (0, 0, f64::NEG_INFINITY);
    for k in 0..n {
        for l in 0..k {
            let denom = (sigma[(k, k)] * sigma[(l, l)]).sqrt();
            let c = if denom > 0.0 { sigma[(k, l)] / denom } else { 0.0 };
            if c > best.2 {
                best = (l, k, c);
            }
        }
    }
    (best.0, best.1)
}

/// One draw of `(xi(s_1), ..., xi(s_N))`.
pub fn gaussian_field_draw<R: Rng + ?Sized>(family: &CovFamily, points: &PointSet, rng: &mut R) -> Result<Vec<f64>> {
    Ok(CovarianceFactor::new(family, points)?.draw(rng))
}

/// Curves observed at the points of a design: row `k` is `X(s_k; .)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSample {
    grid: TimeGrid,
    points: PointSet,
    values: DMatrix<f64>,
    origin: Option<usize>,
}

impl FunctionSample {
    pub fn new(grid: TimeGrid, points: PointSet, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != points.len() || values.ncols() != grid.size() {
            return Err(param(format!(
                "sample matrix is {}x{}, expected {}x{}",
                values.nrows(),
                values.ncols(),
                points.len(),
                grid.size()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(param("sample values must be finite"));
        }
        Ok(Self {
            grid,
            points,
            values,
            origin: None,
        })
    }

    /// Marks row `row` as the distinguished reference location, excluded from
    /// estimators that take it as a separate argument.
    pub fn with_origin(mut self, row: usize) -> Result<Self> {
        if row >= self.values.nrows() {
            return Err(param("origin row out of range"));
        }
        self.origin = Some(row);
        Ok(self)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn origin(&self) -> Option<usize> {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn row(&self, k: usize) -> Curve {
        Curve::from_values_unchecked(self.grid, self.values.row(k).iter().copied().collect())
    }

    /// CSV with `N` rows and `T` columns, header `t1,...,tT`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((1..=self.grid.size()).map(|i| format!("t{i}")))?;
        for k in 0..self.len() {
            w.write_record(self.values.row(k).iter().map(|v| format_float(*v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A field model prepared for a fixed design: the covariance factors are
/// computed once and reused by every replicate.
#[derive(Debug, Clone)]
pub struct FieldSimulator {
    model: FieldModel,
    points: PointSet,
    factors: Vec<CovarianceFactor>,
}

impl FieldSimulator {
    pub fn new(model: FieldModel, points: PointSet) -> Result<Self> {
        let factors = model
            .scores
            .iter()
            .map(|s| CovarianceFactor::new(&s.family, &points))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { model, points, factors })
    }

    pub fn model(&self) -> &FieldModel {
        &self.model
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    /// Largest jitter used by any score factor.
    pub fn jitter(&self) -> f64 {
        self.factors.iter().map(|f| f.jitter()).fold(0.0, f64::max)
    }

    /// Replicate `replicate` with score `j` drawn from stream `(replicate, j)`.
    pub fn draw_replicate(&self, seeder: &StreamSeeder, replicate: u64) -> FunctionSample {
        let scores = self
            .factors
            .iter()
            .zip(&self.model.scores)
            .map(|(f, s)| f.draw(&mut seeder.stream(replicate, s.index as u64)))
            .collect::<Vec<_>>();
        self.assemble(&scores)
    }

    /// Scores drawn sequentially from a single generator.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> FunctionSample {
        let scores = self.factors.iter().map(|f| f.draw(rng)).collect::<Vec<_>>();
        self.assemble(&scores)
    }

    fn assemble(&self, scores: &[Vec<f64>]) -> FunctionSample {
        let grid = self.model.grid();
        let n = self.points.len();
        let mut values = DMatrix::from_fn(n, grid.size(), |_, i| self.model.mean.values()[i]);
        for (xi, s) in scores.iter().zip(&self.model.scores) {
            let e = self.model.basis.element(s.index).expect("validated index").values();
            for (k, x) in xi.iter().enumerate() {
                if *x == 0.0 {
                    continue;
                }
                for (i, ev) in e.iter().enumerate() {
                    values[(k, i)] += x * ev;
                }
            }
        }
        FunctionSample {
            grid,
            points: self.points.clone(),
            values,
            origin: None,
        }
    }
}

/// `values(k, i) = mu(t_i) + sum_j xi_j(s_k) e_j(t_i)`.
pub fn field_sample<R: Rng + ?Sized>(model: &FieldModel, points: &PointSet, rng: &mut R) -> Result<FunctionSample> {
    Ok(FieldSimulator::new(model.clone(), points.clone())?.draw(rng))
}

/// `X(s; t) = psi(s) e(t)` with `psi(s) = delta_k` on `(U + k, U + k + 1]`,
/// `U ~ Uniform[0, 1]` and iid Rademacher signs `delta_k`. The spatial
/// covariance is the tent `(1 - |u - v|)_+`.
pub fn tent_field_sample<R: Rng + ?Sized>(points: &PointSet, e: &Curve, rng: &mut R) -> Result<FunctionSample> {
    if points.dim() != 1 {
        return Err(param(format!("tent field lives on the line, got dimension {}", points.dim())));
    }
    let n = points.len();
    let (lo, hi) = points
        .points()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[0]), h.max(p[0])));
    let first = lo.floor() as i64 - 1;
    let last = hi.ceil() as i64 + 1;
    let u: f64 = rng.random();
    let signs: Vec<f64> = (first..=last)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let grid = e.grid();
    let ev = e.values();
    let mut values = DMatrix::zeros(n, grid.size());
    for (k, p) in points.points().enumerate() {
        // s in (U + j, U + j + 1]  <=>  j = ceil(s - U) - 1
        let j = (p[0] - u).ceil() as i64 - 1;
        let psi = signs[(j - first) as usize];
        for (i, v) in ev.iter().enumerate() {
            values[(k, i)] = psi * v;
        }
    }
    FunctionSample::new(grid, points.clone(), values)
}

/// Draw of the two-component squared-exponential field.
pub fn two_component_field<R: Rng + ?Sized>(
    lambda: f64,
    grid_size: usize,
    points: &PointSet,
    rng: &mut R,
) -> Result<FunctionSample> {
    field_sample(&FieldModel::two_component(lambda, grid_size)?, points, rng)
}
