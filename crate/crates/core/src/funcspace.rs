//! Discretized function space on `[0, 1]`.
//!
//! Curves are sampled at the `T` midpoints `t_i = (i + 1/2) / T` and integrated
//! with the uniform midpoint rule (weight `1/T`). On this grid the
//! trigonometric system is orthonormal to machine precision as long as the
//! highest frequency stays below the Nyquist limit.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{param, Error, Result};

pub const DEFAULT_GRID_SIZE: usize = 256;
pub const DEFAULT_BASIS_ORDER: usize = 20;

/// Uniform midpoint grid on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeGrid {
    size: usize,
}

impl TimeGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(param(format!("time grid needs at least 2 nodes, got {size}")));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Quadrature weight shared by every node.
    pub fn weight(&self) -> f64 {
        1.0 / self.size as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.size as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.size).map(|i| self.node(i)).collect()
    }

    pub(crate) fn check_same(&self, other: &TimeGrid) -> Result<()> {
        if self.size != other.size {
            return Err(Error::GridMismatch {
                left: self.size,
                right: other.size,
            });
        }
        Ok(())
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            size: DEFAULT_GRID_SIZE,
        }
    }
}

/// A function on `[0, 1]` represented by its values at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::GridMismatch {
                left: grid.size(),
                right: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(param("curve values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.size()],
        }
    }

    pub fn constant(grid: TimeGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.size()],
        }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.nodes().into_iter().map(f).collect(),
        }
    }

    pub(crate) fn from_values_unchecked(grid: TimeGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.size());
        Self { grid, values }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Curve {
        Curve::from_values_unchecked(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    pub fn add(&self, other: &Curve) -> Result<Curve> {
        self.grid.check_same(&other.grid)?;
        Ok(Curve::from_values_unchecked(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Curve) -> Result<Curve> {
        self.add(&other.scaled(-1.0))
    }
}

/// L2 inner product under the midpoint rule.
pub fn inner(x: &Curve, y: &Curve) -> Result<f64> {
    x.grid.check_same(&y.grid)?;
    Ok(x.grid.weight() * x.values.iter().zip(&y.values).map(|(a, b)| a * b).sum::<f64>())
}

pub fn norm(x: &Curve) -> f64 {
    (x.grid.weight() * x.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// A truncated orthonormal system `e_1, ..., e_J` on a fixed grid.
#[derive(Debug, Clone)]
pub struct BasisSystem {
    grid: TimeGrid,
    elements: Vec<Curve>,
}

impl BasisSystem {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Basis element `e_j`, 1-based.
    pub fn element(&self, j: usize) -> Option<&Curve> {
        j.checked_sub(1).and_then(|i| self.elements.get(i))
    }

    pub fn elements(&self) -> &[Curve] {
        &self.elements
    }

    /// Coefficients `<x, e_j>` for `j = 1..=J`.
    pub fn coefficients(&self, x: &Curve) -> Result<Vec<f64>> {
        self.elements.iter().map(|e| inner(x, e)).collect()
    }
}

/// Trigonometric basis ordered `sqrt2 sin(2 pi t), sqrt2 cos(2 pi t),
/// sqrt2 sin(4 pi t), sqrt2 cos(4 pi t), ...`.
pub fn make_fourier_basis(order: usize, grid_size: usize) -> Result<BasisSystem> {
    if order == 0 {
        return Err(param("basis order must be at least 1"));
    }
    if grid_size < 4 * order {
        return Err(Error::Resolution {
            size: grid_size,
            order,
        });
    }
    let grid = TimeGrid::new(grid_size)?;
    let elements = (1..=order)
        .map(|j| {
            let freq = 2.0 * PI * ((j + 1) / 2) as f64;
            if j % 2 == 1 {
                Curve::from_fn(grid, |t| SQRT_2 * (freq * t).sin())
            } else {
                Curve::from_fn(grid, |t| SQRT_2 * (freq * t).cos())
            }
        })
        .collect();
    Ok(BasisSystem { grid, elements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_weights_sum_to_one() {
        let g = TimeGrid::new(7).unwrap();
        let total: f64 = (0..7).map(|_| g.weight()).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(TimeGrid::new(1).is_err());
    }

    #[test]
    fn fourier_basis_orthonormal() {
        let b = make_fourier_basis(2, 512).unwrap();
        let e1 = b.element(1).unwrap();
        let e2 = b.element(2).unwrap();
        assert!((inner(e1, e1).unwrap() - 1.0).abs() < 1e-8);
        assert!(inner(e1, e2).unwrap().abs() < 1e-8);
        assert!((norm(e1) - 1.0).abs() < 1e-8);

        let b = make_fourier_basis(20, 80).unwrap();
        for (j, ej) in b.elements().iter().enumerate() {
            for (k, ek) in b.elements().iter().enumerate() {
                let delta = if j == k { 1.0 } else { 0.0 };
                assert!((inner(ej, ek).unwrap() - delta).abs() < 1e-8, "({j},{k})");
            }
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(
            make_fourier_basis(1, 3),
            Err(Error::Resolution { size: 3, order: 1 })
        ));
    }

    #[test]
    fn inner_and_norm_examples() {
        let g = TimeGrid::new(512).unwrap();
        let one = Curve::constant(g, 1.0);
        assert!((inner(&one, &one).unwrap() - 1.0).abs() < 1e-14);
        let s = Curve::from_fn(g, |t| SQRT_2 * (2.0 * PI * t).sin());
        let c = Curve::from_fn(g, |t| SQRT_2 * (2.0 * PI * t).cos());
        assert!((inner(&s, &s).unwrap() - 1.0).abs() < 1e-8);
        assert!(inner(&s, &c).unwrap().abs() < 1e-8);
        assert_eq!(norm(&Curve::zeros(g)), 0.0);
        assert!((norm(&Curve::constant(g, -3.5)) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids() {
        let a = Curve::zeros(TimeGrid::new(4).unwrap());
        let b = Curve::zeros(TimeGrid::new(5).unwrap());
        assert!(matches!(inner(&a, &b), Err(Error::GridMismatch { .. })));
        assert!(Curve::new(TimeGrid::new(4).unwrap(), vec![0.0; 3]).is_err());
        assert!(Curve::new(TimeGrid::new(2).unwrap(), vec![0.0, f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn cauchy_schwarz(xs in prop::collection::vec(-10.0..10.0f64, 16),
                          ys in prop::collection::vec(-10.0..10.0f64, 16)) {
            let g = TimeGrid::new(16).unwrap();
            let x = Curve::new(g, xs).unwrap();
            let y = Curve::new(g, ys).unwrap();
            prop_assert!(inner(&x, &y).unwrap().abs() <= norm(&x) * norm(&y) * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn parseval_in_span(coefs in prop::collection::vec(-5.0..5.0f64, 6)) {
            let b = make_fourier_basis(6, 64).unwrap();
            let mut x = Curve::zeros(b.grid());
            for (c, e) in coefs.iter().zip(b.elements()) {
                x = x.add(&e.scaled(*c)).unwrap();
            }
            let energy: f64 = b.coefficients(&x).unwrap().iter().map(|c| c * c).sum();
            prop_assert!((norm(&x).powi(2) - energy).abs() <= 1e-6);
        }
    }
}
