//! Discretized Hilbert-Schmidt integral operators on `L2[0, 1]`.
//!
//! An operator is stored as its kernel `c(t_i, t_j)` on the time grid and acts
//! by `(A x)(t_i) = sum_j w_j c(t_i, t_j) x(t_j)`. The Hilbert-Schmidt inner
//! product is the weighted Frobenius product `sum_ij w_i w_j A_ij B_ij`.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;

use crate::error::{param, Error, Result};
use crate::funcspace::{inner, Curve, TimeGrid};
use crate::linalg::jacobi_eigen;

/// Smallest eigenvalue gap accepted by [`efpc_error_bound`].
pub const MIN_EIGEN_GAP: f64 = 1e-10;

/// Symmetric kernel operator on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOperator {
    grid: TimeGrid,
    kernel: DMatrix<f64>,
}

impl KernelOperator {
    /// Wraps a kernel matrix. Asymmetry up to `1e-10` relative is averaged
    /// away, anything larger is rejected.
    pub fn new(grid: TimeGrid, kernel: DMatrix<f64>) -> Result<Self> {
        let t = grid.size();
        if kernel.nrows() != t || kernel.ncols() != t {
            return Err(Error::GridMismatch {
                left: t,
                right: kernel.nrows().max(kernel.ncols()),
            });
        }
        if kernel.iter().any(|v| !v.is_finite()) {
            return Err(param("kernel entries must be finite"));
        }
        let scale = kernel.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let asym = (&kernel - kernel.transpose()).amax();
        if asym > 1e-10 * scale.max(1e-300) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self::symmetrized(grid, kernel))
    }

    pub(crate) fn symmetrized(grid: TimeGrid, kernel: DMatrix<f64>) -> Self {
        let kernel = (&kernel + kernel.transpose()) * 0.5;
        Self { grid, kernel }
    }

    /// Kernel given as `T * T` values in row-major order.
    pub fn from_row_major(grid: TimeGrid, values: &[f64]) -> Result<Self> {
        let t = grid.size();
        if values.len() != t * t {
            return Err(param(format!("expected {} kernel values, got {}", t * t, values.len())));
        }
        Self::new(grid, DMatrix::from_row_slice(t, t, values))
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            kernel: DMatrix::zeros(grid.size(), grid.size()),
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn apply(&self, x: &Curve) -> Result<Curve> {
        self.grid.check_same(&x.grid())?;
        let w = self.grid.weight();
        let values = (0..self.grid.size())
            .map(|i| {
                w * self
                    .kernel
                    .row(i)
                    .iter()
                    .zip(x.values())
                    .map(|(k, v)| k * v)
                    .sum::<f64>()
            })
            .collect();
        Ok(Curve::from_values_unchecked(self.grid, values))
    }

    pub fn add(&self, other: &KernelOperator) -> Result<KernelOperator> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            kernel: &self.kernel + &other.kernel,
        })
    }

    pub fn sub(&self, other: &KernelOperator) -> Result<KernelOperator> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            kernel: &self.kernel - &other.kernel,
        })
    }

    pub fn scaled(&self, c: f64) -> KernelOperator {
        Self {
            grid: self.grid,
            kernel: &self.kernel * c,
        }
    }
}

/// Rank-one operator `x (x) y : z -> <x, z> y`.
///
/// Kernels are kept symmetric, so for `x != y` this returns the symmetric
/// part `(x (x) y + y (x) x) / 2`.
pub fn rank_one(x: &Curve, y: &Curve) -> Result<KernelOperator> {
    x.grid().check_same(&y.grid())?;
    let t = x.grid().size();
    let (xv, yv) = (x.values(), y.values());
    let kernel = DMatrix::from_fn(t, t, |i, j| 0.5 * (xv[j] * yv[i] + xv[i] * yv[j]));
    Ok(KernelOperator {
        grid: x.grid(),
        kernel,
    })
}

pub fn hs_inner(a: &KernelOperator, b: &KernelOperator) -> Result<f64> {
    a.grid.check_same(&b.grid)?;
    let w = a.grid.weight();
    Ok(w * w * a.kernel.dot(&b.kernel))
}

pub fn hs_norm(a: &KernelOperator) -> f64 {
    a.grid.weight() * a.kernel.norm()
}

/// Eigenvalues and leading eigenfunctions of a kernel operator.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    values: Vec<f64>,
    functions: Vec<Curve>,
}

impl EigenSystem {
    /// Builds a system from known eigenvalues (descending) and eigenfunctions.
    pub fn from_parts(values: Vec<f64>, functions: Vec<Curve>) -> Result<Self> {
        if functions.len() > values.len() {
            return Err(param("more eigenfunctions than eigenvalues"));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(param("eigenvalues must be sorted in descending order"));
        }
        Ok(Self { values, functions })
    }

    /// All eigenvalues, descending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Leading eigenfunctions, unit norm under the grid quadrature.
    pub fn functions(&self) -> &[Curve] {
        &self.functions
    }

    pub fn value(&self, j: usize) -> Option<f64> {
        j.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }

    pub fn function(&self, j: usize) -> Option<&Curve> {
        j.checked_sub(1).and_then(|i| self.functions.get(i))
    }

    /// Eigenvalue separation `alpha_j` (1-based): `lambda_1 - lambda_2` for
    /// the first, the smaller of both neighbouring gaps afterwards.
    pub fn gap(&self, j: usize) -> Option<f64> {
        if j == 0 || j >= self.values.len() {
            return None;
        }
        let l = &self.values;
        let below = l[j - 1] - l[j];
        if j == 1 {
            Some(below)
        } else {
            Some(below.min(l[j - 2] - l[j - 1]))
        }
    }

    pub(crate) fn with_functions(mut self, functions: Vec<Curve>) -> Self {
        self.functions = functions;
        self
    }
}

/// Leading `k` eigenpairs of `op`.
///
/// The quadrature-weighted problem reduces to the ordinary symmetric problem
/// for `kernel / T`; eigenvectors are rescaled by `sqrt(T)` to unit L2 norm.
pub fn eigenpairs(op: &KernelOperator, k: usize) -> Result<EigenSystem> {
    let t = op.grid.size();
    if k > t {
        return Err(param(format!("requested {k} eigenpairs from a rank-{t} operator")));
    }
    let eig = jacobi_eigen(&(&op.kernel * op.grid.weight()))?;
    let scale = (t as f64).sqrt();
    let functions = (0..k)
        .map(|c| {
            Curve::from_values_unchecked(op.grid, eig.vectors.column(c).iter().map(|v| v * scale).collect())
        })
        .collect();
    Ok(EigenSystem {
        values: eig.values,
        functions,
    })
}

/// `u` flipped to have a nonnegative inner product with `reference`.
pub fn sign_align(u: &Curve, reference: &Curve) -> Result<Curve> {
    let ip = inner(u, reference)?;
    Ok(if ip < 0.0 { u.scaled(-1.0) } else { u.clone() })
}

/// Eigenfunction perturbation bound `2 sqrt2 ||K - C||_S / alpha_j`, valid
/// when the first `d + 1` eigenvalues of `C` are strictly separated.
pub fn efpc_error_bound(system: &EigenSystem, dist_hs: f64, j: usize, d: usize) -> Result<f64> {
    if j == 0 || j > d {
        return Err(param(format!("component index {j} outside 1..={d}")));
    }
    if dist_hs < 0.0 || !dist_hs.is_finite() {
        return Err(param("Hilbert-Schmidt distance must be finite and nonnegative"));
    }
    let l = system.values();
    if l.len() <= d {
        return Err(param(format!("need {} eigenvalues, have {}", d + 1, l.len())));
    }
    for i in 0..d {
        let gap = l[i] - l[i + 1];
        if gap < MIN_EIGEN_GAP {
            return Err(Error::DegenerateSpectrum { index: i + 1, gap });
        }
    }
    let alpha = system.gap(j).expect("gap exists for j <= d");
    Ok(2.0 * SQRT_2 * dist_hs / alpha)
}
