//! Dense linear algebra used by the operators and simulators: a cyclic Jacobi
//! eigensolver for symmetric matrices and a Cholesky factorization with
//! diagonal jitter escalation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Diagonal jitter levels tried, in order, after a plain factorization fails.
/// Each level is relative to the largest diagonal entry.
pub const JITTER_LEVELS: [f64; 3] = [1e-12, 1e-8, 1e-6];

/// Symmetric eigendecomposition, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Unit eigenvectors stored as columns, aligned with `values`.
    pub vectors: DMatrix<f64>,
}

const JACOBI_TOLERANCE: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal Frobenius mass drops below
/// `1e-12` times the matrix norm.
///
/// Ties are kept in their original index order.
pub fn jacobi_eigen(matrix: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(crate::error::param("eigen input must be square"));
    }
    let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if asym > 1e-10 * scale.max(1e-300) {
        return Err(Error::NotSymmetric(asym));
    }

    // row-major working copy; rotations touch rows and columns p, q
    let mut a: Vec<f64> = (0..n * n).map(|k| matrix[(k / n, k % n)]).collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_TOLERANCE * total;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= target || total == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[r * n + order[c]]);
    Ok(SymmetricEigen { values, vectors })
}

/// Lower Cholesky factor together with the jitter that made it succeed.
#[derive(Debug, Clone)]
pub struct JitteredCholesky {
    pub factor: Cholesky<f64, Dyn>,
    /// Relative jitter added to the diagonal, 0 when none was needed.
    pub jitter: f64,
}

/// Factor `matrix`, escalating through [`JITTER_LEVELS`] on failure.
/// Returns `None` when even the largest jitter fails.
pub fn cholesky_with_jitter(matrix: &DMatrix<f64>) -> Option<JitteredCholesky> {
    let diag_scale = matrix.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diag_scale = if diag_scale > 0.0 { diag_scale } else { 1.0 };
    std::iter::once(0.0)
        .chain(JITTER_LEVELS)
        .find_map(|jitter| {
            let mut m = matrix.clone();
            if jitter > 0.0 {
                for i in 0..m.nrows() {
                    m[(i, i)] += jitter * diag_scale;
                }
            }
            Cholesky::new(m).map(|factor| JitteredCholesky { factor, jitter })
        })
}

impl JitteredCholesky {
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonal_and_zero() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let e = jacobi_eigen(&m).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(e.vectors[(1, 0)].abs(), 1.0);

        let e = jacobi_eigen(&DMatrix::zeros(4, 4)).unwrap();
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn jacobi_reconstructs() {
        let n = 12;
        let m = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            (a * 0.7 + b * 1.3).sin() + if i == j { 2.0 } else { 0.0 }
        });
        let e = jacobi_eigen(&m).unwrap();
        let lam = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let rec = &e.vectors * lam * e.vectors.transpose();
        assert!((rec - &m).norm() < 1e-10 * m.norm());
        let gram = e.vectors.transpose() * &e.vectors;
        assert!((gram - DMatrix::identity(n, n)).norm() < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn jacobi_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(jacobi_eigen(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn cholesky_escalates_on_singular() {
        let ones = DMatrix::from_element(3, 3, 1.0);
        let c = cholesky_with_jitter(&ones).unwrap();
        assert!(c.jitter > 0.0);
        let spd = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(cholesky_with_jitter(&spd).unwrap().jitter, 0.0);
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(cholesky_with_jitter(&neg).is_none());
    }
}
