//! Sample mean, covariance operators, EFPCs, the `X*` comparison and kriging.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::designs::{format_float, DesignMeta, PointSet};
use crate::error::{param, Error, Result};
use crate::funcspace::{norm, Curve};
use crate::linalg::cholesky_with_jitter;
use crate::operators::{eigenpairs, hs_norm, sign_align, EigenSystem, KernelOperator};
use crate::simulate::{FieldModel, FunctionSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    #[serde(rename = "mean-L2sq")]
    MeanL2Sq,
    #[serde(rename = "cov-HSsq")]
    CovHsSq,
    #[serde(rename = "cov-centered-HSsq")]
    CovCenteredHsSq,
    #[serde(rename = "xstar-HSsq")]
    XstarHsSq,
}

/// One replicate's loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub kind: LossKind,
    pub value: f64,
    pub n: usize,
    pub meta: Option<DesignMeta>,
}

impl LossRecord {
    pub fn new(kind: LossKind, value: f64, sample: &FunctionSample) -> Result<Self> {
        if !(value >= 0.0) {
            return Err(param(format!("loss must be nonnegative, got {value}")));
        }
        Ok(Self {
            kind,
            value,
            n: sample.len(),
            meta: sample.points().meta().cloned(),
        })
    }
}

fn require_rows(sample: &FunctionSample) -> Result<()> {
    if sample.is_empty() {
        Err(param("sample has no curves"))
    } else {
        Ok(())
    }
}

/// Rows that enter the estimators: every row except a marked origin.
fn estimation_rows(sample: &FunctionSample) -> DMatrix<f64> {
    match sample.origin() {
        None => sample.values().clone(),
        Some(o) => sample.values().clone().remove_row(o),
    }
}

fn column_means(values: &DMatrix<f64>) -> Vec<f64> {
    let n = values.nrows() as f64;
    values.column_iter().map(|c| c.sum() / n).collect()
}

/// Pointwise average of the curves.
pub fn sample_mean(sample: &FunctionSample) -> Result<Curve> {
    require_rows(sample)?;
    let rows = estimation_rows(sample);
    if rows.nrows() == 0 {
        return Err(param("sample has no curves besides the origin"));
    }
    Curve::new(sample.grid(), column_means(&rows))
}

fn gram(sample: &FunctionSample, rows: &DMatrix<f64>) -> KernelOperator {
    let n = rows.nrows() as f64;
    KernelOperator::symmetrized(sample.grid(), rows.tr_mul(rows) / n)
}

/// `(1/N) sum_k X(s_k) (x) X(s_k)`.
pub fn cov_op_uncentered(sample: &FunctionSample) -> Result<KernelOperator> {
    require_rows(sample)?;
    let rows = estimation_rows(sample);
    if rows.nrows() == 0 {
        return Err(param("sample has no curves besides the origin"));
    }
    Ok(gram(sample, &rows))
}

fn centered_by(sample: &FunctionSample, center: &[f64]) -> Result<KernelOperator> {
    let mut rows = estimation_rows(sample);
    if rows.nrows() == 0 {
        return Err(param("sample has no curves besides the origin"));
    }
    for mut r in rows.row_iter_mut() {
        for (v, c) in r.iter_mut().zip(center) {
            *v -= c;
        }
    }
    Ok(gram(sample, &rows))
}

/// `(1/N) sum_k (X(s_k) - Xbar) (x) (X(s_k) - Xbar)`.
pub fn cov_op_centered(sample: &FunctionSample) -> Result<KernelOperator> {
    let mean = sample_mean(sample)?;
    centered_by(sample, mean.values())
}

/// `(1/N) sum_k (X(s_k) - mu) (x) (X(s_k) - mu)`.
pub fn cov_op_known_mean(sample: &FunctionSample, mu: &Curve) -> Result<KernelOperator> {
    require_rows(sample)?;
    sample.grid().check_same(&mu.grid())?;
    centered_by(sample, mu.values())
}

/// Leading `k` eigenpairs; `v_j` is sign-aligned to `refs[j-1]` when given.
pub fn efpc(op: &KernelOperator, k: usize, refs: Option<&[Curve]>) -> Result<EigenSystem> {
    if k == 0 {
        return Err(param("need at least one component"));
    }
    let system = eigenpairs(op, k)?;
    let Some(refs) = refs else {
        return Ok(system);
    };
    let aligned = system
        .functions()
        .iter()
        .enumerate()
        .map(|(j, v)| match refs.get(j) {
            Some(r) => sign_align(v, r),
            None => Ok(v.clone()),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(system.with_functions(aligned))
}

/// EFPC curves as CSV: header `t,v1,...,vk`, one row per grid node.
pub fn write_efpc_csv<W: Write>(system: &EigenSystem, writer: W) -> Result<()> {
    let functions = system.functions();
    let Some(first) = functions.first() else {
        return Err(param("no eigenfunctions to export"));
    };
    let grid = first.grid();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(std::iter::once("t".to_string()).chain((1..=functions.len()).map(|j| format!("v{j}"))))?;
    for i in 0..grid.size() {
        w.write_record(
            std::iter::once(format_float(grid.node(i))).chain(functions.iter().map(|f| format_float(f.values()[i]))),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// `||Xbar - mu||^2`.
pub fn mean_loss(sample: &FunctionSample, mu: &Curve) -> Result<f64> {
    let mean = sample_mean(sample)?;
    Ok(norm(&mean.sub(mu)?).powi(2))
}

/// `||A - B||_S^2`.
pub fn cov_loss(a: &KernelOperator, b: &KernelOperator) -> Result<f64> {
    Ok(hs_norm(&a.sub(b)?).powi(2))
}

/// `||C_N - X(0) (x) X(0)||_S^2` where `C_N` excludes the origin row.
pub fn xstar_loss(sample: &FunctionSample) -> Result<f64> {
    let origin = sample
        .origin()
        .ok_or_else(|| param("sample has no distinguished origin row"))?;
    let rows = estimation_rows(sample);
    if rows.nrows() == 0 {
        return Err(param("sample has no curves besides the origin"));
    }
    let x0 = sample.values().row(origin);
    let mut diff = rows.tr_mul(&rows) / rows.nrows() as f64;
    diff -= x0.transpose() * x0;
    let w = sample.grid().weight();
    Ok((w * diff.norm()).powi(2))
}

/// Simple-kriging predictor `sum_k a_k X(s_k)` of `X(s_0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrigingSolution {
    pub weights: Vec<f64>,
    pub mse: f64,
    /// Relative diagonal jitter needed to factor `G`.
    pub jitter: f64,
}

/// Solves `G a = g` with `G_kl = K(s_k, s_l)`, `g_k = K(s_k, s_0)` and
/// `K(s, s') = sum_j phi_j(||s - s'||)`.
pub fn kriging_weights(model: &FieldModel, points: &PointSet, s0: &[f64]) -> Result<KrigingSolution> {
    if model.mean().values().iter().any(|v| *v != 0.0) {
        return Err(param("kriging needs a zero-mean model"));
    }
    if s0.len() != points.dim() {
        return Err(param(format!(
            "target has dimension {}, design has {}",
            s0.len(),
            points.dim()
        )));
    }
    if points.is_empty() {
        return Err(param("kriging needs at least one observation"));
    }
    let n = points.len();
    let g_mat = DMatrix::from_fn(n, n, |k, l| model.curve_covariance(points.distance(k, l)));
    let g = DVector::from_iterator(n, (0..n).map(|k| model.curve_covariance(points.distance_to(k, s0))));
    let k00 = model.curve_covariance(0.0);
    if g.iter().all(|v| *v == 0.0) {
        return Ok(KrigingSolution {
            weights: vec![0.0; n],
            mse: k00,
            jitter: 0.0,
        });
    }
    let chol = cholesky_with_jitter(&g_mat).ok_or(Error::SingularSystem)?;
    let a = chol.solve(&g);
    let mse = k00 - 2.0 * a.dot(&g) + a.dot(&(&g_mat * &a));
    if mse < -1e-8 {
        return Err(Error::SingularSystem);
    }
    Ok(KrigingSolution {
        weights: a.iter().copied().collect(),
        mse: mse.max(0.0),
        jitter: chol.jitter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{inner, make_fourier_basis, TimeGrid};
    use crate::operators::{hs_norm, rank_one};
    use crate::simulate::{FieldSimulator, ScoreComponent};
    use crate::spatcov::CovFamily;
    use crate::rng::StreamSeeder;
    use proptest::prelude::*;

    fn sample_of(rows: &[Vec<f64>]) -> FunctionSample {
        let t = rows[0].len();
        let grid = TimeGrid::new(t).unwrap();
        let pts = PointSet::on_line((0..rows.len()).map(|k| k as f64)).unwrap();
        let values = DMatrix::from_fn(rows.len(), t, |k, i| rows[k][i]);
        FunctionSample::new(grid, pts, values).unwrap()
    }

    fn curve(values: &[f64]) -> Curve {
        Curve::new(TimeGrid::new(values.len()).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn mean_examples() {
        let s = sample_of(&[vec![2.0; 4], vec![2.0; 4]]);
        assert_eq!(sample_mean(&s).unwrap().values(), &[2.0; 4]);
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let s = sample_of(&[x.clone()]);
        assert_eq!(sample_mean(&s).unwrap().values(), &x[..]);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let s = sample_of(&[x, neg]);
        assert!(sample_mean(&s).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn covariance_examples() {
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let xx = rank_one(&curve(&x), &curve(&x)).unwrap();
        let one = cov_op_uncentered(&sample_of(&[x.clone()])).unwrap();
        assert!(hs_norm(&one.sub(&xx).unwrap()) < 1e-14);

        let zero = cov_op_uncentered(&sample_of(&vec![vec![0.0; 4]; 3])).unwrap();
        assert_eq!(hs_norm(&zero), 0.0);

        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let pm = sample_of(&[x.clone(), neg]);
        assert!(hs_norm(&cov_op_uncentered(&pm).unwrap().sub(&xx).unwrap()) < 1e-14);
        assert!(hs_norm(&cov_op_centered(&pm).unwrap().sub(&xx).unwrap()) < 1e-14);
        let mu = Curve::zeros(TimeGrid::new(4).unwrap());
        assert!(hs_norm(&cov_op_known_mean(&pm, &mu).unwrap().sub(&xx).unwrap()) < 1e-14);

        let constant = sample_of(&vec![vec![1.5; 4]; 5]);
        assert!(hs_norm(&cov_op_centered(&constant).unwrap()) < 1e-14);
    }

    #[test]
    fn losses() {
        let x = curve(&[1.0, -2.0, 0.5, 3.0]);
        let s = sample_of(&[x.values().to_vec()]);
        assert_eq!(mean_loss(&s, &x).unwrap(), 0.0);
        let a = rank_one(&x, &x).unwrap();
        assert_eq!(cov_loss(&a, &a).unwrap(), 0.0);
        let zero = KernelOperator::zeros(x.grid());
        assert!((cov_loss(&a, &zero).unwrap() - norm(&x).powi(4)).abs() < 1e-12);
        let other = curve(&[0.0; 8]);
        assert!(matches!(mean_loss(&s, &other), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn efpc_recovers_population() {
        let b = make_fourier_basis(3, 48).unwrap();
        let weights = [3.0, 2.0, 0.5];
        let mut op = KernelOperator::zeros(b.grid());
        for (w, e) in weights.iter().zip(b.elements()) {
            op = op.add(&rank_one(e, e).unwrap().scaled(*w)).unwrap();
        }
        let sys = efpc(&op, 3, Some(b.elements())).unwrap();
        for j in 0..3 {
            assert!((sys.values()[j] - weights[j]).abs() < 1e-10);
            let ip = inner(&sys.functions()[j], &b.elements()[j]).unwrap();
            assert!((ip - 1.0).abs() < 1e-10);
        }
        assert!(efpc(&op, 0, None).is_err());
    }

    #[test]
    fn xstar_first_eigenfunction() {
        let model = FieldModel::two_component(0.5, 64).unwrap();
        let pts = PointSet::on_line([0.0]).unwrap();
        let sim = FieldSimulator::new(model.clone(), pts).unwrap();
        let x0 = sim.draw_replicate(&StreamSeeder::new(11), 0).row(0);
        let xstar = rank_one(&x0, &x0).unwrap();
        let sys = efpc(&xstar, 2, None).unwrap();
        let f = x0.scaled(1.0 / norm(&x0));
        assert!((inner(&sys.functions()[0], &f).unwrap().abs() - 1.0).abs() < 1e-10);
        assert!((sys.values()[0] - norm(&x0).powi(2)).abs() < 1e-10);
        assert!(sys.values()[1].abs() < 1e-10);
    }

    #[test]
    fn xstar_loss_cases() {
        let model = FieldModel::two_component(0.5, 32).unwrap();
        let seeder = StreamSeeder::new(5);
        let at_origin = PointSet::on_line([0.0; 6]).unwrap();
        let sim = FieldSimulator::new(model.clone(), at_origin).unwrap();
        let x = sim.draw_replicate(&seeder, 0).with_origin(0).unwrap();
        assert!(xstar_loss(&x).unwrap() < 1e-4);
        assert!(xstar_loss(&sim.draw_replicate(&seeder, 0)).is_err());

        // far-apart points: C_N tends to C, which differs from X*
        let far = PointSet::on_line((0..40).map(|k| 10.0 * k as f64)).unwrap();
        let sim = FieldSimulator::new(model, far).unwrap();
        let reps = 200;
        let mean: f64 = (0..reps)
            .map(|r| xstar_loss(&sim.draw_replicate(&seeder, r).with_origin(0).unwrap()).unwrap())
            .sum::<f64>()
            / reps as f64;
        assert!(mean > 0.5, "{mean}");
    }

    #[test]
    fn centered_identity_and_shift_invariance() {
        let model = FieldModel::centered(
            3,
            24,
            vec![
                ScoreComponent { index: 1, family: CovFamily::exponential(1.0, 1.0) },
                ScoreComponent { index: 3, family: CovFamily::exponential(0.3, 0.5) },
            ],
        )
        .unwrap();
        let pts = PointSet::on_line((0..15).map(|k| 0.4 * k as f64)).unwrap();
        let sim = FieldSimulator::new(model.clone(), pts).unwrap();
        let seeder = StreamSeeder::new(3);
        for r in 0..10 {
            let s = sim.draw_replicate(&seeder, r);
            let mu = model.mean();
            let tilde = cov_op_known_mean(&s, mu).unwrap();
            let hat = cov_op_centered(&s).unwrap();
            let d = sample_mean(&s).unwrap().sub(mu).unwrap();
            let resid = tilde.sub(&hat).unwrap().sub(&rank_one(&d, &d).unwrap()).unwrap();
            assert!(hs_norm(&resid) < 1e-10);

            let shifted = s.values().map(|v| v + 0.7);
            let s2 = FunctionSample::new(s.grid(), s.points().clone(), shifted).unwrap();
            assert!(hs_norm(&cov_op_centered(&s2).unwrap().sub(&hat).unwrap()) < 1e-10);

            for op in [cov_op_uncentered(&s).unwrap(), hat] {
                let sys = eigenpairs(&op, 1).unwrap();
                assert!(*sys.values().last().unwrap() >= -1e-8);
            }
        }
    }

    #[test]
    fn single_location_is_unbiased() {
        let model = FieldModel::centered(
            2,
            8,
            vec![
                ScoreComponent { index: 1, family: CovFamily::exponential(1.0, 1.0) },
                ScoreComponent { index: 2, family: CovFamily::exponential(0.5, 1.0) },
            ],
        )
        .unwrap();
        let c = model.population_operator();
        let sim = FieldSimulator::new(model, PointSet::on_line([0.0]).unwrap()).unwrap();
        let seeder = StreamSeeder::new(21);
        let reps = 10_000;
        let kernels: Vec<DMatrix<f64>> = (0..reps)
            .map(|r| cov_op_uncentered(&sim.draw_replicate(&seeder, r)).unwrap().kernel().clone())
            .collect();
        for i in 0..8 {
            for j in 0..8 {
                let xs: Vec<f64> = kernels.iter().map(|k| k[(i, j)]).collect();
                let m = xs.iter().sum::<f64>() / reps as f64;
                let sd = (xs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
                let se = sd / (reps as f64).sqrt();
                assert!((m - c.kernel()[(i, j)]).abs() <= 3.0 * se + 1e-12, "({i},{j})");
            }
        }
    }

    fn exp_model(families: Vec<CovFamily>) -> FieldModel {
        let scores = families
            .into_iter()
            .enumerate()
            .map(|(j, family)| ScoreComponent { index: j + 1, family })
            .collect();
        FieldModel::centered(2, 8, scores).unwrap()
    }

    #[test]
    fn kriging_examples() {
        let model = exp_model(vec![CovFamily::exponential(1.0, 1.0)]);
        let pts = PointSet::on_line([0.0, 1.0, 2.5]).unwrap();
        let sol = kriging_weights(&model, &pts, &[1.0]).unwrap();
        for (k, w) in sol.weights.iter().enumerate() {
            assert!((w - if k == 1 { 1.0 } else { 0.0 }).abs() < 1e-8);
        }
        assert!(sol.mse.abs() < 1e-8);

        let sph = exp_model(vec![CovFamily::Spherical { variance: 2.0, range: 1.0 }]);
        let sol = kriging_weights(&sph, &pts, &[100.0]).unwrap();
        assert!(sol.weights.iter().all(|w| *w == 0.0));
        assert_eq!(sol.mse, 2.0);

        // symmetric pair at -1, 1 predicting 0: a = r / (1 + c) each
        let pair = PointSet::on_line([-1.0, 1.0]).unwrap();
        let sol = kriging_weights(&model, &pair, &[0.0]).unwrap();
        let (c, r) = ((-2.0f64).exp(), (-1.0f64).exp());
        let a = r / (1.0 + c);
        assert!((sol.weights[0] - a).abs() < 1e-12 && (sol.weights[1] - a).abs() < 1e-12);
        let mse = 1.0 - 4.0 * a * r + 2.0 * a * a * (1.0 + c);
        assert!((sol.mse - mse).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn kriging_mse_nonincreasing(xs in proptest::collection::vec(-5.0f64..5.0, 2..8), extra in -5.0f64..5.0, s0 in -5.0f64..5.0) {
            let model = exp_model(vec![CovFamily::exponential(1.0, 1.5), CovFamily::exponential(0.4, 0.3)]);
            let base = PointSet::on_line(xs.clone()).unwrap();
            let mut more = xs;
            more.push(extra);
            let more = PointSet::on_line(more).unwrap();
            let a = kriging_weights(&model, &base, &[s0]).unwrap();
            let b = kriging_weights(&model, &more, &[s0]).unwrap();
            prop_assert!(b.mse <= a.mse + 1e-8);
        }
    }

    #[test]
    fn efpc_csv_layout() {
        let b = make_fourier_basis(2, 8).unwrap();
        let sys = EigenSystem::from_parts(vec![1.0, 0.5], b.elements().to_vec()).unwrap();
        let mut buf = Vec::new();
        write_efpc_csv(&sys, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,v1,v2\n"));
        assert_eq!(text.lines().count(), 9);
    }
}
