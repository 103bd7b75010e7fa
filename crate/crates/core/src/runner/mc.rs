//! Replicate-parallel Monte Carlo over a ladder of designs.
//!
//! Replicate `r` at ladder step `k` draws everything from the substreams of
//! key `replicate_key(k, r)`; losses are collected in replicate order and
//! reduced sequentially, so reports do not depend on the thread count.

use rayon::prelude::*;

use crate::bounds::{
    bound_cov_centered, bound_cov_general, bound_cov_rand, bound_cov_reg, bound_example21, bound_mean_general,
    bound_mean_rand, bound_mean_reg, default_kpp, default_rho_grid, exact_tent_loss, lower_bound_inconsistency,
    BoundReport, RandomDesignSetting,
};
use crate::designs::{classify_family, intensity_profile, Classification, IntensityProfile, PointSet, Region};
use crate::error::{Error, Result};
use crate::estimators::{
    cov_loss, cov_op_centered, cov_op_uncentered, efpc, kriging_weights, mean_loss, xstar_loss, KrigingSolution,
};
use crate::funcspace::{inner, norm, Curve, TimeGrid};
use crate::rng::{replicate_key, StreamSeeder};
use crate::simulate::{tent_field_sample, FieldSimulator, FunctionSample};
use crate::spatcov::DecayFunction;

use super::config::{DesignSpec, ExperimentConfig, Metric, Model, Rung};

/// Stream component for random designs.
pub const DESIGN_STREAM: u64 = u64::MAX - 1;
/// Stream component for Monte Carlo ingredients of bounds.
pub const BOUND_STREAM: u64 = u64::MAX - 2;

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub step: usize,
    pub rung: Rung,
    /// Scaling `alpha_N` of the design, when known.
    pub alpha: Option<f64>,
    pub loss_mean: f64,
    pub loss_se: f64,
    /// General, regular-design and random-design bounds (mean or covariance
    /// versions according to the metric).
    pub bounds: [Option<f64>; 3],
    pub warnings: Vec<String>,
    /// Per-replicate losses in replicate order.
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub metric: Metric,
    pub rows: Vec<McRow>,
}

/// Mean and standard error `sd / sqrt(R)`, summed in index order.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

enum Sampler {
    Gaussian(FieldSimulator),
    Tent { points: PointSet, e: Curve },
}

impl Sampler {
    fn new(model: &Model, points: PointSet) -> Result<Self> {
        Ok(match model {
            Model::Gaussian(m) => Sampler::Gaussian(FieldSimulator::new(m.clone(), points)?),
            Model::Tent { e } => Sampler::Tent { points, e: e.clone() },
        })
    }

    fn draw(&self, seeder: &StreamSeeder, key: u64) -> Result<FunctionSample> {
        match self {
            Sampler::Gaussian(sim) => Ok(sim.draw_replicate(seeder, key)),
            Sampler::Tent { points, e } => tent_field_sample(points, e, &mut seeder.stream(key, 0)),
        }
    }
}

/// Everything fixed within one ladder step.
struct Step<'a> {
    cfg: &'a ExperimentConfig,
    model: &'a Model,
    seeder: StreamSeeder,
    index: usize,
    rung: Rung,
    with_origin: bool,
}

impl Step<'_> {
    fn key(&self, rep: usize) -> u64 {
        replicate_key(self.index, rep)
    }

    fn design(&self, rep: usize) -> Result<PointSet> {
        let mut rng = self.seeder.stream(self.key(rep), DESIGN_STREAM);
        let points = self.cfg.design.build(self.rung.n, self.rung.alpha, &mut rng)?;
        if self.with_origin {
            let origin = vec![0.0; points.dim()];
            points.with_leading(&origin)
        } else {
            Ok(points)
        }
    }

    /// Runs `f` on every replicate's sample, in parallel, collected in order.
    fn map_replicates<T: Send>(&self, f: impl Fn(usize, FunctionSample) -> Result<T> + Sync) -> Result<Vec<T>> {
        let shared = if self.cfg.design.is_random() {
            None
        } else {
            Some(Sampler::new(self.model, self.design(0)?)?)
        };
        (0..self.cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let sample = match &shared {
                    Some(s) => s.draw(&self.seeder, self.key(rep))?,
                    None => Sampler::new(self.model, self.design(rep)?)?.draw(&self.seeder, self.key(rep))?,
                };
                let sample = if self.with_origin { sample.with_origin(0)? } else { sample };
                f(rep, sample)
            })
            .collect()
    }
}

fn design_alpha(cfg: &ExperimentConfig, rung: &Rung, points: &PointSet) -> Option<f64> {
    rung.alpha.or_else(|| match &cfg.design {
        DesignSpec::Family { family } => Some(family.alpha.alpha(rung.n)),
        _ => points.meta().map(|m| m.alpha),
    })
}

/// Regular-lattice description of a design: `(d, Delta, region)`.
fn regular_lattice(design: &DesignSpec) -> Option<(usize, f64, Region)> {
    match design {
        DesignSpec::Family { family } if family.is_regular() => Some((family.dim, family.delta(), family.region)),
        DesignSpec::TentLine { .. } => Some((1, 1.0, Region::Cube)),
        _ => None,
    }
}

fn rho_grid(cfg: &ExperimentConfig, points: &PointSet) -> Vec<f64> {
    cfg.bounds.rho_grid.clone().unwrap_or_else(|| default_rho_grid(points))
}

/// The three bound columns of an MC row for `metric`.
fn row_bounds(step: &Step<'_>, metric: Metric, points: &PointSet) -> Result<([Option<f64>; 3], Vec<String>)> {
    let cfg = step.cfg;
    let envelope = match metric {
        Metric::Mean => step.model.h()?,
        Metric::Cov => step.model.big_h()?,
        Metric::Xstar => return Ok(([None; 3], Vec::new())),
    };
    let cov = metric == Metric::Cov;
    let n = step.rung.n;
    let mut warnings = Vec::new();
    let general = if cov {
        bound_cov_general(&envelope, points, &rho_grid(cfg, points))?
    } else {
        bound_mean_general(&envelope, points, &rho_grid(cfg, points))?
    };
    let alpha = design_alpha(cfg, &step.rung, points);
    let regular = match (regular_lattice(&cfg.design), alpha) {
        (Some((d, delta, region)), Some(alpha)) => {
            let kpp = cfg.bounds.kpp.unwrap_or_else(|| default_kpp(region, d));
            let r = if cov {
                bound_cov_reg(&envelope, d, delta, alpha, n, kpp)?
            } else {
                bound_mean_reg(&envelope, d, delta, alpha, n, kpp)?
            };
            warnings.extend(r.warning.clone());
            Some(r.value)
        }
        _ => None,
    };
    let random = match (&cfg.design, alpha) {
        (DesignSpec::Family { family }, Some(alpha)) if !family.is_regular() => {
            let eps = cfg.bounds.eps_grid();
            let setting = RandomDesignSetting {
                region: family.region,
                dim: family.dim,
                density_sup: family.density_sup(),
                alpha,
                n,
                eps_grid: &eps,
                mc_n: cfg.bounds.mc_pairs,
            };
            let mut rng = step.seeder.stream(step.key(0), BOUND_STREAM);
            let r = if cov {
                bound_cov_rand(&envelope, &setting, &mut rng)?
            } else {
                bound_mean_rand(&envelope, &setting, &mut rng)?
            };
            Some(r.value)
        }
        _ => None,
    };
    Ok(([Some(general.value), regular, random], warnings))
}

/// Monte Carlo estimate of the expected loss for `metric` at every ladder step.
pub fn run_mc(cfg: &ExperimentConfig, metric: Metric) -> Result<McReport> {
    let model = cfg.model.build()?;
    let seeder = StreamSeeder::new(cfg.seed);
    let mu = model.mean();
    let population = model.population_operator();
    let mut rows = Vec::new();
    for (index, rung) in cfg.ladder.rungs().into_iter().enumerate() {
        let context = format!("ladder step {index} (N = {})", rung.n);
        let step = Step {
            cfg,
            model: &model,
            seeder,
            index,
            rung,
            with_origin: metric == Metric::Xstar,
        };
        let row = (|| {
            let losses = step.map_replicates(|_, sample| match metric {
                Metric::Mean => mean_loss(&sample, &mu),
                Metric::Cov => {
                    let op = if cfg.centered {
                        cov_op_centered(&sample)?
                    } else {
                        cov_op_uncentered(&sample)?
                    };
                    cov_loss(&op, &population)
                }
                Metric::Xstar => xstar_loss(&sample),
            })?;
            let points = cfg.design.build(rung.n, rung.alpha, &mut seeder.stream(step.key(0), DESIGN_STREAM))?;
            let (bounds, warnings) = row_bounds(&step, metric, &points)?;
            let (loss_mean, loss_se) = mean_and_se(&losses);
            Ok::<_, Error>(McRow {
                step: index,
                rung,
                alpha: design_alpha(cfg, &rung, &points),
                loss_mean,
                loss_se,
                bounds,
                warnings,
                losses,
            })
        })()
        .map_err(|e| e.context(context))?;
        rows.push(row);
    }
    Ok(McReport { metric, rows })
}

/// Leading EFPCs of the replicates of the first ladder step.
#[derive(Debug, Clone, PartialEq)]
pub struct EfpcBundle {
    pub grid: TimeGrid,
    /// Unaligned `v_1` of every replicate.
    pub curves: Vec<Curve>,
    /// `|<v_1, f>|` with `f = X(0) / ||X(0)||`.
    pub abs_inner_f: Vec<f64>,
    /// `<v_1, e_1>^2 + <v_1, e_2>^2`.
    pub projection_mass: Vec<f64>,
    /// `<v_1, e_1>`.
    pub inner_e1: Vec<f64>,
}

/// EFPC experiment on a two-component model: `v_1` of `C_N` against the
/// eigenfunction of `X(0) (x) X(0)`. The accompanying report holds the
/// `X*` losses of the same replicates.
pub fn run_efpc(cfg: &ExperimentConfig) -> Result<(EfpcBundle, McReport)> {
    let model = cfg.model.build()?;
    let Model::Gaussian(field) = &model else {
        return Err(Error::Config("the EFPC experiment needs a Gaussian score model".into()));
    };
    if field.basis().order() < 2 {
        return Err(Error::Config("the EFPC experiment needs at least two basis elements".into()));
    }
    let (e1, e2) = (field.basis().elements()[0].clone(), field.basis().elements()[1].clone());
    let rung = cfg.ladder.rungs()[0];
    let step = Step {
        cfg,
        model: &model,
        seeder: StreamSeeder::new(cfg.seed),
        index: 0,
        rung,
        with_origin: true,
    };
    let per_rep = step.map_replicates(|_, sample| {
        let op = cov_op_uncentered(&sample)?;
        let sys = efpc(&op, 1, None)?;
        let v = sys.functions()[0].clone();
        let x0 = sample.row(0);
        let x0_norm = norm(&x0);
        let f_inner = if x0_norm > 0.0 { inner(&v, &x0)? / x0_norm } else { 0.0 };
        let (a, b) = (inner(&v, &e1)?, inner(&v, &e2)?);
        Ok((v, f_inner.abs(), a * a + b * b, a, xstar_loss(&sample)?))
    })?;
    let mut bundle = EfpcBundle {
        grid: model.grid(),
        curves: Vec::new(),
        abs_inner_f: Vec::new(),
        projection_mass: Vec::new(),
        inner_e1: Vec::new(),
    };
    let mut losses = Vec::new();
    for (v, f, mass, a, loss) in per_rep {
        bundle.curves.push(v);
        bundle.abs_inner_f.push(f);
        bundle.projection_mass.push(mass);
        bundle.inner_e1.push(a);
        losses.push(loss);
    }
    let (loss_mean, loss_se) = mean_and_se(&losses);
    let report = McReport {
        metric: Metric::Xstar,
        rows: vec![McRow {
            step: 0,
            rung,
            alpha: None,
            loss_mean,
            loss_se,
            bounds: [None; 3],
            warnings: Vec::new(),
            losses,
        }],
    };
    Ok((bundle, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrigingRow {
    pub step: usize,
    pub rung: Rung,
    pub solution: KrigingSolution,
}

/// Kriging weights and MSE at the configured target for every ladder design.
pub fn run_kriging(cfg: &ExperimentConfig) -> Result<Vec<KrigingRow>> {
    let Model::Gaussian(field) = cfg.model.build()? else {
        return Err(Error::Config("kriging needs a Gaussian score model".into()));
    };
    let target = cfg
        .target
        .as_ref()
        .ok_or_else(|| Error::Config("kriging needs a target location".into()))?;
    let seeder = StreamSeeder::new(cfg.seed);
    cfg.ladder
        .rungs()
        .into_iter()
        .enumerate()
        .map(|(step, rung)| {
            let points = cfg
                .design
                .build(rung.n, rung.alpha, &mut seeder.stream(replicate_key(step, 0), DESIGN_STREAM))?;
            let solution = kriging_weights(&field, &points, target).map_err(|e| e.context(format!("ladder step {step}")))?;
            Ok(KrigingRow { step, rung, solution })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyReport {
    pub n: usize,
    /// Analytic type of a parametric family.
    pub classification: Option<Classification>,
    /// Intensity profile of the design at the largest ladder size.
    pub profile: IntensityProfile,
}

pub fn run_classify(cfg: &ExperimentConfig) -> Result<ClassifyReport> {
    let rungs = cfg.ladder.rungs();
    let (step, rung) = rungs
        .iter()
        .enumerate()
        .last()
        .expect("validated ladder");
    let seeder = StreamSeeder::new(cfg.seed);
    let points = cfg
        .design
        .build(rung.n, rung.alpha, &mut seeder.stream(replicate_key(step, 0), DESIGN_STREAM))?;
    let classification = match &cfg.design {
        DesignSpec::Family { family } => Some(classify_family(family)?),
        _ => None,
    };
    let radii = cfg.bounds.rho_grid.clone().unwrap_or_else(|| default_rho_grid(&points));
    let mut radii = radii;
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    Ok(ClassifyReport {
        n: points.len(),
        classification,
        profile: intensity_profile(&points, &radii)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub step: usize,
    pub rung: Rung,
    pub report: BoundReport,
}

/// Every bound that applies to the configured model and design, per ladder step.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    let model = cfg.model.build()?;
    let seeder = StreamSeeder::new(cfg.seed);
    let h = model.h()?;
    let big_h = model.big_h()?;
    let mut rows = Vec::new();
    for (index, rung) in cfg.ladder.rungs().into_iter().enumerate() {
        let step = Step {
            cfg,
            model: &model,
            seeder,
            index,
            rung,
            with_origin: false,
        };
        let reports = step_bounds(&step, &h, &big_h).map_err(|e| e.context(format!("ladder step {index}")))?;
        rows.extend(reports.into_iter().map(|report| BoundRow { step: index, rung, report }));
    }
    Ok(rows)
}

fn step_bounds(step: &Step<'_>, h: &DecayFunction, big_h: &DecayFunction) -> Result<Vec<BoundReport>> {
    let cfg = step.cfg;
    let points = step.design(0)?;
    let grid = rho_grid(cfg, &points);
    let n = step.rung.n;
    let mut out = vec![bound_mean_general(h, &points, &grid)?, bound_cov_general(big_h, &points, &grid)?];
    let alpha = design_alpha(cfg, &step.rung, &points);
    if let (Some((d, delta, region)), Some(alpha)) = (regular_lattice(&cfg.design), alpha) {
        let kpp = cfg.bounds.kpp.unwrap_or_else(|| default_kpp(region, d));
        out.push(bound_mean_reg(h, d, delta, alpha, n, kpp)?);
        out.push(bound_cov_reg(big_h, d, delta, alpha, n, kpp)?);
    }
    if let (DesignSpec::Family { family }, Some(alpha)) = (&cfg.design, alpha) {
        if !family.is_regular() {
            let eps = cfg.bounds.eps_grid();
            let setting = RandomDesignSetting {
                region: family.region,
                dim: family.dim,
                density_sup: family.density_sup(),
                alpha,
                n,
                eps_grid: &eps,
                mc_n: cfg.bounds.mc_pairs,
            };
            let mut rng = step.seeder.stream(step.key(0), BOUND_STREAM);
            out.push(bound_mean_rand(h, &setting, &mut rng)?);
            out.push(bound_cov_rand(big_h, &setting, &mut rng)?);
        }
    }
    if cfg.bounds.c_delta.is_some() {
        let delta = cfg.bounds.delta.unwrap_or(f64::INFINITY);
        out.push(bound_cov_centered(h, big_h, &points, &grid, delta, cfg.bounds.c_delta)?);
    }
    out.push(bound_example21(&points, cfg.bounds.m, step.model.fourth_moment())?);
    let rho = cfg.bounds.rho;
    out.push(lower_bound_inconsistency(h.eval(rho), &points, rho)?);
    if let (Model::Tent { .. }, DesignSpec::TentLine { .. }, Some(alpha)) = (step.model, &cfg.design, alpha) {
        let value = exact_tent_loss(n, alpha)?;
        out.push(tent_report(value, alpha, n));
    }
    Ok(out)
}

fn tent_report(value: f64, alpha: f64, n: usize) -> BoundReport {
    BoundReport {
        which: crate::bounds::BoundKind::TentExact,
        value,
        argument: None,
        constants: vec![("alpha".into(), alpha), ("N".into(), n as f64)],
        warning: None,
        standard_error: None,
    }
}
