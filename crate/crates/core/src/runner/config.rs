//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::designs::{
    grid_design, origin_cluster, random_design, scaled_line, two_scale_line, DesignFamilySpec, DesignMeta, Growth,
    PointSet,
};
use crate::error::{Error, Result};
use crate::funcspace::{make_fourier_basis, Curve, TimeGrid, DEFAULT_BASIS_ORDER, DEFAULT_GRID_SIZE};
use crate::operators::{rank_one, KernelOperator};
use crate::rng::StreamRng;
use crate::simulate::{FieldModel, ScoreComponent};
use crate::spatcov::{h_from_components, h_gaussian_independent, CovFamily, DecayFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    McMean,
    McCov,
    McXstar,
    #[serde(alias = "figure2")]
    McEfpc,
    Bounds,
    Rates,
    Classify,
    Kriging,
}

fn default_order() -> usize {
    DEFAULT_BASIS_ORDER
}

fn default_grid() -> usize {
    DEFAULT_GRID_SIZE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreSpec {
    pub index: usize,
    pub family: CovFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Zero-mean field with independent Gaussian scores on the trigonometric basis.
    Gaussian {
        #[serde(default = "default_order")]
        order: usize,
        #[serde(default = "default_grid")]
        grid: usize,
        scores: Vec<ScoreSpec>,
    },
    /// `psi(s) e_1(t)` with the tent spatial covariance.
    Tent {
        #[serde(default = "default_grid")]
        grid: usize,
    },
    /// `zeta_1 e_1 + sqrt(lambda) zeta_2 e_2` with squared-exponential scores.
    TwoComponent {
        lambda: f64,
        #[serde(default = "default_grid")]
        grid: usize,
    },
}

/// The model in simulation-ready form.
#[derive(Debug, Clone)]
pub enum Model {
    Gaussian(FieldModel),
    Tent { e: Curve },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Model> {
        match self {
            ModelSpec::Gaussian { order, grid, scores } => {
                let scores = scores
                    .iter()
                    .map(|s| ScoreComponent {
                        index: s.index,
                        family: s.family,
                    })
                    .collect();
                Ok(Model::Gaussian(FieldModel::centered(*order, *grid, scores)?))
            }
            ModelSpec::Tent { grid } => {
                let basis = make_fourier_basis(1, *grid)?;
                Ok(Model::Tent {
                    e: basis.elements()[0].clone(),
                })
            }
            ModelSpec::TwoComponent { lambda, grid } => Ok(Model::Gaussian(FieldModel::two_component(*lambda, *grid)?)),
        }
    }
}

impl Model {
    /// Covariance envelope `h` of the curves.
    pub fn h(&self) -> Result<DecayFunction> {
        match self {
            Model::Gaussian(m) => h_from_components(&m.families()),
            Model::Tent { .. } => h_from_components(&[CovFamily::Tent]),
        }
    }

    /// Covariance envelope `H` of the tensor squares. The tent field has
    /// `X(s) (x) X(s) = e (x) e` almost surely, hence `H = 0`.
    pub fn big_h(&self) -> Result<DecayFunction> {
        match self {
            Model::Gaussian(m) => h_gaussian_independent(&m.families()),
            Model::Tent { .. } => Ok(DecayFunction::zero()),
        }
    }

    pub fn fourth_moment(&self) -> f64 {
        match self {
            Model::Gaussian(m) => m.fourth_moment(),
            Model::Tent { .. } => 1.0,
        }
    }

    pub fn grid(&self) -> TimeGrid {
        match self {
            Model::Gaussian(m) => m.grid(),
            Model::Tent { e } => e.grid(),
        }
    }

    pub fn mean(&self) -> Curve {
        match self {
            Model::Gaussian(m) => m.mean().clone(),
            Model::Tent { e } => Curve::zeros(e.grid()),
        }
    }

    pub fn population_operator(&self) -> KernelOperator {
        match self {
            Model::Gaussian(m) => m.population_operator(),
            Model::Tent { e } => rank_one(e, e).expect("same grid"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DesignSpec {
    /// Parametric regular or randomized family.
    Family { family: DesignFamilySpec },
    /// `s_k = k alpha_N / N` on the line.
    TentLine { alpha: Growth },
    /// `s_n = 1 / n`.
    OriginCluster,
    /// All points at the origin.
    Coincident {
        #[serde(default = "one")]
        dim: usize,
    },
    /// `s_k = k * spacing` on the line.
    FarApart { spacing: f64 },
    /// Interleaved `1/k` and `k`; a ladder value `N` gives `2 floor(N/2)` points.
    TwoScale,
    /// Leading `N` points of a CSV point file.
    Points { path: PathBuf },
}

fn one() -> usize {
    1
}

impl DesignSpec {
    pub fn is_random(&self) -> bool {
        matches!(self, DesignSpec::Family { family } if !family.is_regular())
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(match self {
            DesignSpec::Family { family } => family.dim,
            DesignSpec::Coincident { dim } => *dim,
            DesignSpec::Points { path } => PointSet::load(path)?.dim(),
            _ => 1,
        })
    }

    /// The design for ladder value `n`; `alpha` overrides the growth rule
    /// when the ladder runs over `alpha_N`. Randomized families draw from `rng`.
    pub fn build(&self, n: usize, alpha: Option<f64>, rng: &mut StreamRng) -> Result<PointSet> {
        if n == 0 {
            return Err(Error::Config("ladder sizes must be positive".into()));
        }
        let growth = |g: &Growth| alpha.map(|c| Growth::Bounded { c }).unwrap_or(*g);
        match self {
            DesignSpec::Family { family } => {
                let spec = DesignFamilySpec {
                    alpha: growth(&family.alpha),
                    ..family.clone()
                };
                if spec.is_regular() {
                    grid_design(&spec, n)
                } else {
                    random_design(&spec, n, rng)
                }
            }
            DesignSpec::TentLine { alpha: g } => scaled_line(n, growth(g).alpha(n)),
            DesignSpec::OriginCluster => origin_cluster(n),
            DesignSpec::Coincident { dim } => {
                Ok(PointSet::new(*dim, vec![0.0; n * dim])?.with_meta(DesignMeta {
                    alpha: 0.0,
                    kind: "coincident".into(),
                }))
            }
            DesignSpec::FarApart { spacing } => {
                if !(*spacing > 0.0) {
                    return Err(Error::Config("spacing must be positive".into()));
                }
                PointSet::on_line((0..n).map(|k| k as f64 * spacing))
            }
            DesignSpec::TwoScale => two_scale_line((n / 2).max(1)),
            DesignSpec::Points { path } => {
                let all = PointSet::load(path)?;
                if n > all.len() {
                    return Err(Error::Config(format!(
                        "ladder asks for {n} points, {} has {}",
                        path.display(),
                        all.len()
                    )));
                }
                all.subset(0..n)
            }
        }
    }
}

/// Ladder over sample sizes, or over `alpha_N` at a fixed size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ladder {
    Sizes(Vec<usize>),
    Alpha { alpha: Vec<f64>, n: usize },
}

/// One rung of the ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rung {
    pub n: usize,
    pub alpha: Option<f64>,
}

impl Rung {
    /// The value reported in the `param` column.
    pub fn param(&self) -> f64 {
        self.alpha.unwrap_or(self.n as f64)
    }
}

impl Ladder {
    pub fn rungs(&self) -> Vec<Rung> {
        match self {
            Ladder::Sizes(ns) => ns.iter().map(|&n| Rung { n, alpha: None }).collect(),
            Ladder::Alpha { alpha, n } => alpha.iter().map(|&a| Rung { n: *n, alpha: Some(a) }).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let params: Vec<f64> = self.rungs().iter().map(Rung::param).collect();
        if params.is_empty() {
            return Err(Error::Config("ladder must be nonempty".into()));
        }
        if params.iter().any(|p| !(*p > 0.0)) || params.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("ladder must be positive and strictly increasing".into()));
        }
        if let Ladder::Alpha { n: 0, .. } = self {
            return Err(Error::Config("alpha ladder needs N >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Mean,
    Cov,
    Xstar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateAxis {
    N,
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    pub metric: Metric,
    pub axis: RateAxis,
}

impl Default for RateSpec {
    fn default() -> Self {
        Self {
            metric: Metric::Mean,
            axis: RateAxis::N,
        }
    }
}

/// Knobs for the bound evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSpec {
    /// `K''`; defaults to `2 diam(R_0) sqrt(d)`.
    pub kpp: Option<f64>,
    /// Radii for grid minimization; defaults to 32 log-spaced radii.
    pub rho_grid: Option<Vec<f64>>,
    /// `eps` grid of the random-design bound.
    pub eps_grid: Option<Vec<f64>>,
    pub mc_pairs: usize,
    /// Moment surplus and constant of the centred covariance bound.
    pub delta: Option<f64>,
    pub c_delta: Option<f64>,
    /// Pair radius of the pair-count bound.
    pub m: f64,
    /// Radius of the inconsistency lower bound.
    pub rho: f64,
}

impl Default for BoundsSpec {
    fn default() -> Self {
        Self {
            kpp: None,
            rho_grid: None,
            eps_grid: None,
            mc_pairs: 20_000,
            delta: None,
            c_delta: None,
            m: 1.0,
            rho: 1.0,
        }
    }
}

impl BoundsSpec {
    pub fn eps_grid(&self) -> Vec<f64> {
        self.eps_grid.clone().unwrap_or_else(|| {
            (0..24)
                .map(|i| 10f64.powf(-4.0 + 4.0 * i as f64 / 23.0))
                .collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelSpec,
    pub design: DesignSpec,
    pub ladder: Ladder,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Use the centred covariance estimator in covariance experiments.
    #[serde(default)]
    pub centered: bool,
    #[serde(default)]
    pub bounds: BoundsSpec,
    #[serde(default)]
    pub rate: RateSpec,
    /// Prediction location for kriging.
    #[serde(default)]
    pub target: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        self.ladder.validate()?;
        if let DesignSpec::Family { family } = &self.design {
            family.validate()?;
        }
        if self.experiment == ExperimentKind::Kriging && self.target.is_none() {
            return Err(Error::Config("kriging needs a target location".into()));
        }
        Ok(())
    }

    /// The Figure 2 setting: two-component field with `lambda = 0.5` observed
    /// at `s_n = 1/n`, `N = 100`, ten replicates.
    pub fn figure2(seed: u64) -> Self {
        Self {
            experiment: ExperimentKind::McEfpc,
            model: ModelSpec::TwoComponent {
                lambda: 0.5,
                grid: DEFAULT_GRID_SIZE,
            },
            design: DesignSpec::OriginCluster,
            ladder: Ladder::Sizes(vec![100]),
            replicates: 10,
            seed,
            output: None,
            centered: false,
            bounds: BoundsSpec::default(),
            rate: RateSpec::default(),
            target: None,
        }
    }
}
