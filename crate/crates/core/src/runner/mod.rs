//! Experiment engine, reports and command-line interface.

pub mod cli;
pub mod config;
pub mod mc;
pub mod rates;
pub mod report;
pub mod svg;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::designs::SamplingType;
use crate::error::{Error, Result};

pub use config::{ExperimentConfig, ExperimentKind, Metric, RateAxis};
pub use mc::{run_bounds, run_classify, run_efpc, run_kriging, run_mc, McReport, McRow};
pub use rates::{rate_fit, RateFit};

use svg::{LinePlot, Series};

/// Files written by an experiment and a short human-readable summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    files.push(path);
    Ok(BufWriter::new(file))
}

fn write_svg(dir: &Path, name: &str, plot: &LinePlot, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, plot.render())?;
    files.push(path);
    Ok(())
}

fn metric_name(metric: Metric) -> &'static str {
    match metric {
        Metric::Mean => "mean",
        Metric::Cov => "cov",
        Metric::Xstar => "xstar",
    }
}

fn mc_plot(report: &McReport) -> LinePlot {
    let param = |r: &McRow| r.rung.param();
    let mut series = vec![Series {
        label: "MC loss".into(),
        points: report.rows.iter().map(|r| (param(r), r.loss_mean)).collect(),
    }];
    for (k, label) in ["general bound", "regular-design bound", "random-design bound"].iter().enumerate() {
        let points: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter_map(|r| r.bounds[k].map(|b| (param(r), b)))
            .collect();
        if !points.is_empty() {
            series.push(Series {
                label: (*label).into(),
                points,
            });
        }
    }
    LinePlot {
        title: format!("{} loss", metric_name(report.metric)),
        x_label: "ladder value".into(),
        y_label: "loss".into(),
        log_x: true,
        log_y: true,
        series,
    }
}

/// Slope of the MC losses of `report` against the chosen ladder axis.
pub fn fit_report(report: &McReport, axis: RateAxis) -> Result<RateFit> {
    let xs = report
        .rows
        .iter()
        .map(|r| match axis {
            RateAxis::N => Ok(r.rung.n as f64),
            RateAxis::Alpha => r
                .alpha
                .ok_or_else(|| Error::Config("design has no scaling alpha_N to fit against".into())),
        })
        .collect::<Result<Vec<f64>>>()?;
    let losses: Vec<f64> = report.rows.iter().map(|r| r.loss_mean).collect();
    rate_fit(&xs, &losses)
}

/// Runs `cfg` and writes its CSV (and optionally SVG) outputs into `out_dir`.
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path, svg: bool) -> Result<Outcome> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::from(e).context(out_dir.display().to_string()))?;
    let mut out = Outcome::default();
    match cfg.experiment {
        ExperimentKind::McMean | ExperimentKind::McCov | ExperimentKind::McXstar => {
            let metric = match cfg.experiment {
                ExperimentKind::McMean => Metric::Mean,
                ExperimentKind::McCov => Metric::Cov,
                _ => Metric::Xstar,
            };
            let report = run_mc(cfg, metric)?;
            let name = format!("mc_{}", metric_name(metric));
            report::write_mc_csv(&report, create(out_dir, &format!("{name}.csv"), &mut out.files)?)?;
            if svg {
                write_svg(out_dir, &format!("{name}.svg"), &mc_plot(&report), &mut out.files)?;
            }
            for row in &report.rows {
                out.summary.push(format!(
                    "step {} param {}: loss {:.6e} +- {:.2e}",
                    row.step,
                    row.rung.param(),
                    row.loss_mean,
                    row.loss_se
                ));
                out.summary.extend(row.warnings.iter().map(|w| format!("warning: {w}")));
            }
        }
        ExperimentKind::McEfpc => {
            let (bundle, report) = run_efpc(cfg)?;
            report::write_efpc_bundle_csv(&bundle, create(out_dir, "efpc_curves.csv", &mut out.files)?)?;
            report::write_efpc_summary_csv(&bundle, create(out_dir, "efpc_summary.csv", &mut out.files)?)?;
            report::write_mc_csv(&report, create(out_dir, "mc_xstar.csv", &mut out.files)?)?;
            if svg {
                let nodes = bundle.grid.nodes();
                let plot = LinePlot {
                    title: format!("leading EFPC, {} replicates", bundle.curves.len()),
                    x_label: "t".into(),
                    y_label: "v1(t)".into(),
                    series: bundle
                        .curves
                        .iter()
                        .enumerate()
                        .map(|(r, c)| Series {
                            label: format!("replicate {}", r + 1),
                            points: nodes.iter().copied().zip(c.values().iter().copied()).collect(),
                        })
                        .collect(),
                    ..Default::default()
                };
                write_svg(out_dir, "efpc_curves.svg", &plot, &mut out.files)?;
            }
            let n = bundle.curves.len() as f64;
            out.summary.push(format!(
                "mean |<v1, f>| = {:.6}, min projection mass = {:.6}",
                bundle.abs_inner_f.iter().sum::<f64>() / n,
                bundle.projection_mass.iter().copied().fold(f64::INFINITY, f64::min)
            ));
        }
        ExperimentKind::Bounds => {
            let rows = run_bounds(cfg)?;
            report::write_bound_rows_csv(&rows, create(out_dir, "bounds.csv", &mut out.files)?)?;
            out.summary.extend(
                rows.iter()
                    .filter_map(|r| r.report.warning.as_ref().map(|w| format!("step {} {}: {w}", r.step, r.report.which))),
            );
        }
        ExperimentKind::Rates => {
            let report = run_mc(cfg, cfg.rate.metric)?;
            let fit = fit_report(&report, cfg.rate.axis)?;
            let name = format!("mc_{}", metric_name(cfg.rate.metric));
            report::write_mc_csv(&report, create(out_dir, &format!("{name}.csv"), &mut out.files)?)?;
            let axis = match cfg.rate.axis {
                RateAxis::N => "n",
                RateAxis::Alpha => "alpha",
            };
            report::write_rate_csv(
                metric_name(cfg.rate.metric),
                axis,
                &fit,
                create(out_dir, "rates.csv", &mut out.files)?,
            )?;
            if svg {
                write_svg(out_dir, &format!("{name}.svg"), &mc_plot(&report), &mut out.files)?;
            }
            out.summary
                .push(format!("slope {:.4} (R^2 = {:.4})", fit.slope, fit.r_squared));
        }
        ExperimentKind::Classify => {
            let rep = run_classify(cfg)?;
            rep.profile
                .write_csv(create(out_dir, "intensity_profile.csv", &mut out.files)?)?;
            if svg {
                let plot = LinePlot {
                    title: format!("intensity profile, N = {}", rep.n),
                    x_label: "rho".into(),
                    y_label: "intensity".into(),
                    log_x: true,
                    log_y: true,
                    series: vec![Series {
                        label: "I_rho".into(),
                        points: rep.profile.radii.iter().copied().zip(rep.profile.values.iter().copied()).collect(),
                    }],
                };
                write_svg(out_dir, "intensity_profile.svg", &plot, &mut out.files)?;
            }
            let line = match rep.classification {
                Some(c) => {
                    let t = match c.sampling_type {
                        SamplingType::A => "A",
                        SamplingType::B => "B",
                        SamplingType::C => "C",
                    };
                    format!("type {t}{}", if c.heuristic { " (heuristic)" } else { "" })
                }
                None => "type unavailable for non-parametric designs".into(),
            };
            std::fs::write(out_dir.join("classification.txt"), format!("{line}\n"))?;
            out.files.push(out_dir.join("classification.txt"));
            out.summary.push(line);
        }
        ExperimentKind::Kriging => {
            let rows = run_kriging(cfg)?;
            report::write_kriging_csv(&rows, create(out_dir, "kriging.csv", &mut out.files)?)?;
            for r in &rows {
                out.summary
                    .push(format!("step {} param {}: mse {:.6e}", r.step, r.rung.param(), r.solution.mse));
            }
        }
    }
    Ok(out)
}
