//! CSV writers for experiment results.

use std::io::Write;

use crate::bounds::BoundReport;
use crate::designs::format_float;
use crate::error::Result;

use super::mc::{BoundRow, EfpcBundle, KrigingRow, McReport};
use super::rates::RateFit;

pub const MC_HEADER: [&str; 8] = [
    "step",
    "param",
    "loss_mean",
    "loss_se",
    "bound_5_1",
    "bound_5_2",
    "bound_5_3",
    "replicates",
];

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub fn write_mc_csv<W: Write>(report: &McReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(MC_HEADER)?;
    for row in &report.rows {
        w.write_record([
            row.step.to_string(),
            format_float(row.rung.param()),
            format_float(row.loss_mean),
            format_float(row.loss_se),
            opt(row.bounds[0]),
            opt(row.bounds[1]),
            opt(row.bounds[2]),
            row.losses.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Replicate curves side by side: `t,v1_rep1,...,v1_repR`.
pub fn write_efpc_bundle_csv<W: Write>(bundle: &EfpcBundle, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header =
        std::iter::once("t".to_string()).chain((1..=bundle.curves.len()).map(|r| format!("v1_rep{r}")));
    w.write_record(header)?;
    for i in 0..bundle.grid.size() {
        w.write_record(
            std::iter::once(format_float(bundle.grid.node(i)))
                .chain(bundle.curves.iter().map(|c| format_float(c.values()[i]))),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_efpc_summary_csv<W: Write>(bundle: &EfpcBundle, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["replicate", "abs_inner_f", "projection_mass", "inner_e1"])?;
    for r in 0..bundle.curves.len() {
        w.write_record([
            (r + 1).to_string(),
            format_float(bundle.abs_inner_f[r]),
            format_float(bundle.projection_mass[r]),
            format_float(bundle.inner_e1[r]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rate_csv<W: Write>(metric: &str, axis: &str, fit: &RateFit, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["metric", "axis", "slope", "intercept", "r_squared"])?;
    w.write_record([
        metric.to_string(),
        axis.to_string(),
        format_float(fit.slope),
        format_float(fit.intercept),
        format_float(fit.r_squared),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn write_kriging_csv<W: Write>(rows: &[KrigingRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "param", "mse", "jitter", "weight_sum"])?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            format_float(r.rung.param()),
            format_float(r.solution.mse),
            format_float(r.solution.jitter),
            format_float(r.solution.weights.iter().sum()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bound_rows_csv<W: Write>(rows: &[BoundRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "param"].into_iter().chain(BoundReport::CSV_HEADER))?;
    for r in rows {
        w.write_record(
            [r.step.to_string(), format_float(r.rung.param())]
                .into_iter()
                .chain(r.report.csv_record()),
        )?;
    }
    w.flush()?;
    Ok(())
}
