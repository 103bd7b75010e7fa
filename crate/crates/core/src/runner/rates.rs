//! Log-log least squares for empirical convergence rates.

use serde::Serialize;

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// OLS of `ln loss` on `ln x`.
pub fn rate_fit(xs: &[f64], losses: &[f64]) -> Result<RateFit> {
    if xs.len() != losses.len() {
        return Err(param("xs and losses differ in length"));
    }
    if xs.len() < 3 {
        return Err(param("a rate fit needs at least three points"));
    }
    if losses.iter().any(|l| !(*l > 0.0)) || xs.iter().any(|x| !(*x > 0.0)) {
        return Err(param("rate fit needs positive ladder values and losses"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = losses.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(param("ladder values must not all coincide"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_laws() {
        let xs = [50.0, 100.0, 200.0, 400.0];
        let fit = rate_fit(&xs, &xs.map(|x| 3.0 / x)).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let fit = rate_fit(&xs, &xs.map(|x| 0.5 / (x * x))).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_corrected_slope() {
        let xs: Vec<f64> = (0..=20).map(|i| 10f64.powf(2.0 + i as f64 / 10.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|a| a.ln() / (a * a)).collect();
        let s = rate_fit(&xs, &ys).unwrap().slope;
        assert!(s > -2.0 && s < -1.6, "{s}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rate_fit(&[1.0, 2.0, 3.0], &[1.0, 0.0, 1.0]).is_err());
        assert!(rate_fit(&[1.0, 2.0], &[1.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn scale_changes_intercept_only(c in 1e-3f64..1e3, ys in proptest::collection::vec(1e-4f64..10.0, 3..10)) {
            let xs: Vec<f64> = (1..=ys.len()).map(|k| k as f64 * 10.0).collect();
            let a = rate_fit(&xs, &ys).unwrap();
            let scaled: Vec<f64> = ys.iter().map(|y| c * y).collect();
            let b = rate_fit(&xs, &scaled).unwrap();
            prop_assert!((a.slope - b.slope).abs() < 1e-12);
            prop_assert!((b.intercept - a.intercept - c.ln()).abs() < 1e-9);
        }
    }
}
