//! Ordinary least squares over per-point metric means.
//!
//! Two scales cover every registered claim: log-log, where the slope is a
//! power-law exponent, and semi-log (log abscissa, linear ordinate),
//! where a straight line means logarithmic growth and the slope is its
//! coefficient. Both are plain two-parameter OLS with the textbook
//! standard error; no external solver is involved.

use serde::{Deserialize, Serialize};

use crate::spec::Axis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    LogLog,
    SemiLog,
}

/// One grid point after aggregation over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub value: f64,
    pub mean: f64,
    pub stddev: f64,
    pub seeds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub axis: Axis,
    pub scale: Scale,
    pub points: Vec<FitPoint>,
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% interval on the slope (1.96 standard
    /// errors; the sweeps have too few points for t-table theatrics).
    pub ci95: f64,
    pub r2: f64,
    /// Grid points dropped because a log scale cannot take them.
    pub excluded: u32,
    /// At least four distinct values and ten seeds per kept point.
    pub meets_preconditions: bool,
}

/// Slope/intercept/r² of a plain linear regression, reused by both
/// scales and exposed for functional-form checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub se_slope: f64,
}

pub fn linear_fit(xy: &[(f64, f64)]) -> Option<LinFit> {
    let m = xy.len();
    if m < 2 {
        return None;
    }
    let mf = m as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xy
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let sst: f64 = xy.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let r2 = if sst == 0.0 { 1.0 } else { 1.0 - sse / sst };
    let se_slope = if m > 2 {
        (sse / (mf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LinFit {
        slope,
        intercept,
        r2,
        se_slope,
    })
}

/// Fit per-point samples on the chosen scale. Points whose mean a log
/// ordinate cannot take (zero, negative) are excluded and counted.
pub fn fit_scaling(
    axis: Axis,
    scale: Scale,
    samples: &[(f64, Vec<f64>)],
) -> Option<ScalingFit> {
    let mut points = Vec::new();
    let mut excluded = 0u32;
    for (value, ys) in samples {
        if ys.is_empty() {
            excluded += 1;
            continue;
        }
        let mf = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / mf;
        let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / mf;
        let keep = *value > 0.0 && (scale == Scale::SemiLog || mean > 0.0);
        if !keep {
            excluded += 1;
            continue;
        }
        points.push(FitPoint {
            value: *value,
            mean,
            stddev: var.sqrt(),
            seeds: ys.len() as u32,
        });
    }
    // Canonical point order, so aggregation never depends on how the
    // caller happened to arrange the table.
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let x = p.value.ln();
            let y = match scale {
                Scale::LogLog => p.mean.ln(),
                Scale::SemiLog => p.mean,
            };
            (x, y)
        })
        .collect();
    let lin = linear_fit(&xy)?;
    let meets = points.len() >= 4 && points.iter().all(|p| p.seeds >= 10);
    Some(ScalingFit {
        axis,
        scale,
        points,
        slope: lin.slope,
        intercept: lin.intercept,
        ci95: 1.96 * lin.se_slope,
        r2: lin.r2,
        excluded,
        meets_preconditions: meets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(vs: &[(f64, f64)]) -> Vec<(f64, Vec<f64>)> {
        vs.iter().map(|&(v, y)| (v, vec![y])).collect()
    }

    #[test]
    fn exact_power_law_recovers_its_exponent() {
        let data = single(&[8.0, 16.0, 32.0, 64.0, 128.0].map(|n| (n, 7.0 * n * n)));
        let fit = fit_scaling(Axis::N, Scale::LogLog, &data).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-6, "slope {}", fit.slope);
        assert!((fit.intercept - 7.0f64.ln()).abs() < 1e-6);
        assert!(fit.r2 > 0.999_999);
        assert!(fit.ci95 < 1e-6);
    }

    #[test]
    fn constants_fit_flat() {
        let data = single(&[8.0, 16.0, 32.0, 64.0].map(|n| (n, 5.0)));
        let fit = fit_scaling(Axis::N, Scale::LogLog, &data).unwrap();
        assert!(fit.slope.abs() < 0.02, "slope {}", fit.slope);
        assert_eq!(fit.r2, 1.0); // zero total variance counts as explained
    }

    #[test]
    fn semilog_recovers_a_log_coefficient() {
        let data = single(&[8.0, 16.0, 32.0, 64.0, 128.0].map(|n: f64| (n, 3.0 * n.ln())));
        let fit = fit_scaling(Axis::N, Scale::SemiLog, &data).unwrap();
        assert!((fit.slope - 3.0).abs() < 0.15, "slope {}", fit.slope);
        assert!(fit.r2 > 0.999);
    }

    #[test]
    fn nonpositive_means_are_excluded_not_fatal() {
        let data = single(&[(8.0, 64.0), (16.0, 0.0), (32.0, 1024.0), (64.0, 4096.0)]);
        let fit = fit_scaling(Axis::N, Scale::LogLog, &data).unwrap();
        assert_eq!(fit.excluded, 1);
        assert_eq!(fit.points.len(), 3);
        assert!(!fit.meets_preconditions);
        // The surviving points lie exactly on n^2.
        assert!((fit.slope - 2.0).abs() < 1e-6);
    }

    #[test]
    fn noise_shows_up_in_the_interval() {
        let data: Vec<(f64, Vec<f64>)> = [8.0, 16.0, 32.0, 64.0f64]
            .iter()
            .map(|&n| (n, vec![n * 0.9, n * 1.1, n, n * 1.05]))
            .collect();
        let fit = fit_scaling(Axis::N, Scale::LogLog, &data).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05);
        assert!(fit.ci95 > 0.0);
        assert!(fit.points.iter().all(|p| p.stddev > 0.0));
    }

    #[test]
    fn too_few_points_yield_nothing() {
        assert!(fit_scaling(Axis::N, Scale::LogLog, &single(&[(8.0, 3.0)])).is_none());
        assert!(linear_fit(&[(1.0, 1.0), (1.0, 2.0)]).is_none(), "zero x-spread");
    }

    #[test]
    fn shuffling_sample_order_never_changes_the_fit() {
        let fwd = single(&[(8.0, 10.0), (16.0, 21.0), (32.0, 39.0), (64.0, 80.0)]);
        let mut rev = fwd.clone();
        rev.reverse();
        let a = fit_scaling(Axis::N, Scale::LogLog, &fwd).unwrap();
        let b = fit_scaling(Axis::N, Scale::LogLog, &rev).unwrap();
        assert_eq!(a.slope, b.slope);
        assert_eq!(a.r2, b.r2);
    }
}
