//! Error metrics, error CDFs, baselines and comparative experiments.

mod experiments;
mod mlp;
mod mri;
mod report;
mod single_stage;

pub use experiments::{
    evaluate, fraction_sweep, run_ablation, AblationConfig, AblationRow, ExperimentConfig,
    SweepPoint,
};
pub use mlp::DirectMlp;
pub use mri::MriBaseline;
pub use report::{write_cdf, write_report_csv, write_report_text, ReportRow};
pub use single_stage::SingleStageModel;

use crate::error::{Error, Result};

/// MAE, median and RMSE of absolute errors in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mae: f64,
    pub med: f64,
    pub rmse: f64,
    pub count: usize,
}

fn abs_errors(pred: &[f64], truth: &[f64]) -> Result<Vec<f64>> {
    if pred.is_empty() || pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "metrics need equal non-empty lengths, got {} predictions and {} targets",
            pred.len(),
            truth.len()
        )));
    }
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).collect())
}

pub fn metrics(pred: &[f64], truth: &[f64]) -> Result<MetricReport> {
    let mut err = abs_errors(pred, truth)?;
    let n = err.len();
    let mae = err.iter().sum::<f64>() / n as f64;
    let rmse = (err.iter().map(|e| e * e).sum::<f64>() / n as f64).sqrt();
    err.sort_by(f64::total_cmp);
    let med = if n % 2 == 1 {
        err[n / 2]
    } else {
        0.5 * (err[n / 2 - 1] + err[n / 2])
    };
    Ok(MetricReport {
        mae,
        med,
        rmse,
        count: n,
    })
}

/// Fraction of absolute errors at or below each threshold.
pub fn error_cdf(pred: &[f64], truth: &[f64], thresholds: &[f64]) -> Result<Vec<f64>> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) || thresholds.iter().any(|t| t.is_nan()) {
        return Err(Error::invalid("CDF thresholds must be sorted ascending"));
    }
    let mut err = abs_errors(pred, truth)?;
    err.sort_by(f64::total_cmp);
    let n = err.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| err.partition_point(|&e| e <= t) as f64 / n)
        .collect())
}

/// 0 dB to 20 dB in 0.25 dB steps.
pub fn default_cdf_thresholds() -> Vec<f64> {
    (0..=80).map(|i| i as f64 * 0.25).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn metric_examples() {
        let m = metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((m.mae, m.med, m.rmse), (0.0, 0.0, 0.0));

        let m = metrics(&[1.0, -2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        assert!((m.mae - 2.0).abs() < 1e-15 && (m.med - 2.0).abs() < 1e-15);
        assert!((m.rmse - (14.0f64 / 3.0).sqrt()).abs() < 1e-12);

        let m = metrics(&[0.0, 4.0], &[0.0, 0.0]).unwrap();
        assert_eq!((m.mae, m.med), (2.0, 2.0));
        assert!((m.rmse - 8f64.sqrt()).abs() < 1e-12);

        assert!(metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(metrics(&[], &[]).is_err());
    }

    #[test]
    fn cdf_examples() {
        let truth = [0.0; 3];
        let pred = [1.0, -3.0, 7.0];
        let c = error_cdf(&pred, &truth, &[2.0, 5.0, 10.0]).unwrap();
        assert_eq!(c, vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert_eq!(error_cdf(&pred, &truth, &[0.5]).unwrap(), vec![0.0]);
        assert_eq!(error_cdf(&pred, &truth, &[7.0]).unwrap(), vec![1.0]);
        assert!(error_cdf(&pred, &truth, &[5.0, 2.0]).is_err());
        let t = default_cdf_thresholds();
        assert_eq!((t.len(), t[0], t[80]), (81, 0.0, 20.0));
    }

    proptest! {
        #[test]
        fn metric_invariants(pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..60)) {
            let (pred, truth): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = metrics(&pred, &truth).unwrap();
            let mean_err = pred.iter().zip(&truth).map(|(p, t)| p - t).sum::<f64>() / pred.len() as f64;
            let max_err = pred.iter().zip(&truth).map(|(p, t)| (p - t).abs()).fold(0.0, f64::max);
            prop_assert!(m.mae >= 0.0 && m.med >= 0.0);
            prop_assert!(m.rmse >= m.mae - 1e-12);
            prop_assert!(m.rmse >= mean_err.abs() - 1e-12);
            prop_assert!(m.med <= max_err + 1e-12);
            let cdf = error_cdf(&pred, &truth, &default_cdf_thresholds()).unwrap();
            prop_assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(cdf.iter().all(|&f| (0.0..=1.0).contains(&f)));
        }
    }
}
