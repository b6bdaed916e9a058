use std::io::Write;

use super::MetricReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub report: MetricReport,
}

/// Aligned text table with one row per model.
pub fn write_report_text<W: Write>(rows: &[ReportRow], w: &mut W) -> Result<()> {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(5);
    writeln!(
        w,
        "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}",
        "model", "MAE [dB]", "MED [dB]", "RMSE [dB]", "count"
    )?;
    for r in rows {
        let m = &r.report;
        writeln!(
            w,
            "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
            r.name, m.mae, m.med, m.rmse, m.count
        )?;
    }
    Ok(())
}

/// `model,metric,value` lines.
pub fn write_report_csv<W: Write>(rows: &[ReportRow], w: &mut W) -> Result<()> {
    writeln!(w, "model,metric,value")?;
    for r in rows {
        if r.name.contains(',') {
            return Err(Error::invalid(format!(
                "model name {:?} contains a comma",
                r.name
            )));
        }
        let m = &r.report;
        for (k, v) in [
            ("mae", m.mae),
            ("med", m.med),
            ("rmse", m.rmse),
            ("count", m.count as f64),
        ] {
            writeln!(w, "{},{k},{v}", r.name)?;
        }
    }
    Ok(())
}

/// `threshold_db,fraction` lines.
pub fn write_cdf<W: Write>(thresholds: &[f64], fractions: &[f64], w: &mut W) -> Result<()> {
    if thresholds.len() != fractions.len() {
        return Err(Error::invalid(
            "CDF thresholds and fractions differ in length",
        ));
    }
    writeln!(w, "threshold_db,fraction")?;
    for (t, f) in thresholds.iter().zip(fractions) {
        writeln!(w, "{t},{f}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str) -> ReportRow {
        ReportRow {
            name: name.into(),
            report: MetricReport {
                mae: 1.5,
                med: 1.0,
                rmse: 2.0,
                count: 10,
            },
        }
    }

    #[test]
    fn csv_and_text_layout() {
        let mut csv = Vec::new();
        write_report_csv(&[row("r-nerf")], &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert_eq!(
            csv,
            "model,metric,value\nr-nerf,mae,1.5\nr-nerf,med,1\nr-nerf,rmse,2\nr-nerf,count,10\n"
        );
        let mut text = Vec::new();
        write_report_text(&[row("r-nerf"), row("mlp")], &mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("MAE") && text.contains("1.5000"));
        assert!(write_report_csv(&[row("a,b")], &mut Vec::new()).is_err());
    }

    #[test]
    fn cdf_file() {
        let mut out = Vec::new();
        write_cdf(&[0.0, 0.5], &[0.25, 1.0], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "threshold_db,fraction\n0,0.25\n0.5,1\n"
        );
        assert!(write_cdf(&[0.0], &[], &mut Vec::new()).is_err());
    }
}
