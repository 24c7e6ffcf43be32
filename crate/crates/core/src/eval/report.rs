use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricLine {
    pub metric: String,
    pub value: f64,
    pub ci_half_width: Option<f64>,
}

impl MetricLine {
    pub fn new(metric: impl Into<String>, value: f64, ci_half_width: Option<f64>) -> Self {
        MetricLine { metric: metric.into(), value, ci_half_width }
    }
}

/// `metric,value,ci_half_width` lines with a header; missing CIs are empty.
pub fn write_metric_lines<W: Write>(mut w: W, lines: &[MetricLine]) -> Result<()> {
    writeln!(w, "metric,value,ci_half_width")?;
    for l in lines {
        let ci = l.ci_half_width.map(|c| format!("{c:.6}")).unwrap_or_default();
        writeln!(w, "{},{:.6},{}", l.metric, l.value, ci)?;
    }
    Ok(())
}

pub fn format_table(lines: &[MetricLine]) -> String {
    let width = lines.iter().map(|l| l.metric.len()).max().unwrap_or(6).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}", "metric", "value", "± 95%");
    for l in lines {
        let ci = l.ci_half_width.map(|c| format!("{c:.4}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(out, "{:<width$}  {:>8.4}  {:>8}", l.metric, l.value, ci);
    }
    out
}
