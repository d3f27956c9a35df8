//! Per-category metric rows, the mAD aggregate, and report rendering.
//!
//! Values are stored as fractions in `[0, 1]` at full precision; rounding
//! to one decimal of a percentage happens only when a table is rendered.

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

/// The seven metrics that mAD averages, in report column order.
pub const MAD_METRICS: [&str; 7] = [
    "img_auroc",
    "img_ap",
    "img_f1max",
    "px_auroc",
    "px_ap",
    "px_f1max",
    "aupro",
];

/// One category's metric row. `mad` averages the seven canonical metrics;
/// `iou_max` is reported alongside but excluded from the average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub category: String,
    pub img_auroc: f64,
    pub img_ap: f64,
    pub img_f1max: f64,
    pub px_auroc: f64,
    pub px_ap: f64,
    pub px_f1max: f64,
    pub aupro: f64,
    pub iou_max: f64,
    pub mad: f64,
}

/// The seven mAD inputs in column order: image-level AUROC/AP/F1-max,
/// pixel-level AUROC/AP/F1-max, AU-PRO.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SevenMetrics {
    pub img_auroc: f64,
    pub img_ap: f64,
    pub img_f1max: f64,
    pub px_auroc: f64,
    pub px_ap: f64,
    pub px_f1max: f64,
    pub aupro: f64,
}

impl SevenMetrics {
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.img_auroc,
            self.img_ap,
            self.img_f1max,
            self.px_auroc,
            self.px_ap,
            self.px_f1max,
            self.aupro,
        ]
    }
}

/// Arithmetic mean of the seven canonical metrics, each in `[0, 1]`.
pub fn mad(values: &[f64; 7]) -> Result<f64> {
    for (name, &v) in MAD_METRICS.iter().zip(values) {
        if !(0.0..=1.0).contains(&v) {
            return Err(EvalError::MetricOutOfRange {
                name: (*name).to_string(),
                value: v,
            });
        }
    }
    Ok(values.iter().sum::<f64>() / 7.0)
}

impl CategoryReport {
    /// Assemble a row, computing `mad` from the seven canonical metrics.
    pub fn new(category: impl Into<String>, metrics: SevenMetrics, iou_max: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&iou_max) {
            return Err(EvalError::MetricOutOfRange {
                name: "iou_max".to_string(),
                value: iou_max,
            });
        }
        let mad = mad(&metrics.as_array())?;
        Ok(Self {
            category: category.into(),
            img_auroc: metrics.img_auroc,
            img_ap: metrics.img_ap,
            img_f1max: metrics.img_f1max,
            px_auroc: metrics.px_auroc,
            px_ap: metrics.px_ap,
            px_f1max: metrics.px_f1max,
            aupro: metrics.aupro,
            iou_max,
            mad,
        })
    }

    fn fields(&self) -> [f64; 9] {
        [
            self.img_auroc,
            self.img_ap,
            self.img_f1max,
            self.px_auroc,
            self.px_ap,
            self.px_f1max,
            self.aupro,
            self.iou_max,
            self.mad,
        ]
    }
}

/// All category rows plus their unweighted per-field mean, named "Avg".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<CategoryReport>,
    pub avg: CategoryReport,
}

impl SuiteReport {
    pub fn from_rows(rows: Vec<CategoryReport>) -> Result<Self> {
        let avg = suite_average(&rows)?;
        Ok(Self { rows, avg })
    }
}

/// Unweighted per-field mean over category rows, named "Avg".
pub fn suite_average(rows: &[CategoryReport]) -> Result<CategoryReport> {
    if rows.is_empty() {
        return Err(EvalError::EmptySuite);
    }
    let n = rows.len() as f64;
    let mut sums = [0.0f64; 9];
    for row in rows {
        for (sum, v) in sums.iter_mut().zip(row.fields()) {
            *sum += v;
        }
    }
    Ok(CategoryReport {
        category: "Avg".to_string(),
        img_auroc: sums[0] / n,
        img_ap: sums[1] / n,
        img_f1max: sums[2] / n,
        px_auroc: sums[3] / n,
        px_ap: sums[4] / n,
        px_f1max: sums[5] / n,
        aupro: sums[6] / n,
        iou_max: sums[7] / n,
        mad: sums[8] / n,
    })
}

/// Output syntax for [`render`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

const COLUMNS: [&str; 10] = [
    "category",
    "img_auroc",
    "img_ap",
    "img_f1max",
    "px_auroc",
    "px_ap",
    "px_f1max",
    "aupro",
    "iou_max",
    "mad",
];

/// Fraction to percentage with one decimal, half-up.
fn pct(value: f64) -> String {
    let scaled = (value * 1000.0).round();
    format!("{:.1}", scaled / 10.0)
}

fn csv_field(s: &str) -> String {
    if s.is_empty() || s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Render a suite report. CSV and markdown show percentages rounded
/// half-up to one decimal; JSON carries the stored full-precision
/// fractions and round-trips to an equal [`SuiteReport`]. Output is
/// deterministic byte for byte.
pub fn render(report: &SuiteReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::new();
            out.push_str(&COLUMNS.join(","));
            out.push('\n');
            for row in report.rows.iter().chain(std::iter::once(&report.avg)) {
                out.push_str(&csv_field(&row.category));
                for v in row.fields() {
                    out.push(',');
                    out.push_str(&pct(v));
                }
                out.push('\n');
            }
            out
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            out.push_str("| ");
            out.push_str(&COLUMNS.join(" | "));
            out.push_str(" |\n|");
            out.push_str(&COLUMNS.map(|_| " --- |").concat());
            out.push('\n');
            for row in report.rows.iter().chain(std::iter::once(&report.avg)) {
                out.push_str("| ");
                out.push_str(&row.category);
                for v in row.fields() {
                    out.push_str(" | ");
                    out.push_str(&pct(v));
                }
                out.push_str(" |\n");
            }
            out
        }
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).expect("metric values are finite")
        }
    }
}
