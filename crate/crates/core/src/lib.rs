//! Memory-bounded streaming metrics for anomaly-detection evaluation.
//!
//! The streaming path accumulates per-bin score counts in a single pass
//! over predictions ([`hist`]) and derives threshold-sweep metrics from
//! those fixed-size sketches: AU-ROC, average precision, F1-max and
//! IoU-max ([`curve`]) plus region-level AU-PRO ([`region`]). The state
//! per metric is a constant number of counters, independent of how many
//! samples stream through.
//!
//! The [`exact`] module holds store-everything reference implementations
//! of every metric, used for differential testing and as a slow path for
//! small datasets. [`report`] assembles per-category rows, the mAD
//! aggregate, and rendered tables.

#![forbid(unsafe_code)]

pub mod curve;
pub mod error;
pub mod exact;
pub mod grid;
pub mod hist;
pub mod region;
pub mod report;

pub use curve::{auroc, average_precision, f1_max, iou_max, roc_points, RocPoint, ThresholdMetric};
pub use error::{EvalError, Result, SampleClass};
pub use exact::{
    exact_auroc, exact_average_precision, exact_f1_max, exact_iou_max, flood_fill_components,
    pro_exact, RawSampleStore,
};
pub use grid::Grid;
pub use hist::{BinSpec, Histogram, ScoreHistogramPair};
pub use region::{aupro, label_components, Connectivity, MaskComponents, RegionAccumulator};
pub use report::{
    mad, render, suite_average, CategoryReport, ReportFormat, SevenMetrics, SuiteReport,
};
