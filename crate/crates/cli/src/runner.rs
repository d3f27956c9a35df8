//! Evaluation driver: streams a dataset through the histogram sketches
//! (optionally in parallel), routes the exact oracles, and assembles the
//! suite report.
//!
//! Parallel ingestion is deterministic: images split into fixed-size
//! chunks, each chunk builds its own accumulator set, and chunks merge in
//! index order. The merged state is identical for any worker count, so
//! reports are byte-identical across `--workers` settings.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

use streameval_core::{
    aupro, auroc, average_precision, exact_auroc, exact_average_precision, exact_f1_max,
    exact_iou_max, f1_max, iou_max, label_components, pro_exact, BinSpec, CategoryReport,
    Connectivity, Grid, RawSampleStore, RegionAccumulator, ScoreHistogramPair, SevenMetrics,
    SuiteReport,
};

use crate::dataset::{scan_dataset, DatasetEntry, ScanDepth};
use crate::error::{HarnessError, Result};
use crate::{npy, pngio};

/// Images per parallel work unit; fixed so chunk boundaries (and therefore
/// merge results) never depend on the worker count.
const CHUNK_IMAGES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeSpec {
    Fixed(f64, f64),
    /// Two passes: the first finds the per-category min/max score.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Streaming,
    Exact,
    Differential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageScoreMode {
    MaxPixel,
    MeanPixel,
    /// Model-provided scores from `image_scores.csv`.
    Csv,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub root: PathBuf,
    pub categories: Option<Vec<String>>,
    pub bins: usize,
    pub range: RangeSpec,
    pub fpr_limit: f64,
    pub connectivity: Connectivity,
    pub mode: EvalMode,
    pub workers: usize,
    pub image_score: ImageScoreMode,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(HarnessError::Usage(format!(
                "--bins must be at least 2, got {}",
                self.bins
            )));
        }
        if self.workers < 1 {
            return Err(HarnessError::Usage("--workers must be at least 1".into()));
        }
        if !(self.fpr_limit > 0.0 && self.fpr_limit <= 1.0) {
            return Err(HarnessError::Usage(format!(
                "--fpr-limit must lie in (0, 1], got {}",
                self.fpr_limit
            )));
        }
        if let RangeSpec::Fixed(lo, hi) = self.range {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(HarnessError::Usage(format!(
                    "--range needs finite lo < hi, got {lo},{hi}"
                )));
            }
        }
        Ok(())
    }
}

/// File-open counters, exposed so tests can assert the single-pass
/// contract.
#[derive(Debug, Default)]
pub struct IoStats {
    score_opens: AtomicU64,
    mask_opens: AtomicU64,
}

impl IoStats {
    pub fn score_opens(&self) -> u64 {
        self.score_opens.load(Ordering::Relaxed)
    }

    pub fn mask_opens(&self) -> u64 {
        self.mask_opens.load(Ordering::Relaxed)
    }
}

#[derive(Debug)]
pub struct CategoryFailure {
    pub category: String,
    pub message: String,
}

#[derive(Debug)]
pub struct RunOutcome {
    /// Per-category rows for every category that evaluated cleanly.
    pub report: Option<SuiteReport>,
    pub failures: Vec<CategoryFailure>,
    /// stderr-bound notes (clamped-sample tallies and the like).
    pub warnings: Vec<String>,
    pub io: IoStats,
}

impl RunOutcome {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Evaluate a dataset per the config. Failing categories are collected and
/// skipped; the caller decides the exit status from `failures`.
pub fn run_eval(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let entries = scan_dataset(
        &config.root,
        config.categories.as_deref(),
        ScanDepth::Structure,
    )?;
    if entries.is_empty() {
        return Err(HarnessError::Validation(format!(
            "no images found under {}",
            config.root.display()
        )));
    }

    let mut by_category: BTreeMap<String, Vec<DatasetEntry>> = BTreeMap::new();
    for entry in entries {
        by_category.entry(entry.category.clone()).or_default().push(entry);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot build worker pool: {e}")))?;

    let io = IoStats::default();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    for (category, entries) in &by_category {
        let result = pool.install(|| evaluate_category(config, category, entries, &io));
        match result {
            Ok(output) => {
                let (low, high) = output.clamped;
                if low + high > 0 {
                    warnings.push(format!(
                        "{category}: {low} samples clamped below lo, {high} above hi"
                    ));
                }
                rows.push(output.row);
            }
            Err(e) => failures.push(CategoryFailure {
                category: category.clone(),
                message: e.to_string(),
            }),
        }
    }
    let report = if rows.is_empty() {
        None
    } else {
        Some(SuiteReport::from_rows(rows)?)
    };
    Ok(RunOutcome {
        report,
        failures,
        warnings,
        io,
    })
}

struct CategoryOutput {
    row: CategoryReport,
    clamped: (u64, u64),
}

fn evaluate_category(
    config: &RunConfig,
    category: &str,
    entries: &[DatasetEntry],
    io: &IoStats,
) -> Result<CategoryOutput> {
    match config.mode {
        EvalMode::Streaming => evaluate_streaming(config, category, entries, io),
        EvalMode::Exact => evaluate_exact(config, category, entries, io),
        EvalMode::Differential => {
            let streaming = evaluate_streaming(config, category, entries, io)?;
            let exact = evaluate_exact(config, category, entries, io)?;
            let tolerance = 2.0 / config.bins as f64;
            let s = &streaming.row;
            let e = &exact.row;
            let deltas = [
                ("img_auroc", s.img_auroc, e.img_auroc),
                ("img_ap", s.img_ap, e.img_ap),
                ("img_f1max", s.img_f1max, e.img_f1max),
                ("px_auroc", s.px_auroc, e.px_auroc),
                ("px_ap", s.px_ap, e.px_ap),
                ("px_f1max", s.px_f1max, e.px_f1max),
                ("aupro", s.aupro, e.aupro),
                ("iou_max", s.iou_max, e.iou_max),
            ];
            for (name, sv, ev) in deltas {
                if (sv - ev).abs() > tolerance {
                    return Err(HarnessError::Validation(format!(
                        "differential check failed for {name}: streaming {sv} vs exact {ev} \
                         (|delta| > {tolerance})"
                    )));
                }
            }
            Ok(streaming)
        }
    }
}

struct LoadedImage {
    scores: Grid<f32>,
    mask: Option<Grid<u8>>,
    label: u8,
}

fn load_image(entry: &DatasetEntry, io: &IoStats) -> Result<LoadedImage> {
    io.score_opens.fetch_add(1, Ordering::Relaxed);
    let scores = npy::load_score_map(&entry.score_path)?;
    let mask = match &entry.mask_path {
        Some(path) => {
            io.mask_opens.fetch_add(1, Ordering::Relaxed);
            let mask = pngio::load_mask(path)?;
            if mask.shape() != scores.shape() {
                return Err(HarnessError::Validation(format!(
                    "{}: score map shape {:?} does not match mask shape {:?}",
                    entry.score_path.display(),
                    scores.shape(),
                    mask.shape()
                )));
            }
            Some(mask)
        }
        None => None,
    };
    let has_fg = mask
        .as_ref()
        .is_some_and(|m| m.data().iter().any(|&v| v != 0));
    if has_fg != (entry.label == 1) {
        return Err(HarnessError::Validation(format!(
            "{}/{}: label {} does not match mask foreground ({})",
            entry.category,
            entry.image_id,
            entry.label,
            if has_fg { "present" } else { "absent" }
        )));
    }
    Ok(LoadedImage {
        scores,
        mask,
        label: entry.label,
    })
}

fn pooled_image_score(scores: &Grid<f32>, mode: ImageScoreMode) -> f64 {
    match mode {
        ImageScoreMode::MaxPixel => scores
            .data()
            .iter()
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v as f64)),
        ImageScoreMode::MeanPixel => {
            scores.data().iter().map(|&v| v as f64).sum::<f64>() / scores.data().len() as f64
        }
        ImageScoreMode::Csv => unreachable!("csv scores come from the sidecar"),
    }
}

fn sidecar_scores(config: &RunConfig, category: &str) -> Result<Option<BTreeMap<String, f64>>> {
    if config.image_score != ImageScoreMode::Csv {
        return Ok(None);
    }
    let path = config.root.join(category).join("image_scores.csv");
    if !path.is_file() {
        return Err(HarnessError::Validation(format!(
            "--image-score csv needs {}",
            path.display()
        )));
    }
    Ok(Some(crate::dataset::read_image_scores_csv(&path)?))
}

/// Accumulator set for one category (or one chunk of its images).
struct StreamState {
    img_pair: ScoreHistogramPair,
    px_pair: ScoreHistogramPair,
    regions: RegionAccumulator,
}

impl StreamState {
    fn new(spec: BinSpec) -> Self {
        Self {
            img_pair: ScoreHistogramPair::new(spec),
            px_pair: ScoreHistogramPair::new(spec),
            regions: RegionAccumulator::new(spec),
        }
    }

    fn ingest(
        &mut self,
        entry: &DatasetEntry,
        sidecar: Option<&BTreeMap<String, f64>>,
        config: &RunConfig,
        io: &IoStats,
    ) -> Result<()> {
        let image = load_image(entry, io)?;
        let img_score = match sidecar {
            Some(map) => *map.get(&entry.image_id).ok_or_else(|| {
                HarnessError::Validation(format!(
                    "{}/{}: no row in image_scores.csv",
                    entry.category, entry.image_id
                ))
            })?,
            None => pooled_image_score(&image.scores, config.image_score),
        };
        self.img_pair.push(img_score, image.label == 1)?;
        self.px_pair
            .accumulate_image(&image.scores, image.mask.as_ref())?;
        match &image.mask {
            Some(mask) => {
                let comps = label_components(mask, config.connectivity);
                self.regions.accumulate(&image.scores, &comps)?;
            }
            None => self.regions.accumulate_background(&image.scores)?,
        }
        Ok(())
    }

    fn merge_from(&mut self, other: &StreamState) -> Result<()> {
        self.img_pair.merge_from(&other.img_pair)?;
        self.px_pair.merge_from(&other.px_pair)?;
        self.regions.merge_from(&other.regions)?;
        Ok(())
    }

    fn clamped(&self) -> (u64, u64) {
        let mut low = 0;
        let mut high = 0;
        for hist in [
            self.img_pair.pos(),
            self.img_pair.neg(),
            self.px_pair.pos(),
            self.px_pair.neg(),
        ] {
            low += hist.clamped().0;
            high += hist.clamped().1;
        }
        let (rl, rh) = self.regions.clamped();
        (low + rl, high + rh)
    }
}

fn category_range(entries: &[DatasetEntry], io: &IoStats) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for entry in entries {
        io.score_opens.fetch_add(1, Ordering::Relaxed);
        let scores = npy::load_score_map(&entry.score_path)?;
        for &v in scores.data() {
            lo = lo.min(v as f64);
            hi = hi.max(v as f64);
        }
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(HarnessError::Validation(
            "auto range found non-finite scores".into(),
        ));
    }
    if lo == hi {
        hi = lo + 1.0;
    }
    Ok((lo, hi))
}

fn evaluate_streaming(
    config: &RunConfig,
    category: &str,
    entries: &[DatasetEntry],
    io: &IoStats,
) -> Result<CategoryOutput> {
    let (lo, hi) = match config.range {
        RangeSpec::Fixed(lo, hi) => (lo, hi),
        RangeSpec::Auto => category_range(entries, io)?,
    };
    let spec = BinSpec::new(lo, hi, config.bins)?;
    let sidecar = sidecar_scores(config, category)?;

    let mut state = StreamState::new(spec);
    if config.workers <= 1 {
        // sequential fast path: exactly one accumulator set plus the image
        // in flight
        for entry in entries {
            state.ingest(entry, sidecar.as_ref(), config, io)?;
        }
    } else {
        // fixed-size chunks, processed `workers` at a time, merged in
        // chunk order: identical output for any worker count and bounded
        // live state
        let chunks: Vec<&[DatasetEntry]> = entries.chunks(CHUNK_IMAGES).collect();
        for wave in chunks.chunks(config.workers) {
            let results: Vec<Result<StreamState>> = {
                use rayon::prelude::*;
                wave.par_iter()
                    .map(|chunk| {
                        let mut chunk_state = StreamState::new(spec);
                        for entry in *chunk {
                            chunk_state.ingest(entry, sidecar.as_ref(), config, io)?;
                        }
                        Ok(chunk_state)
                    })
                    .collect()
            };
            for result in results {
                state.merge_from(&result?)?;
            }
        }
    }

    let row = streaming_row(category, &state, config.fpr_limit)?;
    Ok(CategoryOutput {
        row,
        clamped: state.clamped(),
    })
}

fn streaming_row(category: &str, state: &StreamState, fpr_limit: f64) -> Result<CategoryReport> {
    let metrics = SevenMetrics {
        img_auroc: auroc(&state.img_pair)?,
        img_ap: average_precision(&state.img_pair)?,
        img_f1max: f1_max(&state.img_pair)?.value,
        px_auroc: auroc(&state.px_pair)?,
        px_ap: average_precision(&state.px_pair)?,
        px_f1max: f1_max(&state.px_pair)?.value,
        aupro: aupro(&state.regions, fpr_limit)?,
    };
    let iou = iou_max(&state.px_pair)?.value;
    Ok(CategoryReport::new(category, metrics, iou)?)
}

fn evaluate_exact(
    config: &RunConfig,
    category: &str,
    entries: &[DatasetEntry],
    io: &IoStats,
) -> Result<CategoryOutput> {
    let sidecar = sidecar_scores(config, category)?;
    let mut img_store = RawSampleStore::new();
    let mut px_store = RawSampleStore::new();
    let mut score_maps = Vec::with_capacity(entries.len());
    let mut masks = Vec::with_capacity(entries.len());
    for entry in entries {
        let image = load_image(entry, io)?;
        let img_score = match &sidecar {
            Some(map) => *map.get(&entry.image_id).ok_or_else(|| {
                HarnessError::Validation(format!(
                    "{}/{}: no row in image_scores.csv",
                    entry.category, entry.image_id
                ))
            })?,
            None => pooled_image_score(&image.scores, config.image_score),
        };
        img_store.push(img_score, image.label == 1)?;
        let (h, w) = image.scores.shape();
        let mask = image.mask.unwrap_or_else(|| Grid::filled(0u8, h, w));
        for (&s, &m) in image.scores.data().iter().zip(mask.data()) {
            px_store.push(s as f64, m != 0)?;
        }
        score_maps.push(image.scores);
        masks.push(mask);
    }

    let metrics = SevenMetrics {
        img_auroc: exact_auroc(&img_store)?,
        img_ap: exact_average_precision(&img_store)?,
        img_f1max: exact_f1_max(&img_store)?.value,
        px_auroc: exact_auroc(&px_store)?,
        px_ap: exact_average_precision(&px_store)?,
        px_f1max: exact_f1_max(&px_store)?.value,
        aupro: pro_exact(&score_maps, &masks, config.connectivity, config.fpr_limit)?,
    };
    let iou = exact_iou_max(&px_store)?.value;
    Ok(CategoryOutput {
        row: CategoryReport::new(category, metrics, iou)?,
        clamped: (0, 0),
    })
}
