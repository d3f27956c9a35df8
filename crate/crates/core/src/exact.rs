//! Exact, store-everything reference implementations.
//!
//! These keep every score in memory and sweep every distinct value, which
//! makes them the ground truth the histogram sketch is differential-tested
//! against, and a usable slow path for small datasets. They share no code
//! with the streaming implementations they check: labeling is flood fill
//! instead of union-find, AUROC is a rank statistic instead of a curve
//! integral, and the sweeps enumerate distinct sample values instead of
//! grid edges.

use std::collections::VecDeque;

use crate::error::{EvalError, Result, SampleClass};
use crate::grid::Grid;
use crate::region::{Connectivity, MaskComponents};

/// Growable store of raw `(score, label)` samples: the O(|X|) state the
/// histogram sketch replaces.
#[derive(Debug, Clone, Default)]
pub struct RawSampleStore {
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl RawSampleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, score: f64, label: bool) -> Result<()> {
        if !score.is_finite() {
            return Err(EvalError::NonFiniteScore { value: score });
        }
        self.scores.push(score);
        self.labels.push(label);
        Ok(())
    }

    pub fn accumulate(&mut self, scores: &[f64], labels: &[u8]) -> Result<()> {
        if scores.len() != labels.len() {
            return Err(EvalError::LengthMismatch {
                scores: scores.len(),
                labels: labels.len(),
            });
        }
        for &l in labels {
            if l > 1 {
                return Err(EvalError::InvalidLabel { label: l });
            }
        }
        for (&s, &l) in scores.iter().zip(labels) {
            self.push(s, l == 1)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn num_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Heap footprint of the retained samples.
    pub fn memory_bytes(&self) -> usize {
        self.scores.capacity() * std::mem::size_of::<f64>()
            + self.labels.capacity() * std::mem::size_of::<bool>()
    }

    fn split(&self) -> (Vec<f64>, Vec<f64>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (&s, &l) in self.scores.iter().zip(&self.labels) {
            if l {
                pos.push(s);
            } else {
                neg.push(s);
            }
        }
        (pos, neg)
    }
}

fn sort_desc(v: &mut [f64]) {
    v.sort_by(|a, b| b.partial_cmp(a).expect("scores are finite"));
}

/// Exact AUROC as the Mann-Whitney statistic: the fraction of
/// positive/negative pairs ordered correctly, with half credit for ties.
///
/// Computed from the rank sum in O(n log n); being a rank statistic it is
/// invariant under any strictly increasing score transform.
pub fn exact_auroc(store: &RawSampleStore) -> Result<f64> {
    let (pos, neg) = store.split();
    if pos.is_empty() {
        return Err(EvalError::EmptyClass {
            class: SampleClass::Positive,
        });
    }
    if neg.is_empty() {
        return Err(EvalError::EmptyClass {
            class: SampleClass::Negative,
        });
    }
    // ascending merge with mid-rank tie handling
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("scores are finite"));
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for item in &all[i..j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let p = pos.len() as f64;
    let q = neg.len() as f64;
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(u / (p * q))
}

/// Confusion counts swept over every distinct score, descending. Calls
/// `visit(tp, fp)` once per distinct threshold value.
fn sweep_distinct<F: FnMut(f64, u64, u64)>(pos: &[f64], neg: &[f64], mut visit: F) {
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("scores are finite"));
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut i = 0;
    while i < all.len() {
        let thr = all[i].0;
        while i < all.len() && all[i].0 == thr {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        visit(thr, tp, fp);
    }
}

/// Exact step-interpolated average precision over distinct-score cuts.
pub fn exact_average_precision(store: &RawSampleStore) -> Result<f64> {
    let (pos, neg) = store.split();
    if pos.is_empty() {
        return Err(EvalError::EmptyClass {
            class: SampleClass::Positive,
        });
    }
    let p_total = pos.len() as f64;
    let mut ap = 0.0;
    let mut prev_tp = 0u64;
    sweep_distinct(&pos, &neg, |_thr, tp, fp| {
        if tp > prev_tp {
            let recall_gain = (tp - prev_tp) as f64 / p_total;
            ap += recall_gain * (tp as f64 / (tp + fp) as f64);
        }
        prev_tp = tp;
    });
    Ok(ap)
}

/// A metric value and the exact threshold attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactThresholdMetric {
    pub value: f64,
    pub threshold: f64,
}

fn exact_sweep_max<F>(store: &RawSampleStore, score_at: F) -> Result<ExactThresholdMetric>
where
    F: Fn(u64, u64, u64) -> f64,
{
    let (pos, neg) = store.split();
    if pos.is_empty() {
        return Err(EvalError::EmptyClass {
            class: SampleClass::Positive,
        });
    }
    let p_total = pos.len() as u64;
    let mut best = ExactThresholdMetric {
        value: f64::NEG_INFINITY,
        threshold: f64::INFINITY,
    };
    // descending sweep: strictly better values win, so ties keep the
    // largest threshold (seen first)
    sweep_distinct(&pos, &neg, |thr, tp, fp| {
        let value = score_at(tp, fp, p_total - tp);
        if value > best.value {
            best = ExactThresholdMetric {
                value,
                threshold: thr,
            };
        }
    });
    Ok(best)
}

/// Exact maximum F1 over all distinct-score thresholds.
pub fn exact_f1_max(store: &RawSampleStore) -> Result<ExactThresholdMetric> {
    exact_sweep_max(store, |tp, fp, fn_count| {
        if tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_count) as f64
        }
    })
}

/// Exact maximum IoU over all distinct-score thresholds.
pub fn exact_iou_max(store: &RawSampleStore) -> Result<ExactThresholdMetric> {
    exact_sweep_max(store, |tp, fp, fn_count| {
        if tp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp + fn_count) as f64
        }
    })
}

/// Brute-force flood-fill connected components; the independent oracle for
/// the two-pass union-find labeler.
pub fn flood_fill_components(mask: &Grid<u8>, connectivity: Connectivity) -> MaskComponents {
    let (h, w) = mask.shape();
    let mut labels = Grid::filled(0u32, h, w);
    let mut region_sizes = Vec::new();
    let mut queue = VecDeque::new();
    for row in 0..h {
        for col in 0..w {
            if *mask.get(row, col) == 0 || *labels.get(row, col) != 0 {
                continue;
            }
            region_sizes.push(0u64);
            let id = region_sizes.len() as u32;
            labels.set(row, col, id);
            queue.push_back((row, col));
            while let Some((r, c)) = queue.pop_front() {
                region_sizes[(id - 1) as usize] += 1;
                let mut try_visit = |rr: isize, cc: isize, labels: &mut Grid<u32>| {
                    if rr < 0 || cc < 0 || rr as usize >= h || cc as usize >= w {
                        return;
                    }
                    let (rr, cc) = (rr as usize, cc as usize);
                    if *mask.get(rr, cc) != 0 && *labels.get(rr, cc) == 0 {
                        labels.set(rr, cc, id);
                        queue.push_back((rr, cc));
                    }
                };
                let (ri, ci) = (r as isize, c as isize);
                try_visit(ri - 1, ci, &mut labels);
                try_visit(ri + 1, ci, &mut labels);
                try_visit(ri, ci - 1, &mut labels);
                try_visit(ri, ci + 1, &mut labels);
                if matches!(connectivity, Connectivity::Eight) {
                    try_visit(ri - 1, ci - 1, &mut labels);
                    try_visit(ri - 1, ci + 1, &mut labels);
                    try_visit(ri + 1, ci - 1, &mut labels);
                    try_visit(ri + 1, ci + 1, &mut labels);
                }
            }
        }
    }
    MaskComponents::from_parts(labels, region_sizes)
}

/// Exact AU-PRO: flood-fill regions, sweep every distinct pixel score
/// descending, average per-region overlap fractions, and step-integrate
/// against exact FPR up to `fpr_limit` (normalized by the limit).
pub fn pro_exact(
    score_maps: &[Grid<f32>],
    masks: &[Grid<u8>],
    connectivity: Connectivity,
    fpr_limit: f64,
) -> Result<f64> {
    if !(fpr_limit > 0.0 && fpr_limit <= 1.0) {
        return Err(EvalError::InvalidFprLimit { value: fpr_limit });
    }
    if score_maps.len() != masks.len() {
        return Err(EvalError::LengthMismatch {
            scores: score_maps.len(),
            labels: masks.len(),
        });
    }
    let mut regions: Vec<Vec<f64>> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    for (scores, mask) in score_maps.iter().zip(masks) {
        if scores.shape() != mask.shape() {
            return Err(EvalError::ShapeMismatch {
                left: scores.shape(),
                right: mask.shape(),
            });
        }
        let comps = flood_fill_components(mask, connectivity);
        let base = regions.len();
        regions.extend((0..comps.num_regions()).map(|_| Vec::new()));
        for (&s, &l) in scores.data().iter().zip(comps.labels().data()) {
            let s = s as f64;
            if !s.is_finite() {
                return Err(EvalError::NonFiniteScore { value: s });
            }
            if l == 0 {
                neg.push(s);
            } else {
                regions[base + (l - 1) as usize].push(s);
            }
        }
    }
    if regions.is_empty() {
        return Err(EvalError::NoRegions);
    }
    if neg.is_empty() {
        return Err(EvalError::EmptyClass {
            class: SampleClass::Negative,
        });
    }

    for r in regions.iter_mut() {
        sort_desc(r);
    }
    sort_desc(&mut neg);
    let mut thresholds: Vec<f64> = regions
        .iter()
        .flatten()
        .copied()
        .chain(neg.iter().copied())
        .collect();
    sort_desc(&mut thresholds);
    thresholds.dedup();

    // descending pointer sweep; per-region covered counts stay integral
    let region_count = regions.len() as f64;
    let neg_total = neg.len() as f64;
    let mut region_ptr = vec![0usize; regions.len()];
    let mut neg_ptr = 0usize;
    let mut covered_frac = 0.0f64;
    let mut curve: Vec<(f64, f64)> = Vec::with_capacity(thresholds.len() + 1);
    curve.push((0.0, 0.0));
    for &thr in &thresholds {
        for (r, region) in regions.iter().enumerate() {
            let start = region_ptr[r];
            let mut p = start;
            while p < region.len() && region[p] >= thr {
                p += 1;
            }
            if p != start {
                region_ptr[r] = p;
                covered_frac += (p - start) as f64 / region.len() as f64;
            }
        }
        while neg_ptr < neg.len() && neg[neg_ptr] >= thr {
            neg_ptr += 1;
        }
        curve.push((neg_ptr as f64 / neg_total, covered_frac / region_count));
    }
    Ok(crate::region::step_integral_over_fpr(
        curve.into_iter(),
        fpr_limit,
    ))
}
