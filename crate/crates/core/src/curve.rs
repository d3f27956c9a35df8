//! Threshold-sweep metrics derived from a [`ScoreHistogramPair`].
//!
//! All of these are pure functions over an immutable histogram snapshot.
//! TPR/FPR at grid edge `k` come from the suffix sums of the positive and
//! negative histograms: a sample sits at or above edge `k` exactly when it
//! landed in bins `k..`. Ratios and areas are assembled from the integer
//! suffix counts, so degenerate fixtures (perfect separation, identical
//! classes) come out exact.

use crate::error::{EvalError, Result, SampleClass};
use crate::hist::ScoreHistogramPair;

/// One sampled ROC point: the rates of the `score >= thr` classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub thr: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Confusion counts of the `score >= thr` classifier at one grid edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionAtThreshold {
    pub thr_index: usize,
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

/// A metric value together with the grid threshold that attains it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdMetric {
    pub value: f64,
    pub threshold: f64,
}

fn require_nonempty(pair: &ScoreHistogramPair, class: SampleClass) -> Result<u64> {
    let total = match class {
        SampleClass::Positive => pair.pos().total(),
        SampleClass::Negative => pair.neg().total(),
    };
    if total == 0 {
        return Err(EvalError::EmptyClass { class });
    }
    Ok(total)
}

/// The sampled ROC curve: one point per grid edge, `n_bins + 1` in total,
/// ordered by increasing threshold. Both coordinates are non-increasing.
pub fn roc_points(pair: &ScoreHistogramPair) -> Result<Vec<RocPoint>> {
    let p_total = require_nonempty(pair, SampleClass::Positive)?;
    let n_total = require_nonempty(pair, SampleClass::Negative)?;
    let sp = pair.pos().suffix_sums();
    let sn = pair.neg().suffix_sums();
    let spec = pair.spec();
    Ok((0..=spec.n_bins())
        .map(|k| RocPoint {
            thr: spec.edge(k),
            tpr: sp[k] as f64 / p_total as f64,
            fpr: sn[k] as f64 / n_total as f64,
        })
        .collect())
}

/// Area under the sampled ROC curve by trapezoidal integration over FPR.
///
/// The trapezoid sum is assembled in integer arithmetic and divided once,
/// so perfect separation yields exactly 1.0 and identical class histograms
/// exactly 0.5.
pub fn auroc(pair: &ScoreHistogramPair) -> Result<f64> {
    let p_total = require_nonempty(pair, SampleClass::Positive)?;
    let n_total = require_nonempty(pair, SampleClass::Negative)?;
    let sp = pair.pos().suffix_sums();
    let neg_counts = pair.neg().counts();
    // sum over k of (tpr_k + tpr_{k+1}) * (fpr_k - fpr_{k+1}), scaled by 2*P*Q:
    // (sp[k] + sp[k+1]) * q_k
    let mut num: u128 = 0;
    for (k, &q) in neg_counts.iter().enumerate() {
        num += (sp[k] + sp[k + 1]) as u128 * q as u128;
    }
    Ok(num as f64 / (2.0 * p_total as f64 * n_total as f64))
}

/// Step-interpolated average precision over the threshold grid.
///
/// Every bin holding `p_k` positives contributes `p_k / P` of recall at
/// precision `TP_k / (TP_k + FP_k)`; empty-prediction bins contribute
/// nothing. Requires accumulated positives; negatives may be empty (all
/// precisions are then 1).
pub fn average_precision(pair: &ScoreHistogramPair) -> Result<f64> {
    let p_total = require_nonempty(pair, SampleClass::Positive)?;
    let sp = pair.pos().suffix_sums();
    let sn = pair.neg().suffix_sums();
    let pos_counts = pair.pos().counts();
    let mut ap = 0.0;
    for (k, &p) in pos_counts.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let tp = sp[k];
        let fp = sn[k];
        ap += (p as f64) * (tp as f64 / (tp + fp) as f64);
    }
    Ok(ap / p_total as f64)
}

fn sweep_max<F>(pair: &ScoreHistogramPair, score_at: F) -> Result<ThresholdMetric>
where
    F: Fn(u64, u64, u64) -> f64,
{
    let p_total = require_nonempty(pair, SampleClass::Positive)?;
    let sp = pair.pos().suffix_sums();
    let sn = pair.neg().suffix_sums();
    let spec = pair.spec();
    let mut best = ThresholdMetric {
        value: f64::NEG_INFINITY,
        threshold: spec.edge(0),
    };
    for k in 0..=spec.n_bins() {
        let tp = sp[k];
        let fp = sn[k];
        let fn_count = p_total - tp;
        let value = score_at(tp, fp, fn_count);
        // >= so ties resolve toward the largest threshold
        if value >= best.value {
            best = ThresholdMetric {
                value,
                threshold: spec.edge(k),
            };
        }
    }
    Ok(best)
}

/// Maximum F1 over the grid, ties broken toward the largest threshold.
pub fn f1_max(pair: &ScoreHistogramPair) -> Result<ThresholdMetric> {
    sweep_max(pair, |tp, fp, fn_count| {
        if tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_count) as f64
        }
    })
}

/// Maximum Jaccard index over the grid, ties broken toward the largest
/// threshold.
pub fn iou_max(pair: &ScoreHistogramPair) -> Result<ThresholdMetric> {
    sweep_max(pair, |tp, fp, fn_count| {
        if tp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp + fn_count) as f64
        }
    })
}

/// Confusion counts at grid edge `k` for the `score >= edge(k)` classifier.
pub fn confusion_at(pair: &ScoreHistogramPair, k: usize) -> ConfusionAtThreshold {
    let sp = pair.pos().suffix_sums();
    let sn = pair.neg().suffix_sums();
    let p_total = sp[0];
    let n_total = sn[0];
    ConfusionAtThreshold {
        thr_index: k,
        true_pos: sp[k],
        false_pos: sn[k],
        false_neg: p_total - sp[k],
        true_neg: n_total - sn[k],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hist::BinSpec;
    use approx::assert_abs_diff_eq;

    fn pair_from(scores_labels: &[(f64, u8)], n_bins: usize) -> ScoreHistogramPair {
        let mut pair = ScoreHistogramPair::new(BinSpec::unit(n_bins).unwrap());
        let scores: Vec<f64> = scores_labels.iter().map(|x| x.0).collect();
        let labels: Vec<u8> = scores_labels.iter().map(|x| x.1).collect();
        pair.accumulate(&scores, &labels).unwrap();
        pair
    }

    #[test]
    fn roc_perfect_separation_two_bins() {
        // pos all in top bin, neg all in bottom bin, N=2
        let pair = pair_from(&[(0.9, 1), (0.95, 1), (0.1, 0), (0.2, 0)], 2);
        let pts = roc_points(&pair).unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!((pts[0].tpr, pts[0].fpr), (1.0, 1.0));
        assert_eq!((pts[1].tpr, pts[1].fpr), (1.0, 0.0));
        assert_eq!((pts[2].tpr, pts[2].fpr), (0.0, 0.0));
        assert_eq!(auroc(&pair).unwrap(), 1.0);
    }

    #[test]
    fn roc_identical_histograms_is_diagonal() {
        let samples: Vec<(f64, u8)> = (0..40)
            .flat_map(|i| {
                let s = i as f64 / 40.0;
                [(s, 1), (s, 0)]
            })
            .collect();
        let pair = pair_from(&samples, 32);
        for pt in roc_points(&pair).unwrap() {
            assert_eq!(pt.tpr, pt.fpr);
        }
        assert_eq!(auroc(&pair).unwrap(), 0.5);
    }

    #[test]
    fn roc_monotone_and_endpoints() {
        let samples: Vec<(f64, u8)> = (0..500)
            .map(|i| ((i * 37 % 101) as f64 / 101.0, (i % 3 == 0) as u8))
            .collect();
        let pair = pair_from(&samples, 64);
        let pts = roc_points(&pair).unwrap();
        assert_eq!((pts[0].tpr, pts[0].fpr), (1.0, 1.0));
        let last = pts.last().unwrap();
        assert_eq!((last.tpr, last.fpr), (0.0, 0.0));
        for w in pts.windows(2) {
            assert!(w[1].tpr <= w[0].tpr);
            assert!(w[1].fpr <= w[0].fpr);
        }
    }

    #[test]
    fn empty_class_is_reported() {
        let pair = pair_from(&[(0.5, 1)], 4);
        match auroc(&pair) {
            Err(EvalError::EmptyClass { class }) => assert_eq!(class, SampleClass::Negative),
            other => panic!("expected EmptyClass, got {other:?}"),
        }
        let pair = pair_from(&[(0.5, 0)], 4);
        match roc_points(&pair) {
            Err(EvalError::EmptyClass { class }) => assert_eq!(class, SampleClass::Positive),
            other => panic!("expected EmptyClass, got {other:?}"),
        }
    }

    #[test]
    fn auroc_three_of_four_pairs_ordered() {
        // pos {0.8, 0.4}, neg {0.6, 0.2}: Mann-Whitney 3/4
        let pair = pair_from(&[(0.8, 1), (0.4, 1), (0.6, 0), (0.2, 0)], 4096);
        assert_abs_diff_eq!(auroc(&pair).unwrap(), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn ap_step_sum_hand_case() {
        // labels [1,0,1,0], scores [0.9,0.8,0.7,0.1]: AP = 0.5*1 + 0.5*(2/3)
        let pair = pair_from(&[(0.9, 1), (0.8, 0), (0.7, 1), (0.1, 0)], 4096);
        assert_abs_diff_eq!(
            average_precision(&pair).unwrap(),
            0.5 + 0.5 * (2.0 / 3.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn ap_perfect_and_all_positive() {
        let pair = pair_from(&[(0.9, 1), (0.8, 1), (0.1, 0)], 64);
        assert_eq!(average_precision(&pair).unwrap(), 1.0);
        // all samples positive: precision 1 at every threshold
        let pair = pair_from(&[(0.9, 1), (0.2, 1), (0.4, 1)], 64);
        assert_eq!(average_precision(&pair).unwrap(), 1.0);
    }

    #[test]
    fn ap_requires_positives() {
        let pair = pair_from(&[(0.5, 0)], 4);
        assert!(matches!(
            average_precision(&pair),
            Err(EvalError::EmptyClass {
                class: SampleClass::Positive
            })
        ));
    }

    #[test]
    fn f1_max_hand_cases() {
        let pair = pair_from(&[(0.9, 1), (0.95, 1), (0.1, 0)], 16);
        let m = f1_max(&pair).unwrap();
        assert_eq!(m.value, 1.0);
        // threshold of the positive block: the edge below 0.9
        assert!(m.threshold <= 0.9 && m.threshold > 0.1);

        // labels [1,0,1,0], scores [0.9,0.8,0.7,0.1]: best F1 = 0.8 at thr ~= 0.7
        let pair = pair_from(&[(0.9, 1), (0.8, 0), (0.7, 1), (0.1, 0)], 4096);
        let m = f1_max(&pair).unwrap();
        assert_abs_diff_eq!(m.value, 0.8, epsilon = 1e-12);
        assert!((m.threshold - 0.7).abs() < 1e-3, "thr = {}", m.threshold);
    }

    #[test]
    fn f1_single_positive_single_negative_sharing_a_bin() {
        let pair = pair_from(&[(0.5, 1), (0.5, 0)], 8);
        let m = f1_max(&pair).unwrap();
        assert_abs_diff_eq!(m.value, 2.0 / 3.0, epsilon = 1e-12);
        // ties resolve to the largest threshold attaining the max: the bin
        // holding both samples
        assert_abs_diff_eq!(m.threshold, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn iou_max_hand_cases() {
        let pair = pair_from(&[(0.9, 1), (0.95, 1), (0.1, 0)], 16);
        assert_eq!(iou_max(&pair).unwrap().value, 1.0);

        let pair = pair_from(&[(0.9, 1), (0.8, 0), (0.7, 1), (0.1, 0)], 4096);
        let m = iou_max(&pair).unwrap();
        assert_abs_diff_eq!(m.value, 2.0 / 3.0, epsilon = 1e-12);
        assert!((m.threshold - 0.7).abs() < 1e-3);
    }

    #[test]
    fn iou_equals_f1_over_two_minus_f1_pointwise() {
        let samples: Vec<(f64, u8)> = (0..300)
            .map(|i| ((i * 53 % 97) as f64 / 97.0, (i * 7 % 5 == 0) as u8))
            .collect();
        let pair = pair_from(&samples, 32);
        let sp = pair.pos().suffix_sums();
        let sn = pair.neg().suffix_sums();
        let p_total = sp[0];
        for k in 0..=32 {
            let (tp, fp) = (sp[k], sn[k]);
            let fn_count = p_total - tp;
            if tp == 0 {
                continue;
            }
            let f1 = 2.0 * tp as f64 / (2 * tp + fp + fn_count) as f64;
            let iou = tp as f64 / (tp + fp + fn_count) as f64;
            assert_abs_diff_eq!(iou, f1 / (2.0 - f1), epsilon = 1e-12);
        }
    }

    #[test]
    fn confusion_partitions_totals() {
        let samples: Vec<(f64, u8)> = (0..100)
            .map(|i| ((i as f64) / 100.0, (i % 4 == 0) as u8))
            .collect();
        let pair = pair_from(&samples, 16);
        for k in 0..=16 {
            let c = confusion_at(&pair, k);
            assert_eq!(c.true_pos + c.false_neg, pair.pos().total());
            assert_eq!(c.false_pos + c.true_neg, pair.neg().total());
        }
    }
}
