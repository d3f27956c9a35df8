//! Interactive browser demo: three explorers over the streaming engine,
//! each a pure function from parameters to a JSON payload the page plots.
//!
//! Build the wasm bundle with `wasm-pack build crates/demo --target web`
//! and serve `crates/demo/` as static files. The same functions compile
//! natively, which is how the tests exercise them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use streameval_core::{
    aupro, auroc, average_precision, exact_auroc, exact_average_precision, exact_f1_max,
    exact_iou_max, f1_max, iou_max, label_components, pro_exact, region, roc_points, BinSpec,
    Connectivity, Grid, RawSampleStore, RegionAccumulator, ScoreHistogramPair,
};

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Box-Muller gaussian.
fn gaussian(rng: &mut ChaCha8Rng, mean: f64, sigma: f64) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    mean + sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[derive(Serialize)]
struct StreamSummary {
    auroc: f64,
    ap: f64,
    f1_max: f64,
    f1_threshold: f64,
    iou_max: f64,
}

#[derive(Serialize)]
struct ExactSummary {
    auroc: f64,
    ap: f64,
    f1_max: f64,
    iou_max: f64,
}

#[derive(Serialize)]
struct CurvePayload {
    bins: usize,
    n_pos: usize,
    n_neg: usize,
    stream: StreamSummary,
    exact: ExactSummary,
    /// `(fpr, tpr)` pairs, threshold-ascending, subsampled for drawing.
    roc: Vec<(f64, f64)>,
    /// `(recall, precision)` pairs over the same grid.
    pr: Vec<(f64, f64)>,
}

/// Sample two clamped gaussian score populations, run both the sketch and
/// the exact oracles, and return curves plus both sets of metrics.
#[wasm_bindgen]
pub fn curve_explorer(
    pos_mean: f64,
    pos_sigma: f64,
    neg_mean: f64,
    neg_sigma: f64,
    n_pos: u32,
    n_neg: u32,
    bins: u32,
    seed: u32,
) -> String {
    let bins = (bins as usize).clamp(2, 1 << 14);
    let n_pos = (n_pos as usize).clamp(1, 200_000);
    let n_neg = (n_neg as usize).clamp(1, 200_000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let mut pair = ScoreHistogramPair::new(BinSpec::unit(bins).expect("bins >= 2"));
    let mut store = RawSampleStore::new();
    for _ in 0..n_pos {
        let s = clamp01(gaussian(&mut rng, pos_mean, pos_sigma.max(1e-6)));
        pair.push(s, true).expect("finite");
        store.push(s, true).expect("finite");
    }
    for _ in 0..n_neg {
        let s = clamp01(gaussian(&mut rng, neg_mean, neg_sigma.max(1e-6)));
        pair.push(s, false).expect("finite");
        store.push(s, false).expect("finite");
    }

    let f1 = f1_max(&pair).expect("both classes present");
    let points = roc_points(&pair).expect("both classes present");
    let stride = (points.len() / 512).max(1);
    let roc: Vec<(f64, f64)> = points
        .iter()
        .step_by(stride)
        .chain(points.last().filter(|_| stride > 1))
        .map(|p| (p.fpr, p.tpr))
        .collect();

    let sp = pair.pos().suffix_sums();
    let sn = pair.neg().suffix_sums();
    let p_total = sp[0] as f64;
    let pr: Vec<(f64, f64)> = (0..sp.len())
        .step_by(stride)
        .filter(|&k| sp[k] + sn[k] > 0)
        .map(|k| {
            (
                sp[k] as f64 / p_total,
                sp[k] as f64 / (sp[k] + sn[k]) as f64,
            )
        })
        .collect();

    let payload = CurvePayload {
        bins,
        n_pos,
        n_neg,
        stream: StreamSummary {
            auroc: auroc(&pair).expect("both classes present"),
            ap: average_precision(&pair).expect("positives present"),
            f1_max: f1.value,
            f1_threshold: f1.threshold,
            iou_max: iou_max(&pair).expect("positives present").value,
        },
        exact: ExactSummary {
            auroc: exact_auroc(&store).expect("both classes present"),
            ap: exact_average_precision(&store).expect("positives present"),
            f1_max: exact_f1_max(&store).expect("positives present").value,
            iou_max: exact_iou_max(&store).expect("positives present").value,
        },
        roc,
        pr,
    };
    serde_json::to_string(&payload).expect("serializable")
}

#[derive(Serialize)]
struct ConvergencePayload {
    bins: Vec<usize>,
    errors: Vec<f64>,
    exact_auroc: f64,
    n_samples: usize,
}

/// Histogram-AUROC error against the exact oracle as the grid doubles from
/// 16 to 8192 bins; plotted log-log it shows the O(1/N) decay.
#[wasm_bindgen]
pub fn convergence_explorer(seed: u32, n_samples: u32, separation: f64) -> String {
    let n = (n_samples as usize).clamp(64, 500_000);
    let separation = clamp01(separation);
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let label = rng.random::<f64>() < 0.35;
        let s = if label {
            if rng.random::<f64>() < separation {
                0.55 + 0.40 * rng.random::<f64>()
            } else {
                (rng.random::<f64>() * 0.54 - 0.1175).max(0.0)
            }
        } else {
            (rng.random::<f64>() * 0.54 - 0.12).max(0.0)
        };
        samples.push((s, label));
    }
    let mut store = RawSampleStore::new();
    for &(s, l) in &samples {
        store.push(s, l).expect("finite");
    }
    let exact = exact_auroc(&store).expect("both classes present");

    let mut bins_axis = Vec::new();
    let mut errors = Vec::new();
    let mut bins = 16usize;
    while bins <= 8192 {
        let mut pair = ScoreHistogramPair::new(BinSpec::unit(bins).expect("bins >= 2"));
        for &(s, l) in &samples {
            pair.push(s, l).expect("finite");
        }
        bins_axis.push(bins);
        errors.push((auroc(&pair).expect("both classes present") - exact).abs());
        bins *= 2;
    }
    serde_json::to_string(&ConvergencePayload {
        bins: bins_axis,
        errors,
        exact_auroc: exact,
        n_samples: n,
    })
    .expect("serializable")
}

#[derive(Serialize)]
struct ProPayload {
    aupro: f64,
    exact_aupro: f64,
    fpr_limit: f64,
    regions: usize,
    /// `(fpr, pro)` pairs, threshold-ascending.
    curve: Vec<(f64, f64)>,
    width: usize,
    height: usize,
    scores: Vec<f32>,
    mask: Vec<u8>,
}

/// Synthesize one masked score map, then compare the streamed AU-PRO with
/// the exact sweep; ships the raw grids so the page can draw heatmaps.
#[wasm_bindgen]
pub fn pro_explorer(
    seed: u32,
    size: u32,
    n_shapes: u32,
    separation: f64,
    fpr_limit: f64,
    bins: u32,
) -> String {
    let size = (size as usize).clamp(8, 192);
    let bins = (bins as usize).clamp(2, 1 << 14);
    let fpr_limit = if fpr_limit > 0.0 && fpr_limit <= 1.0 {
        fpr_limit
    } else {
        0.3
    };
    let separation = clamp01(separation);
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);

    let mut mask = Grid::filled(0u8, size, size);
    for _ in 0..(n_shapes as usize).clamp(1, 8) {
        let side = size / 5 + 1;
        let rh = rng.random_range(2..=side.max(2));
        let rw = rng.random_range(2..=side.max(2));
        let y0 = rng.random_range(0..=size - rh);
        let x0 = rng.random_range(0..=size - rw);
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                mask.set(y, x, 1);
            }
        }
    }
    let scores_data: Vec<f32> = mask
        .data()
        .iter()
        .map(|&m| {
            let s = if m != 0 && rng.random::<f64>() < separation {
                0.55 + 0.40 * rng.random::<f64>()
            } else {
                (rng.random::<f64>() * 0.54 - 0.12).max(0.0)
            };
            s as f32
        })
        .collect();
    let scores = Grid::from_vec(scores_data, size, size).expect("constructed to shape");

    let comps = label_components(&mask, Connectivity::Eight);
    let mut acc = RegionAccumulator::new(BinSpec::unit(bins).expect("bins >= 2"));
    acc.accumulate(&scores, &comps).expect("shapes match");
    let curve_points = region::pro_curve(&acc).expect("regions and background present");
    let stride = (curve_points.len() / 512).max(1);
    let payload = ProPayload {
        aupro: aupro(&acc, fpr_limit).expect("regions present"),
        exact_aupro: pro_exact(
            std::slice::from_ref(&scores),
            std::slice::from_ref(&mask),
            Connectivity::Eight,
            fpr_limit,
        )
        .expect("regions present"),
        fpr_limit,
        regions: comps.num_regions(),
        curve: curve_points
            .iter()
            .step_by(stride)
            .map(|p| (p.fpr, p.pro))
            .collect(),
        width: size,
        height: size,
        scores: scores.data().to_vec(),
        mask: mask.data().to_vec(),
    };
    serde_json::to_string(&payload).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_explorer_returns_consistent_payload() {
        let json = curve_explorer(0.7, 0.12, 0.35, 0.1, 4000, 9000, 512, 7);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let stream_auroc = v["stream"]["auroc"].as_f64().unwrap();
        let exact_auroc = v["exact"]["auroc"].as_f64().unwrap();
        assert!(stream_auroc > 0.9, "separated gaussians should score high");
        assert!((stream_auroc - exact_auroc).abs() < 2.0 / 512.0);
        assert!(v["roc"].as_array().unwrap().len() > 100);
        assert!(v["pr"].as_array().unwrap().len() > 100);
    }

    #[test]
    fn curve_explorer_is_deterministic_per_seed() {
        let a = curve_explorer(0.6, 0.15, 0.4, 0.15, 1000, 1000, 256, 3);
        let b = curve_explorer(0.6, 0.15, 0.4, 0.15, 1000, 1000, 256, 3);
        assert_eq!(a, b);
        let c = curve_explorer(0.6, 0.15, 0.4, 0.15, 1000, 1000, 256, 4);
        assert_ne!(a, c);
    }

    #[test]
    fn convergence_errors_shrink_overall() {
        let json = convergence_explorer(11, 60_000, 0.5);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let errors: Vec<f64> = v["errors"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e.as_f64().unwrap())
            .collect();
        assert_eq!(errors.len(), 10); // 16..=8192 doubling
        assert!(
            errors[0] > errors[errors.len() - 1],
            "finer grids should reduce error: {errors:?}"
        );
    }

    #[test]
    fn pro_explorer_matches_oracle_and_ships_grids() {
        let json = pro_explorer(5, 48, 3, 0.8, 0.3, 512);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let stream = v["aupro"].as_f64().unwrap();
        let exact = v["exact_aupro"].as_f64().unwrap();
        assert!((stream - exact).abs() < 0.02, "{stream} vs {exact}");
        assert!(v["regions"].as_u64().unwrap() >= 1);
        assert_eq!(v["scores"].as_array().unwrap().len(), 48 * 48);
        assert_eq!(v["mask"].as_array().unwrap().len(), 48 * 48);
    }
}
