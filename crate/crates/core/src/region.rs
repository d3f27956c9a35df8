//! Region-level AU-PRO: connected components of ground-truth masks,
//! per-region score histograms, and the FPR-limited integral.
//!
//! Each ground-truth region keeps its own score histogram so the per-region
//! overlap at a threshold is exact regardless of region size; all background
//! pixels share one histogram for the FPR axis. Regions from every image of
//! a category pool into one accumulator, and each region weighs equally in
//! the PRO average no matter how many pixels it has.

use std::collections::BTreeMap;

use crate::error::{EvalError, Result};
use crate::grid::Grid;
use crate::hist::{BinSpec, Histogram};

/// Pixel adjacency rule for connected-component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Connected-component decomposition of a binary mask.
///
/// Label 0 is background; regions are numbered `1..=num_regions()` in
/// row-major order of their first pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskComponents {
    labels: Grid<u32>,
    region_sizes: Vec<u64>,
}

impl MaskComponents {
    pub(crate) fn from_parts(labels: Grid<u32>, region_sizes: Vec<u64>) -> Self {
        Self {
            labels,
            region_sizes,
        }
    }

    pub fn labels(&self) -> &Grid<u32> {
        &self.labels
    }

    pub fn num_regions(&self) -> usize {
        self.region_sizes.len()
    }

    pub fn region_sizes(&self) -> &[u64] {
        &self.region_sizes
    }

    pub fn shape(&self) -> (usize, usize) {
        self.labels.shape()
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        // slot 0 stays unused so provisional labels match indices
        Self { parent: vec![0] }
    }

    fn make_set(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            // keep the smaller root so labels stay ordered by first pixel
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Two-pass union-find labeling of a binary mask (entries 0 or 1).
///
/// Two foreground pixels share a region exactly when they are connected
/// under `connectivity`; final region ids are contiguous and ordered by the
/// row-major position of each region's first pixel.
pub fn label_components(mask: &Grid<u8>, connectivity: Connectivity) -> MaskComponents {
    let (h, w) = mask.shape();
    let mut provisional = Grid::filled(0u32, h, w);
    let mut uf = UnionFind::new();

    for row in 0..h {
        for col in 0..w {
            if *mask.get(row, col) == 0 {
                continue;
            }
            // neighbors already visited in the raster scan
            let mut adjacent = [0u32; 4];
            let mut n_adj = 0;
            let mut consider = |r: usize, c: usize, grid: &Grid<u32>| {
                let label = *grid.get(r, c);
                if label != 0 {
                    adjacent[n_adj] = label;
                    n_adj += 1;
                }
            };
            if col > 0 {
                consider(row, col - 1, &provisional);
            }
            if row > 0 {
                consider(row - 1, col, &provisional);
                if matches!(connectivity, Connectivity::Eight) {
                    if col > 0 {
                        consider(row - 1, col - 1, &provisional);
                    }
                    if col + 1 < w {
                        consider(row - 1, col + 1, &provisional);
                    }
                }
            }
            let label = if n_adj == 0 {
                uf.make_set()
            } else {
                let first = adjacent[0];
                for &other in &adjacent[1..n_adj] {
                    uf.union(first, other);
                }
                first
            };
            provisional.set(row, col, label);
        }
    }

    // second pass: compress to contiguous ids in first-pixel order
    let mut remap: Vec<u32> = vec![0; uf.parent.len()];
    let mut region_sizes: Vec<u64> = Vec::new();
    let mut labels = Grid::filled(0u32, h, w);
    for row in 0..h {
        for col in 0..w {
            let p = *provisional.get(row, col);
            if p == 0 {
                continue;
            }
            let root = uf.find(p);
            let id = if remap[root as usize] == 0 {
                region_sizes.push(0);
                remap[root as usize] = region_sizes.len() as u32;
                region_sizes.len() as u32
            } else {
                remap[root as usize]
            };
            region_sizes[(id - 1) as usize] += 1;
            labels.set(row, col, id);
        }
    }

    MaskComponents {
        labels,
        region_sizes,
    }
}

/// Streaming state for AU-PRO over one category: a histogram per
/// ground-truth region plus one histogram of all background-pixel scores.
#[derive(Debug, Clone)]
pub struct RegionAccumulator {
    spec: BinSpec,
    per_region: Vec<Histogram>,
    neg_pixels: Histogram,
}

impl RegionAccumulator {
    pub fn new(spec: BinSpec) -> Self {
        Self {
            spec,
            per_region: Vec::new(),
            neg_pixels: Histogram::new(spec),
        }
    }

    pub fn spec(&self) -> &BinSpec {
        &self.spec
    }

    pub fn regions(&self) -> &[Histogram] {
        &self.per_region
    }

    pub fn neg_pixels(&self) -> &Histogram {
        &self.neg_pixels
    }

    /// Route one image's pixels: each foreground pixel's score into its
    /// region's histogram (regions append in label order), background
    /// pixels into the shared negative histogram.
    pub fn accumulate(&mut self, scores: &Grid<f32>, comps: &MaskComponents) -> Result<()> {
        if scores.shape() != comps.shape() {
            return Err(EvalError::ShapeMismatch {
                left: scores.shape(),
                right: comps.shape(),
            });
        }
        let base = self.per_region.len();
        self.per_region
            .extend((0..comps.num_regions()).map(|_| Histogram::new(self.spec)));
        for (&score, &label) in scores.data().iter().zip(comps.labels().data()) {
            let score = score as f64;
            if label == 0 {
                self.neg_pixels.add(score)?;
            } else {
                self.per_region[base + (label - 1) as usize].add(score)?;
            }
        }
        Ok(())
    }

    /// Accumulate an image with no ground-truth foreground: every pixel's
    /// score goes to the background histogram.
    pub fn accumulate_background(&mut self, scores: &Grid<f32>) -> Result<()> {
        for &s in scores.data() {
            self.neg_pixels.add(s as f64)?;
        }
        Ok(())
    }

    /// Concatenate another accumulator's regions and merge its background
    /// histogram. Metric results do not depend on merge order.
    pub fn merge_from(&mut self, other: &RegionAccumulator) -> Result<()> {
        self.neg_pixels.merge_from(&other.neg_pixels)?;
        self.per_region.extend(other.per_region.iter().cloned());
        Ok(())
    }

    /// Total clamped samples across region and background histograms.
    pub fn clamped(&self) -> (u64, u64) {
        let mut lo = self.neg_pixels.clamped().0;
        let mut hi = self.neg_pixels.clamped().1;
        for h in &self.per_region {
            lo += h.clamped().0;
            hi += h.clamped().1;
        }
        (lo, hi)
    }
}

/// One sampled point of the PRO-vs-FPR curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProPoint {
    pub thr: f64,
    pub fpr: f64,
    pub pro: f64,
}

/// The sampled PRO curve, one point per grid edge, ordered by increasing
/// threshold (decreasing FPR).
pub fn pro_curve(acc: &RegionAccumulator) -> Result<Vec<ProPoint>> {
    if acc.per_region.is_empty() {
        return Err(EvalError::NoRegions);
    }
    let neg_total = acc.neg_pixels.total();
    if neg_total == 0 {
        return Err(EvalError::EmptyClass {
            class: crate::error::SampleClass::Negative,
        });
    }
    let n = acc.spec.n_bins();
    // Group regions by size and add suffix counts as integers first: the
    // per-threshold mean over regions then sums one exact term per distinct
    // size, which makes the result independent of region order.
    let mut by_size: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for hist in &acc.per_region {
        let suffix = hist.suffix_sums();
        let size = suffix[0];
        debug_assert!(size > 0, "regions have at least one pixel");
        let slot = by_size.entry(size).or_insert_with(|| vec![0; n + 1]);
        for (acc_count, s) in slot.iter_mut().zip(&suffix) {
            *acc_count += s;
        }
    }
    let region_count = acc.per_region.len() as f64;
    let neg_suffix = acc.neg_pixels.suffix_sums();
    Ok((0..=n)
        .map(|k| {
            let mut covered = 0.0;
            for (size, sums) in &by_size {
                covered += sums[k] as f64 / *size as f64;
            }
            ProPoint {
                thr: acc.spec.edge(k),
                fpr: neg_suffix[k] as f64 / neg_total as f64,
                pro: covered / region_count,
            }
        })
        .collect())
}

/// Area under the PRO-vs-FPR curve restricted to `fpr <= fpr_limit`,
/// normalized by the limit.
///
/// The sampled curve is integrated as a left-continuous step function: over
/// each FPR interval between consecutive sampled points, PRO holds the
/// value attained at the lower-FPR point, and the partial interval cut off
/// at the limit contributes the held value times its width. A prediction
/// that strictly separates all region pixels above all background pixels
/// scores exactly 1.
pub fn aupro(acc: &RegionAccumulator, fpr_limit: f64) -> Result<f64> {
    if !(fpr_limit > 0.0 && fpr_limit <= 1.0) {
        return Err(EvalError::InvalidFprLimit { value: fpr_limit });
    }
    let points = pro_curve(acc)?;
    Ok(step_integral_over_fpr(
        points.iter().rev().map(|p| (p.fpr, p.pro)),
        fpr_limit,
    ))
}

/// Step-integrate `value` against increasing `fpr` up to `limit`, then
/// normalize by `limit`. Points must arrive with both coordinates
/// non-decreasing.
pub(crate) fn step_integral_over_fpr<I>(points: I, limit: f64) -> f64
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut area = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (fpr, value) in points {
        if let Some((f0, v0)) = prev {
            debug_assert!(fpr >= f0 && value >= v0);
            if f0 >= limit {
                break;
            }
            area += v0 * (fpr.min(limit) - f0);
        }
        prev = Some((fpr, value));
    }
    area / limit
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mask_from(rows: &[&[u8]]) -> Grid<u8> {
        let h = rows.len();
        let w = rows[0].len();
        let data: Vec<u8> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Grid::from_vec(data, h, w).unwrap()
    }

    fn scores_from(rows: &[&[f32]]) -> Grid<f32> {
        let h = rows.len();
        let w = rows[0].len();
        let data: Vec<f32> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Grid::from_vec(data, h, w).unwrap()
    }

    #[test]
    fn diagonal_pixels_connectivity() {
        let mask = mask_from(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 0]]);
        assert_eq!(label_components(&mask, Connectivity::Eight).num_regions(), 1);
        assert_eq!(label_components(&mask, Connectivity::Four).num_regions(), 2);
    }

    #[test]
    fn all_zero_mask_has_no_regions() {
        let mask = mask_from(&[&[0, 0], &[0, 0]]);
        let comps = label_components(&mask, Connectivity::Eight);
        assert_eq!(comps.num_regions(), 0);
        assert!(comps.labels().data().iter().all(|&l| l == 0));
    }

    #[test]
    fn labels_are_row_major_first_pixel_ordered() {
        let mask = mask_from(&[
            &[0, 0, 0, 1],
            &[1, 0, 0, 1],
            &[1, 0, 0, 0],
            &[0, 0, 1, 0],
        ]);
        let comps = label_components(&mask, Connectivity::Four);
        assert_eq!(comps.num_regions(), 3);
        assert_eq!(*comps.labels().get(0, 3), 1);
        assert_eq!(*comps.labels().get(1, 0), 2);
        assert_eq!(*comps.labels().get(3, 2), 3);
        assert_eq!(comps.region_sizes(), &[2, 2, 1]);
    }

    #[test]
    fn u_shape_merges_under_union() {
        // the two arms meet at the bottom: one region, discovered left first
        let mask = mask_from(&[
            &[1, 0, 1],
            &[1, 0, 1],
            &[1, 1, 1],
        ]);
        let comps = label_components(&mask, Connectivity::Four);
        assert_eq!(comps.num_regions(), 1);
        assert_eq!(comps.region_sizes(), &[7]);
    }

    #[test]
    fn sizes_sum_to_foreground() {
        let mask = mask_from(&[
            &[1, 1, 0, 1],
            &[0, 1, 0, 0],
            &[1, 0, 1, 1],
        ]);
        let comps = label_components(&mask, Connectivity::Eight);
        let fg: u64 = mask.data().iter().map(|&v| v as u64).sum();
        assert_eq!(comps.region_sizes().iter().sum::<u64>(), fg);
    }

    #[test]
    fn accumulate_routes_pixels() {
        let spec = BinSpec::unit(10).unwrap();
        let mut acc = RegionAccumulator::new(spec);
        let mask = mask_from(&[&[1, 1], &[1, 1]]);
        let scores = scores_from(&[&[0.75, 0.75], &[0.75, 0.75]]);
        let comps = label_components(&mask, Connectivity::Eight);
        acc.accumulate(&scores, &comps).unwrap();
        assert_eq!(acc.regions().len(), 1);
        assert_eq!(acc.regions()[0].total(), 4);
        assert_eq!(acc.regions()[0].counts()[7], 4);
        assert_eq!(acc.neg_pixels().total(), 0);
    }

    #[test]
    fn image_without_foreground_only_grows_background() {
        let spec = BinSpec::unit(4).unwrap();
        let mut acc = RegionAccumulator::new(spec);
        let mask = mask_from(&[&[0, 0], &[0, 0]]);
        let scores = scores_from(&[&[0.1, 0.2], &[0.3, 0.4]]);
        let comps = label_components(&mask, Connectivity::Eight);
        acc.accumulate(&scores, &comps).unwrap();
        assert_eq!(acc.regions().len(), 0);
        assert_eq!(acc.neg_pixels().total(), 4);
    }

    #[test]
    fn shape_mismatch_carries_both_shapes() {
        let spec = BinSpec::unit(4).unwrap();
        let mut acc = RegionAccumulator::new(spec);
        let mask = mask_from(&[&[1, 0], &[0, 0]]);
        let comps = label_components(&mask, Connectivity::Eight);
        let scores = scores_from(&[&[0.1, 0.2, 0.3]]);
        match acc.accumulate(&scores, &comps) {
            Err(EvalError::ShapeMismatch { left, right }) => {
                assert_eq!(left, (1, 3));
                assert_eq!(right, (2, 2));
            }
            other => panic!("expected ShapeMismatch, got {other:?}"),
        }
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let spec = BinSpec::unit(16).unwrap();
        let mut acc = RegionAccumulator::new(spec);
        let mask = mask_from(&[&[1, 1, 0], &[0, 0, 0], &[0, 1, 1]]);
        let scores = scores_from(&[&[1.0, 1.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 1.0, 1.0]]);
        let comps = label_components(&mask, Connectivity::Eight);
        acc.accumulate(&scores, &comps).unwrap();
        assert_eq!(aupro(&acc, 0.3).unwrap(), 1.0);
        assert_eq!(aupro(&acc, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn constant_score_map_scores_zero_below_full_limit() {
        let spec = BinSpec::unit(16).unwrap();
        let mut acc = RegionAccumulator::new(spec);
        let mask = mask_from(&[&[1, 1, 0], &[0, 0, 0], &[0, 0, 0]]);
        let scores = scores_from(&[&[0.5; 3], &[0.5; 3], &[0.5; 3]]);
        let comps = label_components(&mask, Connectivity::Eight);
        acc.accumulate(&scores, &comps).unwrap();
        // the sampled curve has only (0,0) and (1,1); PRO holds 0 below
        // FPR = 1, so any limit < 1 integrates to zero
        assert_eq!(aupro(&acc, 0.3).unwrap(), 0.0);
        assert_eq!(aupro(&acc, 0.999).unwrap(), 0.0);
        assert_eq!(aupro(&acc, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn fpr_limit_domain_checked() {
        let spec = BinSpec::unit(4).unwrap();
        let acc = RegionAccumulator::new(spec);
        for bad in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                aupro(&acc, bad),
                Err(EvalError::InvalidFprLimit { .. })
            ));
        }
    }

    #[test]
    fn no_regions_is_an_error() {
        let spec = BinSpec::unit(4).unwrap();
        let mut acc = RegionAccumulator::new(spec);
        let mask = mask_from(&[&[0, 0], &[0, 0]]);
        let scores = scores_from(&[&[0.1, 0.2], &[0.3, 0.4]]);
        acc.accumulate(&scores, &label_components(&mask, Connectivity::Eight))
            .unwrap();
        assert!(matches!(aupro(&acc, 0.3), Err(EvalError::NoRegions)));
    }

    #[test]
    fn equal_region_weighting() {
        // one large and one tiny region; flipping either region's
        // prediction moves PRO at the relevant threshold by the same amount
        let spec = BinSpec::unit(8).unwrap();
        let mask = mask_from(&[
            &[1, 1, 1, 1, 0, 0],
            &[1, 1, 1, 1, 0, 1],
        ]);
        let comps = label_components(&mask, Connectivity::Four);
        assert_eq!(comps.region_sizes(), &[8, 1]);

        // big region predicted, small missed
        let hit_big = scores_from(&[
            &[0.9, 0.9, 0.9, 0.9, 0.1, 0.1],
            &[0.9, 0.9, 0.9, 0.9, 0.1, 0.1],
        ]);
        // small region predicted, big missed
        let hit_small = scores_from(&[
            &[0.1, 0.1, 0.1, 0.1, 0.1, 0.1],
            &[0.1, 0.1, 0.1, 0.1, 0.1, 0.9],
        ]);
        let mut a = RegionAccumulator::new(spec);
        a.accumulate(&hit_big, &comps).unwrap();
        let mut b = RegionAccumulator::new(spec);
        b.accumulate(&hit_small, &comps).unwrap();
        assert_abs_diff_eq!(
            aupro(&a, 0.3).unwrap(),
            aupro(&b, 0.3).unwrap(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(aupro(&a, 0.3).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn merge_concatenates_regions() {
        let spec = BinSpec::unit(8).unwrap();
        let mask1 = mask_from(&[&[1, 0], &[0, 0]]);
        let mask2 = mask_from(&[&[0, 1], &[1, 0]]);
        let s1 = scores_from(&[&[0.8, 0.1], &[0.2, 0.1]]);
        let s2 = scores_from(&[&[0.1, 0.7], &[0.6, 0.2]]);
        let mut a = RegionAccumulator::new(spec);
        a.accumulate(&s1, &label_components(&mask1, Connectivity::Four))
            .unwrap();
        let mut b = RegionAccumulator::new(spec);
        b.accumulate(&s2, &label_components(&mask2, Connectivity::Four))
            .unwrap();
        let mut merged = a.clone();
        merged.merge_from(&b).unwrap();
        assert_eq!(merged.regions().len(), 3);
        assert_eq!(
            merged.neg_pixels().total(),
            a.neg_pixels().total() + b.neg_pixels().total()
        );
    }
}
