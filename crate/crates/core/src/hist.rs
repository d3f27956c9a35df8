//! Threshold grid and mergeable count-histogram sketches.
//!
//! A [`Histogram`] stores one `u64` counter per bin of a uniform threshold
//! grid, so the state needed to derive every threshold-sweep metric is a
//! fixed number of counters regardless of how many samples pass through.
//! Histograms over the same [`BinSpec`] merge by element-wise addition,
//! which makes parallel ingestion a deterministic reduction.

use std::sync::atomic::{AtomicI64, Ordering};

use crate::error::{EvalError, Result};

/// Live histogram buffers and their high-water mark, for memory audits.
static LIVE: AtomicI64 = AtomicI64::new(0);
static PEAK: AtomicI64 = AtomicI64::new(0);

fn track_alloc() {
    let now = LIVE.fetch_add(1, Ordering::Relaxed) + 1;
    PEAK.fetch_max(now, Ordering::Relaxed);
}

fn track_free() {
    LIVE.fetch_sub(1, Ordering::Relaxed);
}

/// Number of histogram buffers currently alive in the process.
pub fn live_histograms() -> i64 {
    LIVE.load(Ordering::Relaxed)
}

/// High-water mark of live histogram buffers since the last reset.
pub fn peak_histograms() -> i64 {
    PEAK.load(Ordering::Relaxed)
}

/// Reset the high-water mark to the current live count.
pub fn reset_peak_histograms() {
    PEAK.store(LIVE.load(Ordering::Relaxed), Ordering::Relaxed);
}

/// A uniform threshold grid over `[lo, hi]` with `n_bins` half-open bins.
///
/// Edge `k` sits at `lo + k * (hi - lo) / n_bins` for `k = 0..=n_bins`, so
/// the edges are strictly increasing. Bin `k` covers `[edge(k), edge(k+1))`
/// except the last bin, which also absorbs everything at or above `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    lo: f64,
    hi: f64,
    n_bins: usize,
}

impl BinSpec {
    pub fn new(lo: f64, hi: f64, n_bins: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || !(lo < hi) || n_bins < 2 {
            return Err(EvalError::InvalidBinSpec { lo, hi, n_bins });
        }
        Ok(Self { lo, hi, n_bins })
    }

    /// The conventional grid for scores in `[0, 1]`.
    pub fn unit(n_bins: usize) -> Result<Self> {
        Self::new(0.0, 1.0, n_bins)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Threshold edge `k`, valid for `k = 0..=n_bins`.
    pub fn edge(&self, k: usize) -> f64 {
        debug_assert!(k <= self.n_bins);
        self.lo + (k as f64) * (self.hi - self.lo) / (self.n_bins as f64)
    }

    /// Map a finite score to its bin, clamping out-of-range scores to the
    /// edge bins. The result `k` always satisfies
    /// `edge(k) <= score < edge(k+1)` for in-range scores.
    pub fn bin_index(&self, score: f64) -> Result<usize> {
        if !score.is_finite() {
            return Err(EvalError::NonFiniteScore { value: score });
        }
        Ok(self.bin_index_clamped(score).0)
    }

    /// Like [`bin_index`](Self::bin_index) for known-finite scores; also
    /// reports whether the score fell outside `[lo, hi)` and was clamped.
    pub(crate) fn bin_index_clamped(&self, score: f64) -> (usize, Option<Clamp>) {
        if score < self.lo {
            return (0, Some(Clamp::Low));
        }
        if score >= self.hi {
            // Scores exactly at hi belong to the closed last bin and are not
            // counted as clamped.
            let clamp = if score > self.hi { Some(Clamp::High) } else { None };
            return (self.n_bins - 1, clamp);
        }
        let width = self.hi - self.lo;
        let mut k = (((score - self.lo) / width) * self.n_bins as f64) as usize;
        if k >= self.n_bins {
            k = self.n_bins - 1;
        }
        // One-step correction so the result is exactly consistent with the
        // edge formula even when the division rounds across an edge.
        if score < self.edge(k) {
            k -= 1;
        } else if k + 1 < self.n_bins && score >= self.edge(k + 1) {
            k += 1;
        }
        debug_assert!(self.edge(k) <= score && (k + 1 == self.n_bins || score < self.edge(k + 1)));
        (k, None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Clamp {
    Low,
    High,
}

/// Count histogram over a [`BinSpec`] grid.
///
/// Counters only ever grow; `total()` is the number of samples accumulated.
/// Out-of-range scores are clamped into the edge bins and tallied separately
/// so runs can report how much clamping occurred.
#[derive(Debug, PartialEq)]
pub struct Histogram {
    spec: BinSpec,
    counts: Vec<u64>,
    clamped_low: u64,
    clamped_high: u64,
}

impl Histogram {
    pub fn new(spec: BinSpec) -> Self {
        track_alloc();
        Self {
            counts: vec![0; spec.n_bins()],
            spec,
            clamped_low: 0,
            clamped_high: 0,
        }
    }

    pub fn spec(&self) -> &BinSpec {
        &self.spec
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(clamped_below_lo, clamped_at_or_above_hi)` sample counts.
    pub fn clamped(&self) -> (u64, u64) {
        (self.clamped_low, self.clamped_high)
    }

    pub fn add(&mut self, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(EvalError::NonFiniteScore { value: score });
        }
        let (k, clamp) = self.spec.bin_index_clamped(score);
        self.counts[k] += 1;
        match clamp {
            Some(Clamp::Low) => self.clamped_low += 1,
            Some(Clamp::High) => self.clamped_high += 1,
            None => {}
        }
        Ok(())
    }

    /// Element-wise sum of two histograms over the same grid.
    pub fn merge(&self, other: &Histogram) -> Result<Histogram> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// In-place merge, used by the deterministic parallel reduction.
    pub fn merge_from(&mut self, other: &Histogram) -> Result<()> {
        if self.spec != other.spec {
            return Err(EvalError::BinSpecMismatch {
                a: self.spec,
                b: other.spec,
            });
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.clamped_low += other.clamped_low;
        self.clamped_high += other.clamped_high;
        Ok(())
    }

    /// `out[k] = sum of counts[k..]`, so `out[k]` is the number of samples
    /// with score at or above edge `k`; `out[n_bins] = 0`.
    pub fn suffix_sums(&self) -> Vec<u64> {
        let n = self.counts.len();
        let mut out = vec![0u64; n + 1];
        for k in (0..n).rev() {
            out[k] = out[k + 1] + self.counts[k];
        }
        out
    }

    /// Flat checkpoint record: `lo f64 LE | hi f64 LE | n_bins u32 LE |
    /// counts (n_bins x u64 LE)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 8 + 4 + 8 * self.counts.len());
        out.extend_from_slice(&self.spec.lo.to_le_bytes());
        out.extend_from_slice(&self.spec.hi.to_le_bytes());
        out.extend_from_slice(&(self.counts.len() as u32).to_le_bytes());
        for c in &self.counts {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Histogram> {
        let malformed = |reason: &str| EvalError::MalformedBytes {
            reason: reason.to_string(),
        };
        if bytes.len() < 20 {
            return Err(malformed("record shorter than its fixed header"));
        }
        let lo = f64::from_le_bytes(bytes[0..8].try_into().unwrap());
        let hi = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let n_bins = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
        let expected = 20 + 8 * n_bins;
        if bytes.len() != expected {
            return Err(malformed(&format!(
                "expected {expected} bytes for {n_bins} bins, got {}",
                bytes.len()
            )));
        }
        let spec = BinSpec::new(lo, hi, n_bins)?;
        let mut hist = Histogram::new(spec);
        for (k, chunk) in bytes[20..].chunks_exact(8).enumerate() {
            hist.counts[k] = u64::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok(hist)
    }
}

impl Clone for Histogram {
    fn clone(&self) -> Self {
        track_alloc();
        Self {
            spec: self.spec,
            counts: self.counts.clone(),
            clamped_low: self.clamped_low,
            clamped_high: self.clamped_high,
        }
    }
}

impl Drop for Histogram {
    fn drop(&mut self) {
        track_free();
    }
}

/// Positive- and negative-class histograms over one shared grid.
///
/// This pair is the entire streaming state needed for AU-ROC, AP, F1-max
/// and IoU-max: the per-bin counts of scores with label 1 and label 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistogramPair {
    pos: Histogram,
    neg: Histogram,
}

impl ScoreHistogramPair {
    pub fn new(spec: BinSpec) -> Self {
        Self {
            pos: Histogram::new(spec),
            neg: Histogram::new(spec),
        }
    }

    pub fn spec(&self) -> &BinSpec {
        self.pos.spec()
    }

    pub fn pos(&self) -> &Histogram {
        &self.pos
    }

    pub fn neg(&self) -> &Histogram {
        &self.neg
    }

    pub fn push(&mut self, score: f64, label: bool) -> Result<()> {
        if label {
            self.pos.add(score)
        } else {
            self.neg.add(score)
        }
    }

    /// Accumulate a batch of `(score, label)` samples; labels must be 0 or 1.
    ///
    /// The batch leaves no per-sample state behind: only the two count
    /// arrays change.
    pub fn accumulate(&mut self, scores: &[f64], labels: &[u8]) -> Result<()> {
        if scores.len() != labels.len() {
            return Err(EvalError::LengthMismatch {
                scores: scores.len(),
                labels: labels.len(),
            });
        }
        // Validate the whole batch up front so a failed call leaves the
        // accumulator untouched.
        for &s in scores {
            if !s.is_finite() {
                return Err(EvalError::NonFiniteScore { value: s });
            }
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

    /// Accumulate one image: every pixel's score labeled by the mask
    /// (nonzero = positive). Without a mask all pixels count as negative.
    pub fn accumulate_image(
        &mut self,
        scores: &crate::grid::Grid<f32>,
        mask: Option<&crate::grid::Grid<u8>>,
    ) -> Result<()> {
        if let Some(mask) = mask {
            if scores.shape() != mask.shape() {
                return Err(EvalError::ShapeMismatch {
                    left: scores.shape(),
                    right: mask.shape(),
                });
            }
            for (&s, &m) in scores.data().iter().zip(mask.data()) {
                self.push(s as f64, m != 0)?;
            }
        } else {
            for &s in scores.data() {
                self.push(s as f64, false)?;
            }
        }
        Ok(())
    }

    pub fn merge(&self, other: &ScoreHistogramPair) -> Result<ScoreHistogramPair> {
        Ok(ScoreHistogramPair {
            pos: self.pos.merge(&other.pos)?,
            neg: self.neg.merge(&other.neg)?,
        })
    }

    pub fn merge_from(&mut self, other: &ScoreHistogramPair) -> Result<()> {
        self.pos.merge_from(&other.pos)?;
        self.neg.merge_from(&other.neg)
    }

    /// Checkpoint record: positive histogram followed by negative histogram.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.pos.to_bytes();
        out.extend_from_slice(&self.neg.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ScoreHistogramPair> {
        if bytes.len() < 20 {
            return Err(EvalError::MalformedBytes {
                reason: "record shorter than its fixed header".to_string(),
            });
        }
        let n_bins = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
        let half = 20 + 8 * n_bins;
        if bytes.len() != 2 * half {
            return Err(EvalError::MalformedBytes {
                reason: format!("expected {} bytes for a pair, got {}", 2 * half, bytes.len()),
            });
        }
        let pos = Histogram::from_bytes(&bytes[..half])?;
        let neg = Histogram::from_bytes(&bytes[half..])?;
        if pos.spec() != neg.spec() {
            return Err(EvalError::BinSpecMismatch {
                a: *pos.spec(),
                b: *neg.spec(),
            });
        }
        Ok(ScoreHistogramPair { pos, neg })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(lo: f64, hi: f64, n: usize) -> BinSpec {
        BinSpec::new(lo, hi, n).unwrap()
    }

    #[test]
    fn bin_index_half_open_and_clamping() {
        let s = spec(0.0, 1.0, 4);
        assert_eq!(s.bin_index(0.5).unwrap(), 2);
        assert_eq!(s.bin_index(1.0).unwrap(), 3);
        assert_eq!(s.bin_index(-0.2).unwrap(), 0);
        assert_eq!(s.bin_index(0.0).unwrap(), 0);
        assert_eq!(s.bin_index(0.249999).unwrap(), 0);
        assert_eq!(s.bin_index(0.25).unwrap(), 1);
        assert_eq!(s.bin_index(7.5).unwrap(), 3);
    }

    #[test]
    fn bin_index_rejects_non_finite() {
        let s = spec(0.0, 1.0, 4);
        for bad in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            match s.bin_index(bad) {
                Err(EvalError::NonFiniteScore { value }) => {
                    assert!(value.is_nan() || value.is_infinite())
                }
                other => panic!("expected NonFiniteScore, got {other:?}"),
            }
        }
    }

    #[test]
    fn bin_spec_rejects_degenerate_grids() {
        assert!(BinSpec::new(1.0, 1.0, 4).is_err());
        assert!(BinSpec::new(2.0, 1.0, 4).is_err());
        assert!(BinSpec::new(0.0, 1.0, 1).is_err());
        assert!(BinSpec::new(f64::NAN, 1.0, 4).is_err());
    }

    #[test]
    fn edges_strictly_increase() {
        let s = spec(-2.5, 7.25, 13);
        for k in 0..13 {
            assert!(s.edge(k) < s.edge(k + 1));
        }
        assert_eq!(s.edge(0), -2.5);
        assert_eq!(s.edge(13), 7.25);
    }

    #[test]
    fn accumulate_places_single_samples() {
        let mut pair = ScoreHistogramPair::new(spec(0.0, 1.0, 10));
        pair.accumulate(&[0.9, 0.1], &[1, 0]).unwrap();
        assert_eq!(pair.pos().counts()[9], 1);
        assert_eq!(pair.neg().counts()[1], 1);
        assert_eq!(pair.pos().total(), 1);
        assert_eq!(pair.neg().total(), 1);
    }

    #[test]
    fn empty_batch_is_identity() {
        let mut pair = ScoreHistogramPair::new(spec(0.0, 1.0, 10));
        pair.accumulate(&[0.4], &[1]).unwrap();
        let before = pair.clone();
        pair.accumulate(&[], &[]).unwrap();
        assert_eq!(pair, before);
    }

    #[test]
    fn bad_label_rejected_and_batch_untouched() {
        let mut pair = ScoreHistogramPair::new(spec(0.0, 1.0, 10));
        let err = pair.accumulate(&[0.5, 0.6], &[1, 2]).unwrap_err();
        assert_eq!(err, EvalError::InvalidLabel { label: 2 });
        assert_eq!(pair.pos().total() + pair.neg().total(), 0);
    }

    #[test]
    fn length_mismatch_rejected() {
        let mut pair = ScoreHistogramPair::new(spec(0.0, 1.0, 10));
        let err = pair.accumulate(&[0.5], &[]).unwrap_err();
        assert_eq!(
            err,
            EvalError::LengthMismatch {
                scores: 1,
                labels: 0
            }
        );
    }

    #[test]
    fn merge_identity_commutative_associative() {
        let s = spec(0.0, 1.0, 8);
        let mut a = Histogram::new(s);
        let mut b = Histogram::new(s);
        let mut c = Histogram::new(s);
        for (h, scores) in [
            (&mut a, vec![0.1, 0.2, 0.95]),
            (&mut b, vec![0.5, 0.5]),
            (&mut c, vec![0.7]),
        ] {
            for v in scores {
                h.add(v).unwrap();
            }
        }
        let empty = Histogram::new(s);
        assert_eq!(a.merge(&empty).unwrap().counts(), a.counts());
        assert_eq!(
            a.merge(&b).unwrap().counts(),
            b.merge(&a).unwrap().counts()
        );
        assert_eq!(
            a.merge(&b).unwrap().merge(&c).unwrap().counts(),
            a.merge(&b.merge(&c).unwrap()).unwrap().counts()
        );
    }

    #[test]
    fn merge_rejects_mismatched_specs() {
        let a = Histogram::new(spec(0.0, 1.0, 8));
        let b = Histogram::new(spec(0.0, 1.0, 16));
        match a.merge(&b) {
            Err(EvalError::BinSpecMismatch { a: sa, b: sb }) => {
                assert_eq!(sa.n_bins(), 8);
                assert_eq!(sb.n_bins(), 16);
            }
            other => panic!("expected BinSpecMismatch, got {other:?}"),
        }
    }

    #[test]
    fn suffix_sums_hand_case() {
        let mut h = Histogram::new(spec(0.0, 3.0, 3));
        for v in [0.5, 2.5, 2.5] {
            h.add(v).unwrap();
        }
        // counts [1, 0, 2]
        assert_eq!(h.counts(), &[1, 0, 2]);
        assert_eq!(h.suffix_sums(), vec![3, 2, 2, 0]);
    }

    #[test]
    fn suffix_sums_all_zero() {
        let h = Histogram::new(spec(0.0, 1.0, 5));
        assert_eq!(h.suffix_sums(), vec![0; 6]);
    }

    #[test]
    fn suffix_sums_telescope() {
        let mut h = Histogram::new(spec(0.0, 1.0, 16));
        for i in 0..200 {
            h.add((i as f64) / 200.0).unwrap();
        }
        let s = h.suffix_sums();
        for k in 0..16 {
            assert_eq!(s[k] - s[k + 1], h.counts()[k]);
        }
        assert_eq!(s[0], h.total());
    }

    #[test]
    fn clamped_samples_are_tallied() {
        let mut h = Histogram::new(spec(0.0, 1.0, 4));
        for v in [-0.5, -0.1, 0.5, 1.0, 1.5] {
            h.add(v).unwrap();
        }
        // 1.0 == hi goes to the closed last bin without counting as clamped.
        assert_eq!(h.clamped(), (2, 1));
        assert_eq!(h.total(), 5);
    }

    #[test]
    fn byte_roundtrip_preserves_counts() {
        let mut h = Histogram::new(spec(-1.0, 2.0, 6));
        for v in [-0.5, 0.0, 1.9, 1.99, -1.0] {
            h.add(v).unwrap();
        }
        let back = Histogram::from_bytes(&h.to_bytes()).unwrap();
        assert_eq!(back.spec(), h.spec());
        assert_eq!(back.counts(), h.counts());
    }

    #[test]
    fn from_bytes_rejects_truncation() {
        let h = Histogram::new(spec(0.0, 1.0, 4));
        let mut bytes = h.to_bytes();
        bytes.pop();
        assert!(matches!(
            Histogram::from_bytes(&bytes),
            Err(EvalError::MalformedBytes { .. })
        ));
    }

    #[test]
    fn serialized_size_is_sample_count_independent() {
        let s = spec(0.0, 1.0, 64);
        let mut pair = ScoreHistogramPair::new(s);
        pair.accumulate(&[0.3], &[1]).unwrap();
        let small = pair.to_bytes().len();
        let mut x = 0x9e3779b97f4a7c15u64;
        for _ in 0..10_000_000u64 {
            // cheap xorshift; values land in [0,1)
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            let v = (x >> 11) as f64 / (1u64 << 53) as f64;
            pair.push(v, x & 1 == 0).unwrap();
        }
        assert_eq!(pair.pos().total() + pair.neg().total(), 10_000_001);
        assert_eq!(pair.to_bytes().len(), small);
    }
}
