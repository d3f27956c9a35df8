//! Deterministic synthetic fixture generator.
//!
//! Masks are unions of random rectangles and ellipses; scores are
//! mask-correlated noise with a separation knob: at 0 the score law is
//! identical for region and background pixels, at 1 every region pixel
//! scores strictly above every background pixel. Image-level model scores
//! go to a quantized sidecar so they are reproducible across evaluation
//! paths. Everything derives from one seed: the same seed writes a
//! byte-identical tree.

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use streameval_core::Grid;

use crate::error::{HarnessError, Result};
use crate::{npy, pngio};

// score-law constants; background support tops out at 0.42 while the
// anomaly band starts at 0.55, so separation 1.0 splits the classes with
// room for a grid edge between them
const T_MAX: f64 = 0.54;
const BG_FLOOR: f64 = 0.12;
const REGION_FLOOR: f64 = 0.1175;
const HIGH_LO: f64 = 0.55;
const HIGH_SPAN: f64 = 0.40;
const ATOM_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthProfile {
    /// 0.0 = uninformative scores, 1.0 = perfect separation.
    pub separation: f64,
    /// Fraction of images carrying an anomaly mask.
    pub anomalous_frac: f64,
}

impl Default for SynthProfile {
    fn default() -> Self {
        Self {
            separation: 0.7,
            anomalous_frac: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_categories: usize,
    pub n_images: usize,
    pub height: usize,
    pub width: usize,
    pub profile: SynthProfile,
}

#[derive(Debug, Clone)]
pub struct SynthImage {
    pub id: String,
    pub label: u8,
    pub scores: Grid<f32>,
    pub mask: Option<Grid<u8>>,
    /// Quantized model-style image score, written to the sidecar csv.
    pub image_score: f64,
}

fn category_rng(seed: u64, cat_index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (cat_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn stamp_shape(mask: &mut Grid<u8>, rng: &mut ChaCha8Rng) {
    let (h, w) = mask.shape();
    let min_dim = h.min(w);
    let lo = ((min_dim as f64) * 3.0 / 16.0).round().max(1.0) as usize;
    let hi = ((min_dim as f64) * 13.0 / 32.0).round().max(lo as f64) as usize;
    let sh = rng.random_range(lo..=hi).min(h);
    let sw = rng.random_range(lo..=hi).min(w);
    let y0 = rng.random_range(0..=h - sh);
    let x0 = rng.random_range(0..=w - sw);
    if rng.random::<bool>() {
        for y in y0..y0 + sh {
            for x in x0..x0 + sw {
                mask.set(y, x, 1);
            }
        }
    } else {
        // ellipse inscribed in the same box; always covers its center pixel
        let ry = (sh as f64) / 2.0;
        let rx = (sw as f64) / 2.0;
        let cy = y0 as f64 + ry - 0.5;
        let cx = x0 as f64 + rx - 0.5;
        for y in y0..y0 + sh {
            for x in x0..x0 + sw {
                let dy = (y as f64 - cy) / ry.max(0.5);
                let dx = (x as f64 - cx) / rx.max(0.5);
                if dy * dy + dx * dx <= 1.0 {
                    mask.set(y, x, 1);
                }
            }
        }
    }
}

fn background_score(rng: &mut ChaCha8Rng) -> f64 {
    (rng.random::<f64>() * T_MAX - BG_FLOOR).max(0.0)
}

fn region_score(rng: &mut ChaCha8Rng, separation: f64) -> f64 {
    if rng.random::<f64>() < separation {
        // anomaly signal: a floor atom that fades out as separation rises,
        // otherwise the high band
        if rng.random::<f64>() < ATOM_WEIGHT * (1.0 - separation) {
            0.0
        } else {
            HIGH_LO + HIGH_SPAN * rng.random::<f64>()
        }
    } else {
        (rng.random::<f64>() * T_MAX - REGION_FLOOR).max(0.0)
    }
}

fn image_score(rng: &mut ChaCha8Rng, label: bool, separation: f64) -> f64 {
    let swing = if label { 1.0 } else { -1.0 };
    let raw = 0.30 + 0.40 * rng.random::<f64>() + separation * 0.25 * swing;
    // lattice points sit strictly inside every power-of-two grid's bins,
    // or exactly on shared edges, so the sketch loses nothing
    (2.0 * (raw * 256.0).floor() + 1.0) / 512.0
}

/// Deterministic images for one category.
pub fn category_images(spec: &SynthSpec, cat_index: usize) -> Vec<SynthImage> {
    let mut rng = category_rng(spec.seed, cat_index);
    let n = spec.n_images;
    let n_anom = ((n as f64) * spec.profile.anomalous_frac).round() as usize;
    let mut labels = vec![false; n];
    for l in labels.iter_mut().take(n_anom) {
        *l = true;
    }
    labels.shuffle(&mut rng);

    let sep = spec.profile.separation;
    let (h, w) = (spec.height, spec.width);
    labels
        .iter()
        .enumerate()
        .map(|(i, &anomalous)| {
            let mask = anomalous.then(|| {
                let mut mask = Grid::filled(0u8, h, w);
                for _ in 0..rng.random_range(1..=3usize) {
                    stamp_shape(&mut mask, &mut rng);
                }
                mask
            });
            let mut scores = Vec::with_capacity(h * w);
            for idx in 0..h * w {
                let in_region = mask
                    .as_ref()
                    .is_some_and(|m| m.data()[idx] != 0);
                let s = if in_region {
                    region_score(&mut rng, sep)
                } else {
                    background_score(&mut rng)
                };
                scores.push(s as f32);
            }
            SynthImage {
                id: format!("img_{i:04}"),
                label: u8::from(anomalous),
                scores: Grid::from_vec(scores, h, w).expect("constructed to shape"),
                mask,
                image_score: image_score(&mut rng, anomalous, sep),
            }
        })
        .collect()
}

pub fn category_name(cat_index: usize) -> String {
    format!("cat_{cat_index:02}")
}

/// Write a dataset tree under `root`. Refuses a non-empty target unless
/// `force` is set.
pub fn generate(root: &Path, spec: &SynthSpec, force: bool) -> Result<()> {
    if spec.height < 8 || spec.width < 8 {
        return Err(HarnessError::Usage(format!(
            "image shape must be at least 8x8, got {}x{}",
            spec.height, spec.width
        )));
    }
    if root.exists() {
        let occupied = std::fs::read_dir(root)
            .map_err(|e| HarnessError::io(root, e))?
            .next()
            .is_some();
        if occupied && !force {
            return Err(HarnessError::Validation(format!(
                "output directory {} is not empty (use --force to overwrite)",
                root.display()
            )));
        }
    }
    for cat_index in 0..spec.n_categories {
        let cat_dir = root.join(category_name(cat_index));
        std::fs::create_dir_all(cat_dir.join("scores"))
            .map_err(|e| HarnessError::io(&cat_dir, e))?;
        std::fs::create_dir_all(cat_dir.join("masks"))
            .map_err(|e| HarnessError::io(&cat_dir, e))?;
        let mut labels = String::from("image_id,label\n");
        let mut image_scores = String::from("image_id,score\n");
        for image in category_images(spec, cat_index) {
            npy::save_score_map(
                &cat_dir.join("scores").join(format!("{}.npy", image.id)),
                &image.scores,
            )?;
            if let Some(mask) = &image.mask {
                pngio::save_mask(&cat_dir.join("masks").join(format!("{}.png", image.id)), mask)?;
            }
            labels.push_str(&format!("{},{}\n", image.id, image.label));
            image_scores.push_str(&format!("{},{}\n", image.id, image.image_score));
        }
        std::fs::write(cat_dir.join("labels.csv"), labels)
            .map_err(|e| HarnessError::io(cat_dir.join("labels.csv"), e))?;
        std::fs::write(cat_dir.join("image_scores.csv"), image_scores)
            .map_err(|e| HarnessError::io(cat_dir.join("image_scores.csv"), e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(seed: u64) -> SynthSpec {
        SynthSpec {
            seed,
            n_categories: 2,
            n_images: 6,
            height: 16,
            width: 16,
            profile: SynthProfile::default(),
        }
    }

    #[test]
    fn same_seed_same_images() {
        let a = category_images(&spec(42), 0);
        let b = category_images(&spec(42), 0);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.scores.data(), y.scores.data());
            assert_eq!(x.mask.as_ref().map(|m| m.data().to_vec()),
                       y.mask.as_ref().map(|m| m.data().to_vec()));
            assert_eq!(x.image_score, y.image_score);
        }
        let c = category_images(&spec(43), 0);
        assert!(a.iter().zip(&c).any(|(x, y)| x.scores.data() != y.scores.data()));
    }

    #[test]
    fn anomalous_images_have_nonempty_masks() {
        for image in category_images(&spec(7), 1) {
            match (&image.mask, image.label) {
                (Some(mask), 1) => {
                    assert!(mask.data().iter().any(|&v| v != 0));
                }
                (None, 0) => {}
                other => panic!("label/mask mismatch: {other:?}"),
            }
        }
    }

    #[test]
    fn perfect_separation_splits_score_ranges() {
        let mut s = spec(11);
        s.profile.separation = 1.0;
        for image in category_images(&s, 0) {
            for (i, &v) in image.scores.data().iter().enumerate() {
                let fg = image.mask.as_ref().is_some_and(|m| m.data()[i] != 0);
                if fg {
                    assert!(v >= HIGH_LO as f32, "region pixel at {v}");
                } else {
                    assert!(v <= (T_MAX - BG_FLOOR) as f32, "background pixel at {v}");
                }
            }
        }
    }

    #[test]
    fn same_seed_writes_byte_identical_trees() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        generate(dir_a.path(), &spec(3), false).unwrap();
        generate(dir_b.path(), &spec(3), false).unwrap();
        let mut paths: Vec<_> = walk(dir_a.path());
        paths.sort();
        assert!(!paths.is_empty());
        for rel in paths {
            let a = std::fs::read(dir_a.path().join(&rel)).unwrap();
            let b = std::fs::read(dir_b.path().join(&rel)).unwrap();
            assert_eq!(a, b, "content differs for {rel}");
        }
    }

    #[test]
    fn refuses_nonempty_target_without_force() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("existing.txt"), "x").unwrap();
        let err = generate(dir.path(), &spec(3), false).unwrap_err();
        assert!(err.to_string().contains("not empty"));
        generate(dir.path(), &spec(3), true).unwrap();
    }

    fn walk(root: &Path) -> Vec<String> {
        let mut out = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(&dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    out.push(
                        path.strip_prefix(root)
                            .unwrap()
                            .to_string_lossy()
                            .into_owned(),
                    );
                }
            }
        }
        out
    }
}
