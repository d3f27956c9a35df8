//! Dataset layout and scanning.
//!
//! A dataset root holds one directory per category:
//!
//! ```text
//! root/<category>/scores/<id>.npy      2-d float32 anomaly score maps
//! root/<category>/masks/<id>.png       8-bit grayscale ground truth (anomalous images)
//! root/<category>/labels.csv           image_id,label rows (label 0 or 1)
//! root/<category>/image_scores.csv     optional image_id,score sidecar
//! ```
//!
//! Normal images (label 0) may omit their mask; anomalous images must have
//! one. Scanning is deterministic: categories and image ids sort
//! lexicographically.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::{npy, pngio};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub category: String,
    pub image_id: String,
    pub score_path: PathBuf,
    pub mask_path: Option<PathBuf>,
    pub label: u8,
}

/// How much validation scanning performs up front.
///
/// `Structure` checks presence and label consistency without opening any
/// payload file, so a streaming run can keep its one-open-per-file
/// guarantee and validate shapes as it ingests. `Full` additionally opens
/// every payload header and checks score/mask shape agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanDepth {
    Structure,
    Full,
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<(String, u8)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| HarnessError::Csv {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| HarnessError::Csv {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(HarnessError::Csv {
                path: path.to_path_buf(),
                reason: format!("expected 2 fields per row, got {}", record.len()),
            });
        }
        let label: u8 = record[1].trim().parse().map_err(|_| HarnessError::Csv {
            path: path.to_path_buf(),
            reason: format!("label {:?} is not 0 or 1", &record[1]),
        })?;
        if label > 1 {
            return Err(HarnessError::Csv {
                path: path.to_path_buf(),
                reason: format!("label {label} is not 0 or 1"),
            });
        }
        rows.push((record[0].to_string(), label));
    }
    Ok(rows)
}

/// Optional per-image model scores (`image_id,score`).
pub fn read_image_scores_csv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| HarnessError::Csv {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let mut rows = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| HarnessError::Csv {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let score: f64 = record
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| HarnessError::Csv {
                path: path.to_path_buf(),
                reason: format!("bad score row {:?}", record.get(0)),
            })?;
        rows.insert(record[0].to_string(), score);
    }
    Ok(rows)
}

/// Walk a dataset root and return validated entries in lexicographic
/// (category, image id) order.
pub fn scan_dataset(
    root: &Path,
    categories: Option<&[String]>,
    depth: ScanDepth,
) -> Result<Vec<DatasetEntry>> {
    if !root.is_dir() {
        return Err(HarnessError::Validation(format!(
            "dataset root {} is not a directory",
            root.display()
        )));
    }
    let mut found: Vec<String> = std::fs::read_dir(root)
        .map_err(|e| HarnessError::io(root, e))?
        .filter_map(|entry| entry.ok())
        .filter(|entry| entry.path().is_dir())
        .map(|entry| entry.file_name().to_string_lossy().into_owned())
        .collect();
    found.sort();
    if let Some(filter) = categories {
        for want in filter {
            if !found.iter().any(|c| c == want) {
                return Err(HarnessError::Validation(format!(
                    "category {want:?} not found under {}",
                    root.display()
                )));
            }
        }
        found.retain(|c| filter.iter().any(|f| f == c));
    }

    let mut entries = Vec::new();
    for category in &found {
        let cat_dir = root.join(category);
        let labels_path = cat_dir.join("labels.csv");
        let mut rows = read_labels_csv(&labels_path)?;
        rows.sort();
        for (image_id, label) in rows {
            let score_path = cat_dir.join("scores").join(format!("{image_id}.npy"));
            if !score_path.is_file() {
                return Err(HarnessError::Validation(format!(
                    "missing score map {}",
                    score_path.display()
                )));
            }
            let mask_file = cat_dir.join("masks").join(format!("{image_id}.png"));
            let mask_path = if mask_file.is_file() {
                Some(mask_file)
            } else if label == 1 {
                return Err(HarnessError::Validation(format!(
                    "image {category}/{image_id} has label 1 but no mask at {}",
                    mask_file.display()
                )));
            } else {
                None
            };
            if depth == ScanDepth::Full {
                let score_shape = npy::peek_shape(&score_path)?;
                if let Some(mask_path) = &mask_path {
                    let mask_shape = pngio::peek_shape(mask_path)?;
                    if score_shape != mask_shape {
                        return Err(HarnessError::Validation(format!(
                            "{}: score map shape {:?} does not match mask shape {:?}",
                            score_path.display(),
                            score_shape,
                            mask_shape
                        )));
                    }
                    let mask = pngio::load_mask(mask_path)?;
                    let has_fg = mask.data().iter().any(|&v| v != 0);
                    if has_fg != (label == 1) {
                        return Err(HarnessError::Validation(format!(
                            "{}: label {} does not match mask foreground ({})",
                            mask_path.display(),
                            label,
                            if has_fg { "present" } else { "absent" },
                        )));
                    }
                }
            }
            entries.push(DatasetEntry {
                category: category.clone(),
                image_id,
                score_path,
                mask_path,
                label,
            });
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use streameval_core::Grid;

    fn write_category(
        root: &Path,
        category: &str,
        images: &[(&str, u8, Option<(usize, usize)>)],
        score_shape: (usize, usize),
    ) {
        let cat = root.join(category);
        std::fs::create_dir_all(cat.join("scores")).unwrap();
        std::fs::create_dir_all(cat.join("masks")).unwrap();
        let mut labels = String::from("image_id,label\n");
        for (id, label, mask_shape) in images {
            let (h, w) = score_shape;
            let grid = Grid::from_vec(vec![0.5f32; h * w], h, w).unwrap();
            npy::save_score_map(&cat.join("scores").join(format!("{id}.npy")), &grid).unwrap();
            if let Some((mh, mw)) = mask_shape {
                let mut mask = Grid::filled(0u8, *mh, *mw);
                if *label == 1 {
                    mask.set(0, 0, 1);
                }
                pngio::save_mask(&cat.join("masks").join(format!("{id}.png")), &mask).unwrap();
            }
            labels.push_str(&format!("{id},{label}\n"));
        }
        std::fs::write(cat.join("labels.csv"), labels).unwrap();
    }

    #[test]
    fn empty_root_yields_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        let entries = scan_dataset(dir.path(), None, ScanDepth::Full).unwrap();
        assert!(entries.is_empty());
    }

    #[test]
    fn entries_come_back_in_lexicographic_order() {
        let dir = tempfile::tempdir().unwrap();
        write_category(
            dir.path(),
            "beta",
            &[
                ("img_2", 0, None),
                ("img_0", 1, Some((4, 4))),
                ("img_1", 0, None),
            ],
            (4, 4),
        );
        write_category(
            dir.path(),
            "alpha",
            &[
                ("img_1", 1, Some((4, 4))),
                ("img_0", 0, None),
                ("img_2", 1, Some((4, 4))),
            ],
            (4, 4),
        );
        let entries = scan_dataset(dir.path(), None, ScanDepth::Full).unwrap();
        let seen: Vec<(String, String)> = entries
            .iter()
            .map(|e| (e.category.clone(), e.image_id.clone()))
            .collect();
        assert_eq!(seen.len(), 6);
        let mut sorted = seen.clone();
        sorted.sort();
        assert_eq!(seen, sorted);
        assert_eq!(seen[0].0, "alpha");
    }

    #[test]
    fn missing_mask_for_anomalous_image_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_category(dir.path(), "cat", &[("img_0", 1, None)], (4, 4));
        let e = scan_dataset(dir.path(), None, ScanDepth::Structure).unwrap_err();
        assert!(e.to_string().contains("img_0"), "{e}");
        assert!(e.to_string().contains("label 1"), "{e}");
    }

    #[test]
    fn shape_mismatch_is_reported_on_full_scan() {
        let dir = tempfile::tempdir().unwrap();
        write_category(dir.path(), "cat", &[("img_0", 1, Some((2, 2)))], (4, 4));
        // structure scan does not open payloads, so it passes
        assert!(scan_dataset(dir.path(), None, ScanDepth::Structure).is_ok());
        let e = scan_dataset(dir.path(), None, ScanDepth::Full).unwrap_err();
        assert!(e.to_string().contains("does not match mask shape"), "{e}");
    }

    #[test]
    fn label_mask_foreground_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        // label 0 image with a mask that has foreground
        let cat = dir.path().join("cat");
        std::fs::create_dir_all(cat.join("scores")).unwrap();
        std::fs::create_dir_all(cat.join("masks")).unwrap();
        let grid = Grid::from_vec(vec![0.5f32; 16], 4, 4).unwrap();
        npy::save_score_map(&cat.join("scores/img_0.npy"), &grid).unwrap();
        let mut mask = Grid::filled(0u8, 4, 4);
        mask.set(1, 1, 1);
        pngio::save_mask(&cat.join("masks/img_0.png"), &mask).unwrap();
        std::fs::write(cat.join("labels.csv"), "image_id,label\nimg_0,0\n").unwrap();
        let e = scan_dataset(dir.path(), None, ScanDepth::Full).unwrap_err();
        assert!(e.to_string().contains("does not match mask foreground"), "{e}");
    }

    #[test]
    fn category_filter_rejects_unknown_names() {
        let dir = tempfile::tempdir().unwrap();
        write_category(dir.path(), "real", &[("img_0", 0, None)], (4, 4));
        let err =
            scan_dataset(dir.path(), Some(&["ghost".to_string()]), ScanDepth::Full).unwrap_err();
        assert!(err.to_string().contains("ghost"));
        let ok = scan_dataset(dir.path(), Some(&["real".to_string()]), ScanDepth::Full).unwrap();
        assert_eq!(ok.len(), 1);
    }

    #[test]
    fn bad_label_value_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cat = dir.path().join("cat");
        std::fs::create_dir_all(&cat).unwrap();
        std::fs::write(cat.join("labels.csv"), "image_id,label\nimg_0,7\n").unwrap();
        let e = scan_dataset(dir.path(), None, ScanDepth::Structure).unwrap_err();
        assert!(e.to_string().contains("not 0 or 1"), "{e}");
    }
}
