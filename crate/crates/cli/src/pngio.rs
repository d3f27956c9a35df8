//! 8-bit grayscale PNG masks: nonzero pixels mark anomalous ground truth.

use std::path::Path;

use streameval_core::Grid;

use crate::error::{HarnessError, Result};

fn err(path: &Path, reason: impl Into<String>) -> HarnessError {
    HarnessError::Png {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Write a binary mask; foreground is stored as 255 for viewability.
pub fn save_mask(path: &Path, mask: &Grid<u8>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let writer = std::io::BufWriter::new(file);
    let mut encoder = png::Encoder::new(writer, mask.width() as u32, mask.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| err(path, e.to_string()))?;
    let bytes: Vec<u8> = mask
        .data()
        .iter()
        .map(|&v| if v != 0 { 255 } else { 0 })
        .collect();
    writer
        .write_image_data(&bytes)
        .map_err(|e| err(path, e.to_string()))
}

/// Load a mask, normalizing every nonzero pixel to 1.
pub fn load_mask(path: &Path) -> Result<Grid<u8>> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let decoder = png::Decoder::new(std::io::BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| err(path, e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(err(
            path,
            format!(
                "need 8-bit grayscale, got {:?} {:?}",
                info.color_type, info.bit_depth
            ),
        ));
    }
    let (h, w) = (info.height as usize, info.width as usize);
    let mut buf = vec![0u8; reader.output_buffer_size().expect("mask fits in memory")];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| err(path, e.to_string()))?;
    let data: Vec<u8> = buf[..frame.buffer_size()]
        .iter()
        .map(|&v| u8::from(v != 0))
        .collect();
    Grid::from_vec(data, h, w).map_err(HarnessError::Metric)
}

/// Mask dimensions from the header, used by eager dataset validation.
pub fn peek_shape(path: &Path) -> Result<(usize, usize)> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let decoder = png::Decoder::new(std::io::BufReader::new(file));
    let reader = decoder.read_info().map_err(|e| err(path, e.to_string()))?;
    let info = reader.info();
    Ok((info.height as usize, info.width as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_normalizes_to_binary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let mask = Grid::from_vec(vec![0u8, 1, 1, 0, 0, 1], 2, 3).unwrap();
        save_mask(&path, &mask).unwrap();
        let back = load_mask(&path).unwrap();
        assert_eq!(back.shape(), (2, 3));
        assert_eq!(back.data(), mask.data());
        assert_eq!(peek_shape(&path).unwrap(), (2, 3));
    }

    #[test]
    fn missing_file_reports_path() {
        let e = load_mask(Path::new("/nonexistent/m.png")).unwrap_err();
        assert!(e.to_string().contains("nonexistent"));
    }
}
