//! Reader/writer for 2-D little-endian float32 arrays in the npy v1.0
//! container: 6-byte magic, version, header length, a python dict literal
//! padded to 64-byte alignment, then the C-order payload.

use std::io::{Read, Write};
use std::path::Path;

use streameval_core::Grid;

use crate::error::{HarnessError, Result};

const MAGIC: [u8; 6] = *b"\x93NUMPY";

fn err(path: &Path, reason: impl Into<String>) -> HarnessError {
    HarnessError::Npy {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Serialize a score map as `<f4`, C-order, shape `(h, w)`.
pub fn write_score_map<W: Write>(writer: &mut W, grid: &Grid<f32>) -> std::io::Result<()> {
    let dict = format!(
        "{{'descr': '<f4', 'fortran_order': False, 'shape': ({}, {}), }}",
        grid.height(),
        grid.width()
    );
    // magic + version + header-length field + dict + padding ends '\n',
    // total a multiple of 64
    let prefix = MAGIC.len() + 2 + 2;
    let unpadded = prefix + dict.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    let header_len = (dict.len() + padding + 1) as u16;

    writer.write_all(&MAGIC)?;
    writer.write_all(&[1, 0])?;
    writer.write_all(&header_len.to_le_bytes())?;
    writer.write_all(dict.as_bytes())?;
    writer.write_all(&vec![b' '; padding])?;
    writer.write_all(b"\n")?;
    for v in grid.data() {
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn save_score_map(path: &Path, grid: &Grid<f32>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    write_score_map(&mut writer, grid).map_err(|e| HarnessError::io(path, e))
}

/// Parse the header of an npy stream, returning `(height, width)` without
/// touching the payload.
fn read_header<R: Read>(reader: &mut R, path: &Path) -> Result<(usize, usize)> {
    let mut fixed = [0u8; 10];
    reader
        .read_exact(&mut fixed)
        .map_err(|e| HarnessError::io(path, e))?;
    if fixed[..6] != MAGIC {
        return Err(err(path, "bad magic"));
    }
    if fixed[6..8] != [1, 0] {
        return Err(err(
            path,
            format!("unsupported version {}.{}", fixed[6], fixed[7]),
        ));
    }
    let header_len = u16::from_le_bytes([fixed[8], fixed[9]]) as usize;
    let mut header = vec![0u8; header_len];
    reader
        .read_exact(&mut header)
        .map_err(|e| HarnessError::io(path, e))?;
    let header = std::str::from_utf8(&header).map_err(|_| err(path, "header is not ascii"))?;

    let field = |key: &str| -> Result<&str> {
        let at = header
            .find(key)
            .ok_or_else(|| err(path, format!("missing {key}")))?;
        Ok(header[at + key.len()..].trim_start_matches([':', ' ']))
    };
    let descr = field("'descr'")?;
    if !descr.starts_with("'<f4'") {
        return Err(err(path, "descr must be '<f4'"));
    }
    let order = field("'fortran_order'")?;
    if !order.starts_with("False") {
        return Err(err(path, "fortran order is not supported"));
    }
    let shape = field("'shape'")?;
    let open = shape.find('(').ok_or_else(|| err(path, "malformed shape"))?;
    let close = shape.find(')').ok_or_else(|| err(path, "malformed shape"))?;
    let dims: Vec<usize> = shape[open + 1..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| err(path, "malformed shape")))
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        return Err(err(path, format!("need a 2-d array, got {}-d", dims.len())));
    }
    Ok((dims[0], dims[1]))
}

pub fn read_score_map<R: Read>(reader: &mut R, path: &Path) -> Result<Grid<f32>> {
    let (h, w) = read_header(reader, path)?;
    let mut payload = vec![0u8; h * w * 4];
    reader
        .read_exact(&mut payload)
        .map_err(|e| HarnessError::io(path, e))?;
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Grid::from_vec(data, h, w).map_err(HarnessError::Metric)
}

pub fn load_score_map(path: &Path) -> Result<Grid<f32>> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = std::io::BufReader::new(file);
    read_score_map(&mut reader, path)
}

/// Shape from the header alone, used by eager dataset validation.
pub fn peek_shape(path: &Path) -> Result<(usize, usize)> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = std::io::BufReader::new(file);
    read_header(&mut reader, path)
}
