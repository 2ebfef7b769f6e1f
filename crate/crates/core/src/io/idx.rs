use std::path::Path;

use byteorder::{BigEndian, ByteOrder};
use ndarray::Array2;

use super::{exact, read_file, require, DatasetBundle};
use crate::error::{FormatError, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Raw contents of an IDX image file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// `count × rows × cols` bytes, row-major.
    pub pixels: Vec<u8>,
}

fn check_idx_magic(bytes: &[u8], expected: u32) -> Result<(), FormatError> {
    require(bytes, 4)?;
    let found = BigEndian::read_u32(bytes);
    if found != expected {
        return Err(FormatError::BadMagic { expected, found });
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages, FormatError> {
    check_idx_magic(bytes, IMAGES_MAGIC)?;
    require(bytes, 16)?;
    let count = BigEndian::read_u32(&bytes[4..]) as u64;
    let rows = BigEndian::read_u32(&bytes[8..]) as u64;
    let cols = BigEndian::read_u32(&bytes[12..]) as u64;
    let body = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .and_then(|v| v.checked_add(16))
        .filter(|&v| usize::try_from(v).is_ok())
        .ok_or_else(|| FormatError::DimensionOverflow(format!("{count} × {rows} × {cols}")))?;
    exact(bytes, body)?;
    Ok(IdxImages {
        count: count as usize,
        rows: rows as usize,
        cols: cols as usize,
        pixels: bytes[16..].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, FormatError> {
    check_idx_magic(bytes, LABELS_MAGIC)?;
    require(bytes, 8)?;
    let count = BigEndian::read_u32(&bytes[4..]) as u64;
    exact(bytes, 8 + count)?;
    Ok(bytes[8..].to_vec())
}

/// Loads an IDX image/label pair. Pixels are scaled to `[0, 1]` and each
/// image is flattened to one row.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<DatasetBundle> {
    let images = parse_idx_images(&read_file(images_path)?)?;
    let labels = parse_idx_labels(&read_file(labels_path)?)?;
    if images.count != labels.len() {
        return Err(FormatError::CountMismatch { images: images.count, labels: labels.len() }.into());
    }
    let dim = images.rows * images.cols;
    let features = Array2::from_shape_vec(
        (images.count, dim),
        images.pixels.iter().map(|&p| f32::from(p) / 255.0).collect(),
    )
    .expect("length checked by parser");
    DatasetBundle::new(
        features,
        labels.into_iter().map(u32::from).collect(),
        dataset_name(images_path),
        format!("idx:{}", images_path.display()),
    )
}

/// Name of the directory holding the files, else the file stem.
fn dataset_name(path: &Path) -> String {
    path.parent()
        .and_then(Path::file_name)
        .or_else(|| path.file_stem())
        .map_or_else(|| "idx".into(), |s| s.to_string_lossy().into_owned())
}
