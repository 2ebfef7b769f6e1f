use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use ndarray::Array2;

use super::{check_magic, exact, read_file, require};
use crate::error::{FormatError, Result};

const MAGIC: &[u8; 4] = b"EVTM";

/// EVT-MAT: `"EVTM"`, u32 rows, u32 cols, then `rows × cols` f32 values,
/// row-major, all little-endian.
pub fn encode_matrix(m: &Array2<f32>) -> Result<Vec<u8>> {
    let (rows, cols) = m.dim();
    let rows32 = u32::try_from(rows).map_err(|_| FormatError::DimensionOverflow(format!("{rows} rows")))?;
    let cols32 = u32::try_from(cols).map_err(|_| FormatError::DimensionOverflow(format!("{cols} cols")))?;
    let mut out = Vec::with_capacity(12 + 4 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend(rows32.to_le_bytes());
    out.extend(cols32.to_le_bytes());
    for v in m.iter() {
        out.extend(v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<Array2<f32>, FormatError> {
    check_magic(bytes, MAGIC)?;
    require(bytes, 12)?;
    let rows = LittleEndian::read_u32(&bytes[4..]) as u64;
    let cols = LittleEndian::read_u32(&bytes[8..]) as u64;
    let len = rows
        .checked_mul(cols)
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(12))
        .filter(|&v| usize::try_from(v).is_ok())
        .ok_or_else(|| FormatError::DimensionOverflow(format!("{rows} × {cols}")))?;
    exact(bytes, len)?;
    let mut values = vec![0f32; (rows * cols) as usize];
    LittleEndian::read_f32_into(&bytes[12..], &mut values);
    Ok(Array2::from_shape_vec((rows as usize, cols as usize), values).expect("length checked"))
}

pub fn save_matrix(m: &Array2<f32>, path: &Path) -> Result<()> {
    std::fs::write(path, encode_matrix(m)?)?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<Array2<f32>> {
    Ok(decode_matrix(&read_file(path)?)?)
}
