use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};

use super::{check_magic, exact, read_file, require};
use crate::error::{FormatError, Result};
use crate::evidence::EvidenceSource;

const MAGIC: &[u8; 4] = b"EVTC";
const MISSING_BYTE: u8 = 0xFF;

/// EVT-CAT: `"EVTC"`, u32 N, u32 W (little-endian), then N value bytes
/// (0xFF where missing) and N mask bytes (0 or 1). Widths above 255 do not fit.
pub fn encode_evidence(source: &EvidenceSource) -> Result<Vec<u8>> {
    let n = u32::try_from(source.len()).map_err(|_| FormatError::DimensionOverflow(format!("{} samples", source.len())))?;
    if source.width() > 255 {
        return Err(FormatError::DimensionOverflow(format!("width {} exceeds 255", source.width())).into());
    }
    let mut out = Vec::with_capacity(12 + 2 * source.len());
    out.extend_from_slice(MAGIC);
    out.extend(n.to_le_bytes());
    out.extend((source.width() as u32).to_le_bytes());
    out.extend(source.values().map(|v| v.map_or(MISSING_BYTE, |v| v as u8)));
    out.extend(source.mask().iter().map(|&m| u8::from(m)));
    Ok(out)
}

pub fn decode_evidence(bytes: &[u8]) -> Result<EvidenceSource> {
    check_magic(bytes, MAGIC)?;
    require(bytes, 12)?;
    let n = LittleEndian::read_u32(&bytes[4..]) as u64;
    let width = LittleEndian::read_u32(&bytes[8..]);
    if width == 0 || width > 255 {
        return Err(FormatError::Corrupt(format!("width {width} outside 1..=255")).into());
    }
    exact(bytes, 12 + 2 * n)?;
    let (values, mask) = bytes[12..].split_at(n as usize);
    let mut out = Vec::with_capacity(n as usize);
    for (i, (&v, &m)) in values.iter().zip(mask).enumerate() {
        out.push(match (m, v) {
            (0, MISSING_BYTE) => None,
            (1, v) if u32::from(v) < width => Some(u32::from(v)),
            _ => {
                return Err(FormatError::Corrupt(format!("sample {i}: value byte {v:#04x} with mask byte {m}")).into())
            }
        });
    }
    EvidenceSource::new(out, width as usize)
}

pub fn save_evidence(source: &EvidenceSource, path: &Path) -> Result<()> {
    std::fs::write(path, encode_evidence(source)?)?;
    Ok(())
}

pub fn load_evidence(path: &Path) -> Result<EvidenceSource> {
    decode_evidence(&read_file(path)?)
}
