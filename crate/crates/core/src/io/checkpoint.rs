use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use ndarray::{Array1, Array2};

use super::{check_magic, exact, read_file, require};
use crate::error::{FormatError, Result};
use crate::nn::{Activation, DenseLayer, Network};

const MAGIC: &[u8; 4] = b"EVTK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A stored network together with the fingerprint of the configuration that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Network<f32>,
    pub fingerprint: u64,
}

// Layout (little-endian):
//   "EVTK" | u32 version | u64 fingerprint | u32 bottleneck | u32 layer count
//   per layer: u32 in | u32 out | u8 activation
//   u64 parameter count | f32 parameters (Network::flat_params order)
pub fn encode_checkpoint(model: &Network<f32>, fingerprint: u64) -> Vec<u8> {
    let params = model.flat_params();
    let mut out = Vec::with_capacity(32 + 9 * model.layers().len() + 4 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend(CHECKPOINT_VERSION.to_le_bytes());
    out.extend(fingerprint.to_le_bytes());
    out.extend((model.bottleneck_index() as u32).to_le_bytes());
    out.extend((model.layers().len() as u32).to_le_bytes());
    for layer in model.layers() {
        out.extend((layer.in_dim() as u32).to_le_bytes());
        out.extend((layer.out_dim() as u32).to_le_bytes());
        out.push(layer.activation().code());
    }
    out.extend((params.len() as u64).to_le_bytes());
    for p in params {
        out.extend(p.to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    check_magic(bytes, MAGIC)?;
    require(bytes, 24)?;
    let version = LittleEndian::read_u32(&bytes[4..]);
    if version != CHECKPOINT_VERSION {
        return Err(FormatError::VersionMismatch { expected: CHECKPOINT_VERSION, found: version }.into());
    }
    let fingerprint = LittleEndian::read_u64(&bytes[8..]);
    let bottleneck = LittleEndian::read_u32(&bytes[16..]) as usize;
    let count = LittleEndian::read_u32(&bytes[20..]) as u64;
    let mut pos = 24u64;
    require(bytes, pos + 9 * count + 8)?;
    let mut shapes = Vec::with_capacity(count as usize);
    let mut expected_params = 0u64;
    for _ in 0..count {
        let at = pos as usize;
        let fan_in = LittleEndian::read_u32(&bytes[at..]) as u64;
        let fan_out = LittleEndian::read_u32(&bytes[at + 4..]) as u64;
        let act = Activation::from_code(bytes[at + 8])
            .ok_or_else(|| FormatError::Corrupt(format!("unknown activation code {}", bytes[at + 8])))?;
        expected_params = fan_in
            .checked_add(1)
            .and_then(|v| v.checked_mul(fan_out))
            .and_then(|v| v.checked_add(expected_params))
            .ok_or_else(|| FormatError::DimensionOverflow(format!("layer {fan_in} → {fan_out}")))?;
        shapes.push((fan_in as usize, fan_out as usize, act));
        pos += 9;
    }
    let declared = LittleEndian::read_u64(&bytes[pos as usize..]);
    pos += 8;
    if declared != expected_params {
        return Err(FormatError::Corrupt(format!(
            "parameter count {declared} does not match topology ({expected_params})"
        ))
        .into());
    }
    let total = declared
        .checked_mul(4)
        .and_then(|v| v.checked_add(pos))
        .ok_or_else(|| FormatError::DimensionOverflow(format!("{declared} parameters")))?;
    exact(bytes, total)?;
    let mut params = vec![0f32; declared as usize];
    LittleEndian::read_f32_into(&bytes[pos as usize..], &mut params);

    let mut layers = Vec::with_capacity(shapes.len());
    let mut offset = 0;
    for (fan_in, fan_out, act) in shapes {
        let w = Array2::from_shape_vec((fan_out, fan_in), params[offset..offset + fan_in * fan_out].to_vec())
            .expect("sized from topology");
        offset += fan_in * fan_out;
        let b = Array1::from(params[offset..offset + fan_out].to_vec());
        offset += fan_out;
        layers.push(DenseLayer::new(w, b, act)?);
    }
    let model = Network::new(layers, bottleneck)?;
    Ok(Checkpoint { model, fingerprint })
}

pub fn save_checkpoint(model: &Network<f32>, fingerprint: u64, path: &Path) -> Result<()> {
    std::fs::write(path, encode_checkpoint(model, fingerprint))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&read_file(path)?)
}
