//! Binary checkpoint format.
//!
//! ```text
//! magic    8 bytes  "TNAVCKPT"
//! version  u32 LE
//! count    u32 LE   number of tensors
//! count ×  { name_len u16, name utf-8, ndim u8, dims u32 × ndim }
//! data     f32 LE   every tensor in table order
//! ```
//!
//! A `<stem>.norm.json` sidecar holds the observation normalization.

use super::network::{NetShape, PolicyWeights, Tensor};
use super::PolicyError;
use crate::sensors::Normalization;
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 8] = b"TNAVCKPT";
pub const VERSION: u32 = 1;

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("norm.json")
}

pub fn encode(weights: &PolicyWeights) -> Vec<u8> {
    let tensors = weights.shape.tensors();
    let mut out = Vec::with_capacity(64 + 4 * weights.params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in &tensors {
        out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.push(t.dims.len() as u8);
        for &d in &t.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    for v in &weights.params {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PolicyError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or(PolicyError::Truncated)?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, PolicyError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, PolicyError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, PolicyError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Recovers the network shape implied by a tensor table.
fn shape_from_table(table: &[Tensor]) -> Result<NetShape, PolicyError> {
    let bad = |msg: &str| PolicyError::BadTable(msg.to_string());
    let first = table.first().ok_or_else(|| bad("empty tensor table"))?;
    let input = match first.dims.as_slice() {
        [_, cols] if first.name.starts_with("trunk.") => *cols,
        [_, cols] if first.name == "policy.weight" => *cols,
        _ => return Err(bad("first tensor is not a weight matrix")),
    };
    let hidden = table
        .iter()
        .filter(|t| t.name.starts_with("trunk.") && t.name.ends_with(".weight"))
        .map(|t| t.dims[0])
        .collect();
    let shape = NetShape { input, hidden };
    if shape.tensors() != table {
        return Err(bad("tensor table does not describe an actor-critic network"));
    }
    Ok(shape)
}

pub fn decode(bytes: &[u8]) -> Result<PolicyWeights, PolicyError> {
    let mut r = Reader { buf: bytes, at: 0 };
    let magic = r.take(MAGIC.len()).map_err(|_| PolicyError::BadMagic)?;
    if magic != MAGIC {
        return Err(PolicyError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(PolicyError::UnsupportedVersion(version));
    }
    let count = r.u32()? as usize;
    let mut table = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| PolicyError::BadTable("tensor name is not utf-8".into()))?
            .to_string();
        let ndim = r.u8()? as usize;
        let dims = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<Result<_, _>>()?;
        table.push(Tensor { name, dims });
    }
    let shape = shape_from_table(&table)?;
    let n = shape.param_count();
    let data = r.take(n * 4)?;
    if r.at != bytes.len() {
        return Err(PolicyError::BadTable("trailing bytes after parameter data".into()));
    }
    let params = data
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    PolicyWeights::from_params(shape, params)
}

pub fn save_checkpoint(path: &Path, weights: &PolicyWeights, norm: &Normalization) -> Result<(), PolicyError> {
    std::fs::write(path, encode(weights))?;
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(norm)?)?;
    Ok(())
}

/// Loads weights and their normalization; a missing sidecar means defaults.
pub fn load_checkpoint(path: &Path) -> Result<(PolicyWeights, Normalization), PolicyError> {
    let weights = decode(&std::fs::read(path)?)?;
    let side = sidecar_path(path);
    let norm = if side.exists() {
        serde_json::from_str(&std::fs::read_to_string(side)?)?
    } else {
        Normalization::default()
    };
    Ok((weights, norm))
}

/// Loads a checkpoint and requires it to have `expected` shape.
pub fn load_checked(path: &Path, expected: &NetShape) -> Result<(PolicyWeights, Normalization), PolicyError> {
    let (w, n) = load_checkpoint(path)?;
    if &w.shape != expected {
        return Err(PolicyError::ShapeMismatch {
            expected: expected.param_count(),
            got: w.params.len(),
        });
    }
    Ok((w, n))
}
