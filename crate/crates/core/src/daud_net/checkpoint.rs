//! Binary checkpoint: `DAUD` magic, a little-endian u32 header
//! (version, input dim, width, depth, outputs, batch-norm sites, activation,
//! tensor count) and then each tensor as name length, name bytes, element
//! count and binary32 values.

use std::fs;
use std::path::Path;

use super::params::{Activation, NetworkParams, NetworkShape};
use super::scalar::Scalar;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DAUD";
pub const CHECKPOINT_VERSION: u32 = 1;

fn format_error(reason: impl Into<String>) -> Error {
    Error::Format {
        kind: "checkpoint",
        reason: reason.into(),
    }
}

pub fn checkpoint_bytes<F: Scalar>(params: &NetworkParams<F>) -> Vec<u8> {
    let s = params.shape;
    let tensors = params.named_tensors();
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    for v in [
        CHECKPOINT_VERSION,
        s.input_dim as u32,
        s.width as u32,
        s.depth as u32,
        s.outputs as u32,
        s.bn_sites() as u32,
        s.activation.code(),
        tensors.len() as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for (name, data) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        for v in data {
            out.extend_from_slice(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format_error("unexpected end of file"))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }
}

pub fn checkpoint_from_bytes<F: Scalar>(bytes: &[u8]) -> Result<NetworkParams<F>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(format_error("bad magic"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(format_error(format!("unsupported version {version}")));
    }
    let dims: Vec<usize> = (0..4).map(|_| r.u32().map(|v| v as usize)).collect::<Result<_>>()?;
    let bn_sites = r.u32()? as usize;
    let activation = Activation::from_code(r.u32()?).ok_or_else(|| format_error("unknown activation code"))?;
    let shape = NetworkShape::new(dims[0], dims[1], dims[2], dims[3])
        .map_err(|e| format_error(e.to_string()))?
        .with_activation(activation);
    if bn_sites != shape.bn_sites() {
        return Err(format_error("batch-norm site count does not match depth"));
    }

    let mut params = NetworkParams::<F>::zeros(shape);
    let expected: Vec<(String, usize)> = params
        .named_tensors()
        .into_iter()
        .map(|(name, t)| (name, t.len()))
        .collect();
    let count = r.u32()? as usize;
    if count != expected.len() {
        return Err(format_error(format!("expected {} tensors, found {count}", expected.len())));
    }
    for ((name, len), slot) in expected.iter().zip(params.tensors_mut()) {
        let name_len = r.u32()? as usize;
        let found = std::str::from_utf8(r.take(name_len)?).map_err(|_| format_error("tensor name is not UTF-8"))?;
        if found != name {
            return Err(format_error(format!("expected tensor {name}, found {found}")));
        }
        if r.u32()? as usize != *len {
            return Err(format_error(format!("tensor {name} has the wrong length")));
        }
        let raw = r.take(4 * len)?;
        for (dst, chunk) in slot.iter_mut().zip(raw.chunks_exact(4)) {
            *dst = F::of(f64::from(f32::from_le_bytes(chunk.try_into().expect("four bytes"))));
        }
    }
    if r.pos != bytes.len() {
        return Err(format_error("trailing bytes after the last tensor"));
    }
    Ok(params)
}

pub fn write_checkpoint<F: Scalar>(path: &Path, params: &NetworkParams<F>) -> Result<()> {
    fs::write(path, checkpoint_bytes(params)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint<F: Scalar>(path: &Path) -> Result<NetworkParams<F>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes)
}
