//! Binary parameter checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "PURENVNN"
//! version    u32      1
//! shared     u8       0 or 1
//! obs_dim    u32
//! actions    u32
//! n_hidden   u32, then n_hidden x u32 widths
//! n_layers   u32, then per layer:
//!     input u32, output u32, output*input f64 weights (row-major), output f64 biases
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::write_atomic;

use super::mlp::MlpParams;

pub const MAGIC: &[u8; 8] = b"PURENVNN";
pub const VERSION: u32 = 1;

pub fn to_bytes(p: &MlpParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * p.num_params());
    let u32le = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(p.shared as u8);
    u32le(&mut out, p.obs_dim);
    u32le(&mut out, p.num_actions);
    u32le(&mut out, p.hidden.len());
    for &h in &p.hidden {
        u32le(&mut out, h);
    }
    u32le(&mut out, p.layers.len());
    for l in &p.layers {
        u32le(&mut out, l.input);
        u32le(&mut out, l.output);
        for v in l.weights.iter().chain(&l.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("layer too large".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<MlpParams> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let shared = match r.take(1)?[0] {
        0 => false,
        1 => true,
        b => return Err(Error::Checkpoint(format!("bad shared flag {b}"))),
    };
    let obs_dim = r.u32()?;
    let num_actions = r.u32()?;
    let n_hidden = r.u32()?;
    let hidden = (0..n_hidden).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    if obs_dim == 0 || num_actions == 0 || hidden.is_empty() || hidden.contains(&0) {
        return Err(Error::Checkpoint("invalid layer sizes".into()));
    }
    let mut p = MlpParams::zeros(obs_dim, num_actions, &hidden, shared);
    let n_layers = r.u32()?;
    if n_layers != p.layers.len() {
        return Err(Error::Checkpoint(format!("expected {} layers, found {n_layers}", p.layers.len())));
    }
    for (i, layer) in p.layers.iter_mut().enumerate() {
        let (input, output) = (r.u32()?, r.u32()?);
        if (input, output) != (layer.input, layer.output) {
            return Err(Error::Checkpoint(format!(
                "layer {i} is {input}->{output}, expected {}->{}",
                layer.input, layer.output
            )));
        }
        layer.weights = r.f64s(input * output)?;
        layer.bias = r.f64s(output)?;
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    if !p.is_finite() {
        return Err(Error::Checkpoint("non-finite parameter".into()));
    }
    Ok(p)
}

pub fn save(p: &MlpParams, path: &Path) -> Result<()> {
    write_atomic(path, &to_bytes(p))
}

pub fn load(path: &Path) -> Result<MlpParams> {
    from_bytes(&std::fs::read(path)?)
}
