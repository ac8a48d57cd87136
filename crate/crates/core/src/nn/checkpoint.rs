//! Versioned binary checkpoint.
//!
//! ```text
//! magic "SSEVCKPT" | version u32 | input_length u32
//! layers: u32 length + UTF-8 (comma-separated layer specs)
//! registry hash: u32 length + UTF-8
//! seed u64
//! adam: learning_rate, beta1, beta2, epsilon f64 | step u64
//! tensor count u32, then per tensor: rank u32, dims u32 * rank, f32 LE data
//! ```
//!
//! Tensors are the model parameters followed by the Adam first and second
//! moments, each in parameter order. All integers and floats are little endian.

use std::path::Path;

use super::adam::{Adam, AdamConfig};
use super::arch::Architecture;
use super::model::Model;
use super::Tensor;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SSEVCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model<f32>,
    pub adam: Adam<f32>,
    pub registry_hash: String,
}

fn put_u32(buf: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Dimension(format!("{v} exceeds u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_str(buf: &mut Vec<u8>, s: &str) -> Result<()> {
    put_u32(buf, s.len())?;
    buf.extend_from_slice(s.as_bytes());
    Ok(())
}

fn put_tensor(buf: &mut Vec<u8>, t: &Tensor<f32>) -> Result<()> {
    put_u32(buf, t.shape().len())?;
    for &d in t.shape() {
        put_u32(buf, d)?;
    }
    for v in t.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(())
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let model = &ckpt.model;
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    put_u32(&mut buf, model.arch.input_length)?;
    put_str(&mut buf, &model.arch.layers_string())?;
    put_str(&mut buf, &ckpt.registry_hash)?;
    buf.extend_from_slice(&model.seed.to_le_bytes());
    let c = ckpt.adam.config;
    for v in [c.learning_rate, c.beta1, c.beta2, c.epsilon] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&ckpt.adam.step.to_le_bytes());
    let tensors: Vec<&Tensor<f32>> = model.params().chain(&ckpt.adam.m).chain(&ckpt.adam.v).collect();
    put_u32(&mut buf, tensors.len())?;
    for t in tensors {
        put_tensor(&mut buf, t)?;
    }
    Ok(buf)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.at..end];
                self.at = end;
                Ok(s)
            }
            None => Err(Error::Truncated(format!("checkpoint ends inside {what}"))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let n = self.u32(what)? as usize;
        String::from_utf8(self.take(n, what)?.to_vec())
            .map_err(|_| Error::Format(format!("{what} is not UTF-8")))
    }

    fn tensor(&mut self) -> Result<Tensor<f32>> {
        let rank = self.u32("tensor rank")? as usize;
        let shape = (0..rank)
            .map(|_| self.u32("tensor shape").map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| Error::Dimension(format!("tensor shape {shape:?} overflows")))?;
        let data = self
            .take(n, "tensor data")?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        Tensor::new(shape, data)
    }
}

/// Decodes a checkpoint. When `expected_hash` is given, a checkpoint built
/// against a different scales registry is refused.
pub fn decode_checkpoint(bytes: &[u8], expected_hash: Option<&str>) -> Result<Checkpoint> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            expected: CHECKPOINT_VERSION,
            found: version,
        });
    }
    let input_length = r.u32("input length")? as usize;
    let layers = r.string("layers")?;
    let registry_hash = r.string("registry hash")?;
    if let Some(expected) = expected_hash {
        if expected != registry_hash {
            return Err(Error::RegistryMismatch {
                expected: expected.to_string(),
                found: registry_hash,
            });
        }
    }
    let seed = r.u64("seed")?;
    let config = AdamConfig {
        learning_rate: r.f64("adam config")?,
        beta1: r.f64("adam config")?,
        beta2: r.f64("adam config")?,
        epsilon: r.f64("adam config")?,
    };
    let step = r.u64("adam step")?;
    let count = r.u32("tensor count")? as usize;
    let tensors = (0..count).map(|_| r.tensor()).collect::<Result<Vec<_>>>()?;
    if r.at != bytes.len() {
        return Err(Error::Dimension(format!("{} trailing checkpoint bytes", bytes.len() - r.at)));
    }
    if !count.is_multiple_of(3) {
        return Err(Error::Dimension(format!("{count} tensors is not params + two moments")));
    }
    let arch = Architecture::parse_layers(input_length, &layers)?;
    let mut tensors = tensors.into_iter();
    let params: Vec<_> = tensors.by_ref().take(count / 3).collect();
    let m: Vec<_> = tensors.by_ref().take(count / 3).collect();
    let v: Vec<_> = tensors.collect();
    let model = Model::from_params(arch, seed, params)?;
    for (p, (a, b)) in model.params().zip(m.iter().zip(&v)) {
        if p.shape() != a.shape() || p.shape() != b.shape() {
            return Err(Error::Dimension("optimizer moments do not match parameters".into()));
        }
    }
    Ok(Checkpoint {
        model,
        adam: Adam { config, step, m, v },
        registry_hash,
    })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let bytes = encode_checkpoint(ckpt)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path, expected_hash: Option<&str>) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, expected_hash)
}
