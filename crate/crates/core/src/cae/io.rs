//! Model files.
//!
//! ```text
//! magic      8 bytes   "VLCCAE\r\n"
//! version    u32 LE    FORMAT_VERSION
//! header_len u32 LE
//! header     JSON      {"format_version": .., "architecture": .., "seed": .., "epochs": .., "init": ..}
//! per layer, forward order:
//!   u64 LE weight count, weights as f64 LE
//!   u64 LE bias count,   biases as f64 LE
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{CaeArchitecture, CaeModel, INIT_SCHEME};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"VLCCAE\r\n";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    architecture: CaeArchitecture,
    seed: u64,
    epochs: usize,
    init: String,
}

pub fn model_to_bytes(model: &CaeModel) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        format_version: FORMAT_VERSION,
        architecture: model.architecture.clone(),
        seed: model.seed,
        epochs: model.epochs,
        init: INIT_SCHEME.to_string(),
    })
    .expect("header serializes");
    let mut out = Vec::with_capacity(16 + header.len() + 8 * (model.parameter_count() + 2 * model.layers.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for layer in &model.layers {
        for block in [&layer.weight, &layer.bias] {
            out.extend_from_slice(&(block.len() as u64).to_le_bytes());
            for v in block {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::UnexpectedEof);
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn block(&mut self, expected: usize, what: &str) -> Result<Vec<f64>> {
        let n = self.u64()?;
        if n != expected as u64 {
            return Err(Error::Shape {
                layer: what.to_string(),
                message: format!("model file holds {n} values, architecture needs {expected}"),
            });
        }
        let raw = self.take(expected * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<CaeModel> {
    let mut r = Reader { bytes };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let header_len = r.u32()? as usize;
    let header: Header = serde_json::from_slice(r.take(header_len)?)?;
    if header.format_version != version {
        return Err(Error::UnsupportedVersion(header.format_version));
    }
    let mut model = CaeModel::zeros(header.architecture)?;
    model.seed = header.seed;
    model.epochs = header.epochs;
    for i in 0..model.layers.len() {
        let name = model.architecture.layer_name(i);
        let layer = &mut model.layers[i];
        layer.weight = r.block(layer.weight.len(), &name)?;
        layer.bias = r.block(layer.bias.len(), &name)?;
    }
    if !r.bytes.is_empty() {
        return Err(Error::invalid(format!("{} trailing bytes after model parameters", r.bytes.len())));
    }
    Ok(model)
}

pub fn save_model(model: &CaeModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<CaeModel> {
    model_from_bytes(&fs::read(path)?)
}
