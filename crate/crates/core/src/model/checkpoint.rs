//! Binary checkpoint format (all integers little-endian):
//!
//! ```text
//! magic   b"FTTGRUCK"
//! u32     format version
//! u32     header length, then that many bytes of JSON {config, seed, target}
//! u32     parameter count
//! repeat: u32 name length, name bytes, u32 ndim, ndim × u64 dims, f64 values
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelState, TargetScaling};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FTTGRUCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    seed: u64,
    target: TargetScaling,
}

impl ModelState {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let header = serde_json::to_vec(&Header {
            config: self.config.clone(),
            seed: self.seed,
            target: self.target,
        })
        .expect("header serializes");
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        let params = self.parameters();
        out.extend_from_slice(&(params.len() as u32).to_le_bytes());
        for p in params {
            out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
            out.extend_from_slice(p.name.as_bytes());
            out.extend_from_slice(&(p.value.ndim() as u32).to_le_bytes());
            for &d in p.value.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in p.value.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
            )));
        }
        let header_len = r.u32()? as usize;
        let header: Header = serde_json::from_slice(r.take(header_len)?)
            .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
        let mut model = ModelState::build(header.config, header.seed)?;
        model.target = header.target;

        let count = r.u32()? as usize;
        let mut params = model.parameters_mut();
        if count != params.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {count} parameters, model expects {}",
                params.len()
            )));
        }
        for p in params.iter_mut() {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?;
            if name != p.name {
                return Err(Error::Checkpoint(format!("expected parameter `{}`, found `{name}`", p.name)));
            }
            let ndim = r.u32()? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(r.u64()? as usize);
            }
            if shape != p.value.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter `{name}` has shape {shape:?}, model expects {:?}",
                    p.value.shape()
                )));
            }
            for v in p.value.data_mut() {
                *v = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
            }
            p.value.ensure_finite("checkpoint")?;
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes after the last parameter",
                bytes.len() - r.pos
            )));
        }
        Ok(model)
    }
}

pub fn save_checkpoint(model: &ModelState, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, model.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelState> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelState::from_bytes(&bytes)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated checkpoint".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
