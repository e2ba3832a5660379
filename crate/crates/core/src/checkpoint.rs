//! Model checkpoints: a manifest plus every parameter tensor, either as
//! canonical JSON or as a compact binary file.
//!
//! Binary layout (little endian):
//!
//! ```text
//! "ECM1" | u32 manifest length | manifest JSON
//! per tensor, in parameter order: u32 rank | u32 dims... | f32 data
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::embeddings::ByteCursor;
use crate::error::{Error, Result};
use crate::eventcomp::{EventCompModel, ModelConfig, ParamId, TrainParams};
use crate::io::atomic_write;
use crate::nn::Tensor;

pub const CHECKPOINT_FORMAT: &str = "evcomp-model";
pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"ECM1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub vocab_hash: String,
    pub vocab_size: usize,
    pub config: ModelConfig,
    pub train: Option<TrainParams>,
    /// Effective pipeline settings, echoed for provenance.
    #[serde(default)]
    pub settings: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(model: &EventCompModel, train: Option<TrainParams>, settings: BTreeMap<String, String>) -> Manifest {
        Manifest {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            vocab_hash: model.vocab().hash(),
            vocab_size: model.vocab().len(),
            config: model.config,
            train,
            settings,
        }
    }

    fn check(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::format(0, "format", format!("not a model checkpoint ({:?})", self.format)));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct JsonCheckpoint {
    manifest: Manifest,
    params: BTreeMap<String, Tensor>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckpointFormat {
    Json,
    Binary,
}

impl CheckpointFormat {
    /// `.json` paths get JSON, everything else binary.
    pub fn for_path(path: &Path) -> CheckpointFormat {
        if path.extension().is_some_and(|e| e == "json") {
            CheckpointFormat::Json
        } else {
            CheckpointFormat::Binary
        }
    }
}

pub fn save_checkpoint(model: &EventCompModel, manifest: &Manifest, path: &Path) -> Result<()> {
    match CheckpointFormat::for_path(path) {
        CheckpointFormat::Json => {
            let params = ParamId::ALL
                .into_iter()
                .map(|id| (id.name().to_string(), model.param(id).clone()))
                .collect();
            let doc = JsonCheckpoint {
                manifest: manifest.clone(),
                params,
            };
            atomic_write(path, |w| {
                serde_json::to_writer(&mut *w, &doc)?;
                writeln!(w)?;
                Ok(())
            })
        }
        CheckpointFormat::Binary => {
            let header = serde_json::to_vec(manifest)?;
            atomic_write(path, |w| {
                w.write_all(MAGIC)?;
                w.write_all(&(header.len() as u32).to_le_bytes())?;
                w.write_all(&header)?;
                for (id, t) in ParamId::ALL.into_iter().zip(model.params()) {
                    w.write_all(&(id.name().len() as u32).to_le_bytes())?;
                    w.write_all(id.name().as_bytes())?;
                    w.write_all(&(t.shape.len() as u32).to_le_bytes())?;
                    for &d in &t.shape {
                        w.write_all(&(d as u32).to_le_bytes())?;
                    }
                    let mut buf = Vec::with_capacity(4 * t.data.len());
                    for &x in &t.data {
                        buf.extend_from_slice(&(x as f32).to_le_bytes());
                    }
                    w.write_all(&buf)?;
                }
                Ok(())
            })
        }
    }
}

/// Loads a checkpoint against `vocab`. A vocabulary whose hash differs from
/// the manifest is refused unless `force` is set (its size must still match).
pub fn load_checkpoint(path: &Path, vocab: &Vocabulary, force: bool) -> Result<(EventCompModel, Manifest)> {
    let bytes = std::fs::read(path)?;
    let (manifest, params) = if bytes.starts_with(MAGIC) {
        read_binary(&bytes)?
    } else {
        let doc: JsonCheckpoint = serde_json::from_slice(&bytes).map_err(|e| {
            if e.is_eof() {
                Error::Truncated(format!("{}: {e}", path.display()))
            } else {
                Error::Json(e)
            }
        })?;
        doc.manifest.check()?;
        let mut map = doc.params;
        let params = ParamId::ALL
            .into_iter()
            .map(|id| {
                map.remove(id.name())
                    .ok_or_else(|| Error::format(0, id.name(), "tensor missing from checkpoint"))
            })
            .collect::<Result<Vec<_>>>()?;
        (doc.manifest, params)
    };
    if manifest.vocab_hash != vocab.hash() && !force {
        return Err(Error::HashMismatch {
            expected: manifest.vocab_hash.clone(),
            found: vocab.hash(),
        });
    }
    let model = EventCompModel::from_parts(vocab.clone(), manifest.config, params)?;
    Ok((model, manifest))
}

fn read_binary(bytes: &[u8]) -> Result<(Manifest, Vec<Tensor>)> {
    let mut cur = ByteCursor {
        bytes,
        pos: MAGIC.len(),
    };
    let n = cur.u32()? as usize;
    let manifest: Manifest = serde_json::from_slice(cur.take(n)?)?;
    manifest.check()?;
    let mut params = Vec::with_capacity(ParamId::ALL.len());
    for id in ParamId::ALL {
        let n = cur.u32()? as usize;
        let name = String::from_utf8_lossy(cur.take(n)?);
        if name != id.name() {
            return Err(Error::format(0, "name", format!("expected tensor {}, found {name:?}", id.name())));
        }
        let rank = cur.u32()? as usize;
        if rank == 0 || rank > 2 {
            return Err(Error::format(0, "rank", format!("tensor rank {rank} is not 1 or 2")));
        }
        let shape = (0..rank)
            .map(|_| cur.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let len: usize = shape.iter().product();
        let raw = cur.take(4 * len)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        params.push(Tensor { shape, data });
    }
    if cur.pos != bytes.len() {
        return Err(Error::format(0, "tail", "trailing bytes after the last tensor"));
    }
    Ok((manifest, params))
}
