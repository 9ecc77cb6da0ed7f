//! Tensor-archive directory: `manifest.json` plus one raw little-endian
//! `f32` file per tensor.
//!
//! ```json
//! {
//!   "version": 1,
//!   "layers": [
//!     { "kind": "conv", "in_shape": [1, 28, 28], "out_channels": 6,
//!       "kernel": [5, 5], "stride": 2, "padding": 0,
//!       "weights": "l0.w.f32", "bias": "l0.b.f32",
//!       "neuron": { "kind": "ann", "threshold": 0.5 } },
//!     { "kind": "maxpool", "in_shape": [6, 12, 12], "kernel": [2, 2], "stride": 2 },
//!     { "kind": "fc", "in_shape": [6, 6, 6], "out_units": 10, "weights": "l2.w.f32" }
//!   ]
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_chain, LayerKind, LayerNeuron, LayerSpec, Shape};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    #[serde(flatten)]
    pub kind: LayerKind,
    pub in_shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neuron: Option<LayerNeuron>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub layers: Vec<LayerEntry>,
}

fn read_tensor(dir: &Path, file: &str, layer: usize) -> Result<Vec<f32>> {
    let bytes = fs::read(dir.join(file)).map_err(|e| Error::Io(format!("layer {layer}: {file}: {e}")))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::ShapeMismatch {
            layer,
            reason: format!("{file} is {} bytes, not a whole number of f32 values", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
        .collect())
}

fn write_tensor(path: &Path, values: &[f32]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    Ok(fs::write(path, bytes)?)
}

/// Loads and validates an archive directory.
pub fn read_archive(dir: &Path) -> Result<Vec<LayerSpec>> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.version != ARCHIVE_VERSION {
        return Err(Error::Parse(format!(
            "unsupported archive version {}",
            manifest.version
        )));
    }
    let layers = manifest
        .layers
        .iter()
        .enumerate()
        .map(|(l, e)| {
            Ok(LayerSpec {
                kind: e.kind,
                in_shape: e.in_shape,
                weights: match &e.weights {
                    Some(f) => read_tensor(dir, f, l)?,
                    None => Vec::new(),
                },
                bias: e.bias.as_ref().map(|f| read_tensor(dir, f, l)).transpose()?,
                neuron: e.neuron.unwrap_or_default(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    check_chain(&layers)?;
    Ok(layers)
}

/// Writes `layers` as an archive into `dir`, creating it if needed.
pub fn write_archive(dir: &Path, layers: &[LayerSpec]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(layers.len());
    for (l, spec) in layers.iter().enumerate() {
        let pooled = matches!(spec.kind, LayerKind::MaxPool { .. });
        let weights = (!pooled).then(|| format!("l{l}.w.f32"));
        if let Some(f) = &weights {
            write_tensor(&dir.join(f), &spec.weights)?;
        }
        let bias = spec.bias.as_ref().map(|b| {
            let f = format!("l{l}.b.f32");
            write_tensor(&dir.join(&f), b).map(|_| f)
        });
        entries.push(LayerEntry {
            kind: spec.kind,
            in_shape: spec.in_shape,
            weights,
            bias: bias.transpose()?,
            neuron: (!pooled).then_some(spec.neuron),
        });
    }
    let manifest = Manifest {
        version: ARCHIVE_VERSION,
        layers: entries,
    };
    fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(())
}
