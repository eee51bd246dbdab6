//! Golden activation files: raw little-endian f32 data next to a JSON sidecar
//! `{layer, shape, input_sha256}`. A golden directory also holds the network
//! input as `input.bin` with an `input.json` sidecar `{shape}`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoldenMeta {
    pub layer: String,
    pub shape: [usize; 3],
    pub input_sha256: String,
}

#[derive(Clone, Debug)]
pub struct Golden {
    pub meta: GoldenMeta,
    pub activation: Tensor,
}

#[derive(Clone, Debug)]
pub struct GoldenSet {
    pub input: Tensor,
    pub input_sha256: String,
    /// Sorted by layer name.
    pub goldens: Vec<Golden>,
}

#[derive(Deserialize)]
struct InputMeta {
    shape: [usize; 3],
}

/// Reads a raw f32 tensor of the given shape.
pub fn read_raw_tensor(path: &Path, shape: [usize; 3]) -> Result<(Tensor, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let n = shape.iter().product::<usize>();
    if bytes.len() != n * 4 {
        return Err(Error::load(
            path,
            format!("shape {shape:?} needs {} bytes, file has {}", n * 4, bytes.len()),
        ));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let t = Tensor::new(shape[0], shape[1], shape[2], data).map_err(|e| Error::load(path, e.to_string()))?;
    Ok((t, bytes))
}

/// Writes a tensor as raw little-endian f32 data.
pub fn write_raw_tensor(path: &Path, tensor: &Tensor) -> Result<()> {
    let bytes: Vec<u8> = tensor.data().iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&raw).map_err(|e| Error::load(path, e.to_string()))
}

pub fn load_golden_dir(dir: impl AsRef<Path>) -> Result<GoldenSet> {
    let dir = dir.as_ref();
    let input_meta: InputMeta = read_json(&dir.join("input.json"))?;
    let (input, bytes) = read_raw_tensor(&dir.join("input.bin"), input_meta.shape)?;
    let input_sha256 = hex::encode(Sha256::digest(&bytes));

    let mut sidecars: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_stem().is_some_and(|s| s != "input"))
        .collect();
    sidecars.sort();

    let mut goldens = Vec::new();
    for side in sidecars {
        let meta: GoldenMeta = read_json(&side)?;
        if meta.input_sha256 != input_sha256 {
            return Err(Error::load(&side, "golden was produced from a different input"));
        }
        let (activation, _) = read_raw_tensor(&side.with_extension("bin"), meta.shape)?;
        goldens.push(Golden { meta, activation });
    }
    Ok(GoldenSet {
        input,
        input_sha256,
        goldens,
    })
}
