use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tensor::{ConvWeights, Scale};

/// Conv layer counts per block of VGG19.
const VGG19_BLOCKS: [usize; 5] = [2, 2, 4, 4, 4];

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Pool,
}

/// One entry of `manifest.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestLayer {
    pub name: String,
    pub kind: LayerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_channels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_channels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_file: Option<String>,
    /// Hex SHA-256 of the weight file bytes followed by the bias file bytes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub preprocess: Preprocess,
    pub layers: Vec<ManifestLayer>,
}

/// Validated description of a single layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerDef {
    pub name: String,
    pub kind: LayerKind,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

#[derive(Clone, Debug)]
pub struct Layer {
    pub def: LayerDef,
    /// Present exactly for conv layers.
    pub weights: Option<ConvWeights>,
    /// Resolution of this layer's output relative to the input image.
    pub scale: Scale,
}

/// A loaded, fully validated set of VGG19 convolutional parameters.
#[derive(Clone, Debug)]
pub struct WeightBundle {
    name: String,
    preprocess: Preprocess,
    layers: Vec<Layer>,
    manifest_sha256: String,
    root: PathBuf,
}

impl WeightBundle {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn preprocess(&self) -> &Preprocess {
        &self.preprocess
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn conv_layers(&self) -> impl Iterator<Item = &Layer> {
        self.layers.iter().filter(|l| l.def.kind == LayerKind::Conv)
    }

    /// Hex SHA-256 of the raw `manifest.json` bytes. The manifest pins every
    /// weight file by checksum, so this identifies the whole bundle.
    pub fn checksum(&self) -> &str {
        &self.manifest_sha256
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub(crate) fn conv_index(&self, name: &str) -> Result<usize> {
        self.layers
            .iter()
            .position(|l| l.def.kind == LayerKind::Conv && l.def.name == name)
            .ok_or_else(|| Error::Argument(format!("unknown conv layer '{name}'")))
    }

    pub fn layer(&self, name: &str) -> Result<&Layer> {
        Ok(&self.layers[self.conv_index(name)?])
    }

    /// Output channel count of a conv layer.
    pub fn channels(&self, name: &str) -> Result<usize> {
        Ok(self.layer(name)?.def.out_channels)
    }

    /// Resolution of a conv layer's output: `(1/2)^(pools before it)`.
    pub fn layer_scale(&self, name: &str) -> Result<Scale> {
        Ok(self.layer(name)?.scale)
    }
}

/// Expected layer names in order, e.g. `conv1_1, conv1_2, pool1, ...`.
/// `pool5` is optional and accepted when present.
fn expected_topology() -> Vec<(String, LayerKind)> {
    let mut names = Vec::new();
    for (b, &n) in VGG19_BLOCKS.iter().enumerate() {
        let block = b + 1;
        for i in 1..=n {
            names.push((format!("conv{block}_{i}"), LayerKind::Conv));
        }
        names.push((format!("pool{block}"), LayerKind::Pool));
    }
    names
}

/// Conv layer names of VGG19 in network order.
pub fn vgg19_conv_names() -> Vec<String> {
    expected_topology()
        .into_iter()
        .filter(|(_, k)| *k == LayerKind::Conv)
        .map(|(n, _)| n)
        .collect()
}

/// Network depth of a conv layer name (`conv1_1` is 0), or `None`.
pub fn conv_depth(name: &str) -> Option<usize> {
    vgg19_conv_names().iter().position(|n| n == name)
}

fn read_f32_file(path: &Path, expected: usize) -> Result<(Vec<f32>, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 4 {
        return Err(Error::load(
            path,
            format!(
                "expected {expected} little-endian f32 values ({} bytes), found {} bytes",
                expected * 4,
                bytes.len()
            ),
        ));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect::<Vec<_>>();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::load(path, format!("non-finite value at index {i}")));
    }
    Ok((values, bytes))
}

/// Reads and validates a bundle directory.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<WeightBundle> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    let raw = std::fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_slice(&raw)
        .map_err(|e| Error::load(&manifest_path, format!("invalid manifest: {e}")))?;
    let bad = |msg: String| Error::load(&manifest_path, msg);

    if manifest.preprocess.std.iter().any(|&s| s <= 0.0 || !s.is_finite())
        || manifest.preprocess.mean.iter().any(|m| !m.is_finite())
    {
        return Err(bad("preprocess std must be positive and finite".into()));
    }

    let expected = expected_topology();
    let declared = &manifest.layers;
    let topo_ok = declared.len() == expected.len() || declared.len() == expected.len() - 1;
    let mismatch = declared
        .iter()
        .zip(&expected)
        .find(|(l, (n, k))| l.name != *n || l.kind != *k);
    if !topo_ok || mismatch.is_some() {
        let detail = match mismatch {
            Some((l, (n, _))) => format!("found '{}' where '{n}' was expected", l.name),
            None => format!("{} layers declared", declared.len()),
        };
        return Err(bad(format!("not a VGG19 topology: {detail}")));
    }

    let mut layers = Vec::with_capacity(declared.len());
    let mut in_channels = 3usize;
    let mut pools = 0u32;
    for l in declared {
        match l.kind {
            LayerKind::Pool => {
                if l.kernel.unwrap_or(2) != 2 || l.stride.unwrap_or(2) != 2 || l.padding.unwrap_or(0) != 0 {
                    return Err(bad(format!("{}: pools must be 2x2 with stride 2", l.name)));
                }
                if let Some(c) = l.out_channels {
                    if c != in_channels {
                        return Err(bad(format!(
                            "{}: pool declares {c} channels but receives {in_channels}",
                            l.name
                        )));
                    }
                }
                pools += 1;
                layers.push(Layer {
                    def: LayerDef {
                        name: l.name.clone(),
                        kind: LayerKind::Pool,
                        out_channels: in_channels,
                        kernel: 2,
                        stride: 2,
                        padding: 0,
                    },
                    weights: None,
                    scale: Scale::from_halvings(pools),
                });
            }
            LayerKind::Conv => {
                if l.kernel.unwrap_or(3) != 3 || l.stride.unwrap_or(1) != 1 || l.padding.unwrap_or(1) != 1 {
                    return Err(bad(format!(
                        "{}: conv layers must be 3x3, stride 1, padding 1",
                        l.name
                    )));
                }
                let out = l
                    .out_channels
                    .filter(|&c| c > 0)
                    .ok_or_else(|| bad(format!("{}: missing out_channels", l.name)))?;
                if let Some(declared_in) = l.in_channels {
                    if declared_in != in_channels {
                        return Err(bad(format!(
                            "{}: declares {declared_in} input channels but the previous layer produces {in_channels}",
                            l.name
                        )));
                    }
                }
                let (wf, bf) = match (&l.weight_file, &l.bias_file) {
                    (Some(w), Some(b)) => (dir.join(w), dir.join(b)),
                    _ => return Err(bad(format!("{}: missing weight_file or bias_file", l.name))),
                };
                let (kernels, wbytes) = read_f32_file(&wf, out * in_channels * 9)?;
                let (bias, bbytes) = read_f32_file(&bf, out)?;
                if let Some(expected) = &l.sha256 {
                    let mut h = Sha256::new();
                    h.update(&wbytes);
                    h.update(&bbytes);
                    let actual = hex::encode(h.finalize());
                    if !actual.eq_ignore_ascii_case(expected) {
                        return Err(Error::load(
                            &wf,
                            format!("checksum mismatch: manifest {expected}, files {actual}"),
                        ));
                    }
                } else {
                    return Err(bad(format!("{}: missing sha256", l.name)));
                }
                let weights = ConvWeights::new(out, in_channels, 3, 3, kernels, bias)?;
                layers.push(Layer {
                    def: LayerDef {
                        name: l.name.clone(),
                        kind: LayerKind::Conv,
                        out_channels: out,
                        kernel: 3,
                        stride: 1,
                        padding: 1,
                    },
                    weights: Some(weights),
                    scale: Scale::from_halvings(pools),
                });
                in_channels = out;
            }
        }
    }

    Ok(WeightBundle {
        name: manifest.name,
        preprocess: manifest.preprocess,
        layers,
        manifest_sha256: hex::encode(Sha256::digest(&raw)),
        root: dir.to_path_buf(),
    })
}
