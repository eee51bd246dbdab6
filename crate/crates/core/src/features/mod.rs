//! Feature spaces in which templates are matched.
//!
//! Two families are provided: color difference-of-Gaussians channels and
//! fused VGG19 layer taps. Both end in positive/negative splitting so every
//! stack handed to a matcher is non-negative.

mod dog;
mod fusion;
mod pca;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

pub use dog::{
    dog_color_features, dog_response, gaussian_kernel, DEFAULT_SIGMA_CENTER, DEFAULT_SIGMA_SURROUND,
};
pub use fusion::{
    build_fused_features, build_pair_features, crop_template, FusionOptions, FusionTransform,
    SMALL_TEMPLATE_AREA,
};
pub use pca::{fit_pca, fit_pca_sites, PcaProjection};

use crate::error::{Error, Result};
use crate::tensor::{Scale, Tensor};
use crate::vgg::conv_depth;

/// A matching feature space together with its resolution relative to the image.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStack {
    pub features: Tensor,
    pub scale: Scale,
    /// Human-readable description of how the stack was built.
    pub source: String,
}

#[derive(Serialize)]
struct DumpMeta<'a> {
    shape: [usize; 3],
    scale: Scale,
    source: &'a str,
}

impl FeatureStack {
    pub fn new(features: Tensor, scale: Scale, source: impl Into<String>) -> Self {
        Self {
            features,
            scale,
            source: source.into(),
        }
    }

    /// Writes `<stem>.bin` (raw little-endian f32) and `<stem>.json`
    /// (`{shape, scale, source}`).
    pub fn dump(&self, stem: impl AsRef<Path>) -> Result<()> {
        let stem = stem.as_ref();
        crate::vgg::golden::write_raw_tensor(&stem.with_extension("bin"), &self.features)?;
        let (c, h, w) = self.features.shape();
        let meta = DumpMeta {
            shape: [c, h, w],
            scale: self.scale,
            source: &self.source,
        };
        let json = serde_json::to_vec_pretty(&meta).expect("dump metadata serializes");
        let path = stem.with_extension("json");
        std::fs::write(&path, json).map_err(|e| Error::io(path, e))
    }
}

/// Doubles the channel count: first half `max(x, 0)`, second half `max(-x, 0)`.
pub fn split_pos_neg(input: &Tensor) -> Tensor {
    let (c, h, w) = input.shape();
    let n = input.plane_len();
    let mut data = Vec::with_capacity(2 * c * n);
    data.extend(input.data().iter().map(|&v| v.max(0.0)));
    data.extend(input.data().iter().map(|&v| (-v).max(0.0)));
    Tensor::new(2 * c, h, w, data).expect("split preserves geometry")
}

/// Ordered VGG19 conv layers (1 to 3, strictly increasing depth) to fuse.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerSpec {
    layers: Vec<String>,
}

impl LayerSpec {
    pub fn new<S: Into<String>>(layers: impl IntoIterator<Item = S>) -> Result<Self> {
        let layers: Vec<String> = layers.into_iter().map(Into::into).collect();
        if layers.is_empty() || layers.len() > 3 {
            return Err(Error::Argument(format!(
                "a layer spec has 1 to 3 layers, got {}",
                layers.len()
            )));
        }
        let mut prev = None;
        for name in &layers {
            let depth = conv_depth(name)
                .ok_or_else(|| Error::Argument(format!("unknown conv layer '{name}'")))?;
            if prev.is_some_and(|p| depth <= p) {
                return Err(Error::Argument(format!(
                    "layers must strictly increase in depth: {}",
                    layers.join(",")
                )));
            }
            prev = Some(depth);
        }
        Ok(Self { layers })
    }

    /// Named presets: `bbs-best` and `ktm-best`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "bbs-best" => Self::new(["conv1_2", "conv4_1", "conv4_4"]),
            "ktm-best" => Self::new(["conv1_1", "conv3_4", "conv4_2"]),
            other => Err(Error::Argument(format!(
                "unknown preset '{other}' (expected bbs-best or ktm-best)"
            ))),
        }
    }

    pub fn layers(&self) -> &[String] {
        &self.layers
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    /// Comma-separated layer names.
    fn from_str(s: &str) -> Result<Self> {
        Self::new(s.split(',').map(str::trim).filter(|p| !p.is_empty()))
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.layers.join(","))
    }
}
