//! VGG19 weight bundles and the tapping forward pass.
//!
//! A bundle is a directory holding `manifest.json` plus one raw weight and one
//! raw bias file per conv layer. Fully-connected layers are never loaded.

mod bundle;
mod forward;
pub mod golden;

pub use bundle::{
    conv_depth, load_bundle, vgg19_conv_names, Layer, LayerDef, LayerKind, Manifest, ManifestLayer,
    Preprocess, WeightBundle, MANIFEST_FILE,
};
pub use forward::{forward, preprocess, LayerTap, TapSite};

use crate::error::Result;
use crate::tensor::Scale;

/// Resolution of a conv layer relative to the input image.
pub fn layer_scale(bundle: &WeightBundle, name: &str) -> Result<Scale> {
    bundle.layer_scale(name)
}
