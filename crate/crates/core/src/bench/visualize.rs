use std::path::Path;

use crate::error::{Error, Result};
use crate::features::fit_pca_sites;
use crate::tensor::{encode_image, Tensor};

/// Components whose variance is at most this (relative to `1 + total`) are
/// shown as flat gray.
const DEGENERATE_VARIANCE: f64 = 1e-12;

/// First three principal components of a feature map as an RGB image at the
/// map's resolution, each component min-max scaled to `[0, 1]`.
pub fn pca_rgb(features: &Tensor) -> Result<Tensor> {
    if features.channels() < 3 {
        return Err(Error::Dimension(format!(
            "PCA visualization needs at least 3 channels, got {}",
            features.channels()
        )));
    }
    let pca = fit_pca_sites(features, 3)?;
    let scores = pca.project(features)?;
    let total: f64 = pca.explained_variance().iter().sum();
    let mut out = scores.clone();
    for k in 0..3 {
        let plane = scores.channel(k);
        let (lo, hi) = plane
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let flat = pca.explained_variance()[k] <= DEGENERATE_VARIANCE * (1.0 + total) || hi <= lo;
        for (o, &v) in out.channel_mut(k).iter_mut().zip(plane) {
            *o = if flat { 0.5 } else { (v - lo) / (hi - lo) };
        }
    }
    Ok(out)
}

/// Writes [`pca_rgb`] of `features` as a PNG and returns the image.
pub fn visualize_pca_rgb(features: &Tensor, path: impl AsRef<Path>) -> Result<Tensor> {
    let rgb = pca_rgb(features)?;
    encode_image(&rgb, path)?;
    Ok(rgb)
}
