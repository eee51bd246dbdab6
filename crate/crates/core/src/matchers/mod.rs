//! Similarity maps between a template and a search image in a shared
//! feature space.
//!
//! The baselines ([`match_ssd`], [`match_ncc`], [`match_zncc`]) slide the
//! template in valid mode. [`match_dim`] runs divisive input modulation with
//! the target template competing against background templates. Every map
//! records where its `(0, 0)` site sits on the search stack, so
//! [`map_to_box`] can place predictions the same way for all of them.

mod boxes;
mod classic;
mod dim;
mod fft;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use boxes::{best_site, map_to_box};
pub use classic::{match_ncc, match_ssd, match_zncc};
pub use dim::{
    extract_extra_templates, match_dim, template_anchors, DimConfig, DimState, ExtraTemplate,
    MAX_EXTRA_TEMPLATES,
};

use crate::error::{Error, Result};
use crate::features::FeatureStack;
use crate::tensor::{encode_image_gray, Scale, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    HigherIsBetter,
    LowerIsBetter,
}

impl Polarity {
    /// True if `a` is a strictly better score than `b`.
    pub fn better(self, a: f32, b: f32) -> bool {
        match self {
            Polarity::HigherIsBetter => a > b,
            Polarity::LowerIsBetter => a < b,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMap {
    /// One-channel score map in feature-space pixels.
    pub map: Tensor,
    pub polarity: Polarity,
    pub scale: Scale,
    /// Position on the search stack of the window center for site `(0, 0)`,
    /// as `(row, col)`.
    pub offset: (usize, usize),
    /// Height and width of the search stack the map was computed on.
    pub canvas: (usize, usize),
}

impl SimilarityMap {
    pub fn best_site(&self) -> (usize, usize) {
        best_site(&self.map, self.polarity)
    }

    /// The map min-max normalized to `[0, 1]` with the best score brightest.
    pub fn normalized(&self) -> Tensor {
        let (lo, hi) = (self.map.min(), self.map.max());
        let span = hi - lo;
        self.map.map(|v| {
            if span <= 0.0 {
                return 0.0;
            }
            let t = (v - lo) / span;
            match self.polarity {
                Polarity::HigherIsBetter => t,
                Polarity::LowerIsBetter => 1.0 - t,
            }
        })
    }

    /// Grayscale PNG heatmap at map resolution.
    pub fn write_heatmap(&self, path: impl AsRef<Path>) -> Result<()> {
        encode_image_gray(&self.normalized(), path)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatcherKind {
    Ssd,
    Ncc,
    Zncc,
    Dim,
}

impl MatcherKind {
    pub const ALL: [MatcherKind; 4] = [MatcherKind::Ssd, MatcherKind::Ncc, MatcherKind::Zncc, MatcherKind::Dim];

    pub fn name(self) -> &'static str {
        match self {
            MatcherKind::Ssd => "ssd",
            MatcherKind::Ncc => "ncc",
            MatcherKind::Zncc => "zncc",
            MatcherKind::Dim => "dim",
        }
    }

    pub fn run(self, image: &FeatureStack, template: &FeatureStack, dim: &DimConfig) -> Result<SimilarityMap> {
        match self {
            MatcherKind::Ssd => match_ssd(image, template),
            MatcherKind::Ncc => match_ncc(image, template),
            MatcherKind::Zncc => match_zncc(image, template),
            MatcherKind::Dim => match_dim(image, template, dim),
        }
    }
}

impl fmt::Display for MatcherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatcherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MatcherKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown matcher '{s}' (expected ssd, ncc, zncc or dim)")))
    }
}

/// Shared preconditions: same channels and scale, template inside the image.
fn check_pair(image: &FeatureStack, template: &FeatureStack) -> Result<()> {
    let (c, h, w) = image.features.shape();
    let (tc, th, tw) = template.features.shape();
    if tc != c {
        return Err(Error::Dimension(format!(
            "template has {tc} channels, image has {c}"
        )));
    }
    if image.scale != template.scale {
        return Err(Error::Argument(format!(
            "template scale {} differs from image scale {}",
            template.scale, image.scale
        )));
    }
    if th > h || tw > w {
        return Err(Error::Geometry(format!(
            "{tw}x{th} template does not fit in a {w}x{h} image"
        )));
    }
    Ok(())
}
