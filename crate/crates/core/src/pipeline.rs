//! One template/search pair from pixels to a predicted box.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{
    build_pair_features, crop_template, dog_color_features, FeatureStack, FusionOptions, LayerSpec,
    DEFAULT_SIGMA_CENTER, DEFAULT_SIGMA_SURROUND,
};
use crate::matchers::{map_to_box, DimConfig, MatcherKind, SimilarityMap};
use crate::tensor::{BoundingBox, Tensor};
use crate::vgg::{forward, WeightBundle};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum FeatureConfig {
    ColorDog { sigma_center: f64, sigma_surround: f64 },
    Deep { layers: LayerSpec, fusion: FusionOptions },
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig::ColorDog {
            sigma_center: DEFAULT_SIGMA_CENTER,
            sigma_surround: DEFAULT_SIGMA_SURROUND,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub matcher: MatcherKind,
    pub dim: DimConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            matcher: MatcherKind::Zncc,
            dim: DimConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn needs_bundle(&self) -> bool {
        matches!(self.features, FeatureConfig::Deep { .. })
    }
}

pub struct PairOutcome {
    pub predicted: BoundingBox,
    pub similarity: SimilarityMap,
    pub search_stack: FeatureStack,
    pub template_stack: FeatureStack,
}

/// Feature stacks for the search image and the template cut from its own image.
pub fn pair_features(
    template_image: &Tensor,
    search_image: &Tensor,
    template_box: BoundingBox,
    config: &FeatureConfig,
    bundle: Option<&WeightBundle>,
) -> Result<(FeatureStack, FeatureStack)> {
    if !template_box.fits_within(template_image.width(), template_image.height()) {
        return Err(Error::Geometry(format!(
            "template box {template_box} is outside the {}x{} template image",
            template_image.width(),
            template_image.height()
        )));
    }
    match config {
        FeatureConfig::ColorDog {
            sigma_center,
            sigma_surround,
        } => {
            let search = dog_color_features(search_image, *sigma_center, *sigma_surround)?;
            let full = dog_color_features(template_image, *sigma_center, *sigma_surround)?;
            let template = crop_template(&full, template_box)?;
            Ok((search, template))
        }
        FeatureConfig::Deep { layers, fusion } => {
            let bundle = bundle.ok_or_else(|| Error::Argument("deep features need a weight bundle".into()))?;
            let search_taps = forward(bundle, search_image, layers.layers())?;
            let template_taps = forward(bundle, template_image, layers.layers())?;
            build_pair_features(&template_taps, &search_taps, template_box, *fusion)
        }
    }
}

/// Runs features, matching and box placement for one pair.
pub fn locate(
    template_image: &Tensor,
    search_image: &Tensor,
    template_box: BoundingBox,
    config: &PipelineConfig,
    bundle: Option<&WeightBundle>,
) -> Result<PairOutcome> {
    let (search_stack, template_stack) =
        pair_features(template_image, search_image, template_box, &config.features, bundle)?;
    let similarity = config.matcher.run(&search_stack, &template_stack, &config.dim)?;
    let predicted = map_to_box(&similarity, template_box, search_image.width(), search_image.height());
    Ok(PairOutcome {
        predicted,
        similarity,
        search_stack,
        template_stack,
    })
}
