use serde::Serialize;

use super::pca::{fit_pca_sites, PcaProjection};
use super::{split_pos_neg, FeatureStack};
use crate::error::{Error, Result};
use crate::tensor::{resize_bilinear, BoundingBox, Scale, Tensor};
use crate::vgg::{conv_depth, LayerTap, TapSite};

/// Templates with `w * h` below this (in image pixels) are matched at the
/// resolution of the earliest tap; larger ones at the latest tap.
pub const SMALL_TEMPLATE_AREA: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FusionOptions {
    /// Read taps before or after the rectifier.
    pub site: TapSite,
    /// Apply positive/negative splitting to the fused stack.
    pub split: bool,
}

impl Default for FusionOptions {
    fn default() -> Self {
        Self {
            site: TapSite::PreRelu,
            split: true,
        }
    }
}

/// Resampling and channel reduction fitted on one image's taps, applicable to
/// the taps of any image from the same layers.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionTransform {
    layers: Vec<String>,
    target: usize,
    target_scale: Scale,
    /// One entry per tap; `None` for the earliest tap, which is kept as is.
    projections: Vec<Option<PcaProjection>>,
    options: FusionOptions,
}

fn check_taps(taps: &[LayerTap]) -> Result<()> {
    if taps.is_empty() || taps.len() > 3 {
        return Err(Error::Argument(format!(
            "fusion takes 1 to 3 taps, got {}",
            taps.len()
        )));
    }
    for pair in taps.windows(2) {
        let ordered = match (conv_depth(&pair[0].name), conv_depth(&pair[1].name)) {
            (Some(a), Some(b)) => a < b,
            _ => pair[0].scale <= pair[1].scale,
        };
        if !ordered {
            return Err(Error::Argument(format!(
                "taps must be ordered by depth: {} before {}",
                pair[0].name, pair[1].name
            )));
        }
    }
    Ok(())
}

impl FusionTransform {
    /// Chooses the target resolution from the template size and fits one PCA
    /// per later tap on that tap's sites.
    pub fn fit(taps: &[LayerTap], template_box: BoundingBox, options: FusionOptions) -> Result<Self> {
        check_taps(taps)?;
        let target = if template_box.area() < SMALL_TEMPLATE_AREA {
            0
        } else {
            taps.len() - 1
        };
        let width = taps[0].activation(options.site).channels();
        let projections = taps
            .iter()
            .enumerate()
            .map(|(i, tap)| {
                if i == 0 {
                    return Ok(None);
                }
                let act = tap.activation(options.site);
                if act.channels() < width {
                    return Err(Error::Argument(format!(
                        "{} has {} channels, fewer than the {width} of {}",
                        tap.name,
                        act.channels(),
                        taps[0].name
                    )));
                }
                fit_pca_sites(act, width).map(Some)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layers: taps.iter().map(|t| t.name.clone()).collect(),
            target,
            target_scale: taps[target].scale,
            projections,
            options,
        })
    }

    pub fn target_layer(&self) -> &str {
        &self.layers[self.target]
    }

    pub fn scale(&self) -> Scale {
        self.target_scale
    }

    pub fn projections(&self) -> &[Option<PcaProjection>] {
        &self.projections
    }

    fn describe(&self) -> String {
        let mut s = format!("vgg:{}@{}", self.layers.join("+"), self.target_layer());
        if let Some(Some(p)) = self.projections.get(1) {
            s.push_str(&format!(" pca->{}", p.components()));
        }
        if self.options.site == TapSite::PostRelu {
            s.push_str(" post-relu");
        }
        if self.options.split {
            s.push_str(" split");
        }
        s
    }

    /// Fused stack for one image's taps (same layers as the fit).
    pub fn apply(&self, taps: &[LayerTap]) -> Result<FeatureStack> {
        let names: Vec<&str> = taps.iter().map(|t| t.name.as_str()).collect();
        if names != self.layers {
            return Err(Error::Argument(format!(
                "transform was fitted on {} but got {}",
                self.layers.join(","),
                names.join(",")
            )));
        }
        let target = taps[self.target].activation(self.options.site);
        let (th, tw) = (target.height(), target.width());
        let parts = taps
            .iter()
            .zip(&self.projections)
            .map(|(tap, proj)| {
                let act = tap.activation(self.options.site);
                // Projection is per-site linear and bilinear weights sum to one,
                // so projecting before resizing touches fewer channels.
                let reduced = match proj {
                    Some(p) => p.project(act)?,
                    None => act.clone(),
                };
                Ok(resize_bilinear(&reduced, th, tw))
            })
            .collect::<Result<Vec<_>>>()?;
        let fused = Tensor::concat_channels(&parts)?;
        Ok(FeatureStack {
            features: if self.options.split {
                split_pos_neg(&fused)
            } else {
                fused
            },
            scale: self.target_scale,
            source: self.describe(),
        })
    }
}

/// Template window of `stack`: the image-space box scaled to the stack's
/// resolution, rounded half-up, at least 1x1, cut at the stack border.
pub fn crop_template(stack: &FeatureStack, template_box: BoundingBox) -> Result<FeatureStack> {
    let (_, h, w) = stack.features.shape();
    let b = template_box.scaled(stack.scale);
    let fitted = b.clip(w, h).ok_or_else(|| {
        Error::Geometry(format!(
            "template box {template_box} maps to {b} at scale {}, outside the {w}x{h} feature map",
            stack.scale
        ))
    })?;
    Ok(FeatureStack {
        features: stack.features.crop(fitted.y, fitted.x, fitted.h, fitted.w)?,
        scale: stack.scale,
        source: stack.source.clone(),
    })
}

/// Fused search stack and template stack when the template is cut from the
/// same image the taps came from.
pub fn build_fused_features(
    taps: &[LayerTap],
    template_box: BoundingBox,
    options: FusionOptions,
) -> Result<(FeatureStack, FeatureStack)> {
    let transform = FusionTransform::fit(taps, template_box, options)?;
    let image_stack = transform.apply(taps)?;
    let template_stack = crop_template(&image_stack, template_box)?;
    Ok((image_stack, template_stack))
}

/// Fused stacks when template and search image differ. The transform is
/// fitted on the search image and applied unchanged to the template image.
pub fn build_pair_features(
    template_taps: &[LayerTap],
    search_taps: &[LayerTap],
    template_box: BoundingBox,
    options: FusionOptions,
) -> Result<(FeatureStack, FeatureStack)> {
    let transform = FusionTransform::fit(search_taps, template_box, options)?;
    let image_stack = transform.apply(search_taps)?;
    let template_full = transform.apply(template_taps)?;
    let template_stack = crop_template(&template_full, template_box)?;
    Ok((image_stack, template_stack))
}
