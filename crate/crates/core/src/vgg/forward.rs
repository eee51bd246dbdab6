use super::bundle::{LayerKind, WeightBundle};
use crate::error::{Error, Result};
use crate::tensor::{conv2d, maxpool2, relu, Scale, Tensor};

/// Activation captured at a conv layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerTap {
    pub name: String,
    pub pre_relu: Tensor,
    pub post_relu: Tensor,
    pub scale: Scale,
}

impl LayerTap {
    pub fn activation(&self, site: TapSite) -> &Tensor {
        match site {
            TapSite::PreRelu => &self.pre_relu,
            TapSite::PostRelu => &self.post_relu,
        }
    }
}

/// Which side of the rectifier a feature extractor reads from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TapSite {
    #[default]
    PreRelu,
    PostRelu,
}

/// `(value - mean) / std` per channel.
pub fn preprocess(bundle: &WeightBundle, image: &Tensor) -> Result<Tensor> {
    if image.channels() != 3 {
        return Err(Error::Dimension(format!(
            "VGG input must have 3 channels, got {}",
            image.channels()
        )));
    }
    let p = bundle.preprocess();
    let mut x = image.clone();
    for c in 0..3 {
        let (m, s) = (p.mean[c], p.std[c]);
        for v in x.channel_mut(c) {
            *v = (*v - m) / s;
        }
    }
    Ok(x)
}

/// Runs the network on `image` and returns the requested taps in network
/// order. Propagation stops after the deepest requested layer.
pub fn forward<S: AsRef<str>>(bundle: &WeightBundle, image: &Tensor, taps: &[S]) -> Result<Vec<LayerTap>> {
    if taps.is_empty() {
        return Err(Error::Argument("no layers requested".into()));
    }
    let mut wanted = vec![false; bundle.layers().len()];
    for t in taps {
        wanted[bundle.conv_index(t.as_ref())?] = true;
    }
    let last = wanted.iter().rposition(|&w| w).unwrap_or(0);

    let mut x = preprocess(bundle, image)?;
    let mut out = Vec::new();
    for (i, layer) in bundle.layers()[..=last].iter().enumerate() {
        match layer.def.kind {
            LayerKind::Pool => x = maxpool2(&x),
            LayerKind::Conv => {
                let w = layer.weights.as_ref().expect("conv layer without weights");
                let pre = conv2d(&x, w, layer.def.stride, layer.def.padding)?;
                let post = relu(&pre);
                if wanted[i] {
                    out.push(LayerTap {
                        name: layer.def.name.clone(),
                        pre_relu: pre,
                        post_relu: post.clone(),
                        scale: layer.scale,
                    });
                }
                x = post;
            }
        }
    }
    Ok(out)
}
