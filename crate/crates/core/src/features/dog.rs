use super::{split_pos_neg, FeatureStack};
use crate::error::{Error, Result};
use crate::tensor::{Scale, Tensor};

pub const DEFAULT_SIGMA_CENTER: f64 = 1.0;
pub const DEFAULT_SIGMA_SURROUND: f64 = 2.0;

/// Unit-sum sampled Gaussian truncated at `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| (v / sum) as f32).collect()
}

/// Separable blur of one plane with clamp-to-edge borders.
fn blur_plane(src: &[f32], h: usize, w: usize, kernel: &[f32]) -> Vec<f32> {
    let r = (kernel.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0f32; h * w];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0f64;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv as f64 * row[clamp(x as isize + k as isize - r, w)] as f64;
            }
            tmp[y * w + x] = acc as f32;
        }
    }
    let mut out = vec![0.0f32; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f64;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv as f64 * tmp[clamp(y as isize + k as isize - r, h) * w + x] as f64;
            }
            out[y * w + x] = acc as f32;
        }
    }
    out
}

/// Per-channel difference-of-Gaussians response, before splitting.
pub fn dog_response(image: &Tensor, sigma_center: f64, sigma_surround: f64) -> Result<Tensor> {
    if sigma_center.is_nan() || sigma_surround.is_nan() || sigma_center <= 0.0 || sigma_surround <= sigma_center {
        return Err(Error::Argument(format!(
            "DoG needs 0 < sigma_center < sigma_surround, got {sigma_center} and {sigma_surround}"
        )));
    }
    let (c, h, w) = image.shape();
    let kc = gaussian_kernel(sigma_center);
    let ks = gaussian_kernel(sigma_surround);
    let mut out = Tensor::zeros(c, h, w);
    for ch in 0..c {
        let centre = blur_plane(image.channel(ch), h, w, &kc);
        let surround = blur_plane(image.channel(ch), h, w, &ks);
        for ((o, a), b) in out.channel_mut(ch).iter_mut().zip(&centre).zip(&surround) {
            *o = a - b;
        }
    }
    Ok(out)
}

/// Color feature space: DoG on each RGB channel, split into positive and
/// rectified negative parts (6 non-negative channels at full resolution).
pub fn dog_color_features(image: &Tensor, sigma_center: f64, sigma_surround: f64) -> Result<FeatureStack> {
    if image.channels() != 3 {
        return Err(Error::Dimension(format!(
            "color features need a 3-channel image, got {}",
            image.channels()
        )));
    }
    let response = dog_response(image, sigma_center, sigma_surround)?;
    Ok(FeatureStack {
        features: split_pos_neg(&response),
        scale: Scale::ONE,
        source: format!("color-dog(sigma_c={sigma_center}, sigma_s={sigma_surround})"),
    })
}
