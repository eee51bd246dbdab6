use std::path::Path;

use image::{GrayImage, RgbImage};

use super::Tensor;
use crate::error::{Error, Result};

/// Reads a PNG or JPEG as a 3-channel RGB tensor with values in `[0, 1]`.
/// Grayscale images are replicated into all three channels, alpha is dropped.
pub fn decode_image(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_rgb32f();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut t = Tensor::zeros(3, h, w);
    for (x, y, px) in img.enumerate_pixels() {
        for c in 0..3 {
            t.set(c, y as usize, x as usize, px.0[c].clamp(0.0, 1.0));
        }
    }
    Ok(t)
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes a 3-channel tensor (values in `[0, 1]`, clamped) as an 8-bit RGB
/// image; the format follows the file extension.
pub fn encode_image(tensor: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if tensor.channels() != 3 {
        return Err(Error::Dimension(format!(
            "RGB encoding needs 3 channels, got {}",
            tensor.channels()
        )));
    }
    let (w, h) = (tensor.width() as u32, tensor.height() as u32);
    let img = RgbImage::from_fn(w, h, |x, y| {
        let (x, y) = (x as usize, y as usize);
        image::Rgb([
            quantize(tensor.get(0, y, x)),
            quantize(tensor.get(1, y, x)),
            quantize(tensor.get(2, y, x)),
        ])
    });
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the first channel of a tensor (values in `[0, 1]`) as 8-bit grayscale.
pub fn encode_image_gray(tensor: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (tensor.width() as u32, tensor.height() as u32);
    let img = GrayImage::from_fn(w, h, |x, y| {
        image::Luma([quantize(tensor.get(0, y as usize, x as usize))])
    });
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}
