use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::manifest::{write_manifest, PairManifest};
use crate::error::{Error, Result};
use crate::tensor::{encode_image, BoundingBox, Tensor};

/// Smooth RGB background in `[0.1, 0.9]`: a few low-frequency plane waves
/// and Gaussian blobs per channel.
pub fn smooth_background(rng: &mut impl Rng, height: usize, width: usize) -> Tensor {
    let mut t = Tensor::zeros(3, height, width);
    let scale = height.max(width) as f64;
    for ch in 0..3 {
        let waves: Vec<(f64, f64, f64, f64)> = (0..3)
            .map(|_| {
                let f = rng.gen_range(1.0..4.0) * std::f64::consts::TAU / scale;
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                (f * a.cos(), f * a.sin(), rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.2..1.0))
            })
            .collect();
        let blobs: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.gen_range(0.0..height as f64),
                    rng.gen_range(0.0..width as f64),
                    rng.gen_range(0.1..0.3) * scale,
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let mut plane: Vec<f64> = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                let (yf, xf) = (y as f64, x as f64);
                let mut v: f64 = waves.iter().map(|&(fy, fx, p, a)| a * (fy * yf + fx * xf + p).sin()).sum();
                v += blobs
                    .iter()
                    .map(|&(cy, cx, s, a)| a * (-((yf - cy).powi(2) + (xf - cx).powi(2)) / (2.0 * s * s)).exp())
                    .sum::<f64>();
                plane.push(v);
            }
        }
        let lo = plane.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = plane.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(1e-9);
        for (o, v) in t.channel_mut(ch).iter_mut().zip(plane) {
            *o = (0.1 + 0.8 * (v - lo) / span) as f32;
        }
    }
    t
}

/// Blocky random-color texture with cells of 2 to 5 pixels.
pub fn texture_patch(rng: &mut impl Rng, height: usize, width: usize) -> Tensor {
    let cell = rng.gen_range(2..=5);
    let (rows, cols) = (height.div_ceil(cell), width.div_ceil(cell));
    let colors: Vec<[f32; 3]> = (0..rows * cols).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
    Tensor::from_fn(3, height, width, |c, y, x| colors[(y / cell) * cols + x / cell][c])
}

/// Copies `patch` into `dst` with its top-left corner at `(x, y)`.
pub fn paste(dst: &mut Tensor, patch: &Tensor, x: usize, y: usize) {
    for c in 0..patch.channels() {
        for py in 0..patch.height() {
            for px in 0..patch.width() {
                dst.set(c, y + py, x + px, patch.get(c, py, px));
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthPair {
    pub id: String,
    pub template_image: Tensor,
    pub search_image: Tensor,
    pub template_box: BoundingBox,
    pub gt_box: BoundingBox,
}

fn random_box(rng: &mut impl Rng, width: usize, height: usize, w: usize, h: usize) -> BoundingBox {
    BoundingBox {
        x: rng.gen_range(0..=width - w),
        y: rng.gen_range(0..=height - h),
        w,
        h,
    }
}

fn check_size(width: usize, height: usize, w: usize, h: usize) -> Result<()> {
    if w == 0 || h == 0 || w > width || h > height {
        return Err(Error::Geometry(format!(
            "a {w}x{h} patch does not fit a {width}x{height} image"
        )));
    }
    Ok(())
}

/// One image with a texture planted on a smooth background; the template is
/// that same region, so the search image is the template image.
pub fn planted_pair(rng: &mut impl Rng, id: impl Into<String>, size: (usize, usize), patch: (usize, usize)) -> Result<SynthPair> {
    let ((width, height), (w, h)) = (size, patch);
    check_size(width, height, w, h)?;
    let mut image = smooth_background(rng, height, width);
    let b = random_box(rng, width, height, w, h);
    paste(&mut image, &texture_patch(rng, h, w), b.x, b.y);
    Ok(SynthPair {
        id: id.into(),
        template_image: image.clone(),
        search_image: image,
        template_box: b,
        gt_box: b,
    })
}

/// Two frames: the same texture on two different backgrounds at independent
/// positions (pure translation).
pub fn translation_pair(
    rng: &mut impl Rng,
    id: impl Into<String>,
    size: (usize, usize),
    patch: (usize, usize),
) -> Result<SynthPair> {
    let ((width, height), (w, h)) = (size, patch);
    check_size(width, height, w, h)?;
    let object = texture_patch(rng, h, w);
    let mut template_image = smooth_background(rng, height, width);
    let template_box = random_box(rng, width, height, w, h);
    paste(&mut template_image, &object, template_box.x, template_box.y);
    let mut search_image = smooth_background(rng, height, width);
    let gt_box = random_box(rng, width, height, w, h);
    paste(&mut search_image, &object, gt_box.x, gt_box.y);
    Ok(SynthPair {
        id: id.into(),
        template_image,
        search_image,
        template_box,
        gt_box,
    })
}

/// Like [`translation_pair`], but in the search image a quarter of the
/// object (one quadrant) is covered by the matching quadrant of a distractor
/// texture, and the whole distractor sits in the top-left corner, where the
/// first background template is taken from.
pub fn occlusion_pair(
    rng: &mut impl Rng,
    id: impl Into<String>,
    size: (usize, usize),
    patch: (usize, usize),
) -> Result<SynthPair> {
    let ((width, height), (w, h)) = (size, patch);
    check_size(width, height, w, h)?;
    if w < 2 || h < 2 || width < 2 * w + 1 || height < 2 * h + 1 {
        return Err(Error::Geometry(format!(
            "a {width}x{height} image is too small for a {w}x{h} occluded object"
        )));
    }
    let object = texture_patch(rng, h, w);
    let distractor = texture_patch(rng, h, w);
    let mut template_image = smooth_background(rng, height, width);
    let template_box = random_box(rng, width, height, w, h);
    paste(&mut template_image, &object, template_box.x, template_box.y);

    let mut search_image = smooth_background(rng, height, width);
    paste(&mut search_image, &distractor, 0, 0);
    // Keep the object clear of the distractor corner.
    let gt_box = loop {
        let b = random_box(rng, width, height, w, h);
        if b.x >= w || b.y >= h {
            break b;
        }
    };
    let (qh, qw) = (h / 2, w / 2);
    let (qy, qx) = (rng.gen_range(0..2) * (h - qh), rng.gen_range(0..2) * (w - qw));
    let mut occluded = object.clone();
    paste(&mut occluded, &distractor.crop(qy, qx, qh, qw)?, qx, qy);
    paste(&mut search_image, &occluded, gt_box.x, gt_box.y);
    Ok(SynthPair {
        id: id.into(),
        template_image,
        search_image,
        template_box,
        gt_box,
    })
}

/// Writes each pair's images as PNG plus `manifest.jsonl` under `dir`;
/// returns the manifest path. Images shared by a pair are written once.
pub fn write_pairs(dir: impl AsRef<Path>, pairs: &[SynthPair]) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(pairs.len());
    for p in pairs {
        let template_name = format!("{}_template.png", p.id);
        encode_image(&p.template_image, dir.join(&template_name))?;
        let search_name = if p.search_image == p.template_image {
            template_name.clone()
        } else {
            let name = format!("{}_search.png", p.id);
            encode_image(&p.search_image, dir.join(&name))?;
            name
        };
        entries.push(PairManifest {
            id: p.id.clone(),
            template_image: template_name.into(),
            search_image: search_name.into(),
            template_box: p.template_box,
            gt_box: p.gt_box,
        });
    }
    let manifest = dir.join("manifest.jsonl");
    write_manifest(&manifest, &entries)?;
    Ok(manifest)
}
