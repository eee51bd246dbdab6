use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::fft::{fast_len, Fft2};
use super::{check_pair, Polarity, SimilarityMap};
use crate::error::{Error, Result};
use crate::features::FeatureStack;
use crate::tensor::Tensor;

/// Above this many multiply-adds a map is computed through the FFT.
const DIRECT_WORK_LIMIT: usize = 40_000_000;

/// A window whose centered energy is below this fraction of its raw energy
/// is treated as constant.
const CONSTANT_RTOL: f64 = 1e-10;

const CHANNEL_CHUNK: usize = 8;

struct Geometry {
    c: usize,
    w: usize,
    th: usize,
    tw: usize,
    oh: usize,
    ow: usize,
}

impl Geometry {
    fn of(image: &Tensor, template: &Tensor) -> Self {
        let (c, h, w) = image.shape();
        let (_, th, tw) = template.shape();
        Self {
            c,
            w,
            th,
            tw,
            oh: h - th + 1,
            ow: w - tw + 1,
        }
    }

    fn direct(&self) -> bool {
        self.c * self.th * self.tw * self.oh * self.ow <= DIRECT_WORK_LIMIT
    }

    fn n(&self) -> f64 {
        (self.c * self.th * self.tw) as f64
    }
}

fn finish(values: Vec<f64>, g: &Geometry, polarity: Polarity, image: &FeatureStack) -> SimilarityMap {
    let data = values.into_iter().map(|v| v as f32).collect();
    SimilarityMap {
        map: Tensor::new(1, g.oh, g.ow, data).expect("map geometry"),
        polarity,
        scale: image.scale,
        offset: (g.th / 2, g.tw / 2),
        canvas: (image.features.height(), image.features.width()),
    }
}

/// Evaluates `site(r, c)` over every valid position, rows in parallel.
fn per_site(g: &Geometry, site: impl Fn(usize, usize) -> f64 + Sync) -> Vec<f64> {
    (0..g.oh)
        .into_par_iter()
        .flat_map_iter(|r| (0..g.ow).map(move |c| (r, c)).collect::<Vec<_>>())
        .map(|(r, c)| site(r, c))
        .collect()
}

/// Calls `f(patch_row, template_row)` for every row of the window at `(r, c)`.
#[inline]
fn for_rows(image: &Tensor, template: &Tensor, g: &Geometry, r: usize, c: usize, mut f: impl FnMut(&[f32], &[f32])) {
    for ch in 0..g.c {
        let plane = image.channel(ch);
        let tplane = template.channel(ch);
        for dy in 0..g.th {
            let start = (r + dy) * g.w + c;
            f(&plane[start..start + g.tw], &tplane[dy * g.tw..(dy + 1) * g.tw]);
        }
    }
}

/// `sum_ch sum_d image(ch, r + d) * template(ch, d)` over valid sites.
fn fft_correlate(image: &Tensor, template: &[Vec<f64>], g: &Geometry) -> Vec<f64> {
    let (h, w) = (image.height(), image.width());
    let fft = Fft2::new(fast_len(h), fast_len(w));
    let mut acc = vec![Complex64::default(); fft.len()];
    let channels: Vec<usize> = (0..g.c).collect();
    for chunk in channels.chunks(CHANNEL_CHUNK) {
        let products: Vec<Vec<Complex64>> = chunk
            .par_iter()
            .map(|&ch| {
                let mut a = fft.forward(image.channel(ch), h, w);
                let b = fft.forward(&template[ch], g.th, g.tw);
                for (x, y) in a.iter_mut().zip(&b) {
                    *x *= y.conj();
                }
                a
            })
            .collect();
        for p in &products {
            for (a, v) in acc.iter_mut().zip(p) {
                *a += v;
            }
        }
    }
    fft.inverse(acc, g.oh, g.ow)
}

/// Window sums of a single plane.
fn box_sums(plane: &[f64], g: &Geometry) -> Vec<f64> {
    let h = g.oh + g.th - 1;
    let rows: Vec<f64> = (0..h)
        .flat_map(|y| {
            let row = &plane[y * g.w..(y + 1) * g.w];
            (0..g.ow).map(move |x| row[x..x + g.tw].iter().sum::<f64>())
        })
        .collect();
    let mut out = vec![0.0; g.oh * g.ow];
    for r in 0..g.oh {
        for dy in 0..g.th {
            let src = &rows[(r + dy) * g.ow..(r + dy + 1) * g.ow];
            for (o, s) in out[r * g.ow..(r + 1) * g.ow].iter_mut().zip(src) {
                *o += s;
            }
        }
    }
    out
}

/// Window sums of the image values and of their squares, pooled over channels.
fn window_moments(image: &Tensor, g: &Geometry) -> (Vec<f64>, Vec<f64>) {
    let n = image.plane_len();
    let mut q1 = vec![0.0; n];
    let mut q2 = vec![0.0; n];
    for ch in 0..g.c {
        for ((a, b), &v) in q1.iter_mut().zip(q2.iter_mut()).zip(image.channel(ch)) {
            let v = v as f64;
            *a += v;
            *b += v * v;
        }
    }
    (box_sums(&q1, g), box_sums(&q2, g))
}

fn template_planes(template: &Tensor, shift: f64) -> Vec<Vec<f64>> {
    (0..template.channels())
        .map(|ch| template.channel(ch).iter().map(|&v| v as f64 - shift).collect())
        .collect()
}

fn energy(template: &Tensor) -> f64 {
    template.data().iter().map(|&v| (v as f64) * (v as f64)).sum()
}

/// Sum of squared differences; lower is better.
pub fn match_ssd(image: &FeatureStack, template: &FeatureStack) -> Result<SimilarityMap> {
    check_pair(image, template)?;
    let (img, tpl) = (&image.features, &template.features);
    let g = Geometry::of(img, tpl);
    let values = if g.direct() {
        per_site(&g, |r, c| {
            let mut acc = 0.0f64;
            for_rows(img, tpl, &g, r, c, |p, t| {
                for (&a, &b) in p.iter().zip(t) {
                    let d = a as f64 - b as f64;
                    acc += d * d;
                }
            });
            acc
        })
    } else {
        let corr = fft_correlate(img, &template_planes(tpl, 0.0), &g);
        let (_, s2) = window_moments(img, &g);
        let t2 = energy(tpl);
        corr.iter().zip(&s2).map(|(x, p2)| (p2 - 2.0 * x + t2).max(0.0)).collect()
    };
    Ok(finish(values, &g, Polarity::LowerIsBetter, image))
}

/// Cosine similarity of the whole multi-channel window with the template.
pub fn match_ncc(image: &FeatureStack, template: &FeatureStack) -> Result<SimilarityMap> {
    check_pair(image, template)?;
    let (img, tpl) = (&image.features, &template.features);
    let t2 = energy(tpl);
    if t2 == 0.0 {
        return Err(Error::Argument("NCC needs a template with nonzero norm".into()));
    }
    let tn = t2.sqrt();
    let g = Geometry::of(img, tpl);
    let values = if g.direct() {
        per_site(&g, |r, c| {
            let (mut dot, mut pp) = (0.0f64, 0.0f64);
            for_rows(img, tpl, &g, r, c, |p, t| {
                for (&a, &b) in p.iter().zip(t) {
                    let a = a as f64;
                    dot += a * b as f64;
                    pp += a * a;
                }
            });
            if pp == 0.0 {
                0.0
            } else {
                dot / (pp.sqrt() * tn)
            }
        })
    } else {
        let corr = fft_correlate(img, &template_planes(tpl, 0.0), &g);
        let (_, s2) = window_moments(img, &g);
        corr.iter()
            .zip(&s2)
            .map(|(x, &p2)| if p2 <= 0.0 { 0.0 } else { (x / (p2.sqrt() * tn)).clamp(-1.0, 1.0) })
            .collect()
    };
    Ok(finish(values, &g, Polarity::HigherIsBetter, image))
}

/// Cosine similarity after subtracting one mean over the whole window (all
/// channels) from both window and template. Constant windows score 0.
pub fn match_zncc(image: &FeatureStack, template: &FeatureStack) -> Result<SimilarityMap> {
    check_pair(image, template)?;
    let (img, tpl) = (&image.features, &template.features);
    let g = Geometry::of(img, tpl);
    let n = g.n();
    let mt = tpl.data().iter().map(|&v| v as f64).sum::<f64>() / n;
    let centered = template_planes(tpl, mt);
    let tc2: f64 = centered.iter().flatten().map(|v| v * v).sum();
    if tc2 <= CONSTANT_RTOL * energy(tpl) || tc2 == 0.0 {
        return Err(Error::Argument("ZNCC needs a non-constant template".into()));
    }
    let tn = tc2.sqrt();
    let values = if g.direct() {
        per_site(&g, |r, c| {
            let (mut s1, mut s2) = (0.0f64, 0.0f64);
            for_rows(img, tpl, &g, r, c, |p, _| {
                for &a in p {
                    let a = a as f64;
                    s1 += a;
                    s2 += a * a;
                }
            });
            let mp = s1 / n;
            let (mut dot, mut var) = (0.0f64, 0.0f64);
            let mut k = 0;
            for_rows(img, tpl, &g, r, c, |p, _| {
                let ch = k / g.th;
                let dy = k % g.th;
                let trow = &centered[ch][dy * g.tw..(dy + 1) * g.tw];
                for (&a, &t) in p.iter().zip(trow) {
                    let d = a as f64 - mp;
                    dot += d * t;
                    var += d * d;
                }
                k += 1;
            });
            if var <= CONSTANT_RTOL * s2 || var == 0.0 {
                0.0
            } else {
                (dot / (var.sqrt() * tn)).clamp(-1.0, 1.0)
            }
        })
    } else {
        let corr = fft_correlate(img, &centered, &g);
        let (s1, s2) = window_moments(img, &g);
        corr.iter()
            .zip(s1.iter().zip(&s2))
            .map(|(x, (&p1, &p2))| {
                let var = p2 - p1 * p1 / n;
                if var <= CONSTANT_RTOL * p2 || var <= 0.0 {
                    0.0
                } else {
                    (x / (var.sqrt() * tn)).clamp(-1.0, 1.0)
                }
            })
            .collect()
    };
    Ok(finish(values, &g, Polarity::HigherIsBetter, image))
}

#[cfg(test)]
pub(crate) fn force_fft_ssd(image: &Tensor, template: &Tensor) -> Vec<f64> {
    let g = Geometry::of(image, template);
    let corr = fft_correlate(image, &template_planes(template, 0.0), &g);
    let (_, s2) = window_moments(image, &g);
    let t2 = energy(template);
    corr.iter().zip(&s2).map(|(x, p2)| (p2 - 2.0 * x + t2).max(0.0)).collect()
}
