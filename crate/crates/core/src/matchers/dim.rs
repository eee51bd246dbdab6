use std::borrow::Cow;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::{fast_len, Fft2};
use super::{check_pair, Polarity, SimilarityMap};
use crate::error::{Error, Result};
use crate::features::FeatureStack;
use crate::tensor::{BoundingBox, Tensor};

/// Per-channel output of one update: reconstruction, residual, residual
/// spectrum and the template spectra used.
type ChannelPass<'a> = (Vec<f32>, Vec<f32>, Vec<Complex64>, Vec<Cow<'a, [Complex64]>>);

pub const MAX_EXTRA_TEMPLATES: usize = 9;

/// Template spectra are cached across iterations up to this many bytes.
const SPECTRUM_CACHE_BYTES: usize = 512 << 20;

const CHANNEL_CHUNK: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimConfig {
    pub n_extra_templates: usize,
    pub iterations: usize,
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for DimConfig {
    fn default() -> Self {
        Self {
            n_extra_templates: 5,
            iterations: 10,
            eps1: 1e-6,
            eps2: 1e-3,
        }
    }
}

impl DimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Argument("DIM needs at least one iteration".into()));
        }
        if !(self.eps1 > 0.0 && self.eps1.is_finite()) || !(self.eps2 > 0.0 && self.eps2.is_finite()) {
            return Err(Error::Argument(format!(
                "DIM epsilons must be positive, got eps1={} eps2={}",
                self.eps1, self.eps2
            )));
        }
        if self.n_extra_templates > MAX_EXTRA_TEMPLATES {
            return Err(Error::Argument(format!(
                "at most {MAX_EXTRA_TEMPLATES} extra templates are supported, got {}",
                self.n_extra_templates
            )));
        }
        Ok(())
    }
}

/// Top-left `(row, col)` of the first `n` background anchors for a `th x tw`
/// window: the four corners, the center, then the four edge midpoints.
pub fn template_anchors(height: usize, width: usize, th: usize, tw: usize, n: usize) -> Result<Vec<(usize, usize)>> {
    if th > height || tw > width {
        return Err(Error::Geometry(format!(
            "{tw}x{th} template does not fit in a {width}x{height} image"
        )));
    }
    if n > MAX_EXTRA_TEMPLATES {
        return Err(Error::Argument(format!(
            "at most {MAX_EXTRA_TEMPLATES} extra templates are supported, got {n}"
        )));
    }
    let (br, bc) = (height - th, width - tw);
    let (mr, mc) = (br / 2, bc / 2);
    let all = [
        (0, 0),
        (0, bc),
        (br, 0),
        (br, bc),
        (mr, mc),
        (0, mc),
        (br, mc),
        (mr, 0),
        (mr, bc),
    ];
    Ok(all[..n].to_vec())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtraTemplate {
    /// Top-left `(row, col)` in the search stack.
    pub anchor: (usize, usize),
    pub patch: Tensor,
}

/// Background templates of the template's size cut from fixed anchors of the
/// search stack. Only the box's size is used.
pub fn extract_extra_templates(image: &Tensor, template_box: BoundingBox, n: usize) -> Result<Vec<ExtraTemplate>> {
    let (th, tw) = (template_box.h, template_box.w);
    template_anchors(image.height(), image.width(), th, tw, n)?
        .into_iter()
        .map(|anchor| {
            Ok(ExtraTemplate {
                anchor,
                patch: image.crop(anchor.0, anchor.1, th, tw)?,
            })
        })
        .collect()
}

fn check_non_negative(t: &Tensor, what: &str) -> Result<()> {
    match t.data().iter().find(|v| **v < 0.0 || !v.is_finite()) {
        Some(v) => Err(Error::Argument(format!(
            "DIM needs finite non-negative {what} values, found {v}"
        ))),
        None => Ok(()),
    }
}

/// Iteration state of divisive input modulation.
///
/// With image `X`, templates `w_j`, and maps `Y_j` where `Y_j(r, c)` scores
/// template `j` with its top-left corner at `(r, c)`:
///
/// ```text
/// R(ch, y, x) = sum_j sum_d v_j(ch, d) Y_j((y, x) - d)
/// E = X / (eps2 + R)
/// Y_j(r, c) <- (eps1 + Y_j(r, c)) * sum_ch sum_d w^_j(ch, d) E(ch, (r, c) + d)
/// ```
///
/// `w^_j` is `w_j` scaled to unit sum and `v_j` is `w_j` divided by the
/// largest value over all templates. Templates with zero mass never gain
/// support.
pub struct DimState {
    config: DimConfig,
    image: Tensor,
    templates: Vec<Tensor>,
    inv_sum: Vec<f64>,
    inv_max: f64,
    fft: Fft2,
    /// `[template][channel]` when small enough to keep.
    spectra: Option<Vec<Vec<Vec<Complex64>>>>,
    y: Vec<Vec<f64>>,
    reconstruction: Tensor,
    residual: Tensor,
    iterations: usize,
}

impl DimState {
    /// `templates[0]` is the target.
    pub fn new(image: &Tensor, templates: Vec<Tensor>, config: &DimConfig) -> Result<Self> {
        config.validate()?;
        let (c, h, w) = image.shape();
        let first = templates
            .first()
            .ok_or_else(|| Error::Argument("DIM needs at least one template".into()))?;
        let (_, th, tw) = first.shape();
        for t in &templates {
            if t.shape() != (c, th, tw) {
                return Err(Error::Dimension(format!(
                    "templates must all be {c}x{th}x{tw}, got {:?}",
                    t.shape()
                )));
            }
            check_non_negative(t, "template")?;
        }
        if th > h || tw > w {
            return Err(Error::Geometry(format!(
                "{tw}x{th} template does not fit in a {w}x{h} image"
            )));
        }
        check_non_negative(image, "image")?;

        let sums: Vec<f64> = templates
            .iter()
            .map(|t| t.data().iter().map(|&v| v as f64).sum())
            .collect();
        if sums[0] <= 0.0 {
            return Err(Error::Argument("DIM target template is all zero".into()));
        }
        let inv_sum = sums.iter().map(|&s| if s > 0.0 { 1.0 / s } else { 0.0 }).collect();
        let max = templates.iter().map(|t| t.max()).fold(0.0f32, f32::max) as f64;

        let fft = Fft2::new(fast_len(h + th - 1), fast_len(w + tw - 1));
        let bytes = templates.len() * c * fft.len() * std::mem::size_of::<Complex64>();
        let spectra = (bytes <= SPECTRUM_CACHE_BYTES).then(|| {
            templates
                .iter()
                .map(|t| {
                    (0..c)
                        .into_par_iter()
                        .map(|ch| fft.forward(t.channel(ch), th, tw))
                        .collect()
                })
                .collect()
        });

        let residual = image.map(|v| (v as f64 / config.eps2) as f32);
        let j = templates.len();
        Ok(Self {
            config: *config,
            image: image.clone(),
            templates,
            inv_sum,
            inv_max: 1.0 / max,
            fft,
            spectra,
            y: vec![vec![0.0; h * w]; j],
            reconstruction: Tensor::zeros(c, h, w),
            residual,
            iterations: 0,
        })
    }

    pub fn templates(&self) -> &[Tensor] {
        &self.templates
    }

    /// `Y_j` as a row-major `height x width` plane.
    pub fn similarity(&self, j: usize) -> &[f64] {
        &self.y[j]
    }

    /// `R` from the most recent step.
    pub fn reconstruction(&self) -> &Tensor {
        &self.reconstruction
    }

    /// `E` from the most recent step.
    pub fn residual(&self) -> &Tensor {
        &self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn template_spectra(&self, ch: usize) -> Vec<Cow<'_, [Complex64]>> {
        let (_, th, tw) = self.templates[0].shape();
        match &self.spectra {
            Some(s) => s.iter().map(|per_ch| Cow::Borrowed(&per_ch[ch][..])).collect(),
            None => self
                .templates
                .iter()
                .map(|t| Cow::Owned(self.fft.forward(t.channel(ch), th, tw)))
                .collect(),
        }
    }

    pub fn step(&mut self) {
        let (c, h, w) = self.image.shape();
        let n = self.fft.len();
        let active: Vec<usize> = (0..self.templates.len()).filter(|&j| self.inv_sum[j] > 0.0).collect();
        let y_spec: Vec<Vec<Complex64>> = active
            .par_iter()
            .map(|&j| self.fft.forward(&self.y[j], h, w))
            .collect();
        let mut acc = vec![vec![Complex64::default(); n]; active.len()];
        let (eps2, inv_max) = (self.config.eps2, self.inv_max);

        let channels: Vec<usize> = (0..c).collect();
        for chunk in channels.chunks(CHANNEL_CHUNK) {
            let this = &*self;
            let results: Vec<ChannelPass<'_>> = chunk
                .par_iter()
                .map(|&ch| {
                    let w_spec = this.template_spectra(ch);
                    let mut r_spec = vec![Complex64::default(); n];
                    for (a, &j) in active.iter().enumerate() {
                        for ((o, ys), ws) in r_spec.iter_mut().zip(&y_spec[a]).zip(w_spec[j].iter()) {
                            *o += ys * ws;
                        }
                    }
                    let r: Vec<f64> = this
                        .fft
                        .inverse(r_spec, h, w)
                        .into_iter()
                        .map(|v| (v * inv_max).max(0.0))
                        .collect();
                    let e: Vec<f64> = this
                        .image
                        .channel(ch)
                        .iter()
                        .zip(&r)
                        .map(|(&x, &rv)| x as f64 / (eps2 + rv))
                        .collect();
                    let e_spec = this.fft.forward(&e, h, w);
                    let narrow = |v: Vec<f64>| v.into_iter().map(|x| x as f32).collect::<Vec<f32>>();
                    (narrow(r), narrow(e), e_spec, w_spec)
                })
                .collect();
            acc.par_iter_mut().zip(&active).for_each(|(out, &j)| {
                for (_, _, e_spec, w_spec) in &results {
                    for ((o, es), ws) in out.iter_mut().zip(e_spec).zip(w_spec[j].iter()) {
                        *o += es * ws.conj();
                    }
                }
            });
            let planes: Vec<(Vec<f32>, Vec<f32>)> = results.into_iter().map(|(r, e, _, _)| (r, e)).collect();
            for (&ch, (r, e)) in chunk.iter().zip(planes) {
                self.reconstruction.channel_mut(ch).copy_from_slice(&r);
                self.residual.channel_mut(ch).copy_from_slice(&e);
            }
        }

        let eps1 = self.config.eps1;
        let updated: Vec<Vec<f64>> = acc
            .into_par_iter()
            .zip(&active)
            .map(|(spec, &j)| {
                let scale = self.inv_sum[j];
                self.fft
                    .inverse(spec, h, w)
                    .into_iter()
                    .zip(&self.y[j])
                    .map(|(corr, &prev)| (eps1 + prev) * (corr * scale).max(0.0))
                    .collect()
            })
            .collect();
        for (&j, y) in active.iter().zip(updated) {
            self.y[j] = y;
        }
        self.iterations += 1;
    }

    /// Runs until the configured iteration count is reached.
    pub fn run(&mut self) {
        while self.iterations < self.config.iterations {
            self.step();
        }
    }
}

/// Divisive input modulation with the target competing against
/// `config.n_extra_templates` background templates. The result is `Y` of
/// the target over every top-left position of the search stack.
pub fn match_dim(image: &FeatureStack, template: &FeatureStack, config: &DimConfig) -> Result<SimilarityMap> {
    check_pair(image, template)?;
    config.validate()?;
    let (_, h, w) = image.features.shape();
    let (_, th, tw) = template.features.shape();
    let size = BoundingBox::new(0, 0, tw, th)?;
    let mut templates = vec![template.features.clone()];
    templates.extend(
        extract_extra_templates(&image.features, size, config.n_extra_templates)?
            .into_iter()
            .map(|e| e.patch),
    );
    let mut state = DimState::new(&image.features, templates, config)?;
    state.run();
    let data = state.similarity(0).iter().map(|&v| v as f32).collect();
    Ok(SimilarityMap {
        map: Tensor::new(1, h, w, data)?,
        polarity: Polarity::HigherIsBetter,
        scale: image.scale,
        offset: (th / 2, tw / 2),
        canvas: (h, w),
    })
}
