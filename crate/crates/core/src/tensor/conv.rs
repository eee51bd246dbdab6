use rayon::prelude::*;

use super::Tensor;
use crate::error::{Error, Result};

/// Convolution kernels in OIHW order plus one bias per output channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvWeights {
    out_channels: usize,
    in_channels: usize,
    kernel_h: usize,
    kernel_w: usize,
    kernels: Vec<f32>,
    bias: Vec<f32>,
}

impl ConvWeights {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        kernels: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        if out_channels == 0 || in_channels == 0 || kernel_h == 0 || kernel_w == 0 {
            return Err(Error::Dimension("convolution weights need positive dims".into()));
        }
        let expected = out_channels * in_channels * kernel_h * kernel_w;
        if kernels.len() != expected {
            return Err(Error::Dimension(format!(
                "{out_channels}x{in_channels}x{kernel_h}x{kernel_w} kernels need {expected} values, got {}",
                kernels.len()
            )));
        }
        if bias.len() != out_channels {
            return Err(Error::Dimension(format!(
                "expected {out_channels} biases, got {}",
                bias.len()
            )));
        }
        Ok(Self {
            out_channels,
            in_channels,
            kernel_h,
            kernel_w,
            kernels,
            bias,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn kernel_size(&self) -> (usize, usize) {
        (self.kernel_h, self.kernel_w)
    }

    pub fn kernels(&self) -> &[f32] {
        &self.kernels
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }
}

// Upper bound on the im2col scratch buffer per stripe, in floats. Stripe
// height depends only on layer geometry so results never vary with the
// thread count.
const STRIPE_BUDGET: usize = 1 << 22;

/// 2-D cross-correlation with zero padding, as used by CNN layers.
pub fn conv2d(input: &Tensor, weights: &ConvWeights, stride: usize, padding: usize) -> Result<Tensor> {
    if weights.in_channels != input.channels() {
        return Err(Error::Dimension(format!(
            "kernels expect {} input channels, tensor has {}",
            weights.in_channels,
            input.channels()
        )));
    }
    if stride == 0 {
        return Err(Error::Argument("stride must be at least 1".into()));
    }
    let (kh, kw) = (weights.kernel_h, weights.kernel_w);
    let (ph, pw) = (input.height() + 2 * padding, input.width() + 2 * padding);
    if ph < kh || pw < kw {
        return Err(Error::Geometry(format!(
            "{kh}x{kw} kernel does not fit a padded {ph}x{pw} input"
        )));
    }
    let out_h = (ph - kh) / stride + 1;
    let out_w = (pw - kw) / stride + 1;

    let k = weights.in_channels * kh * kw;
    let m = weights.out_channels;
    let rows_per_stripe = (STRIPE_BUDGET / (k * out_w)).clamp(1, out_h);
    let stripes: Vec<(usize, usize)> = (0..out_h)
        .step_by(rows_per_stripe)
        .map(|r0| (r0, (r0 + rows_per_stripe).min(out_h)))
        .collect();

    let blocks: Vec<Vec<f32>> = stripes
        .par_iter()
        .map(|&(r0, r1)| {
            let n = (r1 - r0) * out_w;
            let cols = im2col(input, kh, kw, stride, padding, r0, r1, out_w);
            let mut block = vec![0.0f32; m * n];
            for (o, row) in block.chunks_exact_mut(n).enumerate() {
                row.fill(weights.bias[o]);
            }
            // SAFETY: `kernels` is m x k row-major, `cols` is k x n row-major and
            // `block` is m x n row-major; the lengths were established above.
            unsafe {
                matrixmultiply::sgemm(
                    m,
                    k,
                    n,
                    1.0,
                    weights.kernels.as_ptr(),
                    k as isize,
                    1,
                    cols.as_ptr(),
                    n as isize,
                    1,
                    1.0,
                    block.as_mut_ptr(),
                    n as isize,
                    1,
                );
            }
            block
        })
        .collect();

    let plane = out_h * out_w;
    let mut out = vec![0.0f32; m * plane];
    for (&(r0, r1), block) in stripes.iter().zip(&blocks) {
        let n = (r1 - r0) * out_w;
        for o in 0..m {
            let dst = o * plane + r0 * out_w;
            out[dst..dst + n].copy_from_slice(&block[o * n..(o + 1) * n]);
        }
    }
    Tensor::new(m, out_h, out_w, out)
}

#[allow(clippy::too_many_arguments)]
fn im2col(
    input: &Tensor,
    kh: usize,
    kw: usize,
    stride: usize,
    padding: usize,
    r0: usize,
    r1: usize,
    out_w: usize,
) -> Vec<f32> {
    let n = (r1 - r0) * out_w;
    let (h, w) = (input.height() as isize, input.width() as isize);
    let pad = padding as isize;
    let mut cols = vec![0.0f32; input.channels() * kh * kw * n];
    let mut row = 0;
    for c in 0..input.channels() {
        let plane = input.channel(c);
        for dy in 0..kh {
            for dx in 0..kw {
                let dst = &mut cols[row * n..(row + 1) * n];
                for (i, oy) in (r0..r1).enumerate() {
                    let iy = (oy * stride + dy) as isize - pad;
                    if iy < 0 || iy >= h {
                        continue;
                    }
                    let src = &plane[iy as usize * w as usize..(iy as usize + 1) * w as usize];
                    let line = &mut dst[i * out_w..(i + 1) * out_w];
                    for (ox, v) in line.iter_mut().enumerate() {
                        let ix = (ox * stride + dx) as isize - pad;
                        if ix >= 0 && ix < w {
                            *v = src[ix as usize];
                        }
                    }
                }
                row += 1;
            }
        }
    }
    cols
}
