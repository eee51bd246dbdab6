//! Brute-force reference implementations used as test oracles. None of these
//! call into the crate's numeric kernels.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapematch::Tensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut impl Rng, c: usize, h: usize, w: usize, lo: f32, hi: f32) -> Tensor {
    Tensor::from_fn(c, h, w, |_, _, _| rng.gen_range(lo..hi))
}

/// Triple-nested direct summation, accumulated in f64.
pub fn conv2d_direct(
    input: &Tensor,
    kernels: &[f32],
    bias: &[f32],
    out_c: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> Vec<Vec<Vec<f64>>> {
    let (c, h, w) = input.shape();
    let oh = (h + 2 * pad - k) / stride + 1;
    let ow = (w + 2 * pad - k) / stride + 1;
    let mut out = vec![vec![vec![0.0; ow]; oh]; out_c];
    for o in 0..out_c {
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = bias[o] as f64;
                for i in 0..c {
                    for dy in 0..k {
                        for dx in 0..k {
                            let iy = (y * stride + dy) as isize - pad as isize;
                            let ix = (x * stride + dx) as isize - pad as isize;
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                continue;
                            }
                            let wv = kernels[((o * c + i) * k + dy) * k + dx] as f64;
                            acc += wv * input.get(i, iy as usize, ix as usize) as f64;
                        }
                    }
                }
                out[o][y][x] = acc;
            }
        }
    }
    out
}

/// Window scan over explicit 2x2 windows, dropping coordinates past the edge.
pub fn maxpool_window_scan(input: &Tensor) -> Tensor {
    let (c, h, w) = input.shape();
    let (oh, ow) = ((h + 1) / 2, (w + 1) / 2);
    Tensor::from_fn(c, oh, ow, |ch, y, x| {
        let mut m = f32::NEG_INFINITY;
        for yy in 2 * y..(2 * y + 2).min(h) {
            for xx in 2 * x..(2 * x + 2).min(w) {
                m = m.max(input.get(ch, yy, xx));
            }
        }
        m
    })
}

/// Per-pixel bilinear sample under the half-pixel-center convention.
pub fn bilinear_pixel(input: &Tensor, c: usize, oy: usize, ox: usize, oh: usize, ow: usize) -> f64 {
    let (_, h, w) = input.shape();
    let sy = (((oy as f64) + 0.5) * h as f64 / oh as f64 - 0.5).max(0.0).min((h - 1) as f64);
    let sx = (((ox as f64) + 0.5) * w as f64 / ow as f64 - 0.5).max(0.0).min((w - 1) as f64);
    let (y0, x0) = (sy.floor() as usize, sx.floor() as usize);
    let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
    let (fy, fx) = (sy - y0 as f64, sx - x0 as f64);
    let g = |y: usize, x: usize| input.get(c, y, x) as f64;
    (1.0 - fy) * ((1.0 - fx) * g(y0, x0) + fx * g(y0, x1)) + fy * ((1.0 - fx) * g(y1, x0) + fx * g(y1, x1))
}

fn window(image: &Tensor, tpl: &Tensor, r: usize, c: usize) -> (Vec<f64>, Vec<f64>) {
    let (ch, th, tw) = tpl.shape();
    let mut p = Vec::with_capacity(ch * th * tw);
    let mut t = Vec::with_capacity(ch * th * tw);
    for k in 0..ch {
        for y in 0..th {
            for x in 0..tw {
                p.push(image.get(k, r + y, c + x) as f64);
                t.push(tpl.get(k, y, x) as f64);
            }
        }
    }
    (p, t)
}

fn valid_map(image: &Tensor, tpl: &Tensor, f: impl Fn(&[f64], &[f64]) -> f64) -> Vec<Vec<f64>> {
    let (oh, ow) = (image.height() - tpl.height() + 1, image.width() - tpl.width() + 1);
    (0..oh)
        .map(|r| {
            (0..ow)
                .map(|c| {
                    let (p, t) = window(image, tpl, r, c);
                    f(&p, &t)
                })
                .collect()
        })
        .collect()
}

pub fn ssd_oracle(image: &Tensor, tpl: &Tensor) -> Vec<Vec<f64>> {
    valid_map(image, tpl, |p, t| p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub fn ncc_oracle(image: &Tensor, tpl: &Tensor) -> Vec<Vec<f64>> {
    valid_map(image, tpl, |p, t| {
        let dot: f64 = p.iter().zip(t).map(|(a, b)| a * b).sum();
        let np = p.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nt = t.iter().map(|a| a * a).sum::<f64>().sqrt();
        if np == 0.0 {
            0.0
        } else {
            dot / (np * nt)
        }
    })
}

pub fn zncc_oracle(image: &Tensor, tpl: &Tensor) -> Vec<Vec<f64>> {
    valid_map(image, tpl, |p, t| {
        let n = p.len() as f64;
        let mp = p.iter().sum::<f64>() / n;
        let mt = t.iter().sum::<f64>() / n;
        let dot: f64 = p.iter().zip(t).map(|(a, b)| (a - mp) * (b - mt)).sum();
        let np = p.iter().map(|a| (a - mp) * (a - mp)).sum::<f64>().sqrt();
        let nt = t.iter().map(|b| (b - mt) * (b - mt)).sum::<f64>().sqrt();
        if np <= 1e-12 * (1.0 + mp.abs()) * n.sqrt() {
            0.0
        } else {
            dot / (np * nt)
        }
    })
}

/// Cyclic Jacobi eigensolver for a symmetric matrix. Returns eigenvalues in
/// decreasing order with matching unit eigenvectors (as rows).
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| m[b][b].partial_cmp(&m[a][a]).unwrap());
    let vals = idx.iter().map(|&i| m[i][i]).collect();
    let vecs = idx.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (vals, vecs)
}

/// Biased sample covariance of row samples.
pub fn covariance(samples: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = samples.len() as f64;
    let d = samples[0].len();
    let mean: Vec<f64> = (0..d).map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / n).collect();
    let cov = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| samples.iter().map(|s| (s[i] - mean[i]) * (s[j] - mean[j])).sum::<f64>() / n)
                .collect()
        })
        .collect();
    (mean, cov)
}

/// Flips a vector so its largest-magnitude entry is positive.
pub fn canonical_sign(v: &[f64]) -> Vec<f64> {
    let pivot = v.iter().enumerate().fold(0, |b, (j, x)| if x.abs() > v[b].abs() { j } else { b });
    let s = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
    v.iter().map(|x| x * s).collect()
}

/// Closed-form value of the 2-D DoG kernel at offset `(dy, dx)`: product of
/// unit-sum truncated 1-D Gaussians for each sigma, center minus surround.
pub fn dog_kernel_value(dy: i64, dx: i64, sc: f64, ss: f64) -> f64 {
    let g = |d: i64, s: f64| {
        let r = (3.0 * s).ceil() as i64;
        if d.abs() > r {
            return 0.0;
        }
        let z: f64 = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * s * s)).exp()).sum();
        (-(d * d) as f64 / (2.0 * s * s)).exp() / z
    };
    g(dy, sc) * g(dx, sc) - g(dy, ss) * g(dx, ss)
}

/// Direct-loop divisive input modulation. Returns `Y_j` per template as
/// row-major planes over top-left positions.
pub fn dim_oracle(x: &Tensor, templates: &[Tensor], iters: usize, eps1: f64, eps2: f64) -> Vec<Vec<f64>> {
    let (c, h, w) = x.shape();
    let (_, th, tw) = templates[0].shape();
    let gmax = templates.iter().flat_map(|t| t.data().iter()).fold(0.0f64, |m, &v| m.max(v as f64));
    let sums: Vec<f64> = templates.iter().map(|t| t.data().iter().map(|&v| v as f64).sum()).collect();
    let mut y = vec![vec![0.0f64; h * w]; templates.len()];
    for _ in 0..iters {
        let mut r = vec![0.0f64; c * h * w];
        for (j, t) in templates.iter().enumerate() {
            for ch in 0..c {
                for yy in 0..h {
                    for xx in 0..w {
                        let mut acc = 0.0;
                        for dr in 0..th.min(yy + 1) {
                            for dc in 0..tw.min(xx + 1) {
                                acc += t.get(ch, dr, dc) as f64 / gmax * y[j][(yy - dr) * w + xx - dc];
                            }
                        }
                        r[(ch * h + yy) * w + xx] += acc;
                    }
                }
            }
        }
        let e: Vec<f64> = x.data().iter().zip(&r).map(|(&v, &rv)| v as f64 / (eps2 + rv)).collect();
        for (j, t) in templates.iter().enumerate() {
            if sums[j] <= 0.0 {
                continue;
            }
            let mut next = vec![0.0; h * w];
            for rr in 0..h {
                for cc in 0..w {
                    let mut acc = 0.0;
                    for ch in 0..c {
                        for dr in 0..th.min(h - rr) {
                            for dc in 0..tw.min(w - cc) {
                                acc += t.get(ch, dr, dc) as f64 / sums[j] * e[(ch * h + rr + dr) * w + cc + dc];
                            }
                        }
                    }
                    next[rr * w + cc] = (eps1 + y[j][rr * w + cc]) * acc;
                }
            }
            y[j] = next;
        }
    }
    y
}
