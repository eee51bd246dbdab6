use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Smallest length `>= n` whose only prime factors are 2, 3 and 5.
pub(crate) fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Planned 2-D transform over an `h x w` grid. Spectra are kept in transposed
/// (column-major) layout; only pointwise products are ever taken on them.
pub(crate) struct Fft2 {
    h: usize,
    w: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

impl Fft2 {
    pub(crate) fn new(h: usize, w: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            h,
            w,
            row_fwd: planner.plan_fft_forward(w),
            row_inv: planner.plan_fft_inverse(w),
            col_fwd: planner.plan_fft_forward(h),
            col_inv: planner.plan_fft_inverse(h),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.h * self.w
    }

    /// Spectrum of a real `src_h x src_w` plane zero-padded to the grid.
    pub(crate) fn forward<T: Copy + Into<f64>>(&self, src: &[T], src_h: usize, src_w: usize) -> Vec<Complex64> {
        debug_assert!(src_h <= self.h && src_w <= self.w);
        let mut buf = vec![Complex64::default(); self.len()];
        for r in 0..src_h {
            for c in 0..src_w {
                buf[r * self.w + c] = Complex64::new(src[r * src_w + c].into(), 0.0);
            }
        }
        self.row_fwd.process(&mut buf[..src_h * self.w]);
        let mut t = transpose(&buf, self.h, self.w);
        self.col_fwd.process(&mut t);
        t
    }

    /// Real part of the inverse transform, normalized, cropped to `out_h x out_w`.
    pub(crate) fn inverse(&self, mut spec: Vec<Complex64>, out_h: usize, out_w: usize) -> Vec<f64> {
        self.col_inv.process(&mut spec);
        let mut buf = transpose(&spec, self.w, self.h);
        self.row_inv.process(&mut buf[..out_h * self.w]);
        let norm = 1.0 / self.len() as f64;
        let mut out = Vec::with_capacity(out_h * out_w);
        for r in 0..out_h {
            out.extend(buf[r * self.w..r * self.w + out_w].iter().map(|v| v.re * norm));
        }
        out
    }
}
