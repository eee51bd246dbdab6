use super::Tensor;

/// Source sample positions along one axis under the half-pixel-center
/// convention: `src = (dst + 0.5) * in / out - 0.5`, clamped to the input.
fn axis_taps(in_len: usize, out_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (in_len - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(in_len - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Bilinear resize of every channel to `out_h x out_w`.
///
/// Panics if either output dimension is zero.
pub fn resize_bilinear(input: &Tensor, out_h: usize, out_w: usize) -> Tensor {
    assert!(out_h > 0 && out_w > 0, "resize target must be at least 1x1");
    let (c, h, w) = input.shape();
    if (h, w) == (out_h, out_w) {
        return input.clone();
    }
    let ys = axis_taps(h, out_h);
    let xs = axis_taps(w, out_w);
    let mut out = Tensor::zeros(c, out_h, out_w);
    for ch in 0..c {
        let src = input.channel(ch);
        let dst = out.channel_mut(ch);
        for (oy, &(y0, y1, fy)) in ys.iter().enumerate() {
            let r0 = &src[y0 * w..(y0 + 1) * w];
            let r1 = &src[y1 * w..(y1 + 1) * w];
            for (ox, &(x0, x1, fx)) in xs.iter().enumerate() {
                // f64 keeps the blend inside the envelope of its four inputs
                // once rounded back to f32.
                let lerp = |a: f32, b: f32, t: f64| a as f64 + (b as f64 - a as f64) * t;
                let top = lerp(r0[x0], r0[x1], fx);
                let bottom = lerp(r1[x0], r1[x1], fx);
                dst[oy * out_w + ox] = (top + (bottom - top) * fy) as f32;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_size_is_identity() {
        let t = Tensor::from_fn(2, 3, 5, |c, y, x| (c + y * x) as f32 * 0.1);
        assert_eq!(resize_bilinear(&t, 3, 5), t);
    }

    #[test]
    fn single_pixel_extends_constant() {
        let t = Tensor::filled(1, 1, 1, 0.75);
        let r = resize_bilinear(&t, 7, 4);
        assert!(r.data().iter().all(|&v| v == 0.75));
    }

    #[test]
    fn downsample_by_two_averages_blocks() {
        let t = Tensor::new(1, 2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let r = resize_bilinear(&t, 1, 1);
        assert_eq!(r.data(), &[1.5]);
    }
}
