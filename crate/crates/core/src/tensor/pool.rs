use super::Tensor;

/// 2x2 max pooling with stride 2.
///
/// An odd trailing row or column is replicated before pooling, so the output
/// is `ceil(h / 2) x ceil(w / 2)` and the edge windows take the max of the
/// pixels that do exist.
pub fn maxpool2(input: &Tensor) -> Tensor {
    let (c, h, w) = input.shape();
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let mut out = Tensor::zeros(c, oh, ow);
    for ch in 0..c {
        let src = input.channel(ch);
        let dst = out.channel_mut(ch);
        for oy in 0..oh {
            let y0 = 2 * oy;
            let y1 = (y0 + 1).min(h - 1);
            for ox in 0..ow {
                let x0 = 2 * ox;
                let x1 = (x0 + 1).min(w - 1);
                dst[oy * ow + ox] = src[y0 * w + x0]
                    .max(src[y0 * w + x1])
                    .max(src[y1 * w + x0])
                    .max(src[y1 * w + x1]);
            }
        }
    }
    out
}
