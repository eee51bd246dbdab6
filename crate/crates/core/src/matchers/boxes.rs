use super::{Polarity, SimilarityMap};
use crate::tensor::{resize_bilinear, BoundingBox, Tensor};

/// Best site of channel 0 under `polarity`, first in row-major order on ties.
pub fn best_site(map: &Tensor, polarity: Polarity) -> (usize, usize) {
    let w = map.width();
    let plane = map.channel(0);
    let mut best = 0;
    for (i, &v) in plane.iter().enumerate().skip(1) {
        if polarity.better(v, plane[best]) {
            best = i;
        }
    }
    (best / w, best % w)
}

/// Predicted box for a similarity map.
///
/// The map is placed on its search-stack canvas (window centers at
/// `site + offset`, the rest filled with the worst score), resized to the
/// image, and the best pixel becomes the box center. The box keeps the
/// template's size and is shifted, not shrunk, to stay inside the image;
/// only a template wider or taller than the image is cut.
pub fn map_to_box(sim: &SimilarityMap, template_box: BoundingBox, image_width: usize, image_height: usize) -> BoundingBox {
    let (mh, mw) = (sim.map.height(), sim.map.width());
    let (ch, cw) = sim.canvas;
    let (oy, ox) = sim.offset;
    let worst = match sim.polarity {
        Polarity::HigherIsBetter => sim.map.min(),
        Polarity::LowerIsBetter => sim.map.max(),
    };
    let mut canvas = Tensor::filled(1, ch, cw, worst);
    for r in 0..mh.min(ch.saturating_sub(oy)) {
        for c in 0..mw.min(cw.saturating_sub(ox)) {
            canvas.set(0, r + oy, c + ox, sim.map.get(0, r, c));
        }
    }
    let full = resize_bilinear(&canvas, image_height, image_width);
    let (py, px) = best_site(&full, sim.polarity);
    let place = |p: usize, len: usize, limit: usize| -> (usize, usize) {
        if len >= limit {
            return (0, limit);
        }
        (p.saturating_sub(len / 2).min(limit - len), len)
    };
    let (x, w) = place(px, template_box.w, image_width);
    let (y, h) = place(py, template_box.h, image_height);
    BoundingBox { x, y, w, h }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Scale;

    fn sim(map: Tensor, polarity: Polarity, offset: (usize, usize), canvas: (usize, usize), scale: Scale) -> SimilarityMap {
        SimilarityMap {
            map,
            polarity,
            scale,
            offset,
            canvas,
        }
    }

    #[test]
    fn ties_go_to_the_first_site() {
        let t = Tensor::filled(1, 3, 4, 2.0);
        assert_eq!(best_site(&t, Polarity::HigherIsBetter), (0, 0));
        assert_eq!(best_site(&t, Polarity::LowerIsBetter), (0, 0));
        let mut t = Tensor::zeros(1, 3, 4);
        t.set(0, 1, 2, 5.0);
        t.set(0, 2, 0, 5.0);
        assert_eq!(best_site(&t, Polarity::HigherIsBetter), (1, 2));
        assert_eq!(best_site(&t, Polarity::LowerIsBetter), (0, 0));
    }

    #[test]
    fn single_value_map_lands_top_left() {
        let s = sim(Tensor::filled(1, 1, 1, 0.3), Polarity::HigherIsBetter, (0, 0), (1, 1), Scale::ONE);
        let tb = BoundingBox::new(10, 10, 20, 16).unwrap();
        assert_eq!(map_to_box(&s, tb, 100, 80), BoundingBox::new(0, 0, 20, 16).unwrap());
    }

    #[test]
    fn valid_offset_recovers_top_left() {
        // 20x16 image, 5x4 template at (7, 3): valid map is 13x16.
        let mut m = Tensor::zeros(1, 13, 16);
        m.set(0, 3, 7, 1.0);
        let s = sim(m, Polarity::HigherIsBetter, (2, 2), (16, 20), Scale::ONE);
        let tb = BoundingBox::new(0, 0, 5, 4).unwrap();
        let b = map_to_box(&s, tb, 20, 16);
        assert_eq!(b, BoundingBox::new(7, 3, 5, 4).unwrap());
    }

    #[test]
    fn box_is_shifted_inside() {
        let mut m = Tensor::zeros(1, 10, 10);
        m.set(0, 9, 9, 1.0);
        let s = sim(m, Polarity::HigherIsBetter, (0, 0), (10, 10), Scale::ONE);
        let b = map_to_box(&s, BoundingBox::new(0, 0, 4, 6).unwrap(), 10, 10);
        assert_eq!(b, BoundingBox::new(6, 4, 4, 6).unwrap());
        let b = map_to_box(&s, BoundingBox::new(0, 0, 14, 6).unwrap(), 10, 10);
        assert_eq!((b.x, b.w), (0, 10));
    }
}
