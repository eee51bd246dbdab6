mod common;

use proptest::prelude::*;
use rand::Rng;
use shapematch::features::FeatureStack;
use shapematch::matchers::{
    map_to_box, match_dim, match_ncc, match_ssd, match_zncc, DimConfig, DimState, Polarity, SimilarityMap,
};
use shapematch::{BoundingBox, Scale, Tensor};

fn stack(t: Tensor) -> FeatureStack {
    FeatureStack::new(t, Scale::ONE, "test")
}

fn plant(image: &mut Tensor, patch: &Tensor, r: usize, c: usize) {
    for ch in 0..patch.channels() {
        for y in 0..patch.height() {
            for x in 0..patch.width() {
                image.set(ch, r + y, c + x, patch.get(ch, y, x));
            }
        }
    }
}

fn assert_close(got: &Tensor, expect: &[Vec<f64>], tol: impl Fn(f64) -> f64) {
    assert_eq!(got.height(), expect.len());
    assert_eq!(got.width(), expect[0].len());
    for (r, row) in expect.iter().enumerate() {
        for (c, &e) in row.iter().enumerate() {
            let g = got.get(0, r, c) as f64;
            assert!((g - e).abs() <= tol(e), "({r},{c}): {g} vs {e}");
        }
    }
}

#[test]
fn classic_matchers_match_oracles_on_random_instances() {
    let mut r = common::rng(100);
    for _ in 0..60 {
        let c = r.gen_range(1..=6);
        let (h, w) = (r.gen_range(4..=24), r.gen_range(4..=24));
        let (th, tw) = (r.gen_range(1..=h.min(8)), r.gen_range(1..=w.min(8)));
        let img = common::random_tensor(&mut r, c, h, w, 0.0, 1.0);
        let tpl = common::random_tensor(&mut r, c, th, tw, 0.0, 1.0);
        let (i, t) = (stack(img.clone()), stack(tpl.clone()));
        assert_close(&match_ssd(&i, &t).unwrap().map, &common::ssd_oracle(&img, &tpl), |e| 1e-5 * e.abs().max(1e-3));
        assert_close(&match_ncc(&i, &t).unwrap().map, &common::ncc_oracle(&img, &tpl), |_| 1e-6);
        if th * tw * c > 1 {
            assert_close(&match_zncc(&i, &t).unwrap().map, &common::zncc_oracle(&img, &tpl), |_| 1e-6);
        }
    }
}

#[test]
fn fft_path_matches_oracles() {
    let mut r = common::rng(101);
    let img = common::random_tensor(&mut r, 8, 130, 128, 0.0, 1.0);
    let tpl = common::random_tensor(&mut r, 8, 32, 33, 0.0, 1.0);
    let (i, t) = (stack(img.clone()), stack(tpl.clone()));
    assert_close(&match_ssd(&i, &t).unwrap().map, &common::ssd_oracle(&img, &tpl), |e| 1e-5 * e.abs().max(1.0));
    assert_close(&match_ncc(&i, &t).unwrap().map, &common::ncc_oracle(&img, &tpl), |_| 1e-6);
    assert_close(&match_zncc(&i, &t).unwrap().map, &common::zncc_oracle(&img, &tpl), |_| 1e-6);
}

#[test]
fn zero_template_ssd_is_window_energy() {
    let mut r = common::rng(102);
    let img = common::random_tensor(&mut r, 3, 10, 12, -1.0, 1.0);
    let m = match_ssd(&stack(img.clone()), &stack(Tensor::zeros(3, 4, 3))).unwrap();
    let energy = common::ssd_oracle(&img, &Tensor::zeros(3, 4, 3));
    assert_close(&m.map, &energy, |e| 1e-6 * e.max(1.0));
}

#[test]
fn zncc_constant_windows_score_zero() {
    let mut img = Tensor::filled(1, 12, 12, 0.5);
    let mut r = common::rng(103);
    let tpl = common::random_tensor(&mut r, 1, 3, 3, 0.0, 1.0);
    plant(&mut img, &tpl, 6, 6);
    let m = match_zncc(&stack(img), &stack(tpl)).unwrap();
    assert_eq!(m.map.get(0, 0, 0), 0.0);
    assert_eq!(m.best_site(), (6, 6));
}

proptest! {
    #[test]
    fn ncc_is_exactly_invariant_to_power_of_two_scaling(seed in 0u64..10_000, k in -6i32..6) {
        let mut r = common::rng(seed);
        let img = stack(common::random_tensor(&mut r, 2, 12, 12, 0.0, 1.0));
        let tpl = common::random_tensor(&mut r, 2, 4, 5, 0.1, 1.0);
        let a = 2f32.powi(k);
        let base = match_ncc(&img, &stack(tpl.clone())).unwrap();
        let scaled = match_ncc(&img, &stack(tpl.map(|v| v * a))).unwrap();
        prop_assert_eq!(&base.map, &scaled.map);
        prop_assert_eq!(base.best_site(), scaled.best_site());
    }

    #[test]
    fn ncc_is_invariant_to_positive_scaling(seed in 0u64..10_000, a in 0.01f32..100.0) {
        let mut r = common::rng(seed);
        let img = stack(common::random_tensor(&mut r, 2, 12, 12, 0.0, 1.0));
        let tpl = common::random_tensor(&mut r, 2, 4, 5, 0.1, 1.0);
        let base = match_ncc(&img, &stack(tpl.clone())).unwrap();
        let scaled = match_ncc(&img, &stack(tpl.map(|v| v * a))).unwrap();
        for (x, y) in base.map.data().iter().zip(scaled.map.data()) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn zncc_is_invariant_to_affine_template_changes(seed in 0u64..10_000, a in 0.1f32..10.0, b in -5.0f32..5.0) {
        let mut r = common::rng(seed);
        let img = stack(common::random_tensor(&mut r, 3, 14, 13, 0.0, 1.0));
        let tpl = common::random_tensor(&mut r, 3, 5, 4, 0.0, 1.0);
        let base = match_zncc(&img, &stack(tpl.clone())).unwrap();
        let moved = match_zncc(&img, &stack(tpl.map(|v| a * v + b))).unwrap();
        for (x, y) in base.map.data().iter().zip(moved.map.data()) {
            prop_assert!((x - y).abs() < 1e-6, "{} vs {}", x, y);
        }
    }

    #[test]
    fn zncc_affine_copy_scores_one(seed in 0u64..10_000, a in 0.1f32..10.0, b in -2.0f32..2.0) {
        let mut r = common::rng(seed);
        let img = common::random_tensor(&mut r, 2, 12, 12, 0.0, 1.0);
        let (y, x) = (r.gen_range(0..8), r.gen_range(0..8));
        let tpl = img.crop(y, x, 4, 4).unwrap().map(|v| a * v + b);
        let m = match_zncc(&stack(img), &stack(tpl)).unwrap();
        prop_assert!((m.map.get(0, y, x) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dim_maps_stay_non_negative(seed in 0u64..10_000) {
        let mut r = common::rng(seed);
        let img = common::random_tensor(&mut r, 2, 14, 15, 0.0, 1.0);
        let templates = vec![
            common::random_tensor(&mut r, 2, 4, 3, 0.0, 1.0),
            img.crop(0, 0, 4, 3).unwrap(),
            Tensor::zeros(2, 4, 3),
        ];
        let mut s = DimState::new(&img, templates, &DimConfig::default()).unwrap();
        for _ in 0..10 {
            s.step();
            for j in 0..3 {
                prop_assert!(s.similarity(j).iter().all(|&v| v >= 0.0 && v.is_finite()));
            }
            prop_assert!(s.reconstruction().min() >= 0.0);
        }
    }

    #[test]
    fn argmax_box_ignores_monotone_remapping(seed in 0u64..10_000, k in 1u32..4) {
        let mut r = common::rng(seed);
        let map = common::random_tensor(&mut r, 1, 9, 11, 0.0, 1.0);
        let sim = |m: Tensor, p| SimilarityMap { map: m, polarity: p, scale: Scale::ONE, offset: (2, 1), canvas: (13, 13) };
        let tb = BoundingBox::new(0, 0, 3, 5).unwrap();
        let base = map_to_box(&sim(map.clone(), Polarity::HigherIsBetter), tb, 13, 13);
        let cubed = map.map(|v| v.powi(k as i32 * 2 + 1) * 3.0 + 0.5);
        prop_assert_eq!(base, map_to_box(&sim(cubed, Polarity::HigherIsBetter), tb, 13, 13));
        let flipped = map.map(|v| (-v).exp());
        prop_assert_eq!(base, map_to_box(&sim(flipped, Polarity::LowerIsBetter), tb, 13, 13));
    }
}

#[test]
fn dim_matches_direct_loop_oracle() {
    let mut r = common::rng(104);
    for _ in 0..5 {
        let c = r.gen_range(1..=3);
        let (h, w) = (r.gen_range(6..=14), r.gen_range(6..=14));
        let (th, tw) = (r.gen_range(1..=4), r.gen_range(1..=4));
        let img = common::random_tensor(&mut r, c, h, w, 0.0, 1.0);
        let mut templates = vec![common::random_tensor(&mut r, c, th, tw, 0.0, 1.0)];
        templates.push(img.crop(0, 0, th, tw).unwrap());
        templates.push(Tensor::zeros(c, th, tw));
        let cfg = DimConfig::default();
        let mut s = DimState::new(&img, templates.clone(), &cfg).unwrap();
        s.run();
        let oracle = common::dim_oracle(&img, &templates, cfg.iterations, cfg.eps1, cfg.eps2);
        for j in 0..templates.len() {
            for (a, b) in s.similarity(j).iter().zip(&oracle[j]) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn dim_recovers_planted_templates_on_zero_background() {
    let mut r = common::rng(105);
    let cfg = DimConfig {
        n_extra_templates: 0,
        ..DimConfig::default()
    };
    for _ in 0..50 {
        let c = r.gen_range(1..=4);
        let (h, w) = (r.gen_range(16..=32), r.gen_range(16..=32));
        let (th, tw) = (r.gen_range(3..=8), r.gen_range(3..=8));
        let tpl = common::random_tensor(&mut r, c, th, tw, 0.0, 1.0);
        let (y, x) = (r.gen_range(0..=h - th), r.gen_range(0..=w - tw));
        let mut img = Tensor::zeros(c, h, w);
        plant(&mut img, &tpl, y, x);
        let m = match_dim(&stack(img), &stack(tpl), &cfg).unwrap();
        assert_eq!(m.best_site(), (y, x));
    }
}

#[test]
fn dim_extras_explain_away_a_distractor() {
    let mut r = common::rng(106);
    let target = common::random_tensor(&mut r, 2, 6, 6, 0.0, 1.0);
    let noise = common::random_tensor(&mut r, 2, 6, 6, 0.0, 1.0);
    // Half target, half noise: a strong rival for the target's own template.
    let distractor = Tensor::from_fn(2, 6, 6, |c, y, x| 0.5 * target.get(c, y, x) + 0.5 * noise.get(c, y, x));
    let mut img = Tensor::zeros(2, 40, 40);
    plant(&mut img, &target, 8, 24);
    plant(&mut img, &distractor, 0, 0);
    let s1 = 8 * 40 + 24;
    let s2 = 0;

    let run = |templates: Vec<Tensor>| {
        let mut s = DimState::new(&img, templates, &DimConfig::default()).unwrap();
        s.run();
        s.similarity(0).to_vec()
    };
    let alone = run(vec![target.clone()]);
    let competing = run(vec![target.clone(), img.crop(0, 0, 6, 6).unwrap()]);
    let best = competing
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > competing[b] { i } else { b });
    assert_eq!(best, s1);
    assert!(competing[s2] < competing[s1]);
    assert!(competing[s2] / competing[s1] < alone[s2] / alone[s1]);

    let via_match = match_dim(&stack(img.clone()), &stack(target), &DimConfig::default()).unwrap();
    assert_eq!(via_match.best_site(), (8, 24));
}

#[test]
fn dim_is_deterministic_across_thread_counts() {
    let mut r = common::rng(107);
    let img = common::random_tensor(&mut r, 20, 30, 28, 0.0, 1.0);
    let tpl = img.crop(5, 6, 7, 8).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| match_dim(&stack(img.clone()), &stack(tpl.clone()), &DimConfig::default()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn ncc_box_recovers_exact_copy() {
    let mut r = common::rng(108);
    for _ in 0..20 {
        let (h, w) = (r.gen_range(20..=40), r.gen_range(20..=40));
        let img = common::random_tensor(&mut r, 3, h, w, 0.0, 1.0);
        let (th, tw) = (r.gen_range(3..=9), r.gen_range(3..=9));
        let (y, x) = (r.gen_range(0..=h - th), r.gen_range(0..=w - tw));
        let truth = BoundingBox::new(x, y, tw, th).unwrap();
        let tpl = img.crop(y, x, th, tw).unwrap();
        let oracle = common::ncc_oracle(&img, &tpl);
        let m = match_ncc(&stack(img), &stack(tpl)).unwrap();
        assert_close(&m.map, &oracle, |_| 1e-6);
        assert_eq!(map_to_box(&m, truth, w, h), truth);
    }
}

#[test]
fn dim_box_recovers_planted_location() {
    let mut r = common::rng(109);
    let tpl = common::random_tensor(&mut r, 3, 7, 6, 0.0, 1.0);
    let mut img = Tensor::zeros(3, 30, 36);
    plant(&mut img, &tpl, 11, 17);
    let truth = BoundingBox::new(17, 11, 6, 7).unwrap();
    let m = match_dim(&stack(img), &stack(tpl), &DimConfig::default()).unwrap();
    assert_eq!(map_to_box(&m, truth, 36, 30), truth);
}

#[test]
fn coarse_map_is_resized_before_choosing_the_peak() {
    // 1/4 scale: a 6x6 stack for a 24x24 image, 8x8 template (2x2 in features).
    let mut m = Tensor::zeros(1, 5, 5);
    m.set(0, 2, 3, 1.0);
    let sim = SimilarityMap {
        map: m,
        polarity: Polarity::HigherIsBetter,
        scale: Scale::from_halvings(2),
        offset: (1, 1),
        canvas: (6, 6),
    };
    let b = map_to_box(&sim, BoundingBox::new(0, 0, 8, 8).unwrap(), 24, 24);
    // Canvas site (3, 4) covers pixels 12..16 x 16..20; pixels 13 and 14
    // (17 and 18) tie after resizing and the first wins.
    assert_eq!((b.x, b.y, b.w, b.h), (13, 9, 8, 8));
}
