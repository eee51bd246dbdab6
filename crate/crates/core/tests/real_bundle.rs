use shapematch::vgg::{forward, golden, load_bundle};

/// Runs only when `SHAPEMATCH_VGG19_BUNDLE` names an exported bundle and
/// `SHAPEMATCH_VGG19_GOLDENS` its golden directory.
#[test]
fn exported_bundle_matches_exporter_goldens() {
    let (Ok(bundle_dir), Ok(golden_dir)) = (
        std::env::var("SHAPEMATCH_VGG19_BUNDLE"),
        std::env::var("SHAPEMATCH_VGG19_GOLDENS"),
    ) else {
        eprintln!("skipped: SHAPEMATCH_VGG19_BUNDLE / SHAPEMATCH_VGG19_GOLDENS not set");
        return;
    };
    let bundle = load_bundle(&bundle_dir).unwrap();
    assert_eq!(bundle.conv_layers().count(), 16);
    let widths: Vec<usize> = bundle.conv_layers().map(|l| l.def.out_channels).collect();
    assert_eq!(widths, [64, 64, 128, 128, 256, 256, 256, 256, 512, 512, 512, 512, 512, 512, 512, 512]);
    let set = golden::load_golden_dir(&golden_dir).unwrap();
    let names: Vec<&str> = set.goldens.iter().map(|g| g.meta.layer.as_str()).collect();
    let taps = forward(&bundle, &set.input, &names).unwrap();
    for g in &set.goldens {
        let tap = taps.iter().find(|t| t.name == g.meta.layer).unwrap();
        assert_eq!(tap.pre_relu.shape(), g.activation.shape());
        let err = tap
            .pre_relu
            .data()
            .iter()
            .zip(g.activation.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max);
        assert!(err <= 1e-4, "{}: max abs diff {err}", g.meta.layer);
    }
}
