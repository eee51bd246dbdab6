use std::fs;
use std::path::{Path, PathBuf};

use shapematch::tensor::Tensor;
use shapematch::vgg::{forward, golden, layer_scale, load_bundle, Manifest};
use shapematch::{Error, Scale};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/vgg-micro")
}

fn copy_fixture(dst: &Path) {
    for entry in fs::read_dir(fixture()).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() {
            fs::copy(&p, dst.join(p.file_name().unwrap())).unwrap();
        }
    }
}

fn max_abs_diff(a: &Tensor, b: &Tensor) -> f32 {
    assert_eq!(a.shape(), b.shape());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f32::max)
}

#[test]
fn micro_bundle_loads_with_sixteen_convs() {
    let b = load_bundle(fixture()).unwrap();
    assert_eq!(b.name(), "vgg-micro");
    assert_eq!(b.conv_layers().count(), 16);
    assert_eq!(layer_scale(&b, "conv1_1").unwrap(), Scale::ONE);
    assert_eq!(layer_scale(&b, "conv3_4").unwrap(), Scale::from_halvings(2));
    assert_eq!(layer_scale(&b, "conv5_1").unwrap(), Scale::from_halvings(4));
    assert!(matches!(layer_scale(&b, "pool1"), Err(Error::Argument(_))));
    assert!(matches!(layer_scale(&b, "conv9_9"), Err(Error::Argument(_))));
    assert_eq!(b.checksum().len(), 64);
}

#[test]
fn forward_matches_goldens() {
    let b = load_bundle(fixture()).unwrap();
    for dir in ["goldens", "goldens-odd"] {
        let set = golden::load_golden_dir(fixture().join(dir)).unwrap();
        assert_eq!(set.goldens.len(), 16);
        let names: Vec<&str> = set.goldens.iter().map(|g| g.meta.layer.as_str()).collect();
        let taps = forward(&b, &set.input, &names).unwrap();
        for g in &set.goldens {
            let tap = taps.iter().find(|t| t.name == g.meta.layer).unwrap();
            let err = max_abs_diff(&tap.pre_relu, &g.activation);
            assert!(err <= 1e-5, "{dir}/{}: max abs diff {err}", g.meta.layer);
        }
    }
}

#[test]
fn tap_invariants() {
    let b = load_bundle(fixture()).unwrap();
    let set = golden::load_golden_dir(fixture().join("goldens-odd")).unwrap();
    let (_, h, w) = set.input.shape();
    let names = shapematch::vgg::vgg19_conv_names();
    let taps = forward(&b, &set.input, &names).unwrap();
    assert_eq!(taps.len(), 16);
    for t in &taps {
        assert!(t.post_relu.data().iter().all(|&v| v >= 0.0));
        assert_eq!(t.post_relu, t.pre_relu.map(|v| v.max(0.0)));
        assert_eq!(t.pre_relu.height(), t.scale.apply_to_len(h), "{}", t.name);
        assert_eq!(t.pre_relu.width(), t.scale.apply_to_len(w), "{}", t.name);
    }
    assert!(taps[0].pre_relu.data().iter().any(|&v| v < 0.0));
    let again = forward(&b, &set.input, &names).unwrap();
    assert_eq!(taps, again);
}

#[test]
fn forward_stops_at_requested_taps_and_rejects_unknown() {
    let b = load_bundle(fixture()).unwrap();
    let img = Tensor::filled(3, 16, 16, 0.5);
    let taps = forward(&b, &img, &["conv3_4", "conv1_2"]).unwrap();
    let names: Vec<&str> = taps.iter().map(|t| t.name.as_str()).collect();
    assert_eq!(names, ["conv1_2", "conv3_4"]);
    assert_eq!(taps[1].pre_relu.shape(), (8, 4, 4));
    assert!(matches!(forward(&b, &img, &["fc6"]), Err(Error::Argument(_))));
    assert!(matches!(
        forward(&b, &Tensor::zeros(1, 8, 8), &["conv1_1"]),
        Err(Error::Dimension(_))
    ));
}

fn edit_manifest(dir: &Path, f: impl FnOnce(&mut Manifest)) {
    let path = dir.join("manifest.json");
    let mut m: Manifest = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    f(&mut m);
    fs::write(&path, serde_json::to_vec_pretty(&m).unwrap()).unwrap();
}

#[test]
fn channel_chain_violation_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    copy_fixture(tmp.path());
    edit_manifest(tmp.path(), |m| {
        let l = m.layers.iter_mut().find(|l| l.name == "conv2_1").unwrap();
        l.in_channels = Some(5);
    });
    let err = load_bundle(tmp.path()).unwrap_err();
    assert!(matches!(err, Error::Load { .. }));
    assert!(err.to_string().contains("conv2_1"), "{err}");
}

#[test]
fn truncated_weight_file_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    copy_fixture(tmp.path());
    let wf = tmp.path().join("conv3_2.weight.bin");
    let bytes = fs::read(&wf).unwrap();
    fs::write(&wf, &bytes[..bytes.len() - 7]).unwrap();
    let err = load_bundle(tmp.path()).unwrap_err();
    assert!(err.to_string().contains("conv3_2.weight.bin"), "{err}");
}

#[test]
fn checksum_mismatch_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    copy_fixture(tmp.path());
    let bf = tmp.path().join("conv1_1.bias.bin");
    let mut bytes = fs::read(&bf).unwrap();
    bytes[0] ^= 0x01;
    fs::write(&bf, &bytes).unwrap();
    let err = load_bundle(tmp.path()).unwrap_err();
    assert!(err.to_string().contains("checksum"), "{err}");
}

#[test]
fn non_vgg_topology_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    copy_fixture(tmp.path());
    edit_manifest(tmp.path(), |m| {
        m.layers.retain(|l| l.name != "conv3_4");
    });
    let err = load_bundle(tmp.path()).unwrap_err();
    assert!(err.to_string().contains("VGG19"), "{err}");

    let missing = tmp.path().join("nowhere");
    assert!(matches!(load_bundle(&missing), Err(Error::Io { .. })));
}
