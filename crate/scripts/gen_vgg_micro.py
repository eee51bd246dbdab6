#!/usr/bin/env python3
"""Generate the deterministic vgg-micro weight bundle and its golden activations.

The bundle has the VGG19 conv topology (16 conv layers, 4 pools) with 4-8
channels per block. Goldens are computed by the straightforward float64 numpy
forward pass below, independently of the Rust implementation.

Usage: python3 scripts/gen_vgg_micro.py crates/core/tests/fixtures/vgg-micro
"""

import hashlib
import json
import os
import sys

import numpy as np

SEED = 20240611
BLOCKS = [(2, 4), (2, 6), (4, 8), (4, 8), (4, 8)]
MEAN = [0.485, 0.456, 0.406]
STD = [0.229, 0.224, 0.225]


def layer_names():
    names = []
    for b, (n, _) in enumerate(BLOCKS, start=1):
        names += [f"conv{b}_{i}" for i in range(1, n + 1)]
        if b < len(BLOCKS):
            names.append(f"pool{b}")
    return names


def conv3x3(x, w, b):
    c, h, wd = x.shape
    p = np.zeros((c, h + 2, wd + 2))
    p[:, 1:-1, 1:-1] = x
    out = np.zeros((w.shape[0], h, wd))
    for o in range(w.shape[0]):
        acc = np.full((h, wd), float(b[o]))
        for i in range(c):
            for dy in range(3):
                for dx in range(3):
                    acc += float(w[o, i, dy, dx]) * p[i, dy:dy + h, dx:dx + wd]
        out[o] = acc
    return out


def pool2(x):
    c, h, w = x.shape
    if h % 2:
        x = np.concatenate([x, x[:, -1:, :]], axis=1)
    if w % 2:
        x = np.concatenate([x, x[:, :, -1:]], axis=2)
    c, h, w = x.shape
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def write_f32(path, arr):
    data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(data)
    return data


def main(out_dir):
    rng = np.random.default_rng(SEED)
    os.makedirs(out_dir, exist_ok=True)
    layers = []
    params = {}
    in_ch = 3
    block_of = {}
    for b, (n, width) in enumerate(BLOCKS, start=1):
        for i in range(1, n + 1):
            block_of[f"conv{b}_{i}"] = width
    for name in layer_names():
        if name.startswith("pool"):
            layers.append({"name": name, "kind": "pool"})
            continue
        out_ch = block_of[name]
        w = (rng.standard_normal((out_ch, in_ch, 3, 3)) * np.sqrt(2.0 / (9 * in_ch))).astype("<f4")
        b = (rng.standard_normal(out_ch) * 0.05).astype("<f4")
        wf, bf = f"{name}.weight.bin", f"{name}.bias.bin"
        digest = hashlib.sha256(write_f32(os.path.join(out_dir, wf), w) + write_f32(os.path.join(out_dir, bf), b))
        layers.append({
            "name": name,
            "kind": "conv",
            "in_channels": in_ch,
            "out_channels": out_ch,
            "weight_file": wf,
            "bias_file": bf,
            "sha256": digest.hexdigest(),
        })
        params[name] = (w, b)
        in_ch = out_ch

    manifest = {"name": "vgg-micro", "preprocess": {"mean": MEAN, "std": STD}, "layers": layers}
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")

    for sub, shape in [("goldens", (3, 16, 16)), ("goldens-odd", (3, 13, 11))]:
        image = rng.random(shape).astype("<f4")
        emit_goldens(os.path.join(out_dir, sub), image, params)


def emit_goldens(gdir, image, params):
    os.makedirs(gdir, exist_ok=True)
    input_sha = hashlib.sha256(write_f32(os.path.join(gdir, "input.bin"), image)).hexdigest()
    with open(os.path.join(gdir, "input.json"), "w", encoding="utf-8") as f:
        json.dump({"shape": list(image.shape), "sha256": input_sha}, f)
        f.write("\n")
    x = image.astype(np.float64)
    mean = np.array(MEAN, dtype=np.float32).astype(np.float64)[:, None, None]
    std = np.array(STD, dtype=np.float32).astype(np.float64)[:, None, None]
    x = (x - mean) / std
    for name in layer_names():
        if name.startswith("pool"):
            x = pool2(x)
            continue
        w, b = params[name]
        pre = conv3x3(x, w, b)
        write_f32(os.path.join(gdir, f"{name}.bin"), pre)
        with open(os.path.join(gdir, f"{name}.json"), "w", encoding="utf-8") as f:
            json.dump({"layer": name, "shape": list(pre.shape), "input_sha256": input_sha}, f)
            f.write("\n")
        x = np.maximum(pre, 0.0)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures/vgg-micro")
