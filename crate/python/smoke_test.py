"""Smoke test for the tactsim extension module.

Build and install first:  maturin build --release && pip install target/wheels/tactsim-*.whl
Run:                       python python/smoke_test.py
"""

import json
import math
import os
import tempfile

import numpy as np

import tactsim

SCENE = {
    "camera": {
        "projection": {"type": "orthographic", "pixel_size": 3e-5},
        "width": 160,
        "height": 120,
    },
    "press_depth": 0.001,
    "primitives": [{"shape": {"type": "sphere", "radius": 0.003}}],
}


def as_array(img):
    return np.frombuffer(img.to_bytes(), dtype=np.uint8).reshape(img.height, img.width, 3)


def main():
    depth = tactsim.render_depth(json.dumps(SCENE))
    assert (depth.width, depth.height) == (160, 120)
    d = np.array(depth.to_list()).reshape(120, 160)
    assert math.isclose(d.min(), 0.03 - 0.001, abs_tol=1e-6), d.min()

    img = tactsim.render(depth)
    arr = as_array(img)
    assert arr.shape == (120, 160, 3)
    flat = tactsim.render(tactsim.DepthMap.filled(160, 120, 0.05))
    assert (as_array(flat) == as_array(flat)[0, 0]).all()
    assert not (arr == as_array(flat)).all()

    ssim, psnr, mae = tactsim.compare(img, img)
    assert ssim == 1.0 and math.isinf(psnr) and mae == 0.0
    legacy = tactsim.render(depth, variant="legacy")
    assert tactsim.compare(img, legacy)[0] < 1.0

    pipe = tactsim.Pipeline(tactsim.baseline_config())
    assert pipe.render(depth) == img
    h = np.array(pipe.heightmap(depth)).reshape(120, 160)
    assert h.min() < 0.0 < h.max()

    a = tactsim.perturb(depth, seed=3, draw_index=0)
    b = tactsim.perturb(depth, seed=3, draw_index=0)
    c = tactsim.perturb(depth, seed=3, draw_index=1)
    assert a == b and a != c

    scale, (tx, ty) = tactsim.constrained_affine([10, 20], [60, 20], [25, 44], [125, 44])
    assert math.isclose(scale, 2.0) and math.isclose(tx, 5.0) and math.isclose(ty, 4.0)
    wa, wb = tactsim.align(img, img, 1.0, (10.0, 0.0))
    assert (wa.width, wa.height) == (wb.width, wb.height) == (150, 120)

    with tempfile.TemporaryDirectory() as tmp:
        dpath, ipath = os.path.join(tmp, "d.pfm"), os.path.join(tmp, "i.png")
        depth.save(dpath)
        img.save(ipath)
        back = np.array(tactsim.DepthMap.load(dpath).to_list())
        assert np.abs(back - np.array(depth.to_list())).max() < 1e-8
        assert tactsim.TactileImage.load(ipath) == img

    try:
        tactsim.render(depth, variant="blur")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown variant accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
