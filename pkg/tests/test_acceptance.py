"""Acceptance suite: one test per shipped criterion.

Each test prints one ``ACCEPTANCE <n> PASS/FAIL`` line (run with ``-s`` to
see them on success). Tolerances are fixed here, not configurable.
"""

import time
from pathlib import Path

import numpy as np
from PIL import Image

from rainlens import _kernels
from rainlens.config import ProtoParams, RenderParams
from rainlens.data import corpus_dir
from rainlens.dropfield import Droplet, DropField, FieldConfig
from rainlens.images import load_mask, save_image
from rainlens.metrics import binary_seg_stats, multiclass_miou, psnr, ssim
from rainlens.pipeline import (DatasetLayout, augment_dataset,
                               compare_datasets, replay)
from rainlens.protodrop import generate_protodrop
from rainlens.render import apply_rain, composite, droplet_mask

from conftest import random_image
from oracles import (composite_ref, miou_ref, psnr_ref, seg_stats_ref,
                     ssim_ref)

REPO_ROOT = Path(__file__).resolve().parents[1]


def report(n, ok, detail):
    print(f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {n}: {detail}"


def _bytes_of(path):
    return Path(path).read_bytes()


def _pixels_of(path):
    with Image.open(path) as im:
        return np.asarray(im)


def test_criterion_1_identity_suite(tmp_path):
    """p_r = 0 is byte-exact; uncovered pixels are byte-exact for any config."""
    rng = np.random.default_rng(101)
    src = tmp_path / "in"
    src.mkdir()
    for i in range(100):
        save_image(src / f"im_{i:03d}.png", random_image(rng, 48, 64))
    t0 = time.monotonic()

    out_zero = tmp_path / "zero"
    augment_dataset(DatasetLayout(src), FieldConfig(p_r=0.0, seed=11),
                    ProtoParams(radius_px=16), out_zero)
    identical = all(
        _bytes_of(out_zero / "rainy" / p.name) == _bytes_of(p)
        for p in sorted(src.iterdir()))
    masks_empty = all(
        not load_mask(out_zero / "mask" / p.name).any()
        for p in sorted(src.iterdir()))

    out_rain = tmp_path / "rain"
    rain_cfg = FieldConfig(p_r=0.004, pixels_per_mm=4.0, seed=12)
    augment_dataset(DatasetLayout(src), rain_cfg, ProtoParams(radius_px=16),
                    out_rain)
    outside_ok = True
    for p in sorted(src.iterdir()):
        before = _pixels_of(p)
        after = _pixels_of(out_rain / "rainy" / p.name)
        mask = load_mask(out_rain / "mask" / p.name)
        outside_ok &= bool(np.array_equal(before[~mask], after[~mask]))

    elapsed = time.monotonic() - t0
    report(1, identical and masks_empty and outside_ok and elapsed < 60.0,
           f"100-image identity suite: rain-free run byte-identical "
           f"({identical}), masks empty ({masks_empty}), pixels outside "
           f"masks byte-identical under rain ({outside_ok}), "
           f"runtime {elapsed:.1f}s < 60s")


def test_criterion_2_determinism_suite(tmp_path):
    """Same seed/config twice: identical bytes; replay reproduces them."""
    rng = np.random.default_rng(202)
    src = tmp_path / "in"
    src.mkdir()
    for i in range(50):
        save_image(src / f"im_{i:03d}.png", random_image(rng, 48, 64))
    cfg = FieldConfig(p_r=0.003, pixels_per_mm=4.0, seed=42)
    proto = ProtoParams(radius_px=16)

    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    augment_dataset(DatasetLayout(src), cfg, proto, out1)
    augment_dataset(DatasetLayout(src), cfg, proto, out2)

    def tree(root):
        return {str(p.relative_to(root)): _bytes_of(p)
                for p in sorted(root.rglob("*.png"))}

    runs_equal = tree(out1) == tree(out2)

    out3 = tmp_path / "replayed"
    rep = replay(out1 / "manifest.json", out3)
    replay_equal = tree(out3) == tree(out1) and not rep["mismatches"]
    report(2, runs_equal and replay_equal,
           f"50-image determinism: two runs byte-identical ({runs_equal}), "
           f"replay byte-identical with 0 checksum mismatches ({replay_equal})")


def test_criterion_3_metric_oracle_equivalence():
    """Metrics match brute-force references on 50 random 32x32 instances."""
    rng = np.random.default_rng(303)
    worst = {"psnr": 0.0, "ssim": 0.0, "miou": 0.0}
    counts_exact = True
    for i in range(50):
        channels = 3 if i % 2 else 1
        a = random_image(rng, 32, 32, channels)
        b = random_image(rng, 32, 32, channels)
        worst["psnr"] = max(worst["psnr"], abs(psnr(a, b) - psnr_ref(a, b)))
        worst["ssim"] = max(worst["ssim"], abs(ssim(a, b) - ssim_ref(a, b)))

        pred = rng.random((32, 32)) > 0.5
        gt = rng.random((32, 32)) > 0.5
        stats = binary_seg_stats(pred, gt)
        tp, fp, fn, tn, *_ = seg_stats_ref(pred, gt)
        counts_exact &= (stats.tp, stats.fp, stats.fn, stats.tn) == (tp, fp, fn, tn)

        lp = rng.integers(0, 4, (32, 32))
        lg = rng.integers(0, 4, (32, 32))
        lg[rng.random((32, 32)) < 0.05] = 255
        worst["miou"] = max(worst["miou"], abs(
            multiclass_miou(lp, lg, 4, ignore_label=255) - miou_ref(lp, lg, 4, 255)))

    identity_worst = 0.0
    for _ in range(1000):
        pred = rng.random((16, 16)) > rng.random()
        gt = rng.random((16, 16)) > rng.random()
        s = binary_seg_stats(pred, gt)
        if s.tp + s.fp + s.fn > 0:
            identity_worst = max(identity_worst,
                                 abs(s.f1 - 2.0 * s.iou / (1.0 + s.iou)))

    ok = (worst["psnr"] < 1e-6 and worst["ssim"] < 1e-6
          and worst["miou"] < 1e-6 and counts_exact and identity_worst < 1e-12)
    report(3, ok,
           f"metric oracle equivalence on 50 instances: worst |dPSNR| "
           f"{worst['psnr']:.2e}, |dSSIM| {worst['ssim']:.2e}, |dmIOU| "
           f"{worst['miou']:.2e} (all < 1e-6), confusion counts exact "
           f"({counts_exact}), F1 = 2*IOU/(1+IOU) worst dev "
           f"{identity_worst:.2e} < 1e-12 on 1000 masks")


def test_criterion_4_slip_model_reproduction():
    """Small drops pinned; large drops slip 5 px at rate p_d with N(0,3) jitter."""
    cfg = FieldConfig(p_d=0.3, seed=404)
    small_field = DropField(cfg, (100, 10_000))
    small = Droplet(id=0, u=41.5, v=37.25, diameter_mm=4.0, sx=1.0, sy=1.0)
    small_field.droplets.append(small)
    for _ in range(1000):
        small_field.step()
    small_static = (small.u, small.v) == (41.5, 37.25)

    steps = 10_000
    field = DropField(cfg, (100, 10 * steps))
    big = Droplet(id=0, u=50.0, v=10.0, diameter_mm=5.0, sx=1.0, sy=1.0)
    field.droplets.append(big)
    us = np.empty(steps + 1)
    vs = np.empty(steps + 1)
    us[0], vs[0] = big.u, big.v
    for k in range(steps):
        field.step()
        us[k + 1], vs[k + 1] = big.u, big.v
    dx = np.diff(us)
    dy = np.diff(vs)

    slips_exact = bool(np.isin(dy, (0.0, 5.0)).all())
    freq = float((dy == 5.0).mean())
    freq_tol = 3.0 * np.sqrt(0.3 * 0.7 / steps)
    freq_ok = abs(freq - 0.3) < freq_tol
    sd = float(dx.std(ddof=1))
    sd_ok = abs(sd - 3.0) / 3.0 < 0.02

    ok = small_static and slips_exact and freq_ok and sd_ok
    report(4, ok,
           f"slip model: d<=4mm static over 1000 steps ({small_static}); "
           f"d=5mm: every slip exactly 5 px ({slips_exact}), slip frequency "
           f"{freq:.4f} within {freq_tol:.4f} of 0.3 ({freq_ok}), horizontal "
           f"sd {sd:.4f} within 2% of 3 ({sd_ok})")


def test_criterion_5_degradation_calibration(tmp_path):
    """Shipped defaults on the bundled corpus land in the target band."""
    out = tmp_path / "rainy"
    manifest = augment_dataset(DatasetLayout(corpus_dir()), FieldConfig(),
                               ProtoParams(), out, render_params=RenderParams())
    assert len(manifest["frames"]) == 20
    agg = compare_datasets(corpus_dir(), out / "rainy")["aggregate"]
    ok = 13.0 <= agg["psnr"] <= 20.0 and 0.45 <= agg["ssim"] <= 0.75
    report(5, ok,
           f"default-config degradation on the 20-image corpus: mean PSNR "
           f"{agg['psnr']:.2f} dB in [13, 20], mean SSIM {agg['ssim']:.4f} "
           f"in [0.45, 0.75]")


def test_criterion_6_composite_vs_brute_force():
    """Composite maps and masks equal direct per-pixel evaluation."""
    rng = np.random.default_rng(606)
    proto = generate_protodrop(radius_px=16, refraction_gain=40.0)
    worst = 0.0
    masks_exact = True
    for _ in range(100):
        ppmm = float(rng.choice((6.0, 8.0, 10.0)))
        n = int(rng.integers(1, 4))
        drops = [(rng.uniform(4, 60), rng.uniform(4, 60), rng.uniform(1.0, 6.0),
                  rng.uniform(0.7, 1.3), rng.uniform(0.7, 1.3))
                 for _ in range(n)]
        cfg = FieldConfig(pixels_per_mm=ppmm, metaball_threshold=0.4)
        field = DropField(cfg, (64, 64))
        for i, (u, v, dmm, sx, sy) in enumerate(drops):
            field.droplets.append(Droplet(id=i, u=u, v=v, diameter_mm=dmm,
                                          sx=sx, sy=sy))
        comp = composite(field, proto, (64, 64))
        r_ref, g_ref, b_ref, a_ref = composite_ref(drops, proto, (64, 64),
                                                   ppmm, 0.4)
        worst = max(worst,
                    float(np.abs(comp.r - r_ref).max()),
                    float(np.abs(comp.g - g_ref).max()),
                    float(np.abs(comp.b - b_ref).max()),
                    float(np.abs(comp.alpha - a_ref).max()))
        masks_exact &= bool(np.array_equal(droplet_mask(comp), a_ref > 0))

    ok = worst < 1e-6 and masks_exact
    report(6, ok,
           f"composite vs brute force over 100 random <=3-droplet 64x64 "
           f"configurations: worst channel deviation {worst:.2e} < 1e-6, "
           f"masks pixel-exact ({masks_exact})")


def test_criterion_7_sustained_throughput():
    """At least 10 fps at 1280x960 with up to 200 droplets, 100 frames."""
    w, h = 1280, 960
    img = np.random.default_rng(707).random((h, w, 3))
    cfg = FieldConfig(p_r=1.0, max_drops=200, p_d=0.3, seed=7,
                      diameter_range_mm=(4.5, 8.0), spawn_every_frame=True)
    proto = generate_protodrop()
    field = DropField(cfg, (w, h))
    field.spawn()
    comp = composite(field, proto, (w, h))
    apply_rain(img, comp)  # warmup

    frames = 100
    max_drops_seen = 0
    t0 = time.perf_counter()
    for _ in range(frames):
        field.step()
        max_drops_seen = max(max_drops_seen, len(field))
        comp = composite(field, proto, (w, h))
        apply_rain(img, comp)
    fps = frames / (time.perf_counter() - t0)
    ok = fps >= 10.0 and max_drops_seen <= 200
    report(7, ok,
           f"throughput: {fps:.1f} fps >= 10 fps over {frames} frames at "
           f"{w}x{h} with {max_drops_seen} active droplets "
           f"({_kernels.backend_name()} kernels, single core)")


def test_criterion_8_non_reproducibility_note():
    """Learned-model table scores are documented as out of scope."""
    readme = (REPO_ROOT / "README.md").read_text()
    has_note = ("NOT reproduced" in readme
                and "trained networks" in readme
                and "31.5" in readme
                and "mIOU" in readme)
    report(8, has_note,
           "scope note present: segmentation-network tables and learned "
           "de-raining reconstruction scores require trained networks and "
           "source datasets, are NOT reproduced, and only their metric "
           "computations ship here (verified by criterion 3)")
