#!/usr/bin/env python3
"""Regenerate the bundled clean calibration corpus.

Twenty deterministic 480x360 synthetic scenes: sky/ground gradients,
geometric structures, stripe patterns standing in for road markings, and
mild texture noise. The corpus ships with the package so the degradation
calibration check runs without external datasets. Output is stable for a
fixed seed; the PNGs are committed, this script only exists to regenerate
them.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from rainlens.images import save_image, to_bytes, from_bytes  # noqa: E402

WIDTH, HEIGHT = 480, 360
COUNT = 20
SEED = 1203


def value_noise(rng, cell, amplitude):
    """Bilinearly upsampled random grid: cheap mid-frequency texture."""
    gh = HEIGHT // cell + 2
    gw = WIDTH // cell + 2
    grid = rng.uniform(-1.0, 1.0, (gh, gw))
    yy, xx = np.mgrid[0:HEIGHT, 0:WIDTH].astype(np.float64)
    gx = xx / cell
    gy = yy / cell
    x0 = gx.astype(int)
    y0 = gy.astype(int)
    fx = gx - x0
    fy = gy - y0
    vals = ((1 - fy) * ((1 - fx) * grid[y0, x0] + fx * grid[y0, x0 + 1])
            + fy * ((1 - fx) * grid[y0 + 1, x0] + fx * grid[y0 + 1, x0 + 1]))
    return amplitude * vals


def make_scene(rng):
    yy, xx = np.mgrid[0:HEIGHT, 0:WIDTH].astype(np.float64)
    u = xx / (WIDTH - 1)
    v = yy / (HEIGHT - 1)

    horizon = rng.uniform(0.35, 0.55)
    sky_top = rng.uniform(0.55, 0.95, 3)
    sky_bot = rng.uniform(0.45, 0.8, 3)
    ground_top = rng.uniform(0.25, 0.5, 3)
    ground_bot = rng.uniform(0.05, 0.3, 3)

    img = np.zeros((HEIGHT, WIDTH, 3))
    sky = v < horizon
    t_sky = (v / horizon)[:, :, None]
    t_gnd = ((v - horizon) / (1 - horizon))[:, :, None]
    img += np.where(sky[:, :, None],
                    sky_top + (sky_bot - sky_top) * t_sky,
                    ground_top + (ground_bot - ground_top) * t_gnd)

    # Blocky structures above the horizon.
    for _ in range(rng.integers(3, 8)):
        bw = rng.uniform(0.05, 0.2) * WIDTH
        bh = rng.uniform(0.1, 0.4) * horizon * HEIGHT
        bx = rng.uniform(0, WIDTH - bw)
        by = horizon * HEIGHT - bh
        color = rng.uniform(0.1, 0.7, 3)
        block = (xx >= bx) & (xx < bx + bw) & (yy >= by) & (yy < horizon * HEIGHT)
        img[block] = color

    # Bright dashed stripes below the horizon, converging toward the center.
    vanish_x = rng.uniform(0.3, 0.7) * WIDTH
    for lane in range(rng.integers(2, 5)):
        base_x = rng.uniform(0.05, 0.95) * WIDTH
        t = (v - horizon) / (1 - horizon)
        center = vanish_x + (base_x - vanish_x) * np.clip(t, 0, 1)
        width = 1.0 + 6.0 * np.clip(t, 0, 1)
        stripe = (np.abs(xx - center) < width) & (v >= horizon)
        dash = (yy // rng.integers(12, 30)) % 2 == 0
        img[stripe & dash] = rng.uniform(0.85, 1.0)

    # Circles anywhere (signs, lights).
    for _ in range(rng.integers(2, 6)):
        cx, cy = rng.uniform(0, WIDTH), rng.uniform(0, HEIGHT)
        rad = rng.uniform(0.02, 0.08) * WIDTH
        disk = (xx - cx) ** 2 + (yy - cy) ** 2 < rad ** 2
        img[disk] = rng.uniform(0.0, 1.0, 3)

    # Mid-frequency texture at several scales (facades, foliage, asphalt)
    # plus fine grain; street scenes decorrelate within tens of pixels and
    # the corpus should too.
    texture = (value_noise(rng, 24, 0.10) + value_noise(rng, 9, 0.08)
               + value_noise(rng, 4, 0.05))
    img += texture[:, :, None] * rng.uniform(0.6, 1.0, 3)
    img += rng.normal(0.0, 0.02, img.shape)
    img = np.clip(img, 0.0, 1.0)
    # Snap to the 8-bit grid so saved files round-trip exactly.
    return from_bytes(to_bytes(img))


def main():
    out_dir = Path(__file__).resolve().parents[1] / "src" / "rainlens" / "data" / "corpus"
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    for i in range(COUNT):
        path = out_dir / f"scene_{i:02d}.png"
        save_image(path, make_scene(rng))
        print(path)


if __name__ == "__main__":
    main()
