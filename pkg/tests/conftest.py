import numpy as np
import pytest

from rainlens.images import save_image


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_image(rng, height, width, channels=3):
    """Random float image in [0, 1] quantized to the 8-bit grid, so a PNG
    round trip is exact."""
    img = rng.integers(0, 256, size=(height, width, channels)).astype(np.float64)
    img /= 255.0
    if channels == 1:
        img = img[:, :, 0]
    return img


def structured_image(rng, height, width):
    """Image with gradients, shapes, and texture; closer to a street scene
    than white noise for calibration purposes."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    base = 0.25 + 0.5 * xx / max(width - 1, 1)
    img = np.stack([base, 0.8 - 0.4 * yy / max(height - 1, 1), base * 0.7], axis=2)
    for _ in range(6):
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        rad = rng.uniform(0.05, 0.25) * min(width, height)
        blob = ((xx - cx) ** 2 + (yy - cy) ** 2) < rad ** 2
        img[blob] = rng.uniform(0, 1, 3)
    img += rng.normal(0, 0.03, img.shape)
    return np.clip(img, 0.0, 1.0)


def write_image_tree(root, count, rng, height=48, width=64, channels=3, prefix="img"):
    """Write `count` random PNGs under root; returns their paths."""
    root.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        path = root / f"{prefix}_{i:03d}.png"
        save_image(path, random_image(rng, height, width, channels))
        paths.append(path)
    return paths
