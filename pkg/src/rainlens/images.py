"""8-bit raster I/O and the normalized float image convention.

Images are numpy float64 arrays with values in [0, 1], shaped (H, W) for
single-channel data or (H, W, 3) for color. Byte data maps to floats as
value = byte / 255, and back as byte = rint(value * 255), which makes a
load/save round trip byte-exact.

Binary masks are stored as 8-bit PNGs with values {0, 255}.
"""

import numpy as np
from PIL import Image

from .errors import DimensionMismatchError, FormatError, ParameterError


def from_bytes(data):
    """Normalize a uint8 array to float64 in [0, 1]."""
    return np.asarray(data, dtype=np.float64) / 255.0


def to_bytes(img):
    """Quantize a [0, 1] float image to uint8 (round to nearest)."""
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def load_image(path):
    """Load a PNG (or any Pillow-readable raster) as a normalized float image.

    Grayscale files come back (H, W); everything else is converted to RGB
    (H, W, 3). Raises FormatError if the file cannot be decoded.
    """
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                return from_bytes(np.asarray(im))
            if im.mode == "I;16":
                return np.asarray(im, dtype=np.float64) / 65535.0
            return from_bytes(np.asarray(im.convert("RGB")))
    except FormatError:
        raise
    except Exception as exc:
        raise FormatError(f"cannot decode image {path}: {exc}") from exc


def save_image(path, img):
    """Write a normalized float image as an 8-bit PNG (L or RGB)."""
    arr = to_bytes(img)
    if arr.ndim == 2:
        Image.fromarray(arr, mode="L").save(path, format="PNG")
    elif arr.ndim == 3 and arr.shape[2] == 3:
        Image.fromarray(arr, mode="RGB").save(path, format="PNG")
    else:
        raise ParameterError(f"expected (H, W) or (H, W, 3) image, got shape {arr.shape}")


def load_mask(path):
    """Load a binary mask PNG as a boolean array (nonzero means covered)."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L")) > 0


def save_mask(path, mask):
    """Write a boolean mask as an 8-bit PNG with values {0, 255}."""
    arr = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def check_same_shape(a, b, what="images"):
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{what} differ in shape: {a.shape} vs {b.shape}")


def as_channels_3d(img):
    """View an image as (H, W, C) without copying; C is 1 or 3."""
    if img.ndim == 2:
        return img[:, :, np.newaxis]
    if img.ndim == 3 and img.shape[2] in (1, 3):
        return img
    raise ParameterError(f"expected 1- or 3-channel image, got shape {img.shape}")
