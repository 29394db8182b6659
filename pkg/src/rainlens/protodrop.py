"""Canonical droplet lookup texture.

A droplet sitting on the virtual pane is modelled as a spherical cap of
footprint radius ``radius_px`` and apex height ``cap_ratio * radius_px``.
Its surface tilt, scaled by ``refraction_gain``, gives per-pixel refraction
offsets; together with normalized thickness and a coverage mask they form a
four-channel lookup texture that gets warped onto every droplet instance at
render time.

Channel semantics:

* ``r_chan`` / ``g_chan``: signed horizontal / vertical refraction offset in
  pixels per unit thickness. A point under the droplet at (u, v) samples the
  background at (u + R * B, v + G * B).
* ``b_chan``: thickness, normalized so the apex is 1.0.
* ``alpha``: coverage, 1 inside the cap footprint and 0 outside. Outside the
  footprint every other channel is exactly zero, so empty texture regions
  sample the background unmoved.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _png16
from .errors import FormatError, ParameterError

# Surface tilt |n_x / n_z| is clipped here. Only relevant for cap_ratio
# close to 1, where the rim of the cap approaches vertical and the offset
# would otherwise blow up the quantization range.
SLOPE_CAP = 10.0

FORMAT_NAME = "rainlens-protodrop"
FORMAT_VERSION = 1


@dataclass
class ProtoDropTexture:
    """Four-channel droplet lookup texture plus its generation parameters."""

    width: int
    height: int
    r_chan: np.ndarray
    g_chan: np.ndarray
    b_chan: np.ndarray
    alpha: np.ndarray
    radius_px: float
    cap_ratio: float
    refraction_gain: float

    def channels(self):
        return self.r_chan, self.g_chan, self.b_chan, self.alpha


def generate_protodrop(radius_px=64, cap_ratio=0.6, refraction_gain=600.0,
                       resolution=None):
    """Generate the canonical droplet texture from the spherical-cap model.

    radius_px
        Footprint radius of the cap in texture pixels.
    cap_ratio
        Apex height divided by footprint radius, in (0, 1]. 1 is a
        hemisphere.
    refraction_gain
        Offset magnitude in pixels per unit thickness per unit tilt.
    resolution
        Texture side length; defaults to 2 * ceil(radius_px) + 1 so a pixel
        sits exactly on the apex. Must be at least 2 * radius_px.
    """
    if radius_px <= 0:
        raise ParameterError(f"radius_px must be positive, got {radius_px}")
    if not 0.0 < cap_ratio <= 1.0:
        raise ParameterError(f"cap_ratio must be in (0, 1], got {cap_ratio}")
    if resolution is None:
        resolution = 2 * math.ceil(radius_px) + 1
    resolution = int(resolution)
    if resolution < 2 * radius_px:
        raise ParameterError(
            f"resolution {resolution} too small for radius_px {radius_px} "
            f"(need at least {2 * radius_px})")

    a = float(radius_px)
    h0 = cap_ratio * a
    # Sphere radius through the footprint circle at the given apex height.
    r_sphere = (a * a + h0 * h0) / (2.0 * h0)

    coords = np.arange(resolution, dtype=np.float64) - (resolution - 1) / 2.0
    x = coords[np.newaxis, :]
    y = coords[:, np.newaxis]
    rho2 = x * x + y * y
    inside = rho2 <= a * a

    s = np.sqrt(np.maximum(r_sphere * r_sphere - rho2, 1e-300))
    height = np.maximum(s - (r_sphere - h0), 0.0)
    b_chan = np.where(inside, height / h0, 0.0)

    tilt_x = np.clip(x / s, -SLOPE_CAP, SLOPE_CAP)
    tilt_y = np.clip(y / s, -SLOPE_CAP, SLOPE_CAP)
    r_chan = np.where(inside, refraction_gain * tilt_x, 0.0)
    g_chan = np.where(inside, refraction_gain * tilt_y, 0.0)
    alpha = inside.astype(np.float64)

    return ProtoDropTexture(
        width=resolution, height=resolution,
        r_chan=r_chan, g_chan=g_chan, b_chan=b_chan, alpha=alpha,
        radius_px=a, cap_ratio=float(cap_ratio),
        refraction_gain=float(refraction_gain))


def _sidecar_path(path):
    return Path(str(path) + ".json")


def save_texture(tex, path):
    """Write a texture as a 16-bit RGBA PNG plus a JSON metadata sidecar.

    Offset channels are stored midpoint-as-zero: code 32768 is offset 0 and
    the full range spans +-offset_scale (recorded in the sidecar). Thickness
    and coverage map [0, 1] onto the full 16-bit range.
    """
    off_scale = float(max(np.abs(tex.r_chan).max(), np.abs(tex.g_chan).max()))
    if off_scale == 0.0:
        off_scale = 1.0
    rgba = np.empty((tex.height, tex.width, 4), dtype=np.uint16)
    rgba[:, :, 0] = _encode_offset(tex.r_chan, off_scale)
    rgba[:, :, 1] = _encode_offset(tex.g_chan, off_scale)
    rgba[:, :, 2] = _encode_unit(tex.b_chan)
    rgba[:, :, 3] = _encode_unit(tex.alpha)
    _png16.write_rgba16(path, rgba)

    meta = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "radius_px": tex.radius_px,
        "cap_ratio": tex.cap_ratio,
        "refraction_gain": tex.refraction_gain,
        "resolution": tex.width,
        "offset_scale": off_scale,
    }
    with open(_sidecar_path(path), "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")


def load_texture(path):
    """Load a texture written by save_texture (PNG plus sidecar)."""
    sidecar = _sidecar_path(path)
    if not sidecar.exists():
        raise FormatError(f"missing texture sidecar {sidecar}")
    with open(sidecar) as f:
        meta = json.load(f)
    if meta.get("format") != FORMAT_NAME:
        raise FormatError(f"{sidecar}: not a {FORMAT_NAME} sidecar")
    if meta.get("version") != FORMAT_VERSION:
        raise FormatError(f"{sidecar}: unsupported version {meta.get('version')}")

    rgba = _png16.read_rgba16(path)
    off_scale = float(meta["offset_scale"])
    return ProtoDropTexture(
        width=rgba.shape[1], height=rgba.shape[0],
        r_chan=_decode_offset(rgba[:, :, 0], off_scale),
        g_chan=_decode_offset(rgba[:, :, 1], off_scale),
        b_chan=_decode_unit(rgba[:, :, 2]),
        alpha=_decode_unit(rgba[:, :, 3]),
        radius_px=float(meta["radius_px"]),
        cap_ratio=float(meta["cap_ratio"]),
        refraction_gain=float(meta["refraction_gain"]))


def _encode_offset(chan, scale):
    codes = np.rint(32768.0 + chan / scale * 32767.0)
    return np.clip(codes, 0, 65535).astype(np.uint16)


def _decode_offset(codes, scale):
    return (codes.astype(np.float64) - 32768.0) / 32767.0 * scale


def _encode_unit(chan):
    return np.rint(np.clip(chan, 0.0, 1.0) * 65535.0).astype(np.uint16)


def _decode_unit(codes):
    return codes.astype(np.float64) / 65535.0
