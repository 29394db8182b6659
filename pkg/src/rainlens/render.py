"""Composite map assembly and image distortion.

``composite`` flattens the droplet field into one full-image lookup map:
every droplet stamps a warped copy of the proto texture, the metaball field
decides the merged coverage, and offsets are combined field-weighted while
thickness adds up (clamped to 1). ``apply_rain`` then samples the image
through that map: a pixel under a droplet at (u, v) shows the background at
(u + R * B, v + G * B), bilinearly interpolated with clamp-to-edge, blended
over the input by the coverage alpha. Pixels with zero coverage pass
through bit-exact.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from . import _kernels
from .dropfield import KERNEL_REACH
from .errors import DimensionMismatchError, ParameterError
from .images import as_channels_3d

# Optional attenuation ring at the droplet rim.
RIM_WIDTH = 0.1       # fraction of the footprint radius
RIM_STRENGTH = 0.6    # multiplicative intensity factor inside the ring


@dataclass
class CompositeMap:
    """Full-image droplet lookup map matching one target image."""

    width: int
    height: int
    r: np.ndarray       # horizontal offset, pixels per unit thickness
    g: np.ndarray       # vertical offset, pixels per unit thickness
    b: np.ndarray       # thickness in [0, 1]
    alpha: np.ndarray   # coverage in [0, 1]
    rim: Optional[np.ndarray] = None  # attenuation map, None when disabled

    @classmethod
    def empty(cls, dims):
        w, h = dims
        zeros = lambda: np.zeros((h, w), dtype=np.float64)
        return cls(width=int(w), height=int(h),
                   r=zeros(), g=zeros(), b=zeros(), alpha=zeros())


def composite(field, proto, dims, rim_darkening=False,
              rim_width=RIM_WIDTH, rim_strength=RIM_STRENGTH):
    """Assemble the full-image composite map from a droplet field.

    Every droplet resamples the proto texture bilinearly onto its scaled
    footprint; offsets are rescaled per axis by footprint / proto radius so
    displacement grows with droplet size. Where blobs merge, offsets are the
    field-weighted average of the contributions and thicknesses sum, clamped
    to 1. Coverage alpha is 1 where the metaball field reaches the
    threshold, falling to 0 across a one-pixel smoothstep edge; its support
    equals the thresholded field exactly.
    """
    w, h = dims
    if w < 2 or h < 2:
        raise ParameterError(f"dims must be at least 2x2, got {dims}")
    comp = CompositeMap.empty(dims)
    if not field.droplets:
        return comp

    acc_f = np.zeros((h, w), dtype=np.float64)
    acc_wr = np.zeros((h, w), dtype=np.float64)
    acc_wg = np.zeros((h, w), dtype=np.float64)
    acc_b = np.zeros((h, w), dtype=np.float64)

    tex_r = np.ascontiguousarray(proto.r_chan, dtype=np.float64)
    tex_g = np.ascontiguousarray(proto.g_chan, dtype=np.float64)
    tex_b = np.ascontiguousarray(proto.b_chan, dtype=np.float64)
    ppmm = field.config.pixels_per_mm

    for d in field.droplets:
        ax, ay = d.semi_axes(ppmm)
        _kernels.splat_drop(
            acc_f, acc_wr, acc_wg, acc_b, tex_r, tex_g, tex_b,
            d.u, d.v, ax, ay, proto.radius_px,
            ax / proto.radius_px, ay / proto.radius_px, KERNEL_REACH)

    _kernels.finalize_composite(acc_f, acc_wr, acc_wg, acc_b,
                                field.config.metaball_threshold,
                                comp.r, comp.g, comp.b, comp.alpha)

    if rim_darkening:
        comp.rim = _rim_map(field, dims, rim_width, rim_strength)
    return comp


def _rim_map(field, dims, rim_width, rim_strength):
    """Multiplicative attenuation ring around each droplet footprint."""
    w, h = dims
    rim = np.ones((h, w), dtype=np.float64)
    ppmm = field.config.pixels_per_mm
    for d in field.droplets:
        ax, ay = d.semi_axes(ppmm)
        x_lo = max(int(np.ceil(d.u - ax)), 0)
        x_hi = min(int(np.floor(d.u + ax)), w - 1)
        y_lo = max(int(np.ceil(d.v - ay)), 0)
        y_hi = min(int(np.floor(d.v + ay)), h - 1)
        if x_lo > x_hi or y_lo > y_hi:
            continue
        nx = (np.arange(x_lo, x_hi + 1) - d.u) / ax
        ny = (np.arange(y_lo, y_hi + 1) - d.v) / ay
        rho = np.sqrt(ny[:, None] ** 2 + nx[None, :] ** 2)
        ring = (rho >= 1.0 - rim_width) & (rho <= 1.0)
        sl = (slice(y_lo, y_hi + 1), slice(x_lo, x_hi + 1))
        rim[sl] = np.where(ring, np.minimum(rim[sl], rim_strength), rim[sl])
    return rim


def apply_rain(img, comp, defocus_sigma=0.0):
    """Distort an image through a composite map.

    Covered pixels show the bilinear sample at (u + R * B, v + G * B),
    clamp-to-edge, alpha-blended over the input. Optional Gaussian defocus
    blurs the refracted content only. Uncovered pixels are returned
    bit-exact; all outputs stay in [0, 1].
    """
    img = np.asarray(img, dtype=np.float64)
    img3 = as_channels_3d(img)
    if (comp.height, comp.width) != img3.shape[:2]:
        raise DimensionMismatchError(
            f"composite {comp.width}x{comp.height} does not match image "
            f"{img3.shape[1]}x{img3.shape[0]}")
    if defocus_sigma < 0:
        raise ParameterError(f"defocus_sigma must be >= 0, got {defocus_sigma}")

    if not comp.alpha.any():
        return img.copy()

    img3 = np.ascontiguousarray(img3)
    r = np.ascontiguousarray(comp.r)
    g = np.ascontiguousarray(comp.g)
    b = np.ascontiguousarray(comp.b)
    alpha = np.ascontiguousarray(comp.alpha)

    plain = defocus_sigma == 0.0 and comp.rim is None
    out = img3.copy()
    if plain:
        _kernels.refract_sample(img3, r, g, b, alpha, out, 1)
    else:
        refr = img3.copy()
        _kernels.refract_sample(img3, r, g, b, alpha, refr, 0)
        if defocus_sigma > 0.0:
            refr = ndimage.gaussian_filter(
                refr, sigma=(defocus_sigma, defocus_sigma, 0.0))
            np.clip(refr, 0.0, 1.0, out=refr)
        if comp.rim is not None:
            refr = refr * comp.rim[:, :, np.newaxis]
        a3 = alpha[:, :, np.newaxis]
        out = a3 * refr + (1.0 - a3) * img3
    return out.reshape(img.shape)


def droplet_mask(comp):
    """Binary coverage mask: True where any droplet covers the pixel."""
    return comp.alpha > 0.0
