"""Pure numpy kernel implementations.

Fallback backend used when the compiled extension is unavailable. Both
backends must be observationally identical: every arithmetic expression
here is written in the same shape and association order as its counterpart
in _native.pyx so results agree to the last few ulps.
"""

import numpy as np


def refract_sample(img, r, g, b, alpha, out, blend):
    """Refract an image through a composite offset map.

    For every pixel with alpha > 0, bilinearly samples ``img`` at
    (x + r*b, y + g*b) with clamp-to-edge. With ``blend`` nonzero the sample
    is alpha-blended over the input pixel; otherwise the raw sample is
    written (layer mode). ``out`` must arrive pre-filled with a copy of
    ``img`` so alpha = 0 pixels pass through bit-exact.
    """
    h, w, c = img.shape
    idx = np.flatnonzero(alpha.ravel() > 0.0)
    if idx.size == 0:
        return
    ys, xs = np.divmod(idx, w)

    bb = b.ravel()[idx]
    sx = np.clip(xs + r.ravel()[idx] * bb, 0.0, w - 1.0)
    sy = np.clip(ys + g.ravel()[idx] * bb, 0.0, h - 1.0)

    x0 = np.clip(np.floor(sx), 0, max(w - 2, 0)).astype(np.intp)
    y0 = np.clip(np.floor(sy), 0, max(h - 2, 0)).astype(np.intp)
    fx = sx - x0
    fy = sy - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)

    flat = img.reshape(-1, c)
    i00 = y0 * w + x0
    i01 = y0 * w + x1
    i10 = y1 * w + x0
    i11 = y1 * w + x1
    out_flat = out.reshape(-1, c)
    a = alpha.ravel()[idx]
    for ch in range(c):
        col = flat[:, ch]
        val = ((1.0 - fy) * ((1.0 - fx) * col[i00] + fx * col[i01])
               + fy * ((1.0 - fx) * col[i10] + fx * col[i11]))
        if blend:
            out_flat[idx, ch] = a * val + (1.0 - a) * col[idx]
        else:
            out_flat[idx, ch] = val


def splat_drop(acc_f, acc_wr, acc_wg, acc_b,
               tex_r, tex_g, tex_b,
               u, v, ax, ay, tex_radius, off_sx, off_sy, reach):
    """Accumulate one droplet into the composite working buffers.

    acc_f gains the metaball kernel k, acc_wr / acc_wg gain k times the
    per-axis rescaled offsets sampled from the droplet texture, and acc_b
    gains the sampled thickness. The kernel has compact support at
    ``reach`` times the footprint semi-axes (ax, ay). Texture lookups are
    zero outside the texture and, by kernel contract, everywhere beyond
    normalized radius (tex_radius + 2) / tex_radius: a conforming droplet
    texture is zero outside its footprint disk, so no sample out there can
    reach a nonzero texel.
    """
    h, w = acc_f.shape
    x_lo = max(int(np.ceil(u - reach * ax)), 0)
    x_hi = min(int(np.floor(u + reach * ax)), w - 1)
    y_lo = max(int(np.ceil(v - reach * ay)), 0)
    y_hi = min(int(np.floor(v + reach * ay)), h - 1)
    if x_lo > x_hi or y_lo > y_hi:
        return

    nx = (np.arange(x_lo, x_hi + 1, dtype=np.float64) - u) / ax
    ny = (np.arange(y_lo, y_hi + 1, dtype=np.float64) - v) / ay
    rho2 = ny[:, np.newaxis] * ny[:, np.newaxis] + nx[np.newaxis, :] * nx[np.newaxis, :]
    q = 1.0 - rho2 / (reach * reach)
    k = np.where(q > 0.0, q * q, 0.0)

    th, tw = tex_b.shape
    tcx = (tw - 1) / 2.0
    tcy = (th - 1) / 2.0
    tx = tcx + nx * tex_radius
    ty = tcy + ny * tex_radius

    x0 = np.floor(tx).astype(np.intp)
    y0 = np.floor(ty).astype(np.intp)
    fx = (tx - x0)[np.newaxis, :]
    fy = (ty - y0)[:, np.newaxis]
    x1 = x0 + 1
    y1 = y0 + 1

    w00 = (1.0 - fy) * (1.0 - fx)
    w01 = (1.0 - fy) * fx
    w10 = fy * (1.0 - fx)
    w11 = fy * fx

    def corner(chan, cy, cx):
        ok_x = (cx >= 0) & (cx < tw)
        ok_y = (cy >= 0) & (cy < th)
        vals = chan[np.clip(cy, 0, th - 1)[:, np.newaxis],
                    np.clip(cx, 0, tw - 1)[np.newaxis, :]]
        return np.where(ok_y[:, np.newaxis] & ok_x[np.newaxis, :], vals, 0.0)

    footprint = rho2 <= ((tex_radius + 2.0) / tex_radius) ** 2

    def sample(chan):
        vals = (w00 * corner(chan, y0, x0) + w01 * corner(chan, y0, x1)
                + w10 * corner(chan, y1, x0) + w11 * corner(chan, y1, x1))
        return np.where(footprint, vals, 0.0)

    rr = sample(tex_r)
    gg = sample(tex_g)
    bb = sample(tex_b)

    sl = (slice(y_lo, y_hi + 1), slice(x_lo, x_hi + 1))
    acc_f[sl] += k
    acc_wr[sl] += k * (rr * off_sx)
    acc_wg[sl] += k * (gg * off_sy)
    acc_b[sl] += bb


def finalize_composite(acc_f, acc_wr, acc_wg, acc_b, threshold,
                       out_r, out_g, out_b, out_alpha):
    """Reduce the accumulators into the final composite channels.

    Coverage support is the thresholded field; offsets are the
    field-weighted average, thickness the clamped sum. The coverage alpha
    ramps across a one-pixel smoothstep edge, with the distance to the
    threshold isocontour estimated as field excess over the finite
    difference gradient magnitude (central inside, one-sided at borders).
    Output arrays must arrive zero-initialized; arrays must be at least
    2 x 2 for the border differences.
    """
    mask = acc_f >= threshold
    np.copyto(out_r, np.where(mask, acc_wr / np.maximum(acc_f, 1e-12), 0.0))
    np.copyto(out_g, np.where(mask, acc_wg / np.maximum(acc_f, 1e-12), 0.0))
    np.copyto(out_b, np.where(mask, np.minimum(acc_b, 1.0), 0.0))

    gy = np.empty_like(acc_f)
    gx = np.empty_like(acc_f)
    gy[1:-1, :] = (acc_f[2:, :] - acc_f[:-2, :]) / 2.0
    gy[0, :] = acc_f[1, :] - acc_f[0, :]
    gy[-1, :] = acc_f[-1, :] - acc_f[-2, :]
    gx[:, 1:-1] = (acc_f[:, 2:] - acc_f[:, :-2]) / 2.0
    gx[:, 0] = acc_f[:, 1] - acc_f[:, 0]
    gx[:, -1] = acc_f[:, -1] - acc_f[:, -2]
    grad = np.sqrt(gx * gx + gy * gy)

    dist = (acc_f - threshold) / np.maximum(grad, 1e-12)
    edge = np.clip(dist + 0.5, 0.0, 1.0)
    np.copyto(out_alpha, np.where(mask, edge * edge * (3.0 - 2.0 * edge), 0.0))
