# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel implementations.

Hot inner loops of compositing and refraction. Must stay observationally
identical to _numpy.py: expressions are kept in the same shape and
association order so both backends agree to the last few ulps.
"""

from libc.math cimport ceil, floor, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def refract_sample(double[:, :, ::1] img, double[:, ::1] r, double[:, ::1] g,
                   double[:, ::1] b, double[:, ::1] alpha,
                   double[:, :, ::1] out, int blend):
    """See _numpy.refract_sample."""
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t c = img.shape[2]
    cdef Py_ssize_t x, y, ch, x0, y0, x1, y1, x0_max, y0_max
    cdef double a, bb, sx, sy, fx, fy, val
    x0_max = w - 2 if w >= 2 else 0
    y0_max = h - 2 if h >= 2 else 0
    for y in range(h):
        for x in range(w):
            a = alpha[y, x]
            if a <= 0.0:
                continue
            bb = b[y, x]
            sx = x + r[y, x] * bb
            sy = y + g[y, x] * bb
            if sx < 0.0:
                sx = 0.0
            elif sx > w - 1.0:
                sx = w - 1.0
            if sy < 0.0:
                sy = 0.0
            elif sy > h - 1.0:
                sy = h - 1.0
            x0 = <Py_ssize_t>floor(sx)
            if x0 > x0_max:
                x0 = x0_max
            y0 = <Py_ssize_t>floor(sy)
            if y0 > y0_max:
                y0 = y0_max
            fx = sx - x0
            fy = sy - y0
            x1 = x0 + 1
            if x1 > w - 1:
                x1 = w - 1
            y1 = y0 + 1
            if y1 > h - 1:
                y1 = h - 1
            for ch in range(c):
                val = ((1.0 - fy) * ((1.0 - fx) * img[y0, x0, ch] + fx * img[y0, x1, ch])
                       + fy * ((1.0 - fx) * img[y1, x0, ch] + fx * img[y1, x1, ch]))
                if blend:
                    out[y, x, ch] = a * val + (1.0 - a) * img[y, x, ch]
                else:
                    out[y, x, ch] = val


cdef inline double _tex_sample(double[:, ::1] tex, Py_ssize_t th, Py_ssize_t tw,
                               Py_ssize_t x0, Py_ssize_t y0,
                               double w00, double w01, double w10, double w11) noexcept nogil:
    # Zero outside the texture; corner weights precomputed by the caller.
    cdef double t00 = 0.0, t01 = 0.0, t10 = 0.0, t11 = 0.0
    cdef Py_ssize_t x1 = x0 + 1, y1 = y0 + 1
    if 0 <= y0 < th:
        if 0 <= x0 < tw:
            t00 = tex[y0, x0]
        if 0 <= x1 < tw:
            t01 = tex[y0, x1]
    if 0 <= y1 < th:
        if 0 <= x0 < tw:
            t10 = tex[y1, x0]
        if 0 <= x1 < tw:
            t11 = tex[y1, x1]
    return w00 * t00 + w01 * t01 + w10 * t10 + w11 * t11


def splat_drop(double[:, ::1] acc_f, double[:, ::1] acc_wr, double[:, ::1] acc_wg,
               double[:, ::1] acc_b,
               double[:, ::1] tex_r, double[:, ::1] tex_g, double[:, ::1] tex_b,
               double u, double v, double ax, double ay, double tex_radius,
               double off_sx, double off_sy, double reach):
    """See _numpy.splat_drop."""
    cdef Py_ssize_t h = acc_f.shape[0]
    cdef Py_ssize_t w = acc_f.shape[1]
    cdef Py_ssize_t th = tex_b.shape[0]
    cdef Py_ssize_t tw = tex_b.shape[1]
    cdef Py_ssize_t x_lo, x_hi, y_lo, y_hi, x, y, x0, y0, row_lo, row_hi
    cdef double nx, ny, rho2, q, k, tcx, tcy, tx, ty, fx, fy, ny2, span
    cdef double w00, w01, w10, w11, rr, gg, bb, reach2, tex_limit2

    x_lo = <Py_ssize_t>ceil(u - reach * ax)
    if x_lo < 0:
        x_lo = 0
    x_hi = <Py_ssize_t>floor(u + reach * ax)
    if x_hi > w - 1:
        x_hi = w - 1
    y_lo = <Py_ssize_t>ceil(v - reach * ay)
    if y_lo < 0:
        y_lo = 0
    y_hi = <Py_ssize_t>floor(v + reach * ay)
    if y_hi > h - 1:
        y_hi = h - 1
    if x_lo > x_hi or y_lo > y_hi:
        return

    tcx = (tw - 1) / 2.0
    tcy = (th - 1) / 2.0
    reach2 = reach * reach
    # Beyond this normalized radius no bilinear sample can touch a nonzero
    # texel of a conforming droplet texture (see _numpy.splat_drop).
    tex_limit2 = ((tex_radius + 2.0) / tex_radius) ** 2

    with nogil:
        for y in range(y_lo, y_hi + 1):
            ny = (y - v) / ay
            ny2 = ny * ny
            if ny2 >= reach2:
                continue
            # Columns that can lie inside the support ellipse, padded by one
            # pixel; the per-pixel q > 0 test below stays authoritative.
            span = ax * sqrt(reach2 - ny2)
            row_lo = <Py_ssize_t>ceil(u - span) - 1
            if row_lo < x_lo:
                row_lo = x_lo
            row_hi = <Py_ssize_t>floor(u + span) + 1
            if row_hi > x_hi:
                row_hi = x_hi
            for x in range(row_lo, row_hi + 1):
                nx = (x - u) / ax
                rho2 = ny2 + nx * nx
                q = 1.0 - rho2 / reach2
                if q <= 0.0:
                    # Outside kernel support the field term is zero and the
                    # texture has no coverage, so skipping adds nothing.
                    continue
                k = q * q
                acc_f[y, x] += k
                if rho2 > tex_limit2:
                    continue

                tx = tcx + nx * tex_radius
                ty = tcy + ny * tex_radius
                x0 = <Py_ssize_t>floor(tx)
                y0 = <Py_ssize_t>floor(ty)
                fx = tx - x0
                fy = ty - y0
                w00 = (1.0 - fy) * (1.0 - fx)
                w01 = (1.0 - fy) * fx
                w10 = fy * (1.0 - fx)
                w11 = fy * fx

                if 0 <= x0 < tw - 1 and 0 <= y0 < th - 1:
                    # All four corners in bounds: read without checks.
                    rr = (w00 * tex_r[y0, x0] + w01 * tex_r[y0, x0 + 1]
                          + w10 * tex_r[y0 + 1, x0] + w11 * tex_r[y0 + 1, x0 + 1])
                    gg = (w00 * tex_g[y0, x0] + w01 * tex_g[y0, x0 + 1]
                          + w10 * tex_g[y0 + 1, x0] + w11 * tex_g[y0 + 1, x0 + 1])
                    bb = (w00 * tex_b[y0, x0] + w01 * tex_b[y0, x0 + 1]
                          + w10 * tex_b[y0 + 1, x0] + w11 * tex_b[y0 + 1, x0 + 1])
                else:
                    rr = _tex_sample(tex_r, th, tw, x0, y0, w00, w01, w10, w11)
                    gg = _tex_sample(tex_g, th, tw, x0, y0, w00, w01, w10, w11)
                    bb = _tex_sample(tex_b, th, tw, x0, y0, w00, w01, w10, w11)

                acc_wr[y, x] += k * (rr * off_sx)
                acc_wg[y, x] += k * (gg * off_sy)
                acc_b[y, x] += bb


def finalize_composite(double[:, ::1] acc_f, double[:, ::1] acc_wr,
                       double[:, ::1] acc_wg, double[:, ::1] acc_b,
                       double threshold,
                       double[:, ::1] out_r, double[:, ::1] out_g,
                       double[:, ::1] out_b, double[:, ::1] out_alpha):
    """See _numpy.finalize_composite.

    Output arrays must arrive zero-initialized: only covered pixels are
    written here.
    """
    cdef Py_ssize_t h = acc_f.shape[0]
    cdef Py_ssize_t w = acc_f.shape[1]
    cdef Py_ssize_t x, y
    cdef double f, fdiv, bsum, gx, gy, grad, dist, edge
    with nogil:
        for y in range(h):
            for x in range(w):
                f = acc_f[y, x]
                if f < threshold:
                    continue
                fdiv = f if f > 1e-12 else 1e-12
                out_r[y, x] = acc_wr[y, x] / fdiv
                out_g[y, x] = acc_wg[y, x] / fdiv
                bsum = acc_b[y, x]
                out_b[y, x] = bsum if bsum < 1.0 else 1.0
                if x == 0:
                    gx = acc_f[y, 1] - acc_f[y, 0]
                elif x == w - 1:
                    gx = acc_f[y, w - 1] - acc_f[y, w - 2]
                else:
                    gx = (acc_f[y, x + 1] - acc_f[y, x - 1]) / 2.0
                if y == 0:
                    gy = acc_f[1, x] - acc_f[0, x]
                elif y == h - 1:
                    gy = acc_f[h - 1, x] - acc_f[h - 2, x]
                else:
                    gy = (acc_f[y + 1, x] - acc_f[y - 1, x]) / 2.0
                grad = sqrt(gx * gx + gy * gy)
                if grad < 1e-12:
                    grad = 1e-12
                dist = (f - threshold) / grad
                edge = dist + 0.5
                if edge < 0.0:
                    edge = 0.0
                elif edge > 1.0:
                    edge = 1.0
                out_alpha[y, x] = edge * edge * (3.0 - 2.0 * edge)
