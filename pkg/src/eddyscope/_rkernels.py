"""Per-pixel raycast compositing kernel (emission-absorption, front to back).

Expected mode classifies each step with the componentwise expectation of the
transfer function under the interpolated point distribution; mc mode draws
``n_samples`` values per step (counter-based stream hashed from (seed, pixel)
so scheduling cannot change output) and averages their classifications.
"""

import math

import numpy as np

from .accel import jit, mix64, prange
from ._mkernels import draw_point, expected_point_render, interp_point, tf_eval


@jit()
def _slab(o, d, lo, hi, t0, t1):
    if abs(d) < 1e-300:
        if o < lo or o > hi:
            return 1.0, -1.0
        return t0, t1
    ta = (lo - o) / d
    tb = (hi - o) / d
    if ta > tb:
        ta, tb = tb, ta
    if ta > t0:
        t0 = ta
    if tb < t1:
        t1 = tb
    return t0, t1


@jit(parallel=True)
def march_rays(kind, planes, sx, sy, sz, eye, right, up, fwd, tan_x, tan_y,
               width, height, dt, opac_exp, term_alpha, bg, mode_mc, seed,
               n_samples, tfs, tfc, out):
    nz = planes.shape[1]
    ny = planes.shape[2]
    nx = planes.shape[3]
    hx = (nx - 1) * sx
    hy = (ny - 1) * sy
    hz = (nz - 1) * sz
    n_params = planes.shape[0]
    seed_mixed = mix64(seed)
    for py in prange(height):
        pp = np.empty(n_params)
        rgba = np.empty(4)
        smp = np.empty(4)
        for px in range(width):
            cx = (2.0 * (px + 0.5) / width - 1.0) * tan_x
            cy = (1.0 - 2.0 * (py + 0.5) / height) * tan_y
            dx = fwd[0] + cx * right[0] + cy * up[0]
            dy = fwd[1] + cx * right[1] + cy * up[1]
            dz = fwd[2] + cx * right[2] + cy * up[2]
            dn = math.sqrt(dx * dx + dy * dy + dz * dz)
            dx /= dn
            dy /= dn
            dz /= dn

            t0 = 0.0
            t1 = 1e300
            t0, t1 = _slab(eye[0], dx, 0.0, hx, t0, t1)
            t0, t1 = _slab(eye[1], dy, 0.0, hy, t0, t1)
            t0, t1 = _slab(eye[2], dz, 0.0, hz, t0, t1)

            r = 0.0
            g = 0.0
            b = 0.0
            a = 0.0
            if t1 > t0:
                base = mix64(seed_mixed ^ np.uint64(py * width + px))
                counter = np.uint64(0)
                t = t0 + 0.5 * dt
                while t < t1:
                    wx = (eye[0] + t * dx) / sx
                    wy = (eye[1] + t * dy) / sy
                    wz = (eye[2] + t * dz) / sz
                    interp_point(kind, planes, wx, wy, wz, pp)
                    if mode_mc:
                        for c in range(4):
                            rgba[c] = 0.0
                        for _ in range(n_samples):
                            v, counter = draw_point(kind, pp, base, counter)
                            tf_eval(v, tfs, tfc, smp)
                            for c in range(4):
                                rgba[c] += smp[c]
                        for c in range(4):
                            rgba[c] /= n_samples
                    else:
                        expected_point_render(kind, pp, tfs, tfc, rgba)
                    alpha = rgba[3]
                    if alpha < 0.0:
                        alpha = 0.0
                    elif alpha > 1.0:
                        alpha = 1.0
                    a_corr = 1.0 - (1.0 - alpha) ** opac_exp
                    wgt = (1.0 - a) * a_corr
                    r += wgt * rgba[0]
                    g += wgt * rgba[1]
                    b += wgt * rgba[2]
                    a += wgt
                    if a >= term_alpha:
                        break
                    t += dt
            wbg = (1.0 - a) * bg[3]
            out[py, px, 0] = r + wbg * bg[0]
            out[py, px, 1] = g + wbg * bg[1]
            out[py, px, 2] = b + wbg * bg[2]
            out[py, px, 3] = a + wbg
