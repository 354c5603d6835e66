"""Scalar kernels for distribution summaries: transfer-function evaluation,
per-point classification expectations, parameter interpolation, seeded draws,
and the per-voxel mixture EM fit.

All functions here run compiled under numba or uncompiled in fallback mode
(see accel.py).  Parameter vector layouts, indexed by kind code:

  MEAN      [mean]
  UNIFORM   [lo, hi]
  GAUSSIAN  [mean, variance]
  GMM4      [w0, mu0, var0, w1, mu1, var1, ...]   (components sorted by mean)
  QUANTILE  [q_1 ... q_Q]  at levels (i - 0.5)/Q
"""

import math

import numpy as np

from .accel import jit, mix64, prange

KIND_MEAN = 0
KIND_UNIFORM = 1
KIND_GAUSSIAN = 2
KIND_GMM4 = 3
KIND_QUANTILE = 4

GAUSS_QUAD_TOL = 1e-6
GAUSS_TRUNC_SIGMAS = 6.0

_INV_SQRT2 = 0.7071067811865476
_SQRT_2PI = 2.5066282746310002
_U01_SCALE = 1.0 / 9007199254740992.0  # 2^-53


@jit()
def tf_eval(x, tfs, tfc, out):
    """Piecewise-linear RGBA lookup, clamped beyond the end points."""
    n = tfs.shape[0]
    if x <= tfs[0]:
        for c in range(4):
            out[c] = tfc[0, c]
        return
    if x >= tfs[n - 1]:
        for c in range(4):
            out[c] = tfc[n - 1, c]
        return
    i = np.searchsorted(tfs, x)
    t = (x - tfs[i - 1]) / (tfs[i] - tfs[i - 1])
    for c in range(4):
        out[c] = tfc[i - 1, c] + t * (tfc[i, c] - tfc[i - 1, c])


@jit()
def expected_uniform(lo, hi, tfs, tfc, out):
    """Exact mean of the piecewise-linear map over [lo, hi]."""
    if hi <= lo:
        tf_eval(lo, tfs, tfc, out)
        return
    n = tfs.shape[0]
    acc = np.zeros(4)
    fprev = np.empty(4)
    fcur = np.empty(4)
    tf_eval(lo, tfs, tfc, fprev)
    prev = lo
    i = np.searchsorted(tfs, lo, side="right")
    while i < n and tfs[i] < hi:
        s = tfs[i]
        tf_eval(s, tfs, tfc, fcur)
        for c in range(4):
            acc[c] += 0.5 * (fprev[c] + fcur[c]) * (s - prev)
            fprev[c] = fcur[c]
        prev = s
        i += 1
    tf_eval(hi, tfs, tfc, fcur)
    for c in range(4):
        acc[c] += 0.5 * (fprev[c] + fcur[c]) * (hi - prev)
        out[c] = acc[c] / (hi - lo)


@jit()
def _gauss_integrand(x, mu, sd, tfs, tfc, out):
    tf_eval(x, tfs, tfc, out)
    p = math.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * _SQRT_2PI)
    for c in range(4):
        out[c] *= p


@jit()
def expected_gauss_quad(mu, var, tfs, tfc, out, tol):
    """E[TF(X)] for X ~ N(mu, var) by adaptive Simpson quadrature on
    [mu - 6 sd, mu + 6 sd], split at control points, abs tolerance tol."""
    if var <= 0.0:
        tf_eval(mu, tfs, tfc, out)
        return
    sd = math.sqrt(var)
    a = mu - GAUSS_TRUNC_SIGMAS * sd
    b = mu + GAUSS_TRUNC_SIGMAS * sd
    n = tfs.shape[0]
    bp = np.empty(n + 2)
    nbp = 0
    bp[nbp] = a
    nbp += 1
    for i in range(n):
        if a < tfs[i] < b:
            bp[nbp] = tfs[i]
            nbp += 1
    bp[nbp] = b
    nbp += 1

    nseg = nbp - 1
    seg_tol = tol / nseg
    cap = 4096
    sx0 = np.empty(cap)
    sx2 = np.empty(cap)
    stol = np.empty(cap)
    sp = 0
    for s in range(nseg):
        sx0[sp] = bp[s]
        sx2[sp] = bp[s + 1]
        stol[sp] = seg_tol
        sp += 1

    acc = np.zeros(4)
    f0 = np.empty(4)
    fm = np.empty(4)
    f2 = np.empty(4)
    fl = np.empty(4)
    fr = np.empty(4)
    width = b - a
    while sp > 0:
        sp -= 1
        x0 = sx0[sp]
        x2 = sx2[sp]
        tl = stol[sp]
        xm = 0.5 * (x0 + x2)
        h = x2 - x0
        _gauss_integrand(x0, mu, sd, tfs, tfc, f0)
        _gauss_integrand(xm, mu, sd, tfs, tfc, fm)
        _gauss_integrand(x2, mu, sd, tfs, tfc, f2)
        _gauss_integrand(0.5 * (x0 + xm), mu, sd, tfs, tfc, fl)
        _gauss_integrand(0.5 * (xm + x2), mu, sd, tfs, tfc, fr)
        err = 0.0
        for c in range(4):
            s1 = (h / 6.0) * (f0[c] + 4.0 * fm[c] + f2[c])
            s2 = (h / 12.0) * (f0[c] + 4.0 * fl[c] + 2.0 * fm[c] + 4.0 * fr[c] + f2[c])
            e = abs(s2 - s1) / 15.0
            if e > err:
                err = e
        if err <= tl or h < 1e-13 * width or sp > cap - 3:
            for c in range(4):
                s1 = (h / 6.0) * (f0[c] + 4.0 * fm[c] + f2[c])
                s2 = (h / 12.0) * (f0[c] + 4.0 * fl[c] + 2.0 * fm[c] + 4.0 * fr[c] + f2[c])
                acc[c] += s2 + (s2 - s1) / 15.0
        else:
            sx0[sp] = x0
            sx2[sp] = xm
            stol[sp] = 0.5 * tl
            sp += 1
            sx0[sp] = xm
            sx2[sp] = x2
            stol[sp] = 0.5 * tl
            sp += 1
    for c in range(4):
        out[c] = acc[c]


@jit()
def expected_gauss_analytic(mu, var, tfs, tfc, out):
    """Closed-form E[TF(X)] for Gaussian X: per-segment erf sums.  Used by the
    renderer; agrees with expected_gauss_quad within its tolerance."""
    if var <= 0.0:
        tf_eval(mu, tfs, tfc, out)
        return
    sd = math.sqrt(var)
    inv = _INV_SQRT2 / sd
    n = tfs.shape[0]
    for c in range(4):
        out[c] = 0.0
    # left/right clamped tails
    phi0 = 0.5 * (1.0 + math.erf((tfs[0] - mu) * inv))
    phi1 = 0.5 * (1.0 + math.erf((tfs[n - 1] - mu) * inv))
    for c in range(4):
        out[c] += tfc[0, c] * phi0 + tfc[n - 1, c] * (1.0 - phi1)
    for i in range(n - 1):
        x0 = tfs[i]
        x1 = tfs[i + 1]
        cdf0 = 0.5 * (1.0 + math.erf((x0 - mu) * inv))
        cdf1 = 0.5 * (1.0 + math.erf((x1 - mu) * inv))
        dphi = cdf1 - cdf0
        pdf0 = math.exp(-0.5 * ((x0 - mu) / sd) ** 2) / (sd * _SQRT_2PI)
        pdf1 = math.exp(-0.5 * ((x1 - mu) / sd) ** 2) / (sd * _SQRT_2PI)
        xmom = mu * dphi - var * (pdf1 - pdf0)
        inv_w = 1.0 / (x1 - x0)
        for c in range(4):
            slope = (tfc[i + 1, c] - tfc[i, c]) * inv_w
            icept = tfc[i, c] - slope * x0
            out[c] += icept * dphi + slope * xmom
    for c in range(4):
        if out[c] < 0.0:
            out[c] = 0.0
        elif out[c] > 1.0:
            out[c] = 1.0


@jit()
def expected_quantile(qs, tfs, tfc, out):
    Q = qs.shape[0]
    if qs[0] == qs[Q - 1]:
        tf_eval(qs[0], tfs, tfc, out)
        return
    acc = np.zeros(4)
    tmp = np.empty(4)
    for i in range(Q):
        tf_eval(qs[i], tfs, tfc, tmp)
        for c in range(4):
            acc[c] += tmp[c]
    for c in range(4):
        out[c] = acc[c] / Q


@jit()
def _gmm_degenerate(params):
    mu0 = params[1]
    for k in range(4):
        if params[3 * k + 2] > 0.0 or params[3 * k + 1] != mu0:
            return False
    return True


@jit()
def expected_gmm(params, tfs, tfc, out, analytic, tol):
    if _gmm_degenerate(params):
        tf_eval(params[1], tfs, tfc, out)
        return
    acc = np.zeros(4)
    tmp = np.empty(4)
    wsum = 0.0
    for k in range(4):
        wsum += params[3 * k]
    for k in range(4):
        w = params[3 * k]
        if w <= 0.0:
            continue
        if analytic:
            expected_gauss_analytic(params[3 * k + 1], params[3 * k + 2], tfs, tfc, tmp)
        else:
            expected_gauss_quad(params[3 * k + 1], params[3 * k + 2], tfs, tfc, tmp, tol)
        for c in range(4):
            acc[c] += w * tmp[c]
    for c in range(4):
        out[c] = acc[c] / wsum


@jit()
def expected_point(kind, params, tfs, tfc, out):
    """Componentwise E[TF(X)] under the point distribution (contract path:
    Gaussian terms by adaptive quadrature at tolerance 1e-6)."""
    if kind == KIND_MEAN:
        tf_eval(params[0], tfs, tfc, out)
    elif kind == KIND_UNIFORM:
        expected_uniform(params[0], params[1], tfs, tfc, out)
    elif kind == KIND_GAUSSIAN:
        expected_gauss_quad(params[0], params[1], tfs, tfc, out, GAUSS_QUAD_TOL)
    elif kind == KIND_GMM4:
        expected_gmm(params, tfs, tfc, out, False, GAUSS_QUAD_TOL)
    else:
        expected_quantile(params, tfs, tfc, out)


@jit()
def expected_point_render(kind, params, tfs, tfc, out):
    """Same expectation with the analytic Gaussian path (renderer hot loop)."""
    if kind == KIND_MEAN:
        tf_eval(params[0], tfs, tfc, out)
    elif kind == KIND_UNIFORM:
        expected_uniform(params[0], params[1], tfs, tfc, out)
    elif kind == KIND_GAUSSIAN:
        expected_gauss_analytic(params[0], params[1], tfs, tfc, out)
    elif kind == KIND_GMM4:
        expected_gmm(params, tfs, tfc, out, True, GAUSS_QUAD_TOL)
    else:
        expected_quantile(params, tfs, tfc, out)


# ---------------------------------------------------------------------------
# parameter interpolation on the voxel lattice

@jit()
def interp_point(kind, planes, x, y, z, out):
    """Trilinear interpolation of per-voxel parameters at voxel-space
    position (x, y, z).  Mixture components are rank-paired by mean before
    blending; quantile levels interpolate independently."""
    P = planes.shape[0]
    nz = planes.shape[1]
    ny = planes.shape[2]
    nx = planes.shape[3]

    xc = min(max(x, 0.0), nx - 1.0)
    yc = min(max(y, 0.0), ny - 1.0)
    zc = min(max(z, 0.0), nz - 1.0)
    x0 = int(math.floor(xc))
    y0 = int(math.floor(yc))
    z0 = int(math.floor(zc))
    if x0 > nx - 2 and nx > 1:
        x0 = nx - 2
    if y0 > ny - 2 and ny > 1:
        y0 = ny - 2
    if z0 > nz - 2 and nz > 1:
        z0 = nz - 2
    x1 = min(x0 + 1, nx - 1)
    y1 = min(y0 + 1, ny - 1)
    z1 = min(z0 + 1, nz - 1)
    tx = xc - x0
    ty = yc - y0
    tz = zc - z0

    if kind == KIND_GMM4:
        corners = np.empty((8, 12))
        ci = 0
        for dz in range(2):
            zi = z1 if dz else z0
            for dy in range(2):
                yi = y1 if dy else y0
                for dx in range(2):
                    xi = x1 if dx else x0
                    for p in range(12):
                        corners[ci, p] = planes[p, zi, yi, xi]
                    # insertion sort the 4 components by mean
                    for a in range(1, 4):
                        wk = corners[ci, 3 * a]
                        mk = corners[ci, 3 * a + 1]
                        vk = corners[ci, 3 * a + 2]
                        b = a - 1
                        while b >= 0 and corners[ci, 3 * b + 1] > mk:
                            corners[ci, 3 * b + 3] = corners[ci, 3 * b]
                            corners[ci, 3 * b + 4] = corners[ci, 3 * b + 1]
                            corners[ci, 3 * b + 5] = corners[ci, 3 * b + 2]
                            b -= 1
                        corners[ci, 3 * b + 3] = wk
                        corners[ci, 3 * b + 4] = mk
                        corners[ci, 3 * b + 5] = vk
                    ci += 1
        for p in range(12):
            c00 = corners[0, p] + tx * (corners[1, p] - corners[0, p])
            c10 = corners[2, p] + tx * (corners[3, p] - corners[2, p])
            c01 = corners[4, p] + tx * (corners[5, p] - corners[4, p])
            c11 = corners[6, p] + tx * (corners[7, p] - corners[6, p])
            c0 = c00 + ty * (c10 - c00)
            c1 = c01 + ty * (c11 - c01)
            out[p] = c0 + tz * (c1 - c0)
    else:
        for p in range(P):
            c000 = planes[p, z0, y0, x0]
            c100 = planes[p, z0, y0, x1]
            c010 = planes[p, z0, y1, x0]
            c110 = planes[p, z0, y1, x1]
            c001 = planes[p, z1, y0, x0]
            c101 = planes[p, z1, y0, x1]
            c011 = planes[p, z1, y1, x0]
            c111 = planes[p, z1, y1, x1]
            c00 = c000 + tx * (c100 - c000)
            c10 = c010 + tx * (c110 - c010)
            c01 = c001 + tx * (c101 - c001)
            c11 = c011 + tx * (c111 - c011)
            c0 = c00 + ty * (c10 - c00)
            c1 = c01 + ty * (c11 - c01)
            out[p] = c0 + tz * (c1 - c0)


# ---------------------------------------------------------------------------
# seeded draws (counter-based; identical across numba/fallback paths)

@jit()
def stream_base(seed, stream):
    return mix64(mix64(seed) ^ stream)


@jit()
def u01(base, counter):
    z = mix64(base ^ counter)
    return ((z >> np.uint64(11)) + 0.5) * _U01_SCALE


@jit()
def draw_point(kind, params, base, counter):
    """One draw from the point distribution; returns (value, next_counter)."""
    one = np.uint64(1)
    if kind == KIND_UNIFORM:
        u = u01(base, counter)
        return params[0] + u * (params[1] - params[0]), counter + one
    if kind == KIND_GAUSSIAN:
        u1 = u01(base, counter)
        u2 = u01(base, counter + one)
        nrm = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        sd = math.sqrt(params[1]) if params[1] > 0.0 else 0.0
        return params[0] + sd * nrm, counter + np.uint64(2)
    if kind == KIND_GMM4:
        u0 = u01(base, counter)
        wsum = params[0] + params[3] + params[6] + params[9]
        acc = 0.0
        k = 3
        for j in range(4):
            acc += params[3 * j] / wsum
            if u0 <= acc:
                k = j
                break
        u1 = u01(base, counter + one)
        u2 = u01(base, counter + np.uint64(2))
        nrm = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        var = params[3 * k + 2]
        sd = math.sqrt(var) if var > 0.0 else 0.0
        return params[3 * k + 1] + sd * nrm, counter + np.uint64(3)
    if kind == KIND_QUANTILE:
        u = u01(base, counter)
        Q = params.shape[0]
        p0 = 0.5 / Q
        pl = (Q - 0.5) / Q
        if u <= p0:
            v = params[0]
        elif u >= pl:
            v = params[Q - 1]
        else:
            j = int(u * Q - 0.5)
            if j > Q - 2:
                j = Q - 2
            pj = (j + 0.5) / Q
            t = (u - pj) * Q
            v = params[j] + t * (params[j + 1] - params[j])
        return v, counter + one
    # mean model: point mass
    return params[0], counter + one


# ---------------------------------------------------------------------------
# Gaussian mixture EM (per voxel)

@jit()
def gmm_em_single(x, K, max_iter, rel_tol, params_out, ll_hist):
    """EM fit of a K-Gaussian mixture to sorted samples x.

    Initialization: means at the (k+0.5)/K quantiles, equal weights,
    component variances at the pooled sample variance; variance floor
    1e-12 * range^2.  Returns the number of log-likelihood entries written
    to ll_hist (one per EM iteration, non-decreasing).
    """
    M = x.shape[0]
    lo = x[0]
    hi = x[M - 1]
    rng_ = hi - lo
    if rng_ <= 0.0:
        for k in range(K):
            params_out[3 * k] = 1.0 / K
            params_out[3 * k + 1] = lo
            params_out[3 * k + 2] = 0.0
        return 0
    floor = 1e-12 * rng_ * rng_

    mean_all = 0.0
    for i in range(M):
        mean_all += x[i]
    mean_all /= M
    var_all = 0.0
    for i in range(M):
        var_all += (x[i] - mean_all) ** 2
    var_all /= (M - 1)
    if var_all < floor:
        var_all = floor

    w = np.empty(K)
    mu = np.empty(K)
    var = np.empty(K)
    for k in range(K):
        w[k] = 1.0 / K
        pos = (k + 0.5) / K * (M - 1)
        j = int(math.floor(pos))
        if j > M - 2:
            j = M - 2
        t = pos - j
        mu[k] = x[j] + t * (x[j + 1] - x[j])
        var[k] = var_all

    lp = np.empty(K)
    nk = np.empty(K)
    sx = np.empty(K)
    sxx = np.empty(K)
    ll_prev = 0.0
    n_hist = 0
    for it in range(max_iter):
        for k in range(K):
            nk[k] = 0.0
            sx[k] = 0.0
            sxx[k] = 0.0
        ll = 0.0
        for i in range(M):
            mx = -1e308
            for k in range(K):
                if w[k] > 0.0:
                    lp[k] = (math.log(w[k])
                             - 0.5 * math.log(2.0 * math.pi * var[k])
                             - 0.5 * (x[i] - mu[k]) ** 2 / var[k])
                else:
                    lp[k] = -1e308
                if lp[k] > mx:
                    mx = lp[k]
            se = 0.0
            for k in range(K):
                se += math.exp(lp[k] - mx)
            lse = mx + math.log(se)
            ll += lse
            for k in range(K):
                r = math.exp(lp[k] - lse)
                nk[k] += r
                sx[k] += r * x[i]
                sxx[k] += r * x[i] * x[i]
        ll_hist[n_hist] = ll
        n_hist += 1
        if it > 0 and abs(ll - ll_prev) <= rel_tol * (abs(ll) + 1e-300):
            break
        ll_prev = ll
        for k in range(K):
            if nk[k] > 1e-300:
                w[k] = nk[k] / M
                mu[k] = sx[k] / nk[k]
                v = sxx[k] / nk[k] - mu[k] * mu[k]
                var[k] = v if v > floor else floor
            else:
                w[k] = 0.0

    # canonical order: components sorted by mean
    for a in range(1, K):
        wk = w[a]
        mk = mu[a]
        vk = var[a]
        b = a - 1
        while b >= 0 and mu[b] > mk:
            w[b + 1] = w[b]
            mu[b + 1] = mu[b]
            var[b + 1] = var[b]
            b -= 1
        w[b + 1] = wk
        mu[b + 1] = mk
        var[b + 1] = vk
    for k in range(K):
        params_out[3 * k] = w[k]
        params_out[3 * k + 1] = mu[k]
        params_out[3 * k + 2] = var[k]
    return n_hist


@jit(parallel=True)
def gmm_em_planes(samples, K, max_iter, rel_tol, out):
    """Per-voxel EM over samples of shape (M, nvox); out is (nvox, 3K)."""
    nvox = samples.shape[1]
    max_hist = max_iter + 1
    for vi in prange(nvox):
        x = samples[:, vi].copy()
        ll_hist = np.empty(max_hist)
        gmm_em_single(x, K, max_iter, rel_tol, out[vi], ll_hist)
