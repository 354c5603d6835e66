"""Benchmark the hot kernels: numba-compiled path vs the pure numpy/python
fallback (the code selected by EDDYSCOPE_DISABLE_NUMBA=1).

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

import eddyscope as es
from eddyscope import accel, models, morse
from eddyscope import _mkernels as mk
from eddyscope import _tkernels as tk
from eddyscope import rendering as rnd


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_render(repeat):
    ens = es.synth_eddy_ensemble(3, 6, (16, 16, 16), 3, 0.4)
    tf = es.default_tf(0.0, float(ens.stacked().max()))
    cam = rnd.default_camera(ens.dims, width=24, height=24)
    summary = es.fit("gaussian", ens)
    eye, right, up, fwd = cam.basis()
    tan_y = np.tan(np.radians(cam.fov_deg) / 2)
    tan_x = tan_y * cam.width / cam.height
    out = np.empty((cam.height, cam.width, 4))
    from eddyscope._rkernels import march_rays
    args = (summary.kind, summary.planes, 1.0, 1.0, 1.0, eye, right, up, fwd,
            tan_x, tan_y, cam.width, cam.height, 0.5, 0.5, 0.99,
            np.array([1.0, 1.0, 1.0, 1.0]), False, np.uint64(0), 1,
            tf.s, tf.rgba, out)
    march_rays(*args)   # warm compile
    fast = timeit(lambda: march_rays(*args), repeat)
    slow = timeit(lambda: accel.py_version(march_rays)(*args), 1)
    return "raycast 24x24 @ 16^3 gaussian", fast, slow


def bench_gmm(repeat):
    rng = np.random.default_rng(0)
    samples = np.sort(rng.standard_normal((16, 800)), axis=0)
    out = np.empty((800, 12))
    mk.gmm_em_planes(samples, 4, models.GMM_MAX_ITER, models.GMM_REL_TOL, out)
    fast = timeit(lambda: mk.gmm_em_planes(
        samples, 4, models.GMM_MAX_ITER, models.GMM_REL_TOL, out), repeat)
    slow = timeit(lambda: accel.py_version(mk.gmm_em_planes)(
        samples[:, :40], 4, models.GMM_MAX_ITER, models.GMM_REL_TOL, out[:40]), 1)
    return "mixture EM, 800 voxels x 16 members (fallback x40 voxels, scaled)", fast, slow * 20


def bench_persistence(repeat):
    ens = es.synth_eddy_ensemble(7, 1, (96, 96, 1), 8, 0.0)
    f = ens.members[0].array[0].astype(np.float64)
    flat = np.ascontiguousarray(f.ravel())
    n = flat.size
    order = np.lexsort((np.arange(n), flat))[::-1].astype(np.int64).copy()

    def run(fn):
        is_max = np.zeros(n, dtype=np.bool_)
        pers = np.zeros(n)
        partner = np.full(n, -2, dtype=np.int64)
        mv = np.zeros(n)
        fn(flat, order, 96, 96, is_max, pers, partner, mv)

    run(tk.persistence_sweep)
    fast = timeit(lambda: run(tk.persistence_sweep), repeat)
    slow = timeit(lambda: run(accel.py_version(tk.persistence_sweep)), 1)
    return "persistence sweep 96x96", fast, slow


def bench_expected(repeat):
    tf = es.default_tf(0.0, 1.0)
    rng = np.random.default_rng(1)
    mus = rng.uniform(0.2, 0.8, 2000)
    out = np.empty(4)

    def run(fn):
        for mu in mus:
            fn(mk.KIND_GAUSSIAN, np.array([mu, 0.01]), tf.s, tf.rgba, out)

    run(mk.expected_point)
    fast = timeit(lambda: run(mk.expected_point), repeat)
    slow = timeit(lambda: run(accel.py_version(mk.expected_point)), 1)
    # per-call dispatch overhead dominates this one; the raycast row shows
    # the same kernel inlined in a compiled loop
    return "gaussian quadrature expectation op x 2000 calls", fast, slow


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if not accel.NUMBA_ENABLED:
        print("numba disabled (EDDYSCOPE_DISABLE_NUMBA or unavailable); "
              "only the fallback path exists here, nothing to compare.")
        return

    print(f"{'kernel':55s} {'numba':>10s} {'fallback':>10s} {'speedup':>8s}")
    for bench in (bench_expected, bench_persistence, bench_render, bench_gmm):
        name, fast, slow = bench(args.repeat)
        print(f"{name:55s} {fast * 1e3:9.2f}ms {slow * 1e3:9.2f}ms {slow / fast:7.1f}x")


if __name__ == "__main__":
    main()
