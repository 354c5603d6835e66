"""Acceleration backend selection.

Hot kernels in this package are written as plain loops over numpy arrays and
decorated with :func:`jit`.  By default they are compiled with numba's
``@njit``; setting the environment variable ``EDDYSCOPE_DISABLE_NUMBA=1``
(or having numba unavailable) selects the uncompiled numpy/python fallback.
Both paths execute the same source, so results agree bit for bit; the
fallback is only slower.  ``benchmarks/bench_kernels.py`` compares the two.

``EDDYSCOPE_THREADS`` caps the worker threads used by parallel kernels.
"""

import os

import numpy as np

_TRUTHY = {"1", "true", "yes", "on"}

NUMBA_DISABLED = os.environ.get("EDDYSCOPE_DISABLE_NUMBA", "").strip().lower() in _TRUTHY

# the tbb probe warns on older system tbb; omp is fine for independent loops
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = (numba is not None) and not NUMBA_DISABLED

if NUMBA_ENABLED:
    prange = numba.prange
    _threads = os.environ.get("EDDYSCOPE_THREADS", "").strip()
    if _threads:
        try:
            n = max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS))
            numba.set_num_threads(n)
        except ValueError:
            pass
else:
    prange = range


def jit(**options):
    """Conditional ``@njit``: compile when numba is active, else identity."""
    def wrap(func):
        if NUMBA_ENABLED:
            options.setdefault("cache", True)
            return numba.njit(**options)(func)
        return func
    return wrap


def py_version(func):
    """Uncompiled version of a kernel, for benchmarks and equivalence tests."""
    return getattr(func, "py_func", func)


# splitmix64: counter-based generator used for all seeded sampling.  The two
# bodies below are the single numba/python split in the package (uint64
# wraparound is silent under numba but warns as a numpy scalar op), kept
# identical by tests/test_accel.py.

if NUMBA_ENABLED:

    @numba.njit(cache=True)
    def mix64(z):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

else:

    def mix64(z):
        z = (int(z) + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        return np.uint64(z ^ (z >> 31))
