"""Per-voxel probability distribution summaries of an ensemble and the
operations that drive statistical classification: fitting, expectation of a
transfer function, parameter interpolation, and seeded sampling.

Summary files are a single JSON header line (``{"model", "dims", "spacing",
"k" or "q"}``) followed by raw little-endian float32 parameter planes in the
layout documented in _mkernels.py; round-trips are bit exact.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import _mkernels as mk
from .errors import ArgumentError, FitError, SamplingError

KIND_CODES = {
    "mean": mk.KIND_MEAN,
    "uniform": mk.KIND_UNIFORM,
    "gaussian": mk.KIND_GAUSSIAN,
    "gmm4": mk.KIND_GMM4,
    "quantile": mk.KIND_QUANTILE,
}
MODEL_NAMES = {v: k for k, v in KIND_CODES.items()}

DEFAULT_QUANTILES = 16
GMM_COMPONENTS = 4
GMM_MAX_ITER = 200
GMM_REL_TOL = 1e-8


@dataclass(frozen=True)
class PointSummary:
    """Distribution parameters at one (possibly interpolated) location."""

    kind: int
    params: np.ndarray


class Summary:
    """Base container: per-voxel parameter planes of one distribution model.

    ``planes`` has shape (P, nz, ny, nx), float64 in memory, float32 on disk.
    """

    model = None

    def __init__(self, dims, spacing, planes):
        nx, ny, nz = dims
        planes = np.ascontiguousarray(planes, dtype=np.float64)
        if planes.shape != (self.n_params(), nz, ny, nx):
            raise ArgumentError(
                f"{self.model}: expected planes {(self.n_params(), nz, ny, nx)},"
                f" got {planes.shape}")
        self.dims = (int(nx), int(ny), int(nz))
        self.spacing = tuple(float(s) for s in spacing)
        self.planes = planes
        self._validate()

    @property
    def kind(self):
        return KIND_CODES[self.model]

    def n_params(self):
        raise NotImplementedError

    def _validate(self):
        pass

    def at_voxel(self, x, y, z=0):
        return PointSummary(self.kind, self.planes[:, z, y, x].copy())

    def interpolate(self, x, y, z=0.0):
        """Point summary at a continuous voxel-space position."""
        nx, ny, nz = self.dims
        if not (0 <= x <= nx - 1 and 0 <= y <= ny - 1 and 0 <= z <= nz - 1):
            raise SamplingError(f"position {(x, y, z)} outside grid {self.dims}")
        out = np.empty(self.n_params())
        mk.interp_point(self.kind, self.planes, float(x), float(y), float(z), out)
        return PointSummary(self.kind, out)

    # -- serialization ------------------------------------------------------

    def header(self):
        h = {"model": self.model, "dims": list(self.dims), "spacing": list(self.spacing)}
        if self.model == "gmm4":
            h["k"] = GMM_COMPONENTS
        if self.model == "quantile":
            h["q"] = self.n_params()
        return h

    def payload(self):
        return np.ascontiguousarray(self.planes, dtype="<f4").tobytes()

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write((json.dumps(self.header()) + "\n").encode())
            fh.write(self.payload())


class MeanSummary(Summary):
    model = "mean"

    def n_params(self):
        return 1


class UniformSummary(Summary):
    model = "uniform"

    def n_params(self):
        return 2

    def _validate(self):
        if np.any(self.planes[0] > self.planes[1]):
            raise ArgumentError("uniform summary requires lo <= hi everywhere")


class GaussianSummary(Summary):
    model = "gaussian"

    def n_params(self):
        return 2

    def _validate(self):
        if np.any(self.planes[1] < 0):
            raise ArgumentError("gaussian summary requires variance >= 0")


class GmmSummary(Summary):
    model = "gmm4"

    def n_params(self):
        return 3 * GMM_COMPONENTS

    def _validate(self):
        w = self.planes[0::3]
        if np.any(w < 0):
            raise ArgumentError("mixture weights must be >= 0")
        # fresh fits sum to 1 within 1e-9; float32 round-trips within ~1e-7
        if np.any(np.abs(w.sum(axis=0) - 1.0) > 1e-6):
            raise ArgumentError("mixture weights must sum to 1")
        if np.any(self.planes[2::3] < 0):
            raise ArgumentError("mixture variances must be >= 0")


class QuantileSummary(Summary):
    model = "quantile"

    def __init__(self, dims, spacing, planes):
        self._q = np.asarray(planes).shape[0]
        super().__init__(dims, spacing, planes)

    def n_params(self):
        return self._q

    def _validate(self):
        if np.any(np.diff(self.planes, axis=0) < 0):
            raise ArgumentError("quantile values must be non-decreasing per voxel")

    def header(self):
        h = super().header()
        h["q"] = self._q
        return h


_CLASSES = {c.model: c for c in
            (MeanSummary, UniformSummary, GaussianSummary, GmmSummary, QuantileSummary)}


def load_summary(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        payload = fh.read()
    model = header["model"]
    cls = _CLASSES[model]
    nx, ny, nz = header["dims"]
    if model == "quantile":
        n_params = int(header["q"])
    elif model == "gmm4":
        n_params = 3 * int(header.get("k", GMM_COMPONENTS))
    elif model in ("uniform", "gaussian"):
        n_params = 2
    else:
        n_params = 1
    planes = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    planes = planes.reshape(n_params, nz, ny, nx)
    return cls((nx, ny, nz), header.get("spacing", (1, 1, 1)), planes)


# ---------------------------------------------------------------------------
# fitting

def _sorted_samples(ensemble):
    """(M, nz, ny, nx) float64 stack sorted along members.

    Sorting makes every fit a symmetric function of the members, so results
    are exactly invariant to manifest order.
    """
    return np.sort(ensemble.stacked().astype(np.float64), axis=0)


def fit(model, ensemble, quantiles=DEFAULT_QUANTILES):
    """Fit the named distribution model per voxel over the ensemble."""
    m = ensemble.count
    dims, spacing = ensemble.dims, ensemble.spacing
    if model == "gaussian" and m < 2:
        raise FitError("gaussian fit requires M >= 2 members (sample variance)")
    if model == "gmm4" and m < GMM_COMPONENTS:
        raise FitError(f"gmm4 fit requires M >= {GMM_COMPONENTS} members")
    if model == "quantile" and quantiles < 1:
        raise ArgumentError("quantile count must be >= 1")

    s = _sorted_samples(ensemble)
    if model == "mean":
        return MeanSummary(dims, spacing, s.mean(axis=0)[None])
    if model == "uniform":
        return UniformSummary(dims, spacing, np.stack([s[0], s[-1]]))
    if model == "gaussian":
        mu = s.mean(axis=0)
        var = s.var(axis=0, ddof=1)
        return GaussianSummary(dims, spacing, np.stack([mu, var]))
    if model == "quantile":
        levels = (np.arange(quantiles) + 0.5) / quantiles
        qs = np.quantile(s, levels, axis=0)
        return QuantileSummary(dims, spacing, qs)
    if model == "gmm4":
        nx, ny, nz = dims
        flat = np.ascontiguousarray(s.reshape(m, -1))
        out = np.empty((flat.shape[1], 3 * GMM_COMPONENTS))
        mk.gmm_em_planes(flat, GMM_COMPONENTS, GMM_MAX_ITER, GMM_REL_TOL, out)
        planes = np.ascontiguousarray(out.T).reshape(3 * GMM_COMPONENTS, nz, ny, nx)
        return GmmSummary(dims, spacing, planes)
    raise ArgumentError(f"unknown model '{model}'")


def fit_gmm_trace(samples):
    """EM fit of one voxel's samples; returns (params, log-likelihood trace)."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    params = np.empty(3 * GMM_COMPONENTS)
    hist = np.empty(GMM_MAX_ITER + 1)
    n = mk.gmm_em_single(x, GMM_COMPONENTS, GMM_MAX_ITER, GMM_REL_TOL, params, hist)
    return params, hist[:n]


def quartile_split(ensemble):
    """Three uniform summaries covering the lower 25%, central 50%, and upper
    25% sample populations per voxel, split at interpolated quartile cuts."""
    if ensemble.count < 4:
        raise FitError("quartile split requires M >= 4 members")
    s = _sorted_samples(ensemble)
    q25 = np.quantile(s, 0.25, axis=0)
    q75 = np.quantile(s, 0.75, axis=0)
    dims, spacing = ensemble.dims, ensemble.spacing
    lower = UniformSummary(dims, spacing, np.stack([s[0], q25]))
    middle = UniformSummary(dims, spacing, np.stack([q25, q75]))
    upper = UniformSummary(dims, spacing, np.stack([q75, s[-1]]))
    return lower, middle, upper


# ---------------------------------------------------------------------------
# point operations

def expected_tf(point, tf):
    """Componentwise E[TF(X)] under the point distribution; RGBA float64."""
    out = np.empty(4)
    mk.expected_point(point.kind, np.ascontiguousarray(point.params, dtype=np.float64),
                      tf.s, tf.rgba, out)
    return out


def sample(point, seed, n):
    """n deterministic seeded draws from the point distribution."""
    if n < 1:
        raise ArgumentError("n must be >= 1")
    seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    base = np.uint64(mk.stream_base(seed, np.uint64(0)))
    params = np.ascontiguousarray(point.params, dtype=np.float64)
    out = np.empty(n)
    counter = np.uint64(0)
    for i in range(n):
        out[i], counter = mk.draw_point(point.kind, params, base, counter)
        counter = np.uint64(counter)
    return out
