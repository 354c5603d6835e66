"""Gridded scalar/vector fields, ensemble manifests, raw file IO, and the
seeded synthetic eddy generator used throughout the test suite.

File format: raw little-endian float32 in x-fastest linear order, with a
mandatory JSON sidecar ``<path>.json`` declaring
``{"dims": [nx, ny, nz], "spacing": [sx, sy, sz], "field": ..., "time": ...,
"member": ...}``.  An ensemble manifest is a JSON file
``{"field": ..., "time": ..., "members": [{"path": ..., "member_id": ...}]}``.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DataError, DimensionError


@dataclass(frozen=True)
class ScalarGrid:
    """A regular grid of float32 samples.

    ``values`` is flat in x-fastest order: value(x, y, z) sits at index
    ``x + nx * (y + ny * z)``.  2D fields use ``nz == 1``.
    """

    dims: tuple          # (nx, ny, nz)
    spacing: tuple       # physical step per axis
    values: np.ndarray   # float32, length nx*ny*nz
    field_name: str = "scalar"
    time_index: int = 0
    member_id: int = 0

    def __post_init__(self):
        nx, ny, nz = self.dims
        if nx < 1 or ny < 1 or nz < 1:
            raise DimensionError(f"dims must be >= 1, got {self.dims}")
        vals = np.ascontiguousarray(self.values, dtype=np.float32).ravel()
        if vals.size != nx * ny * nz:
            raise DimensionError(
                f"expected {nx * ny * nz} values for dims {self.dims}, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            bad = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise DataError(f"non-finite sample at linear index {bad}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "dims", (int(nx), int(ny), int(nz)))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def array(self):
        """View shaped (nz, ny, nx); index as array[z, y, x]."""
        nx, ny, nz = self.dims
        return self.values.reshape(nz, ny, nx)

    def value(self, x, y, z=0):
        nx, ny, _ = self.dims
        return float(self.values[x + nx * (y + ny * z)])

    @property
    def is_2d(self):
        return self.dims[2] == 1


@dataclass(frozen=True)
class VectorGrid:
    """Three component grids (u, v, w) with identical dims."""

    u: ScalarGrid
    v: ScalarGrid
    w: ScalarGrid

    def __post_init__(self):
        if not (self.u.dims == self.v.dims == self.w.dims):
            raise DimensionError(
                f"component dims differ: {self.u.dims}, {self.v.dims}, {self.w.dims}")


@dataclass
class EnsembleManifest:
    """An ordered collection of dimension-identical members of one field."""

    members: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.members) < 1:
            raise ArgumentError("ensemble needs at least one member")
        ref = self.members[0]
        for g in self.members[1:]:
            if g.dims != ref.dims or g.spacing != ref.spacing:
                raise DimensionError("ensemble members must share dims and spacing")
            if g.field_name != ref.field_name or g.time_index != ref.time_index:
                raise DataError("ensemble members must share field name and time step")

    @property
    def count(self):
        return len(self.members)

    @property
    def dims(self):
        return self.members[0].dims

    @property
    def spacing(self):
        return self.members[0].spacing

    @property
    def field_name(self):
        return self.members[0].field_name

    @property
    def time_index(self):
        return self.members[0].time_index

    def stacked(self):
        """Member values as float32 array of shape (M, nz, ny, nx)."""
        return np.stack([g.array for g in self.members])


# ---------------------------------------------------------------------------
# raw volume IO

def _sidecar_path(path):
    return str(path) + ".json"


def write_raw(grid, path):
    """Write a grid as raw f32 plus its JSON sidecar."""
    grid.values.astype("<f4").tofile(path)
    meta = {
        "dims": list(grid.dims),
        "spacing": list(grid.spacing),
        "field": grid.field_name,
        "time": grid.time_index,
        "member": grid.member_id,
    }
    with open(_sidecar_path(path), "w") as fh:
        json.dump(meta, fh)


def load_raw_volume(path, member_id=None):
    """Load a raw f32 volume; dims come from the mandatory sidecar."""
    side = _sidecar_path(path)
    if not os.path.exists(path):
        raise DataError(f"volume file not found: {path}")
    if not os.path.exists(side):
        raise DataError(f"missing sidecar: {side}")
    with open(side) as fh:
        meta = json.load(fh)
    nx, ny, nz = (int(d) for d in meta["dims"])
    expected = 4 * nx * ny * nz
    actual = os.path.getsize(path)
    if actual != expected:
        raise DimensionError(
            f"{path}: expected {expected} bytes for dims ({nx}, {ny}, {nz}), got {actual}")
    vals = np.fromfile(path, dtype="<f4")
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise DataError(f"{path}: non-finite sample at linear index {bad}")
    return ScalarGrid(
        dims=(nx, ny, nz),
        spacing=tuple(meta.get("spacing", [1.0, 1.0, 1.0])),
        values=vals,
        field_name=meta.get("field", "scalar"),
        time_index=int(meta.get("time", 0)),
        member_id=int(member_id if member_id is not None else meta.get("member", 0)),
    )


def save_manifest(ensemble, directory, name="ensemble"):
    """Write all members plus a manifest JSON; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    entries = []
    for g in ensemble.members:
        fname = f"{name}_m{g.member_id:03d}.raw"
        write_raw(g, os.path.join(directory, fname))
        entries.append({"path": fname, "member_id": g.member_id})
    manifest = {
        "field": ensemble.field_name,
        "time": ensemble.time_index,
        "members": entries,
    }
    mpath = os.path.join(directory, f"{name}.json")
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=1)
    return mpath


def load_manifest(path):
    """Read a manifest JSON and load every member volume."""
    with open(path) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    members = []
    for entry in manifest["members"]:
        p = entry["path"]
        if not os.path.isabs(p):
            p = os.path.join(base, p)
        members.append(load_raw_volume(p, member_id=entry.get("member_id")))
    return EnsembleManifest(members)


# ---------------------------------------------------------------------------
# derivation ops

def velocity_magnitude(v):
    """Per-voxel sqrt(u^2 + v^2 + w^2) of a vector grid."""
    u64 = v.u.values.astype(np.float64)
    v64 = v.v.values.astype(np.float64)
    w64 = v.w.values.astype(np.float64)
    mag = np.sqrt(u64 * u64 + v64 * v64 + w64 * w64)
    return ScalarGrid(v.u.dims, v.u.spacing, mag, field_name=v.u.field_name + "_mag",
                      time_index=v.u.time_index, member_id=v.u.member_id)


def slice_z(grid, z):
    """Extract the 2D slice at index z (result has nz == 1)."""
    nx, ny, nz = grid.dims
    if not 0 <= z < nz:
        raise IndexError(f"slice index {z} out of range for nz={nz}")
    vals = grid.array[z]
    return ScalarGrid((nx, ny, 1), grid.spacing, vals,
                      field_name=grid.field_name, time_index=grid.time_index,
                      member_id=grid.member_id)


def negate(grid):
    """Sign-flipped copy; maxima of the result are minima of the input."""
    return ScalarGrid(grid.dims, grid.spacing, -grid.values,
                      field_name=grid.field_name, time_index=grid.time_index,
                      member_id=grid.member_id)


def negate_ensemble(ensemble):
    return EnsembleManifest([negate(g) for g in ensemble.members])


def slice_ensemble(ensemble, z):
    return EnsembleManifest([slice_z(g, z) for g in ensemble.members])


# ---------------------------------------------------------------------------
# synthetic eddy ensemble

def _bump_layout(n_vortices, nx, ny):
    """Grid-of-cells layout keeping bump centers well separated."""
    best = None
    for gx in range(1, n_vortices + 1):
        gy = math.ceil(n_vortices / gx)
        cw, ch = nx / gx, ny / gy
        score = abs(cw - ch)
        if best is None or score < best[0]:
            best = (score, gx, gy)
    _, gx, gy = best
    return gx, gy


def synth_eddy_ensemble(seed, members, dims, n_vortices, jitter,
                        field_name="velocity_mag", time_index=0):
    """Seeded ensemble of Gaussian-bump fields standing in for eddy data.

    Each member superposes ``n_vortices`` isotropic bumps; per-member noise of
    scale ``jitter`` (grid units) displaces bump centers and perturbs their
    amplitudes.  Pure function of (seed, parameters).
    """
    nx, ny, nz = dims
    if nx < 1 or ny < 1 or nz < 1:
        raise DimensionError(f"dims must be >= 1, got {dims}")
    if members < 1:
        raise ArgumentError("members must be >= 1")
    if n_vortices < 1:
        raise ArgumentError("n_vortices must be >= 1")
    if jitter < 0:
        raise ArgumentError("jitter must be >= 0")

    rng = np.random.default_rng(seed)
    gx, gy = _bump_layout(n_vortices, nx, ny)
    cw, ch = nx / gx, ny / gy
    cells = [(i, j) for j in range(gy) for i in range(gx)]
    order = rng.permutation(len(cells))[:n_vortices]

    base_centers = []
    for ci in order:
        i, j = cells[ci]
        cx = (i + 0.5) * cw + rng.uniform(-0.15, 0.15) * cw
        cy = (j + 0.5) * ch + rng.uniform(-0.15, 0.15) * ch
        cz = rng.uniform(0.3, 0.7) * (nz - 1) if nz > 1 else 0.0
        base_centers.append((cx, cy, cz))
    base_amps = rng.uniform(0.85, 1.15, size=n_vortices)
    sigma = 0.16 * min(cw, ch)

    xs = np.arange(nx, dtype=np.float64)
    ys = np.arange(ny, dtype=np.float64)
    zs = np.arange(nz, dtype=np.float64)
    # tiny tilt breaks far-field plateaus so gradient destinations stay
    # deterministic; amplitude chosen to remain visible at float32
    tilt = 1e-4 * (xs[None, None, :] + 2.0 * ys[None, :, None]
                   + 0.0 * zs[:, None, None]) / (nx + 2.0 * ny)

    out = []
    for m in range(members):
        f = np.zeros((nz, ny, nx), dtype=np.float64) + tilt
        for b in range(n_vortices):
            cx, cy, cz = base_centers[b]
            dxj, dyj, dzj = rng.normal(0.0, 1.0, size=3) * jitter
            amp = base_amps[b] * max(0.2, 1.0 + 0.08 * jitter * rng.normal())
            cxm, cym = cx + dxj, cy + dyj
            czm = cz + (dzj if nz > 1 else 0.0)
            dx2 = (xs - cxm) ** 2
            dy2 = (ys - cym) ** 2
            dz2 = (zs - czm) ** 2 if nz > 1 else np.zeros(1)
            r2 = dz2[:, None, None] + dy2[None, :, None] + dx2[None, None, :]
            f += amp * np.exp(-0.5 * r2 / (sigma * sigma))
        out.append(ScalarGrid(dims, (1.0, 1.0, 1.0), f,
                              field_name=field_name, time_index=time_index,
                              member_id=m))
    return EnsembleManifest(out)


def subsample(ensemble, n, seed):
    """Seeded choice of n members without replacement, original order kept."""
    if not 1 <= n <= ensemble.count:
        raise ArgumentError(f"n must be in [1, {ensemble.count}], got {n}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(ensemble.count, size=n, replace=False))
    return EnsembleManifest([ensemble.members[i] for i in idx])
