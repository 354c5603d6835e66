import numpy as np
import pytest

import eddyscope as es


@pytest.fixture(scope="session")
def ens3d():
    """Small 3D ensemble with moderate jitter (render/fit tests)."""
    return es.synth_eddy_ensemble(5, 6, (32, 32, 16), 5, 0.4)


@pytest.fixture(scope="session")
def ens3d_flat():
    """Zero-jitter 3D ensemble: all members identical."""
    return es.synth_eddy_ensemble(5, 4, (24, 24, 8), 4, 0.0)


@pytest.fixture(scope="session")
def ens2d_11():
    """10-member, 11-bump 2D ensemble with small jitter (Morse tests)."""
    return es.synth_eddy_ensemble(11, 10, (128, 96, 1), 11, 0.5)


@pytest.fixture(scope="session")
def ens2d_highjitter():
    """High positional/amplitude variation, still 11 clean bumps per member."""
    return es.synth_eddy_ensemble(23, 10, (128, 96, 1), 11, 8.0)


@pytest.fixture(scope="session")
def tf_unit():
    return es.default_tf(0.0, 1.0)


def make_ensemble(voxel_samples, dims=(1, 1, 1)):
    """Manifest whose members hold the given per-member values (same value at
    every voxel unless an array is passed)."""
    members = []
    n = dims[0] * dims[1] * dims[2]
    for i, v in enumerate(voxel_samples):
        vals = np.full(n, v, dtype=np.float64) if np.isscalar(v) else np.asarray(v)
        members.append(es.ScalarGrid(dims, (1.0, 1.0, 1.0), vals, member_id=i))
    return es.EnsembleManifest(members)
