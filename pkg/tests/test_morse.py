import numpy as np
import pytest

import eddyscope as es
from eddyscope import morse
from eddyscope.errors import ArgumentError, SelectionError


def grid2d(arr):
    arr = np.asarray(arr, dtype=np.float64)
    h, w = arr.shape
    return es.ScalarGrid((w, h, 1), (1.0, 1.0, 1.0), arr.ravel())


def _nbrs8(p, w, h):
    py, px = divmod(p, w)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            qy, qx = py + dy, px + dx
            if 0 <= qy < h and 0 <= qx < w:
                yield qy * w + qx


def brute_destinations(f):
    """Independent per-pixel path-following with the same tie rules."""
    h, w = f.shape
    flat = f.ravel()

    def step(p):
        cands = [q for q in _nbrs8(p, w, h)
                 if (flat[q], q) > (flat[p], p)]
        if not cands:
            return p
        vmax = max(flat[q] for q in cands)
        return min(q for q in cands if flat[q] == vmax)

    dest = np.empty(w * h, dtype=np.int64)
    for p in range(w * h):
        cur = p
        while True:
            nxt = step(cur)
            if nxt == cur:
                break
            cur = nxt
        dest[p] = cur
    return dest.reshape(h, w)


def brute_persistence(f):
    """Independent sorted-merge oracle (dict union-find, batch elder rule)."""
    h, w = f.shape
    flat = f.ravel()
    n = w * h
    order = sorted(range(n), key=lambda p: (flat[p], p), reverse=True)
    parent = {}
    compmax = {}
    pers = {}

    def find(p):
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    for p in order:
        roots = {find(q) for q in _nbrs8(p, w, h) if q in parent}
        if not roots:
            parent[p] = p
            compmax[p] = p
            continue
        elder = max(roots, key=lambda r: (flat[compmax[r]], compmax[r]))
        for r in roots:
            if r != elder:
                m = compmax[r]
                pers[m] = flat[m] - flat[p]
            parent[r] = elder
        parent[p] = elder
    root = find(order[0])
    pers[compmax[root]] = flat[compmax[root]] - flat[order[-1]]
    return pers


def bump_field(w, h, centers, amps, sigma):
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    f = np.zeros((h, w))
    for (cx, cy), a in zip(centers, amps):
        f += a * np.exp(-0.5 * ((xs - cx) ** 2 + (ys - cy) ** 2) / sigma ** 2)
    return f


# ---------------------------------------------------------------------------
# destinations

def test_single_bump_single_basin():
    g = grid2d(bump_field(16, 12, [(8, 6)], [1.0], 3.0))
    d = morse.compute_destinations(g)
    assert d.cell_count == 1
    (mid,) = d.maxima
    assert np.all(d.labels == mid)


def test_two_bumps_partition_domain():
    g = grid2d(bump_field(24, 12, [(6, 6), (18, 6)], [1.0, 1.0], 2.5))
    d = morse.compute_destinations(g)
    assert d.cell_count == 2
    ids = d.maxima_ids()
    assert set(np.unique(d.labels)) == set(ids)


def test_destinations_match_brute_force():
    rng = np.random.default_rng(17)
    for _ in range(25):
        f = rng.permutation(36).astype(np.float64).reshape(6, 6)
        d = morse.compute_destinations(grid2d(f))
        assert np.array_equal(d.labels, brute_destinations(f))


def test_destination_invariants_random():
    rng = np.random.default_rng(23)
    f = rng.standard_normal((10, 14))
    d = morse.compute_destinations(grid2d(f))
    labels = set(np.unique(d.labels))
    assert labels == set(d.maxima)
    for mid in d.maxima:
        assert d.labels.ravel()[mid] == mid   # a maximum is its own destination


# ---------------------------------------------------------------------------
# persistence

def test_monotone_ramp_single_max():
    f = np.arange(24, dtype=np.float64).reshape(4, 6)
    pr = morse.compute_persistence(grid2d(f))
    assert len(pr.persistence) == 1
    ((mid, p),) = pr.persistence.items()
    assert p == 23.0
    assert pr.partner[mid] == -1


def test_two_bump_profile_hand_oracle():
    # profile [1, 10, 5, 8, 2] embedded in a 5x3 grid over a floor of 0
    f = np.zeros((3, 5))
    f[1] = [1.0, 10.0, 5.0, 8.0, 2.0]
    pr = morse.compute_persistence(grid2d(f))
    by_value = {round(pr.peak_value[m]): m for m in pr.persistence}
    assert set(by_value) == {10, 8}
    assert pr.persistence[by_value[10]] == 10.0   # global: f_max - f_min
    assert pr.persistence[by_value[8]] == 3.0     # dies at the 5 saddle
    assert pr.merge_value[by_value[8]] == 5.0


def test_persistence_shift_invariance():
    rng = np.random.default_rng(5)
    f = rng.standard_normal((8, 8))
    a = morse.compute_persistence(grid2d(f))
    b = morse.compute_persistence(grid2d(f + 100.0))
    assert set(a.persistence) == set(b.persistence)
    for m in a.persistence:
        # exact in math; bounded by float32 grid storage at the shifted scale
        assert a.persistence[m] == pytest.approx(b.persistence[m], abs=2e-4)


def test_persistence_matches_brute_force():
    rng = np.random.default_rng(29)
    for _ in range(25):
        f = rng.permutation(48).astype(np.float64).reshape(6, 8)
        pr = morse.compute_persistence(grid2d(f))
        oracle = brute_persistence(f)
        assert pr.persistence == oracle


def test_maxima_sets_agree_between_ops():
    rng = np.random.default_rng(31)
    f = rng.standard_normal((9, 9))
    d = morse.compute_destinations(grid2d(f))
    pr = morse.compute_persistence(grid2d(f))
    assert set(d.maxima) == set(pr.persistence)


# ---------------------------------------------------------------------------
# persistence graph

def test_graph_shape_and_edges():
    rng = np.random.default_rng(37)
    f = rng.standard_normal((12, 12))
    g = grid2d(f)
    pr = morse.compute_persistence(g)
    pg = morse.persistence_graph(g)
    assert pg.counts[0] == len(pr.persistence)
    assert np.all(np.diff(pg.counts) <= 0)
    assert pg.counts[-1] == 1
    assert pg.count_at(0.0) == len(pr.persistence)
    gp = max(pr.persistence.values())
    assert pg.count_at(gp * 1.01) == 1


def test_graph_count_matches_simplify():
    rng = np.random.default_rng(41)
    f = rng.standard_normal((10, 10))
    g = grid2d(f)
    d = morse.compute_destinations(g)
    pr = morse.compute_persistence(g)
    pg = morse.persistence_graph(pr)
    # generic thresholds, exact breakpoints, and just-above breakpoints
    cands = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0]
    cands += sorted(pr.persistence.values())
    cands += [np.nextafter(p, np.inf) for p in pr.persistence.values()]
    for t in cands:
        s = morse.simplify(d, pr, t)
        assert s.cell_count == pg.count_at(t), f"threshold {t}"


# ---------------------------------------------------------------------------
# simplify

def _two_bump_setup():
    g = grid2d(bump_field(24, 12, [(6, 6), (18, 6)], [1.0, 0.6], 2.5))
    d = morse.compute_destinations(g)
    pr = morse.compute_persistence(g)
    return g, d, pr


def test_simplify_zero_threshold_is_identity():
    _, d, pr = _two_bump_setup()
    s = morse.simplify(d, pr, 0.0)
    assert np.array_equal(s.labels, d.labels)
    assert s.maxima == d.maxima


def test_simplify_above_global_single_cell():
    _, d, pr = _two_bump_setup()
    s = morse.simplify(d, pr, max(pr.persistence.values()) + 1.0)
    assert s.cell_count == 1
    assert np.unique(s.labels).size == 1


def test_simplify_two_to_one():
    _, d, pr = _two_bump_setup()
    plo, phi = sorted(pr.persistence.values())
    s = morse.simplify(d, pr, (plo + phi) / 2)
    assert s.cell_count == 1
    # surviving maximum is the more persistent one
    (mid,) = s.maxima
    assert pr.persistence[mid] == phi


def test_simplify_keeps_eleven_bumps(ens2d_11):
    g = ens2d_11.members[0]
    d = morse.compute_destinations(g)
    pr = morse.compute_persistence(g)
    min_pers = min(pr.persistence.values())
    s = morse.simplify(d, pr, min_pers * 0.5)
    assert s.cell_count == 11


def test_simplify_idempotent_coarsening():
    rng = np.random.default_rng(47)
    for _ in range(10):
        f = rng.standard_normal((12, 12))
        g = grid2d(f)
        d = morse.compute_destinations(g)
        pr = morse.compute_persistence(g)
        t1, t2 = sorted(rng.uniform(0, 3, 2))
        once = morse.simplify(d, pr, t2)
        twice = morse.simplify(morse.simplify(d, pr, t1), pr, t2)
        assert np.array_equal(once.labels, twice.labels)
        assert once.maxima.keys() == twice.maxima.keys()


# ---------------------------------------------------------------------------
# negation duality

def test_negation_duality():
    rng = np.random.default_rng(53)
    f = rng.standard_normal((10, 10))   # distinct values a.s.
    d = morse.compute_destinations(es.negate(grid2d(f)))
    # maxima of -f must be exactly the strict local minima of f (8-neighbor)
    flat = f.ravel()
    minima = {p for p in range(f.size)
              if all(flat[p] < flat[q] for q in _nbrs8(p, 10, 10))}
    assert set(d.maxima) == minima


# ---------------------------------------------------------------------------
# scale selection

def test_scale_select_identical_members(ens2d_11):
    g = ens2d_11.members[0]
    graphs = [morse.persistence_graph(g)] * 5
    t, count, fraction = morse.simplification_scale_select(graphs, 1.0)
    assert fraction == 1.0
    assert t == 0.0
    assert count == graphs[0].counts[0]


def test_scale_select_synthetic_eleven(ens2d_11):
    graphs = [morse.persistence_graph(g) for g in ens2d_11.members]
    t, count, fraction = morse.simplification_scale_select(graphs, 0.5)
    assert count == 11
    assert fraction >= 0.5


def test_scale_select_unreachable():
    a = morse.PersistenceGraph(np.array([0.0]), np.array([3]))
    b = morse.PersistenceGraph(np.array([0.0]), np.array([4]))
    with pytest.raises(SelectionError, match="best fraction"):
        morse.simplification_scale_select([a, b], 0.9)


def test_scale_select_validation():
    with pytest.raises(ArgumentError):
        morse.simplification_scale_select([], 0.5)


# ---------------------------------------------------------------------------
# boundaries

def test_boundaries_single_cell_empty():
    g = grid2d(bump_field(12, 10, [(6, 5)], [1.0], 3.0))
    d = morse.compute_destinations(g)
    assert not morse.cell_boundaries(d).any()


def test_boundaries_two_half_planes():
    labels = np.zeros((6, 8), dtype=np.int64)
    labels[:, 4:] = 37
    d = morse.DestinationMap(8, 6, labels, {0: (0, 0, 1.0), 37: (5, 0, 1.0)})
    mask = morse.cell_boundaries(d)
    expect = np.zeros((6, 8), dtype=bool)
    expect[:, 3:5] = True   # both sides of the interface
    assert np.array_equal(mask, expect)


def test_boundaries_match_rescan():
    rng = np.random.default_rng(59)
    f = rng.standard_normal((14, 11))
    d = morse.compute_destinations(grid2d(f))
    mask = morse.cell_boundaries(d)
    h, w = d.labels.shape
    count = 0
    for y in range(h):
        for x in range(w):
            different = False
            for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)):
                qy, qx = y + dy, x + dx
                if 0 <= qy < h and 0 <= qx < w:
                    if d.labels[qy, qx] != d.labels[y, x]:
                        different = True
            if different:
                count += 1
                assert mask[y, x]
    assert count == int(mask.sum())


# ---------------------------------------------------------------------------
# CSV export

def test_persistence_csv_row_count(tmp_path):
    rng = np.random.default_rng(61)
    f = rng.standard_normal((9, 9))
    g = grid2d(f)
    pr = morse.compute_persistence(g)
    pg = morse.persistence_graph(pr)
    path = str(tmp_path / "graph.csv")
    morse.write_persistence_csv(pg, path)
    rows = open(path).read().strip().splitlines()
    distinct = np.unique(np.array(list(pr.persistence.values()))).size
    assert len(rows) - 1 == distinct + 1   # header + (distinct values + 1)
