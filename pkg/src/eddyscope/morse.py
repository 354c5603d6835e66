"""Morse-complex machinery for one 2D scalar field: steepest-ascent gradient
destinations, maxima persistence, simplification, persistence graphs, and
cell boundaries.

All tie handling uses the total order (value, linear index): pixel q is
higher than p when its value is larger, or values are equal and q's linear
index is larger.  Ascent is 8-connected; cell boundaries are 4-connected.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import _tkernels as tk
from .errors import ArgumentError, SelectionError


@dataclass
class DestinationMap:
    """Per-pixel id of the local maximum reached by steepest ascent.

    Maximum ids are the maxima's own linear pixel indices, so every listed
    maximum is its own destination.
    """

    width: int
    height: int
    labels: np.ndarray          # (h, w) int64 of maximum pixel ids
    maxima: dict                # id -> (x, y, value)

    def maxima_ids(self):
        return sorted(self.maxima)

    @property
    def cell_count(self):
        return len(self.maxima)


@dataclass
class PersistencePairing:
    """Per-maximum persistence and merge partner (elder rule)."""

    persistence: dict           # max id -> persistence (>= 0)
    partner: dict               # max id -> saddle-side pixel id (-1 for global)
    merge_value: dict           # max id -> value at which the maximum dies
    peak_value: dict            # max id -> field value at the maximum
    global_max: int


@dataclass
class PersistenceGraph:
    """Surviving-maxima count as a piecewise-constant function of threshold.

    thresholds[0] == 0; counts[i] = surviving count for any threshold in
    (thresholds[i], thresholds[i+1]].
    """

    thresholds: np.ndarray
    counts: np.ndarray

    def count_at(self, threshold):
        # survivors have persistence >= threshold; curve rows store the count
        # holding just above each breakpoint
        j = int(np.searchsorted(self.thresholds, threshold, side="left")) - 1
        if j < 0:
            j = 0
        return int(self.counts[j])


def _field2d(grid):
    if grid.dims[2] != 1:
        raise ArgumentError("morse operations need a 2D grid (nz == 1)")
    return grid.array[0].astype(np.float64)


def compute_destinations(grid):
    """Steepest-ascent destination of every pixel (vectorized pointer jump).

    Each pixel steps to its highest strictly-ascending 8-neighbor (value
    ties among candidates resolved to the lowest linear index) until a pixel
    with no higher neighbor remains; that pixel is a maximum.
    """
    f = _field2d(grid)
    h, w = f.shape
    n = w * h
    idx = np.arange(n, dtype=np.int64).reshape(h, w)

    best_val = np.full((h, w), -np.inf)
    best_idx = idx.copy()
    cand_idx_min = np.full((h, w), np.iinfo(np.int64).max, dtype=np.int64)

    shifts = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    for dy, dx in shifts:
        ys = slice(max(dy, 0), h + min(dy, 0))
        xs = slice(max(dx, 0), w + min(dx, 0))
        ysn = slice(max(-dy, 0), h + min(-dy, 0))
        xsn = slice(max(-dx, 0), w + min(-dx, 0))
        nv = f[ysn, xsn]
        ni = idx[ysn, xsn]
        cv = f[ys, xs]
        ci = idx[ys, xs]
        ascending = (nv > cv) | ((nv == cv) & (ni > ci))
        nvv = np.where(ascending, nv, -np.inf)
        sub_best = best_val[ys, xs]
        sub_cmin = cand_idx_min[ys, xs]
        higher = nvv > sub_best
        equal = nvv == sub_best
        sub_cmin = np.where(higher, ni,
                            np.where(equal & np.isfinite(nvv), np.minimum(sub_cmin, ni),
                                     sub_cmin))
        best_val[ys, xs] = np.where(higher, nvv, sub_best)
        cand_idx_min[ys, xs] = sub_cmin

    has_up = np.isfinite(best_val)
    nxt = np.where(has_up, cand_idx_min, idx).ravel()

    dest = nxt.copy()
    while True:
        d2 = dest[dest]
        if np.array_equal(d2, dest):
            break
        dest = d2

    flat = f.ravel()
    max_ids = np.flatnonzero(nxt == np.arange(n))
    maxima = {int(i): (int(i % w), int(i // w), float(flat[i])) for i in max_ids}
    return DestinationMap(w, h, dest.reshape(h, w), maxima)


def compute_persistence(grid):
    """Superlevel-set persistence of all maxima by descending sweep."""
    f = _field2d(grid)
    h, w = f.shape
    flat = np.ascontiguousarray(f.ravel())
    n = flat.size
    # descending (value, index): reverse of ascending lexsort
    order = np.lexsort((np.arange(n), flat))[::-1].astype(np.int64).copy()
    is_max = np.zeros(n, dtype=np.bool_)
    pers = np.zeros(n)
    partner = np.full(n, -2, dtype=np.int64)
    merge_val = np.zeros(n)
    tk.persistence_sweep(flat, order, w, h, is_max, pers, partner, merge_val)
    ids = np.flatnonzero(is_max)
    gmax = int(order[0])  # highest (value, index) pixel is the global maximum
    return PersistencePairing(
        persistence={int(i): float(pers[i]) for i in ids},
        partner={int(i): int(partner[i]) for i in ids},
        merge_value={int(i): float(merge_val[i]) for i in ids},
        peak_value={int(i): float(flat[i]) for i in ids},
        global_max=gmax,
    )


def _cancel_order(pairing):
    """Cancellation order: increasing persistence, elder-rule ties last."""
    return sorted(pairing.persistence,
                  key=lambda m: (pairing.persistence[m], pairing.peak_value[m], m))


def simplify(dest, pairing, threshold):
    """Cancel maxima with persistence < threshold (increasing order); each
    cancelled cell merges into the cell its merge partner belongs to at
    cancellation time.  The last surviving maximum is never cancelled."""
    if threshold < 0:
        raise ArgumentError("threshold must be >= 0")
    remap = {}

    def resolve(m):
        while m in remap:
            m = remap[m]
        return m

    alive = set(dest.maxima)
    flat_labels = dest.labels.ravel()
    for m in _cancel_order(pairing):
        if pairing.persistence[m] >= threshold:
            break
        if m not in alive:
            continue
        if len(alive) == 1:
            break
        part = pairing.partner[m]
        if part < 0:
            continue
        target = resolve(int(flat_labels[part]))
        if target == m:
            # partner drained into the dying cell through earlier merges;
            # fall back to any other survivor (deterministic lowest id)
            others = [a for a in alive if a != m]
            target = min(others)
        remap[m] = target
        alive.discard(m)

    lut = np.arange(dest.width * dest.height, dtype=np.int64)
    for m in list(remap):
        lut[m] = resolve(m)
    labels = lut[dest.labels]
    maxima = {m: dest.maxima[m] for m in alive}
    return DestinationMap(dest.width, dest.height, labels, maxima)


def persistence_graph(grid_or_pairing):
    """Piecewise-constant threshold -> surviving maxima count curve."""
    pairing = (grid_or_pairing if isinstance(grid_or_pairing, PersistencePairing)
               else compute_persistence(grid_or_pairing))
    pvals = np.sort(np.array(list(pairing.persistence.values())))
    total = pvals.size
    distinct = np.unique(pvals)
    thresholds = [0.0]
    counts = [total]
    for p in distinct:
        # count for thresholds just above p
        c = int(np.sum(pvals > p))
        thresholds.append(float(p))
        counts.append(max(c, 1))
    return PersistenceGraph(np.array(thresholds), np.array(counts, dtype=np.int64))


def simplification_scale_select(graphs, target_agreement):
    """Smallest threshold at which >= target_agreement of the member graphs
    share the modal maxima count; returns (threshold, count, fraction)."""
    if not graphs:
        raise ArgumentError("need at least one persistence graph")
    if not 0 < target_agreement <= 1:
        raise ArgumentError("target agreement must be in (0, 1]")
    cands = np.unique(np.concatenate([g.thresholds for g in graphs]))
    # sentinel past the largest breakpoint so the all-collapsed regime
    # (every member at a single maximum) is also examined
    cands = np.append(cands, np.nextafter(cands[-1], np.inf))
    best = (0.0, 0, 0.0)
    for t in cands:
        counts = [g.count_at(t) for g in graphs]
        vals, freq = np.unique(counts, return_counts=True)
        i = int(np.argmax(freq))
        fraction = freq[i] / len(graphs)
        if fraction > best[2]:
            best = (float(t), int(vals[i]), float(fraction))
        if fraction >= target_agreement:
            return float(t), int(vals[i]), float(fraction)
    raise SelectionError(
        f"no threshold reaches agreement {target_agreement}; best fraction "
        f"{best[2]:.3f} (count {best[1]}) at threshold {best[0]:.6g}")


def cell_boundaries(dest):
    """Mask of pixels with a 4-neighbor in a different cell (border excluded)."""
    lab = dest.labels
    mask = np.zeros_like(lab, dtype=bool)
    mask[:, :-1] |= lab[:, :-1] != lab[:, 1:]
    mask[:, 1:] |= lab[:, 1:] != lab[:, :-1]
    mask[:-1, :] |= lab[:-1, :] != lab[1:, :]
    mask[1:, :] |= lab[1:, :] != lab[:-1, :]
    return mask


def write_persistence_csv(graph, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["threshold", "count"])
        for t, c in zip(graph.thresholds, graph.counts):
            wr.writerow([repr(float(t)), int(c)])


def save_destination_map(dest, path_prefix):
    """Raw int32 label plane plus JSON maxima sidecar."""
    import json
    dest.labels.astype("<i4").tofile(path_prefix + ".i32")
    meta = {
        "width": dest.width,
        "height": dest.height,
        "maxima": [{"id": int(m), "x": x, "y": y, "value": v}
                   for m, (x, y, v) in sorted(dest.maxima.items())],
    }
    with open(path_prefix + ".json", "w") as fh:
        json.dump(meta, fh, indent=1)
