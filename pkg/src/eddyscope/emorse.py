"""Cross-member maxima labeling, probabilistic maps over global labels, and
the entropy/agreement exploration views.

Global label ids are canonical (member-order independent): k-means clusters
are relabeled by centroid order, Morse-mapping labels follow the reference
member's maxima ids, and mandatory regions are ordered by discovery level.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import morse
from .errors import ArgumentError, ConsistencyError

# fixed categorical palette; label color = PALETTE[label % 16]
PALETTE = np.array([
    (57, 106, 177), (218, 124, 48), (62, 150, 81), (204, 37, 41),
    (83, 81, 84), (107, 76, 154), (146, 36, 40), (148, 139, 61),
    (93, 165, 218), (250, 164, 58), (96, 189, 104), (241, 88, 84),
    (178, 145, 47), (178, 118, 178), (77, 77, 77), (241, 124, 176),
], dtype=np.uint8)


def palette_for(n_labels):
    idx = np.arange(n_labels) % len(PALETTE)
    return PALETTE[idx]


@dataclass
class LabelAssignment:
    """Per-member map from maxima ids to global label ids."""

    strategy: str
    member_labels: list          # one dict (max id -> label) per member
    n_labels: int
    palette: np.ndarray = field(default=None)
    centers: np.ndarray = field(default=None)   # (L, 2) label anchor positions

    def __post_init__(self):
        if self.palette is None:
            self.palette = palette_for(self.n_labels)


@dataclass
class ProbabilisticMap:
    """Per-pixel probability vector over global labels (counts / M)."""

    probs: np.ndarray            # (L, h, w) float64
    member_count: int

    @property
    def n_labels(self):
        return self.probs.shape[0]

    @property
    def shape(self):
        return self.probs.shape[1:]

    def entropy(self):
        p = self.probs
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(p > 0, -p * np.log2(p), 0.0)
        return t.sum(axis=0)

    def argmax_labels(self):
        # ties resolve to the lowest label id (np.argmax convention)
        return self.probs.argmax(axis=0)


@dataclass
class MandatoryRegion:
    region_id: int
    pixels: np.ndarray           # linear pixel indices
    centroid: tuple              # (x, y)
    level: float                 # superlevel at which the region fired
    value_interval: tuple        # (level, max lower-envelope value inside)


# ---------------------------------------------------------------------------
# labeling strategies

def _pooled_maxima(member_dests):
    pts = []
    owner = []
    for mi, d in enumerate(member_dests):
        for mid in d.maxima_ids():
            x, y, _ = d.maxima[mid]
            pts.append((float(x), float(y)))
            owner.append((mi, mid))
    return np.array(pts), owner


def label_kmeans(member_dests, k, seed):
    """k-means++ / Lloyd clustering of pooled maxima positions.

    Points are clustered in a canonical (position-sorted) order and final
    labels follow centroid lexicographic order, so the assignment does not
    depend on member order.
    """
    pts, owner = _pooled_maxima(member_dests)
    n = len(pts)
    if k < 1 or k > n:
        raise ArgumentError(f"k must be in [1, {n}], got {k}")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    p = pts[order]

    rng = np.random.default_rng(seed)
    centers = np.empty((k, 2))
    centers[0] = p[rng.integers(n)]
    d2 = ((p - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = p[rng.integers(n)]
        else:
            centers[j] = p[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((p - centers[j]) ** 2).sum(axis=1))

    assign = np.full(n, -1)
    for _ in range(100):
        dist = ((p[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = dist.argmin(axis=1)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            sel = assign == j
            if sel.any():
                centers[j] = p[sel].mean(axis=0)
            else:
                # deterministic re-seed at the point farthest from its center
                far = dist.min(axis=1).argmax()
                centers[j] = p[far]

    # canonical label order by centroid position
    corder = np.lexsort((centers[:, 1], centers[:, 0]))
    relabel = np.empty(k, dtype=np.int64)
    relabel[corder] = np.arange(k)
    labels_sorted = relabel[assign]

    member_labels = [dict() for _ in member_dests]
    for pos_sorted, lab in zip(order, labels_sorted):
        mi, mid = owner[pos_sorted]
        member_labels[mi][mid] = int(lab)
    return LabelAssignment("kmeans", member_labels, k,
                           centers=centers[corder])


def pick_reference_member(member_dests, member_ids=None):
    """Member with the lowest id among those whose simplified maxima count
    equals the modal count (member-order independent)."""
    ids = member_ids if member_ids is not None else list(range(len(member_dests)))
    counts = [d.cell_count for d in member_dests]
    vals, freq = np.unique(counts, return_counts=True)
    modal = int(vals[np.argmax(freq)])
    candidates = [i for i, c in enumerate(counts) if c == modal]
    return min(candidates, key=lambda i: ids[i])


def label_morse_mapping(member_dests, reference=None, member_ids=None):
    """Each reference maximum founds a label; every member maximum takes the
    label of the reference's gradient destination at its own pixel."""
    if reference is None:
        reference = pick_reference_member(member_dests, member_ids)
    ref = member_dests[reference]
    if ref.cell_count < 1:
        raise ArgumentError("reference member has no maxima")
    ref_ids = ref.maxima_ids()
    lab_of_refmax = {mid: i for i, mid in enumerate(ref_ids)}
    member_labels = []
    centers = np.array([[ref.maxima[mid][0], ref.maxima[mid][1]] for mid in ref_ids],
                       dtype=np.float64)
    for d in member_dests:
        lab = {}
        for mid in d.maxima_ids():
            x, y, _ = d.maxima[mid]
            lab[mid] = lab_of_refmax[int(ref.labels[y, x])]
        member_labels.append(lab)
    return LabelAssignment("morse_mapping", member_labels, len(ref_ids),
                           centers=centers)


def label_nearest_mandatory(member_dests, regions):
    """Label each maximum by the Euclidean-nearest mandatory region centroid
    (ties to the lowest region id)."""
    if not regions:
        raise ArgumentError("need at least one mandatory region")
    cents = np.array([r.centroid for r in regions], dtype=np.float64)
    member_labels = []
    for d in member_dests:
        lab = {}
        for mid in d.maxima_ids():
            x, y, _ = d.maxima[mid]
            d2 = ((cents - (x, y)) ** 2).sum(axis=1)
            lab[mid] = int(np.argmin(d2))   # argmin takes lowest index on ties
        member_labels.append(lab)
    return LabelAssignment("nearest_mandatory", member_labels, len(regions),
                           centers=cents)


# ---------------------------------------------------------------------------
# mandatory maxima (envelope variant)

def mandatory_maxima(ensemble, min_level):
    """Connected superlevel components of the pointwise lower envelope in
    which every member attains a local maximum, reported at the highest level
    where that first holds (so regions are minimal and pairwise disjoint)."""
    if ensemble.count < 2:
        raise ArgumentError("mandatory maxima need M >= 2 members")
    if ensemble.count > 64:
        raise ArgumentError("mandatory maxima support at most 64 members")
    stack = ensemble.stacked().astype(np.float64)[:, 0]   # (M, h, w)
    f_min = stack.min(axis=0)
    h, w = f_min.shape
    n = h * w

    member_max_bit = np.zeros(n, dtype=np.uint64)
    for mi, g in enumerate(ensemble.members):
        d = morse.compute_destinations(g)
        for mid in d.maxima_ids():
            member_max_bit[mid] |= np.uint64(1) << np.uint64(mi)
    full = np.uint64((1 << ensemble.count) - 1)

    flat = f_min.ravel()
    order = np.lexsort((np.arange(n), flat))[::-1]
    order = order[flat[order] >= min_level]

    parent = np.full(n, -1, dtype=np.int64)
    bits = np.zeros(n, dtype=np.uint64)
    has_marked = np.zeros(n, dtype=bool)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    regions = []
    pos = 0
    while pos < len(order):
        # add all pixels sharing this level, then test components
        level = flat[order[pos]]
        touched = []
        while pos < len(order) and flat[order[pos]] == level:
            p = int(order[pos])
            parent[p] = p
            bits[p] = member_max_bit[p]
            py, px = divmod(p, w)
            for dy in (-1, 0, 1):
                qy = py + dy
                if qy < 0 or qy >= h:
                    continue
                for dx in (-1, 0, 1):
                    if dx == 0 and dy == 0:
                        continue
                    qx = px + dx
                    if qx < 0 or qx >= w:
                        continue
                    q = qy * w + qx
                    if parent[q] < 0:
                        continue
                    rp, rq = find(p), find(q)
                    if rp != rq:
                        parent[rq] = rp
                        bits[rp] |= bits[rq]
                        has_marked[rp] |= has_marked[rq]
            touched.append(p)
            pos += 1
        roots = {find(p) for p in touched}
        for r in roots:
            if bits[r] == full and not has_marked[r]:
                has_marked[r] = True
                members_px = np.flatnonzero(
                    np.fromiter((parent[i] >= 0 and find(i) == r for i in range(n)),
                                dtype=bool, count=n))
                xs = members_px % w
                ys = members_px // w
                regions.append(MandatoryRegion(
                    region_id=-1,
                    pixels=members_px,
                    centroid=(float(xs.mean()), float(ys.mean())),
                    level=float(level),
                    value_interval=(float(level), float(flat[members_px].max())),
                ))
    regions.sort(key=lambda r: (-r.level, r.centroid))
    for i, r in enumerate(regions):
        r.region_id = i
    return regions


# ---------------------------------------------------------------------------
# probabilistic map and views

def probabilistic_map(member_dests, assignment):
    """Per-pixel fraction of members whose gradient destination carries each
    global label."""
    if not member_dests:
        raise ArgumentError("need at least one member")
    h, w = member_dests[0].labels.shape
    L = assignment.n_labels
    m = len(member_dests)
    counts = np.zeros((L, h, w), dtype=np.int64)
    for mi, d in enumerate(member_dests):
        if d.labels.shape != (h, w):
            raise ArgumentError("destination maps must share dims")
        lut = np.full(w * h, -1, dtype=np.int64)
        for mid, lab in assignment.member_labels[mi].items():
            lut[mid] = lab
        lab_img = lut[d.labels]
        if (lab_img < 0).any():
            missing = int(d.labels.ravel()[np.flatnonzero((lab_img < 0).ravel())[0]])
            raise ConsistencyError(
                f"member {mi}: maximum {missing} has no global label")
        for ell in range(L):
            counts[ell] += lab_img == ell
    return ProbabilisticMap(counts.astype(np.float64) / m, m)


def blend_view(pm, palette):
    """Per-pixel convex mix of label colors, weighted by probability."""
    if palette.shape[0] < pm.n_labels:
        raise ArgumentError("palette does not cover all labels")
    cols = palette[: pm.n_labels].astype(np.float64)       # (L, 3)
    rgb = np.einsum("lhw,lc->hwc", pm.probs, cols)
    return rgb


def boundary_mask(pm):
    """4-neighbor boundaries of the argmax-label partition."""
    lab = pm.argmax_labels()
    mask = np.zeros_like(lab, dtype=bool)
    mask[:, :-1] |= lab[:, :-1] != lab[:, 1:]
    mask[:, 1:] |= lab[:, 1:] != lab[:, :-1]
    mask[:-1, :] |= lab[:-1, :] != lab[1:, :]
    mask[1:, :] |= lab[1:, :] != lab[:-1, :]
    return mask


def entropy_mask(pm, tau):
    if tau < 0:
        raise ArgumentError("entropy threshold must be >= 0")
    return pm.entropy() >= tau


def agreement_mask(pm, alpha):
    if not 0 < alpha <= 1:
        raise ArgumentError("agreement threshold must be in (0, 1]")
    return pm.probs.max(axis=0) >= alpha


def view_image(pm, palette, mode, param=None, background=(255, 255, 255)):
    """Render one exploration view to an RGBA8 image array (h, w, 4)."""
    rgb = blend_view(pm, palette)
    if mode == "blend":
        sel = None
    elif mode == "boundaries":
        sel = None
    elif mode == "entropy":
        sel = entropy_mask(pm, float(param))
    elif mode == "agreement":
        sel = agreement_mask(pm, float(param))
    else:
        raise ArgumentError(f"unknown view mode '{mode}'")
    if sel is not None:
        bg = np.array(background, dtype=np.float64)
        rgb = np.where(sel[..., None], rgb, bg)
    if mode == "boundaries":
        rgb[boundary_mask(pm)] = 0.0
    out = np.empty(rgb.shape[:2] + (4,), dtype=np.uint8)
    out[..., :3] = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
    out[..., 3] = 255
    return out


def query(pm, x, y, palette):
    """Labels with positive probability at a pixel, most probable first."""
    h, w = pm.shape
    if not (0 <= x < w and 0 <= y < h):
        raise IndexError(f"pixel ({x}, {y}) outside map {w}x{h}")
    p = pm.probs[:, y, x]
    entries = [(ell, float(p[ell])) for ell in range(pm.n_labels) if p[ell] > 0]
    entries.sort(key=lambda e: (-e[1], e[0]))
    return [{"label": ell, "prob": prob,
             "color": [int(c) for c in palette[ell]]}
            for ell, prob in entries]


# ---------------------------------------------------------------------------
# file format: JSON header line + L raw f32 probability planes

def save_probabilistic_map(pm, palette, path):
    header = {
        "dims": [int(pm.shape[1]), int(pm.shape[0])],
        "M": pm.member_count,
        "members": pm.member_count,
        "labels": [{"id": i, "color": [int(c) for c in palette[i]]}
                   for i in range(pm.n_labels)],
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode())
        fh.write(np.ascontiguousarray(pm.probs, dtype="<f4").tobytes())


def load_probabilistic_map(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        payload = fh.read()
    w, h = header["dims"]
    labels = header["labels"]
    planes = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    planes = planes.reshape(len(labels), h, w)
    palette = np.array([l["color"] for l in labels], dtype=np.uint8)
    pm = ProbabilisticMap(planes, int(header.get("M", header.get("members"))))
    return pm, palette
