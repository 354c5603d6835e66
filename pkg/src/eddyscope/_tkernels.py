"""Union-find superlevel sweep for maxima persistence on a 2D grid.

Pixels are processed in descending (value, linear index) order; when two
components meet, the one whose peak is smaller in that order dies (elder
rule) with persistence = peak value - merge value.
"""

import numpy as np

from .accel import jit


@jit()
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@jit()
def persistence_sweep(values, order, w, h, is_max, pers, partner, merge_val):
    """Fill per-pixel maxima outputs; returns the number of maxima.

    values: flat float64 (w*h); order: pixel indices, descending sweep order.
    Outputs are full-length arrays indexed by pixel; entries are only
    meaningful where is_max is set.  partner is -1 for the global maximum.
    """
    n = w * h
    parent = np.full(n, -1, dtype=np.int64)
    comp_max = np.empty(n, dtype=np.int64)
    n_max = 0
    for oi in range(n):
        p = order[oi]
        vp = values[p]
        px = p % w
        py = p // w
        rcur = -1
        first_neighbor = -1
        for dy in range(-1, 2):
            qy = py + dy
            if qy < 0 or qy >= h:
                continue
            for dx in range(-1, 2):
                if dx == 0 and dy == 0:
                    continue
                qx = px + dx
                if qx < 0 or qx >= w:
                    continue
                q = qy * w + qx
                if parent[q] < 0:
                    continue
                rq = _find(parent, q)
                if rcur < 0:
                    parent[p] = rq
                    rcur = rq
                    first_neighbor = q
                    continue
                if rq == rcur:
                    continue
                ma = comp_max[rcur]
                mb = comp_max[rq]
                # elder: larger (value, index)
                a_elder = (values[ma] > values[mb]
                           or (values[ma] == values[mb] and ma > mb))
                if a_elder:
                    dying = mb
                    part = first_neighbor
                    keep = ma
                else:
                    dying = ma
                    part = q
                    keep = mb
                pers[dying] = values[dying] - vp
                merge_val[dying] = vp
                partner[dying] = part
                parent[rq] = rcur
                comp_max[rcur] = keep
        if rcur < 0:
            parent[p] = p
            comp_max[p] = p
            is_max[p] = True
            n_max += 1
    # global maximum: persistence spans the full data range
    gmax = comp_max[_find(parent, order[0])]
    vmin = values[order[n - 1]]
    pers[gmax] = values[gmax] - vmin
    merge_val[gmax] = vmin
    partner[gmax] = -1
    return n_max
