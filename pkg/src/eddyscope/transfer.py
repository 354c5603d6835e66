"""Piecewise-linear transfer functions mapping scalar value to RGBA."""

import json

import numpy as np

from .errors import ArgumentError


class TransferFunction:
    """Sorted control points (s, r, g, b, a); linear between points, clamped
    beyond the ends.  Channels live in [0, 1]."""

    def __init__(self, points):
        pts = sorted((tuple(float(v) for v in p) for p in points), key=lambda p: p[0])
        if len(pts) < 2:
            raise ArgumentError("transfer function needs at least 2 control points")
        s = np.array([p[0] for p in pts], dtype=np.float64)
        if np.any(np.diff(s) <= 0):
            raise ArgumentError("control point scalars must be strictly increasing")
        rgba = np.array([p[1:5] for p in pts], dtype=np.float64)
        if rgba.shape[1] != 4:
            raise ArgumentError("each control point needs (s, r, g, b, a)")
        if np.any(rgba < 0) or np.any(rgba > 1):
            raise ArgumentError("channels must lie in [0, 1]")
        self.s = s
        self.rgba = rgba

    def __call__(self, x):
        """Evaluate to RGBA; x scalar or array."""
        x = np.asarray(x, dtype=np.float64)
        out = np.empty(x.shape + (4,))
        for c in range(4):
            out[..., c] = np.interp(x, self.s, self.rgba[:, c])
        return out

    def to_json(self):
        return {"points": [
            {"s": float(s), "r": float(r), "g": float(g), "b": float(b), "a": float(a)}
            for s, (r, g, b, a) in zip(self.s, self.rgba)]}

    @classmethod
    def from_json(cls, obj):
        try:
            pts = [(p["s"], p["r"], p["g"], p["b"], p["a"]) for p in obj["points"]]
        except (KeyError, TypeError) as exc:
            raise ArgumentError(f"malformed transfer function JSON: {exc}")
        return cls(pts)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def default_tf(lo, hi):
    """Preset for magnitude fields: yellow -> blue -> red with the low,
    moderate, and high anchors at 0.2/0.5/0.8 of the [lo, hi] data range."""
    span = hi - lo
    if span <= 0:
        span = 1.0
    p = lambda t: lo + t * span
    return TransferFunction([
        (p(0.0), 1.0, 1.0, 0.85, 0.0),
        (p(0.2), 0.95, 0.85, 0.25, 0.25),   # low magnitudes: yellow
        (p(0.5), 0.2, 0.3, 0.9, 0.5),       # moderate: blue
        (p(0.8), 0.9, 0.1, 0.1, 0.85),      # high: red
        (p(1.0), 0.75, 0.05, 0.05, 0.95),
    ])
