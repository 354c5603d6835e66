"""End-to-end assembly of probabilistic Morse summary maps for a 2D ensemble:
per-member destinations and persistence, agreement-guided scale selection,
simplification, labeling, and the probability map."""

from dataclasses import dataclass

import numpy as np

from . import emorse, grid, morse
from .errors import ArgumentError


@dataclass
class MorsePipeline:
    ensemble: object
    destinations: list
    pairings: list
    graphs: list
    simplified: list
    threshold: float
    agreed_count: int
    agreement: float


def prepare_ensemble_2d(ensemble, slice_index=None, negate_field=False):
    """Reduce an ensemble to 2D members, optionally negating (the flow-minima
    convention for velocity magnitude fields)."""
    e = ensemble
    if e.dims[2] > 1:
        if slice_index is None:
            raise ArgumentError("3D ensemble needs a slice index for Morse analysis")
        e = grid.slice_ensemble(e, slice_index)
    if negate_field:
        e = grid.negate_ensemble(e)
    return e


def build_morse_pipeline(ensemble2d, threshold=None, target_agreement=0.5):
    """Compute per-member Morse structure and simplify at a common scale.

    With threshold=None the scale is the smallest one at which at least
    target_agreement of the members share the modal maxima count.
    """
    dests = [morse.compute_destinations(g) for g in ensemble2d.members]
    pairings = [morse.compute_persistence(g) for g in ensemble2d.members]
    graphs = [morse.persistence_graph(p) for p in pairings]
    if threshold is None:
        threshold, count, fraction = morse.simplification_scale_select(
            graphs, target_agreement)
    else:
        counts = [g.count_at(threshold) for g in graphs]
        vals, freq = np.unique(counts, return_counts=True)
        i = int(np.argmax(freq))
        count, fraction = int(vals[i]), float(freq[i] / len(graphs))
    simplified = [morse.simplify(d, p, threshold)
                  for d, p in zip(dests, pairings)]
    return MorsePipeline(ensemble2d, dests, pairings, graphs, simplified,
                         float(threshold), int(count), float(fraction))


def default_mandatory_level(ensemble2d):
    """15% of the lower-envelope value span above its minimum."""
    env = ensemble2d.stacked().astype(np.float64).min(axis=0)
    lo, hi = float(env.min()), float(env.max())
    return lo + 0.15 * (hi - lo)


def build_probabilistic_map(ensemble2d, strategy, seed=0, threshold=None,
                            k=None, target_agreement=0.5, min_level=None,
                            pipeline=None):
    """Label member maxima with the chosen strategy and build the map.

    Returns (ProbabilisticMap, LabelAssignment, MorsePipeline).
    """
    pipe = pipeline or build_morse_pipeline(ensemble2d, threshold, target_agreement)
    if strategy == "kmeans":
        kk = k if k is not None else pipe.agreed_count
        assignment = emorse.label_kmeans(pipe.simplified, kk, seed)
    elif strategy == "morse_mapping":
        ids = [g.member_id for g in ensemble2d.members]
        assignment = emorse.label_morse_mapping(pipe.simplified, member_ids=ids)
    elif strategy == "nearest_mandatory":
        lvl = min_level if min_level is not None else default_mandatory_level(ensemble2d)
        regions = emorse.mandatory_maxima(ensemble2d, lvl)
        assignment = emorse.label_nearest_mandatory(pipe.simplified, regions)
    else:
        raise ArgumentError(
            f"unknown strategy '{strategy}' (kmeans, morse_mapping, nearest_mandatory)")
    pm = emorse.probabilistic_map(pipe.simplified, assignment)
    return pm, assignment, pipe
