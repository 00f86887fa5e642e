"""Hit-or-miss estimate of the excluded volume and the overlap predicate.

Molecule 1 sits at x_rel with orientation I, molecule 2 at the origin
with orientation Pbar.  The swept bodies overlap iff the distance
between their centre sets is <= D.
"""
from __future__ import annotations

import math

import numpy as np

from ..shapes import MoleculeShape, ShapeKind, segments, triangle_vertices
from ..so3 import Rotation
from . import geometry
from .result import ExcludedVolumeResult, Method

CHUNK = 1_000_000
MIN_SAMPLES = 10_000


def centre_set(shape: MoleculeShape) -> tuple[str, np.ndarray]:
    if shape.kind is ShapeKind.SPHERO_TRIANGLE:
        return "tri", np.array(triangle_vertices(shape))
    return "seg", segments(shape)


def _placed(shape: MoleculeShape, p_bar: Rotation):
    kind, body = centre_set(shape)
    return kind, np.ascontiguousarray(body), np.ascontiguousarray(body @ p_bar.m.T)


def primitive_distance(shape: MoleculeShape, p_bar: Rotation, x_rel) -> float:
    kind, s1, s2 = _placed(shape, p_bar)
    d = np.asarray(x_rel, dtype=float).reshape(1, 3)
    if kind == "tri":
        return float(geometry.tri_distances(d, s1, s2)[0])
    return float(geometry.segset_distances(d, s1, s2)[0])


def bounding_box(pts1: np.ndarray, pts2: np.ndarray, contact: float) -> tuple[np.ndarray, np.ndarray]:
    """Box holding every x with dist(S1 + x, S2) <= contact.

    Such x lie in S2 - S1 + B_contact, whose extent per axis is bounded
    by the vertex coordinates of both sets.
    """
    p1 = pts1.reshape(-1, 3)
    p2 = pts2.reshape(-1, 3)
    lo = p2.min(axis=0) - p1.max(axis=0) - contact
    hi = p2.max(axis=0) - p1.min(axis=0) + contact
    return lo, hi


def hit_or_miss(kind: str, s1: np.ndarray, s2: np.ndarray, contact: float, n_samples: int,
                seed: int) -> tuple[float, float]:
    """(volume, stderr) of {x : dist(s1 + x, s2) <= contact}.

    Chunk k draws from the k-th child of ``SeedSequence(seed)``, so the
    result depends only on (seed, n_samples, CHUNK).
    """
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be >= {MIN_SAMPLES}")
    lo, hi = bounding_box(s1, s2, contact)
    box = float(np.prod(hi - lo))
    counter = geometry.count_tri_overlaps if kind == "tri" else geometry.count_segset_overlaps
    n_chunks = -(-n_samples // CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    axes = geometry.separating_axes(s1, s2)
    hits = 0
    left = n_samples
    for child in children:
        n = min(CHUNK, left)
        left -= n
        rng = np.random.default_rng(child)
        disp = lo + rng.random((n, 3)) * (hi - lo)
        hits += int(counter(disp, s1, s2, contact, axes))
    frac = hits / n_samples
    return box * frac, box * math.sqrt(frac * (1.0 - frac) / n_samples)


def mc_excluded_volume(shape: MoleculeShape, p_bar: Rotation, D: float | None = None,
                       n_samples: int = 10_000_000, seed: int = 0) -> ExcludedVolumeResult:
    kind, s1, s2 = _placed(shape, p_bar)
    value, err = hit_or_miss(kind, s1, s2, shape.D if D is None else D, n_samples, seed)
    return ExcludedVolumeResult(value, err, Method.MONTE_CARLO)
