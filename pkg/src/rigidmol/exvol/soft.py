"""Homogenized kernel from the Mayer function on a 3D grid.

G(Pbar) = integral over x_rel of 1 - exp(-U(x_rel, Pbar) / kT).  For the
hard core U is infinite on overlap, so G is the excluded volume; the
overlap test uses the continuum centre sets.  Lennard-Jones energies
are bead-pair sums.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..shapes import MoleculeShape, PairPotential, PotentialKind, beads
from ..so3 import Rotation
from . import geometry
from .montecarlo import bounding_box, centre_set

CHUNK = 200_000


@dataclass(frozen=True)
class GridSpec:
    """Midpoint grid with ``n`` cells per axis.

    ``lo``/``hi`` default to the smallest box holding the interaction
    support; an explicit box must contain it.
    """

    n: int
    lo: Optional[tuple] = None
    hi: Optional[tuple] = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid needs n >= 2")


def _support(shape: MoleculeShape, potential: PairPotential, p_bar: Rotation):
    if potential.kind is PotentialKind.HARD_CORE:
        _, body = centre_set(shape)
        pts = body.reshape(-1, 3)
    else:
        pts = beads(shape)
    return bounding_box(pts, pts @ p_bar.m.T, potential.cutoff)


def _mayer_hardcore(shape, potential, p_bar, x):
    kind, body = centre_set(shape)
    s1 = np.ascontiguousarray(body)
    s2 = np.ascontiguousarray(body @ p_bar.m.T)
    dist = geometry.tri_distances(x, s1, s2) if kind == "tri" else geometry.segset_distances(x, s1, s2)
    return (dist <= potential.D).astype(float)


def _mayer_lj(shape, potential, p_bar, x, T):
    b = beads(shape)
    b2 = b @ p_bar.m.T
    diff = b[None, :, None, :] - b2[None, None, :, :] + x[:, None, None, :]
    r = np.linalg.norm(diff, axis=-1)
    e = potential(r)
    e = np.where(r > potential.cutoff, 0.0, e)
    u = e.sum(axis=(1, 2))
    with np.errstate(over="ignore"):
        return -np.expm1(-u / T)


def soft_kernel(shape: MoleculeShape, potential: PairPotential, T: float, p_bar: Rotation,
                grid: GridSpec) -> float:
    """Grid integral of the Mayer function over relative positions (T in units of epsilon/k_B)."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    lo, hi = _support(shape, potential, p_bar)
    if grid.lo is not None:
        glo, ghi = np.asarray(grid.lo, float), np.asarray(grid.hi, float)
        if np.any(glo > lo) or np.any(ghi < hi):
            raise ValueError(f"grid box does not contain the interaction support [{lo}, {hi}]")
        lo, hi = glo, ghi
    h = (hi - lo) / grid.n
    axes = [lo[k] + (np.arange(grid.n) + 0.5) * h[k] for k in range(3)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    total = 0.0
    for start in range(0, len(pts), CHUNK):
        x = pts[start:start + CHUNK]
        if potential.kind is PotentialKind.HARD_CORE:
            f = _mayer_hardcore(shape, potential, p_bar, x)
        else:
            f = _mayer_lj(shape, potential, p_bar, x, T)
        total += float(f.sum())
    return total * float(np.prod(h))
