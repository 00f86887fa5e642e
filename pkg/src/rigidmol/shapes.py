"""Rigid molecule models: rods, bent-cores and isosceles spherotriangles.

All geometry lives in the body frame (m1, m2, m3) = (e1, e2, e3).
``L`` is the total contour length: a rod spans L along m1, each arm of a
bent-core is L/2 long, and the two lateral sides of a spherotriangle
are L/2 long.  ``D`` is the sphere (bead) diameter, which is also the
contact distance between the two centre sets.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
import enum
import math
from typing import Optional

import numpy as np

from .so3 import Rotation

HARD_CORE_OVERLAP = math.inf  # exp(-inf) == 0.0 exactly


class ShapeKind(str, enum.Enum):
    ROD = "Rod"
    BENT_CORE = "BentCore"
    SPHERO_TRIANGLE = "SpheroTriangle"


class UnsupportedShape(ValueError):
    pass


@dataclass(frozen=True)
class MoleculeShape:
    kind: ShapeKind
    L: float
    D: float
    theta: Optional[float] = None
    N: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ShapeKind(self.kind))
        if not (self.L > 0 and self.D > 0):
            raise ValueError(f"L and D must be positive (L={self.L}, D={self.D})")
        if self.kind is ShapeKind.ROD:
            if self.theta is not None:
                raise ValueError("a rod takes no opening angle")
        else:
            if self.theta is None or not (0.0 < self.theta <= math.pi):
                raise ValueError(f"theta must lie in (0, pi], got {self.theta}")
        if self.N is not None:
            if int(self.N) != self.N or self.N < 2:
                raise ValueError(f"N must be an integer >= 2, got {self.N}")
            if self.kind is ShapeKind.BENT_CORE and self.N % 2:
                raise ValueError("bent-core bead count N must be even")

    @classmethod
    def rod(cls, L, D, N=None):
        return cls(ShapeKind.ROD, L, D, None, N)

    @classmethod
    def bent_core(cls, L, D, theta, N=None):
        return cls(ShapeKind.BENT_CORE, L, D, theta, N)

    @classmethod
    def sphero_triangle(cls, L, D, theta):
        return cls(ShapeKind.SPHERO_TRIANGLE, L, D, theta)

    def to_json(self) -> dict:
        d = {"kind": self.kind.value, "L": self.L, "D": self.D}
        if self.theta is not None:
            d["theta"] = self.theta
        if self.N is not None:
            d["N"] = self.N
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MoleculeShape":
        unknown = set(d) - {"kind", "L", "D", "theta", "N"}
        if unknown:
            raise ValueError(f"unknown shape fields: {sorted(unknown)}")
        return cls(d["kind"], float(d["L"]), float(d["D"]),
                   None if d.get("theta") is None else float(d["theta"]),
                   None if d.get("N") is None else int(d["N"]))


def beads(shape: MoleculeShape) -> np.ndarray:
    """Bead centres (N + 1, 3) with s_j = j/N - 1/2, j = 0..N.

    For a bent-core the apex bead is j = N/2 (s = 0).
    """
    if shape.kind is ShapeKind.SPHERO_TRIANGLE:
        raise UnsupportedShape("spherotriangles carry a surface bead density, not discrete beads")
    if shape.N is None:
        raise ValueError("discrete bead model needs N")
    s = np.arange(shape.N + 1) / shape.N - 0.5
    out = np.zeros((shape.N + 1, 3))
    if shape.kind is ShapeKind.ROD:
        out[:, 0] = shape.L * s
    else:
        h = 0.5 * shape.theta
        out[:, 0] = shape.L * (0.5 - np.abs(s)) * math.cos(h)
        out[:, 1] = shape.L * s * math.sin(h)
    return out


def triangle_vertices(shape: MoleculeShape) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Apex O at the origin, A and B on the laterals; AO ~ e_a, OB ~ e_b, BA ~ -m2."""
    if shape.kind is not ShapeKind.SPHERO_TRIANGLE:
        raise UnsupportedShape(f"{shape.kind.value} has no triangle")
    h = 0.5 * shape.L
    c, s = math.cos(0.5 * shape.theta), math.sin(0.5 * shape.theta)
    o = np.zeros(3)
    a = np.array([-h * c, -h * s, 0.0])
    b = np.array([-h * c, h * s, 0.0])
    return o, a, b


def segments(shape: MoleculeShape) -> np.ndarray:
    """Centre-line segments (k, 2, 3) of the continuum rod / bent-core models."""
    if shape.kind is ShapeKind.ROD:
        h = 0.5 * shape.L
        return np.array([[[-h, 0, 0], [h, 0, 0]]], dtype=float)
    if shape.kind is ShapeKind.BENT_CORE:
        half = 0.5 * shape.theta
        apex = np.array([0.5 * shape.L * math.cos(half), 0.0, 0.0])
        e1 = np.array([0.0, -0.5 * shape.L * math.sin(half), 0.0])
        e2 = np.array([0.0, 0.5 * shape.L * math.sin(half), 0.0])
        return np.array([[apex, e1], [apex, e2]])
    raise UnsupportedShape(f"{shape.kind.value} is not built from segments")


def reach(shape: MoleculeShape) -> float:
    """Largest distance from the body origin to a point of the centre set."""
    if shape.kind is ShapeKind.SPHERO_TRIANGLE:
        return 0.5 * shape.L
    return float(np.max(np.linalg.norm(segments(shape).reshape(-1, 3), axis=1)))


class PotentialKind(str, enum.Enum):
    HARD_CORE = "HardCore"
    LENNARD_JONES = "LennardJones"


@dataclass(frozen=True)
class PairPotential:
    """Bead-bead potential V0(r); energies in units of k_B T when ``epsilon`` is.

    For Lennard-Jones ``sigma`` defaults to D * 2**(-1/6), which puts the
    minimum at r = D.
    """

    kind: PotentialKind
    D: float
    epsilon: float = 1.0
    sigma: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PotentialKind(self.kind))
        if self.D <= 0:
            raise ValueError("D must be positive")
        if self.sigma is None:
            object.__setattr__(self, "sigma", self.D * 2.0 ** (-1.0 / 6.0))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind is PotentialKind.HARD_CORE:
            return np.where(r <= self.D, HARD_CORE_OVERLAP, 0.0)
        x6 = (self.sigma / r) ** 6
        return 4.0 * self.epsilon * (x6 * x6 - x6)

    @property
    def cutoff(self) -> float:
        """Distance beyond which V0 is treated as zero."""
        if self.kind is PotentialKind.HARD_CORE:
            return self.D
        return 3.0 * self.sigma

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "D": self.D, "epsilon": self.epsilon, "sigma": self.sigma}


def pair_energy(shape: MoleculeShape, potential: PairPotential, x_rel, p_bar: Rotation) -> float:
    """Bead-pair sum of V0 with molecule 1 at x_rel (orientation I) and molecule 2 at the origin (orientation p_bar)."""
    r1 = beads(shape) + np.asarray(x_rel, dtype=float)
    r2 = beads(shape) @ p_bar.m.T
    d = np.linalg.norm(r1[:, None, :] - r2[None, :, :], axis=-1)
    if potential.kind is PotentialKind.HARD_CORE:
        return HARD_CORE_OVERLAP if np.any(d <= potential.D) else 0.0
    return float(np.sum(potential(d)))


@dataclass(frozen=True)
class SymmetryGroup:
    """Generators of a molecular point group in the body frame.

    ``proper`` are rotations T with rho(T x) = rho(x); ``mirror_normals``
    are unit normals k of symmetry planes, for which G(J Pbar J) = G(Pbar)
    with J the pi-rotation about k.  ``continuous_axis`` flags full axial
    symmetry about that axis.
    """

    name: str
    proper: tuple = field(default_factory=tuple)
    mirror_normals: tuple = field(default_factory=tuple)
    continuous_axis: Optional[tuple] = None

    def generators(self, n_axial: int = 7) -> list[np.ndarray]:
        gens = [np.asarray(t, dtype=float) for t in self.proper]
        if self.continuous_axis is not None:
            for k in range(1, n_axial + 1):
                gens.append(Rotation.about_axis(self.continuous_axis, 2 * math.pi * k / (n_axial + 1) + 0.1).m)
        return gens

    def mirror_rotations(self) -> list[np.ndarray]:
        return [Rotation.about_axis(k, math.pi).m for k in self.mirror_normals]


PI_ABOUT_M1 = np.diag([1.0, -1.0, -1.0])
PI_ABOUT_M2 = np.diag([-1.0, 1.0, -1.0])
PI_ABOUT_M3 = np.diag([-1.0, -1.0, 1.0])


def symmetry_group(shape: MoleculeShape) -> SymmetryGroup:
    if shape.kind is ShapeKind.ROD:
        return SymmetryGroup("Dinfh", proper=(PI_ABOUT_M3,),
                             mirror_normals=((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
                             continuous_axis=(1.0, 0.0, 0.0))
    return SymmetryGroup("C2v", proper=(PI_ABOUT_M1,), mirror_normals=((0.0, 0.0, 1.0), (0.0, 1.0, 0.0)))
