"""Least-squares projection of a kernel G(Pbar) onto a polynomial basis.

The normal equations are  sum_i <q_i q_j> c_i = <G q_j>  with <.> the
Haar average, evaluated on an SO(3) quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import enum
import math
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from ..shapes import SymmetryGroup
from ..so3 import Rotation, SO3Quadrature, sample_haar_matrices
from .basis import MonomialBasis, build_basis


class SingularGram(ValueError):
    pass


def batched(f):
    """Mark ``f`` as mapping an (n, 3, 3) stack of Pbar to n values."""
    f.batched = True
    return f


def kernel_values(G: Callable, p_bars: np.ndarray) -> np.ndarray:
    if getattr(G, "batched", False):
        return np.asarray(G(p_bars), dtype=float)
    return np.array([G(Rotation(m)) for m in p_bars], dtype=float)


@dataclass(frozen=True, eq=False)
class ProjectionReport:
    gram: np.ndarray
    rhs: np.ndarray
    coeffs: np.ndarray
    residual_l2: float
    names: tuple = ()

    def to_json(self) -> dict:
        return {"gram": self.gram.tolist(), "rhs": self.rhs.tolist(), "coeffs": self.coeffs.tolist(),
                "residual_l2": self.residual_l2, "terms": list(self.names)}


def project_kernel(G: Callable, basis: MonomialBasis, quad: SO3Quadrature) -> ProjectionReport:
    """Coefficients minimizing the L2(dnu) error of G within span(basis)."""
    q = basis.evaluate(quad.matrices)
    g = kernel_values(G, quad.matrices)
    w = quad.weights
    gram = q.T @ (w[:, None] * q)
    rhs = q.T @ (w * g)
    try:
        coeffs = cho_solve(cho_factor(gram), rhs)
    except LinAlgError as exc:
        raise SingularGram("Gram matrix is not positive definite; duplicate or dependent terms?") from exc
    if np.linalg.cond(gram) > 1e12:
        raise SingularGram(f"Gram matrix is numerically singular (cond={np.linalg.cond(gram):.3g})")
    resid = g - q @ coeffs
    return ProjectionReport(gram, rhs, coeffs, math.sqrt(max(float(w @ resid ** 2), 0.0)), tuple(basis.names))


class Provenance(str, enum.Enum):
    PROJECTED = "Projected"
    ANALYTIC = "Analytic"
    MANUAL = "Manual"


@dataclass(frozen=True, eq=False)
class KernelPolynomial:
    """sum_i coeffs[i] q_i(Pbar).  Coefficients already carry the concentration c."""

    basis: MonomialBasis
    coeffs: np.ndarray
    provenance: Provenance = Provenance.MANUAL
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if len(c) != len(self.basis):
            raise ValueError(f"{len(self.basis)} coefficients expected for {self.basis.symmetry_class.value}, got {len(c)}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    @classmethod
    def from_coeffs(cls, symmetry_class, coeffs, provenance=Provenance.MANUAL, **params):
        return cls(build_basis(symmetry_class), coeffs, provenance, params)

    @property
    def symmetry_class(self):
        return self.basis.symmetry_class

    def __call__(self, p_bars) -> np.ndarray:
        return self.basis.evaluate(p_bars) @ self.coeffs

    batched = True

    def coefficient(self, name: str) -> float:
        return float(self.coeffs[self.basis.names.index(name)])

    def to_json(self) -> dict:
        return {"symmetry_class": self.symmetry_class.value, "coeffs": self.coeffs.tolist(),
                "provenance": self.provenance.value, "params": dict(self.params)}

    @classmethod
    def from_json(cls, d: dict) -> "KernelPolynomial":
        unknown = set(d) - {"symmetry_class", "coeffs", "provenance", "params"}
        if unknown:
            raise ValueError(f"unknown kernel fields: {sorted(unknown)}")
        return cls(build_basis(d["symmetry_class"]), d["coeffs"], d.get("provenance", "Manual"),
                   dict(d.get("params", {})))


def evaluate_kernel(kp: KernelPolynomial, p_bar: Rotation) -> float:
    return float(kp(p_bar.m))


def projected_kernel(G: Callable, symmetry_class, quad: SO3Quadrature, **params) -> tuple[KernelPolynomial, ProjectionReport]:
    basis = build_basis(symmetry_class)
    rep = project_kernel(G, basis, quad)
    return KernelPolynomial(basis, rep.coeffs, Provenance.PROJECTED, params), rep


def onsager_kernel(L: float, D: float, c: float = 1.0):
    """c * 2 L^2 D |m1 x m1'|."""
    @batched
    def G(p):
        p11 = np.asarray(p)[..., 0, 0]
        return c * 2.0 * L * L * D * np.sqrt(np.maximum(1.0 - p11 * p11, 0.0))
    return G


def onsager_c2(L: float, D: float, c: float = 1.0) -> float:
    return -15.0 * math.pi / 32.0 * c * L * L * D


@dataclass(frozen=True)
class SymmetryReport:
    right: float
    left: float
    mirror: float
    tol: float

    @property
    def max_violation(self) -> float:
        return max(self.right, self.left, self.mirror)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol


def verify_kernel_symmetry(G: Callable, group: SymmetryGroup, samples=None, tol: float = 1e-9,
                           n_samples: int = 200, seed: int = 0) -> SymmetryReport:
    """Largest change of G under Pbar -> Pbar T, T Pbar and J Pbar J.

    ``samples`` is an (n, 3, 3) stack or an SO3Quadrature; Haar draws are
    used when omitted.
    """
    if samples is None:
        samples = sample_haar_matrices(np.random.default_rng(seed), n_samples)
    elif isinstance(samples, SO3Quadrature):
        samples = samples.matrices
    p = np.asarray(samples, dtype=float)
    g0 = kernel_values(G, p)
    right = left = mirror = 0.0
    for t in group.generators():
        right = max(right, float(np.max(np.abs(kernel_values(G, p @ t) - g0))))
        left = max(left, float(np.max(np.abs(kernel_values(G, t @ p) - g0))))
    for j in group.mirror_rotations():
        mirror = max(mirror, float(np.max(np.abs(kernel_values(G, j @ p @ j) - g0))))
    return SymmetryReport(right, left, mirror, tol)
