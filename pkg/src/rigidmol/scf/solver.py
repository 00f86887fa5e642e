"""Damped fixed-point solution of the self-consistent moment equations."""
from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable, Optional, Union

import numpy as np

from ..so3 import S2Quadrature, SO3Quadrature
from .moments import MomentSet, boltzmann_moments, boltzmann_weights, mean_field, seed


@dataclass(frozen=True)
class SCFConfig:
    quad: Union[SO3Quadrature, S2Quadrature]
    damping: float = 0.5
    tol: float = 1e-10
    max_iter: int = 5000
    init: Union[str, MomentSet] = "Isotropic"
    seed_amplitude: float = 0.2
    # rotate each iterate into its principal frame; removes drift along the rotation orbit
    align_frame: bool = False

    def __post_init__(self):
        if not (0.0 < self.damping <= 1.0):
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class OrderParameters:
    eig11: tuple
    eig22: tuple
    m1_norm: float
    alignment: float  # |cos| between m1 and the top M11 eigenvector; nan when m1 = 0
    uniaxial_gap: float  # smallest spacing between M11 eigenvalues

    @property
    def five(self) -> tuple:
        """The independent scalars: two eigenvalues of each second moment and |m1|."""
        return self.eig11[0], self.eig11[1], self.eig22[0], self.eig22[1], self.m1_norm

    def to_json(self) -> dict:
        return {"eig11": list(self.eig11), "eig22": list(self.eig22), "m1_norm": self.m1_norm,
                "alignment": None if math.isnan(self.alignment) else self.alignment,
                "uniaxial_gap": self.uniaxial_gap}


def order_parameters(m: MomentSet) -> OrderParameters:
    w11, v11 = np.linalg.eigh(m.M11)
    w22 = np.linalg.eigvalsh(m.M22)
    n = float(np.linalg.norm(m.m1))
    align = float(abs(v11[:, -1] @ m.m1) / n) if n > 1e-12 else float("nan")
    return OrderParameters(tuple(w11[::-1].tolist()), tuple(w22[::-1].tolist()), n, align,
                           float(np.min(np.diff(w11))))


@dataclass(frozen=True, eq=False)
class SolutionBranch:
    moments: MomentSet
    free_energy: float
    residual: float
    converged: bool
    iterations: int
    diverged: bool = False
    order_params: Optional[OrderParameters] = None
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"moments": self.moments.to_json(), "free_energy": self.free_energy, "residual": self.residual,
                "converged": self.converged, "diverged": self.diverged, "iterations": self.iterations,
                "order_params": self.order_params.to_json() if self.order_params else None,
                "meta": dict(self.meta)}


def _initial(config: SCFConfig, cubic: bool) -> MomentSet:
    if isinstance(config.init, MomentSet):
        m = config.init
        if cubic and not m.cubic:
            raise ValueError("cubic kernel needs an initial MomentSet with third moments")
        return m
    return seed(config.init, cubic, config.seed_amplitude)


def principal_frame(m: MomentSet, gap: float = 1e-6) -> np.ndarray:
    """Rotation whose columns are eigenvectors of M11 + 0.1 M22, ordered and signed to stay near I.

    Returns I when the eigenvalues are too close to fix a frame.
    """
    w, v = np.linalg.eigh(m.M11 + 0.1 * m.M22)
    if np.min(np.diff(w)) < gap:
        return np.eye(3)
    perm = np.argmax(np.abs(v), axis=0)
    if len(set(perm.tolist())) < 3:
        return np.eye(3)
    r = np.zeros((3, 3))
    r[:, perm] = v
    r = r * np.sign(np.diag(r))[None, :]
    if np.linalg.det(r) < 0:
        r[:, 2] *= -1
    return r


def _finite(m: MomentSet) -> bool:
    return bool(np.all(np.isfinite(m.flat())))


def free_energy_terms(kp, m: MomentSet, quad) -> tuple[float, float, float]:
    """(-log Z, energy from quadrature, energy from moments) at partner moments ``m``.

    The energy is (1/2) <W>_f, evaluated once by averaging W over the node
    masses of f and once by contracting the kernel with the moments of f.
    """
    W = mean_field(kp, m)
    f, log_z, wv = boltzmann_weights(W, quad)
    fm, _ = boltzmann_moments(W, quad, cubic=m.cubic)
    return -log_z, 0.5 * float(f @ wv), 0.5 * W.contract(fm)


def free_energy(kp, branch_or_moments, quad, concentration_terms_dropped: bool = True,
                c: Optional[float] = None, f0: float = 0.0) -> float:
    """Integral of f ln f plus (1/2) double integral of f G f, with f from the branch moments.

    This equals -log Z - <W>/2.  The additive F0/c + log c is dropped
    unless ``concentration_terms_dropped`` is False, which needs ``c``.
    """
    m = getattr(branch_or_moments, "moments", branch_or_moments)
    neg_log_z, _, energy = free_energy_terms(kp, m, quad)
    # f ln f = -W - log Z, so the entropy term is -log Z - 2 * energy
    value = neg_log_z - energy
    if not concentration_terms_dropped:
        if c is None or c <= 0:
            raise ValueError("a positive concentration is needed to restore the constant terms")
        value += f0 / c + math.log(c)
    return value


def scf_solve(kp, config: SCFConfig, callback: Optional[Callable[[int, MomentSet], None]] = None) -> SolutionBranch:
    """Iterate m <- (1 - lam) m + lam B(m), B the Boltzmann moments of the mean field of m."""
    cubic = kp.basis.degree >= 3
    m = _initial(config, cubic)
    best, best_res = m, math.inf
    res = math.inf
    it = 0
    diverged = False
    for it in range(1, config.max_iter + 1):
        with np.errstate(all="ignore"):
            new, _ = boltzmann_moments(mean_field(kp, m), config.quad, cubic=cubic)
        if not _finite(new):
            diverged = True
            break
        if config.align_frame:
            # the commutator and all other invariants are untouched by this
            new = new.rotated(principal_frame(new).T)
        res = m.distance(new)
        if res < best_res:
            best, best_res = new, res
        if res <= config.tol:
            m = new
            break
        m = m.mix(new, config.damping)
        if callback is not None:
            callback(it, m)
    converged = best_res <= config.tol and not diverged
    meta = {"init": config.init if isinstance(config.init, str) else "custom"}
    if diverged:
        meta["diagnostics"] = f"non-finite moments at iteration {it}; last residual {res:.3g}"
    fe = free_energy(kp, best, config.quad) if not diverged or math.isfinite(best_res) else math.nan
    return SolutionBranch(best, fe, float(best_res), converged, it, diverged, order_parameters(best), meta)


def _axial_only(kp) -> bool:
    for c, term in zip(kp.coeffs, kp.basis.terms):
        if c == 0.0:
            continue
        for _, mono in term:
            if any((i, j) != (1, 1) for i, j, _ in mono):
                return False
    return True


class ReducedS2Solver:
    """The same fixed point with f a function of m1 alone, on an S2 quadrature."""

    def __init__(self, kp, s2quad: S2Quadrature):
        if not _axial_only(kp):
            raise ValueError("kernel depends on more than p11; it cannot be reduced to S2")
        if not isinstance(s2quad, S2Quadrature):
            raise TypeError("reduce_to_s2 needs an S2Quadrature")
        self.kernel = kp
        self.quad = s2quad

    def solve(self, damping=0.5, tol=1e-10, max_iter=5000, init="Isotropic", seed_amplitude=0.2) -> SolutionBranch:
        return scf_solve(self.kernel, SCFConfig(self.quad, damping, tol, max_iter, init, seed_amplitude))

    def moments(self, W) -> tuple[MomentSet, float]:
        return boltzmann_moments(W, self.quad)


def reduce_to_s2(kp, s2quad: S2Quadrature) -> ReducedS2Solver:
    return ReducedS2Solver(kp, s2quad)
