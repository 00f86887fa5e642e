"""Rotation-group arithmetic on SO(3).

Rotations are stored as 3x3 matrices whose columns are the body axes
m1, m2, m3 expressed in the lab frame.  The Euler parametrization used
throughout the package is

    P(a, b, g) = [[ ca,    -sa cg,            sa sg          ],
                  [ sa cb,  ca cb cg - sb sg, -ca cb sg - sb cg],
                  [ sa sb,  ca sb cg + cb sg, -ca sb sg + cb cg]]

with a in [0, pi] and b, g in [0, 2 pi), so that m1 = P e1 has polar
angle a about the lab x-axis.  The Haar probability measure reads
sin(a) da db dg / (8 pi^2).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

TWO_PI = 2.0 * math.pi
ORTHO_TOL = 1e-12


def euler_matrices(alpha, beta, gamma) -> np.ndarray:
    """Vectorized Euler-angle matrices, shape ``broadcast(alpha, beta, gamma) + (3, 3)``."""
    alpha, beta, gamma = np.broadcast_arrays(
        np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float), np.asarray(gamma, dtype=float)
    )
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    cg, sg = np.cos(gamma), np.sin(gamma)
    out = np.empty(alpha.shape + (3, 3))
    out[..., 0, 0] = ca
    out[..., 0, 1] = -sa * cg
    out[..., 0, 2] = sa * sg
    out[..., 1, 0] = sa * cb
    out[..., 1, 1] = ca * cb * cg - sb * sg
    out[..., 1, 2] = -ca * cb * sg - sb * cg
    out[..., 2, 0] = sa * sb
    out[..., 2, 1] = ca * sb * cg + cb * sg
    out[..., 2, 2] = -ca * sb * sg + cb * cg
    return out


@dataclass(frozen=True)
class EulerAngles:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if not (0.0 <= self.alpha <= math.pi):
            raise ValueError(f"alpha={self.alpha} outside [0, pi]")
        for name in ("beta", "gamma"):
            v = getattr(self, name)
            if not (0.0 <= v < TWO_PI):
                raise ValueError(f"{name}={v} outside [0, 2pi)")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


@dataclass(frozen=True, eq=False)
class Rotation:
    """A proper rotation.  ``m[:, i]`` is the body axis m_{i+1}."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {m.shape}")
        if np.max(np.abs(m.T @ m - np.eye(3))) > ORTHO_TOL * 10 or abs(np.linalg.det(m) - 1.0) > ORTHO_TOL * 10:
            raise ValueError("matrix is not a proper rotation")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.eye(3))

    @classmethod
    def from_euler(cls, alpha: float, beta: float, gamma: float) -> "Rotation":
        return euler_to_matrix(EulerAngles(alpha, beta, gamma))

    @classmethod
    def about_axis(cls, axis, angle: float) -> "Rotation":
        """Right-handed rotation by ``angle`` about ``axis`` (Rodrigues)."""
        k = np.asarray(axis, dtype=float)
        k = k / np.linalg.norm(k)
        kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
        m = np.eye(3) + math.sin(angle) * kx + (1 - math.cos(angle)) * kx @ kx
        return cls(_reorthonormalize(m))

    @property
    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.m[:, 0], self.m[:, 1], self.m[:, 2]

    @property
    def inverse(self) -> "Rotation":
        return Rotation(self.m.T)

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return Rotation(_reorthonormalize(self.m @ other.m))

    def __eq__(self, other) -> bool:
        return isinstance(other, Rotation) and np.array_equal(self.m, other.m)

    def __hash__(self):
        return hash(self.m.tobytes())

    def __repr__(self):
        return f"Rotation({np.array2string(self.m, precision=6)})"


def _reorthonormalize(m: np.ndarray) -> np.ndarray:
    # one polar-decomposition step keeps products inside the 1e-12 invariant
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


def euler_to_matrix(angles: EulerAngles) -> Rotation:
    return Rotation(euler_matrices(angles.alpha, angles.beta, angles.gamma))


def matrix_to_euler(r: Rotation) -> EulerAngles:
    """Inverse of :func:`euler_to_matrix`.

    On the gimbal set sin(alpha) = 0 only beta + gamma (alpha = 0) or
    beta - gamma (alpha = pi) is determined; the representative with
    gamma = 0 is returned.
    """
    m = r.m
    sa = math.hypot(m[1, 0], m[2, 0])
    # acos loses half the digits near the poles
    alpha = math.atan2(sa, m[0, 0])
    if sa < 1e-12:
        # alpha = 0: the lower-right block rotates by beta + gamma
        # alpha = pi: its second column is -(cos, sin)(beta - gamma)
        if m[0, 0] > 0:
            beta = math.atan2(m[2, 1], m[1, 1])
        else:
            beta = math.atan2(-m[2, 1], -m[1, 1])
        return EulerAngles(alpha, beta % TWO_PI, 0.0)
    beta = math.atan2(m[2, 0], m[1, 0])
    gamma = math.atan2(m[0, 2], -m[0, 1])
    return EulerAngles(alpha, beta % TWO_PI, gamma % TWO_PI)


def relative_rotation(p: Rotation, p_prime: Rotation) -> Rotation:
    """P^{-1} P'; entry (i, j) equals m_i . m'_j."""
    return Rotation(_reorthonormalize(p.m.T @ p_prime.m))


@dataclass(frozen=True, eq=False)
class SO3Quadrature:
    """Product rule for the Haar measure.

    ``matrices`` holds the nodes as an ``(n, 3, 3)`` array; :attr:`nodes`
    wraps them as :class:`Rotation` objects on demand.
    """

    matrices: np.ndarray
    weights: np.ndarray
    resolution: tuple[int, int, int]
    angles: np.ndarray = field(repr=False)

    @property
    def nodes(self) -> list[Rotation]:
        return [Rotation(m) for m in self.matrices]

    def __len__(self):
        return len(self.weights)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Weighted sum over the leading (node) axis of ``values``."""
        values = np.asarray(values, dtype=float)
        return np.tensordot(self.weights, values, axes=(0, 0))


@dataclass(frozen=True, eq=False)
class S2Quadrature:
    nodes: np.ndarray
    weights: np.ndarray
    resolution: tuple[int, int]

    def __len__(self):
        return len(self.weights)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


def _check_res(**kw):
    for k, v in kw.items():
        if int(v) != v or v < 2:
            raise ValueError(f"{k} must be an integer >= 2, got {v}")


def _polar_rule(n_alpha: int):
    x, w = leggauss(n_alpha)
    # nodes in cos(alpha); order by increasing alpha
    x, w = x[::-1], w[::-1]
    return np.arccos(x), w / 2.0


def haar_quadrature(n_alpha: int = 16, n_beta: int = 16, n_gamma: int = 16) -> SO3Quadrature:
    """Gauss-Legendre in cos(alpha) times periodic trapezoid in beta and gamma."""
    _check_res(n_alpha=n_alpha, n_beta=n_beta, n_gamma=n_gamma)
    alpha, wa = _polar_rule(n_alpha)
    beta = TWO_PI * np.arange(n_beta) / n_beta
    gamma = TWO_PI * np.arange(n_gamma) / n_gamma
    a, b, g = np.meshgrid(alpha, beta, gamma, indexing="ij")
    w = np.broadcast_to(wa[:, None, None], a.shape) / (n_beta * n_gamma)
    w = w.ravel().copy()
    w /= w.sum()
    angles = np.stack([a.ravel(), b.ravel(), g.ravel()], axis=1)
    mats = euler_matrices(angles[:, 0], angles[:, 1], angles[:, 2])
    for arr in (mats, w, angles):
        arr.setflags(write=False)
    return SO3Quadrature(mats, w, (n_alpha, n_beta, n_gamma), angles)


def s2_quadrature(n_alpha: int = 16, n_beta: int = 16) -> S2Quadrature:
    """Nodes n = P(alpha, beta, 0) e1, i.e. the m1 axes of :func:`haar_quadrature`."""
    _check_res(n_alpha=n_alpha, n_beta=n_beta)
    alpha, wa = _polar_rule(n_alpha)
    beta = TWO_PI * np.arange(n_beta) / n_beta
    a, b = np.meshgrid(alpha, beta, indexing="ij")
    nodes = np.stack([np.cos(a), np.sin(a) * np.cos(b), np.sin(a) * np.sin(b)], axis=-1).reshape(-1, 3)
    w = (np.broadcast_to(wa[:, None], a.shape) / n_beta).ravel().copy()
    w /= w.sum()
    return S2Quadrature(nodes, w, (n_alpha, n_beta))


def sample_haar_matrices(rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` Haar-distributed rotations as an ``(size, 3, 3)`` array.

    cos(alpha) is uniform on [-1, 1]; beta and gamma are uniform.
    """
    u = rng.random((size, 3))
    alpha = np.arccos(1.0 - 2.0 * u[:, 0])
    return euler_matrices(alpha, TWO_PI * u[:, 1], TWO_PI * u[:, 2])


def sample_haar(rng: np.random.Generator) -> Rotation:
    return Rotation(sample_haar_matrices(rng, 1)[0])


def integrate(f: Callable[[Rotation], float], q: SO3Quadrature) -> float:
    """Sum of w_k f(node_k) in node order."""
    vals = np.fromiter((f(Rotation(m)) for m in q.matrices), dtype=float, count=len(q))
    return float(math.fsum(q.weights * vals))


def integrate_array(f: Callable[[np.ndarray], np.ndarray], q: SO3Quadrature) -> float:
    """Like :func:`integrate` but ``f`` maps the ``(n, 3, 3)`` node stack to ``n`` values."""
    vals = np.asarray(f(q.matrices), dtype=float)
    return float(math.fsum(q.weights * vals))


def frame_from_axis(u) -> np.ndarray:
    """A rotation whose first column is the unit vector along ``u``."""
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    t = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    v = np.cross(u, t)
    v /= np.linalg.norm(v)
    return np.column_stack([u, v, np.cross(u, v)])


def aligned_integral(u, u_prime, fold: Callable[[np.ndarray], np.ndarray],
                     weight: Callable[[np.ndarray], np.ndarray], n: int = 48) -> float:
    """Haar integral of ``fold(q11) * weight(Pbar)`` with q11 = u . Pbar u'.

    ``fold`` carries the non-smooth factor (|cos|, |sin|, indicators in
    q11).  Substituting Pbar = A Q B^T with A e1 = u and B e1 = u' makes
    q11 = cos(alpha) of Q, so the kink sits on a node boundary: alpha is
    integrated by Gauss-Legendre on [0, pi/2] and [pi/2, pi] and the
    result is exact to rounding for trigonometric-polynomial ``weight``.
    """
    a_mat = frame_from_axis(u)
    b_mat = frame_from_axis(u_prime)
    x, w = leggauss(n)
    alpha = np.concatenate([(x + 1) * math.pi / 4, (x + 3) * math.pi / 4])
    wa = np.concatenate([w, w]) * math.pi / 4 * np.sin(alpha) / 2.0
    ang = TWO_PI * np.arange(n) / n
    a, b, g = np.meshgrid(alpha, ang, ang, indexing="ij")
    wts = np.broadcast_to(wa[:, None, None], a.shape) / (n * n)
    q = euler_matrices(a, b, g)
    pbar = a_mat @ q @ b_mat.T
    vals = fold(q[..., 0, 0]) * weight(pbar)
    return float(np.sum(wts * vals))
