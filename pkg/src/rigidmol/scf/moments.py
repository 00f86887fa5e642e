"""Moment closures, the polynomial mean field and its Boltzmann average.

For a kernel monomial prod_r p_{i_r j_r}, each factor is m_{i_r} . m'_{j_r},
so averaging over the partner gives the tensor <m'_{j_1} ... m'_{j_n}>
contracted with m_{i_1} ... m_{i_n}.  The closure stores these tensors
for j-tuples sorted as (1, ..., 1, 2, ..., 2); any other order is a
transpose.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..so3 import S2Quadrature, SO3Quadrature

_EINSUM = {1: "a,na->n", 2: "ab,na,nb->n", 3: "abc,na,nb,nc->n"}
_KEYS = {(1,): "m1", (1, 1): "M11", (2, 2): "M22", (1, 1, 1): "T111", (1, 2, 2): "T122"}


@dataclass(frozen=True, eq=False)
class MomentSet:
    m1: np.ndarray
    M11: np.ndarray
    M22: np.ndarray
    T111: Optional[np.ndarray] = None
    T122: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("m1", "M11", "M22", "T111", "T122"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.array(v, dtype=float))
        if (self.T111 is None) != (self.T122 is None):
            raise ValueError("T111 and T122 must be given together")

    @property
    def cubic(self) -> bool:
        return self.T111 is not None

    def tensor(self, js: tuple) -> np.ndarray:
        """<m_{j1} ... m_{jn}> with axes in the order of ``js``."""
        order = np.argsort(js, kind="stable")
        key = tuple(int(js[k]) for k in order)
        name = _KEYS.get(key)
        t = getattr(self, name) if name else None
        if t is None:
            raise KeyError(f"moment <{''.join(f'm{j}' for j in key)}> is not in this closure")
        return np.transpose(t, np.argsort(order)) if t.ndim > 1 else t

    def flat(self) -> np.ndarray:
        parts = [self.m1, self.M11, self.M22]
        if self.cubic:
            parts += [self.T111, self.T122]
        return np.concatenate([p.ravel() for p in parts])

    def distance(self, other: "MomentSet") -> float:
        """Max-norm of the componentwise difference."""
        return float(np.max(np.abs(self.flat() - other.flat())))

    def mix(self, other: "MomentSet", lam: float) -> "MomentSet":
        """(1 - lam) self + lam other."""
        def f(a, b):
            return None if a is None else (1 - lam) * a + lam * b
        return MomentSet(*(f(getattr(self, k), getattr(other, k)) for k in ("m1", "M11", "M22", "T111", "T122")))

    def rotated(self, r) -> "MomentSet":
        r = np.asarray(getattr(r, "m", r), dtype=float)
        t111 = t122 = None
        if self.cubic:
            t111 = np.einsum("ia,jb,kc,abc->ijk", r, r, r, self.T111)
            t122 = np.einsum("ia,jb,kc,abc->ijk", r, r, r, self.T122)
        return MomentSet(r @ self.m1, r @ self.M11 @ r.T, r @ self.M22 @ r.T, t111, t122)

    def violations(self, tol: float = 1e-10) -> list[str]:
        out = []
        for name in ("M11", "M22"):
            m = getattr(self, name)
            if abs(np.trace(m) - 1) > tol:
                out.append(f"trace {name} = {np.trace(m):.12g}")
            if np.max(np.abs(m - m.T)) > tol:
                out.append(f"{name} not symmetric")
            if np.linalg.eigvalsh(m).min() < -tol:
                out.append(f"{name} not PSD")
        if np.linalg.eigvalsh(self.M11 - np.outer(self.m1, self.m1)).min() < -tol:
            out.append("M11 - m1 m1 not PSD")
        if np.linalg.norm(self.m1) > 1 + tol:
            out.append("|m1| > 1")
        if self.cubic:
            if np.max(np.abs(self.T111 - np.transpose(self.T111, (1, 0, 2)))) > tol or \
                    np.max(np.abs(self.T111 - np.transpose(self.T111, (0, 2, 1)))) > tol:
                out.append("T111 not symmetric")
            if np.max(np.abs(self.T122 - np.transpose(self.T122, (0, 2, 1)))) > tol:
                out.append("T122 not symmetric in its last two slots")
            # m2 . m2 = 1 and m1 . m1 = 1
            if np.max(np.abs(np.einsum("abb->a", self.T122) - self.m1)) > tol:
                out.append("T122 trace != m1")
            if np.max(np.abs(np.einsum("abb->a", self.T111) - self.m1)) > tol:
                out.append("T111 trace != m1")
        return out

    def to_json(self) -> dict:
        d = {"m1": self.m1.tolist(), "M11": self.M11.tolist(), "M22": self.M22.tolist()}
        if self.cubic:
            d["T111"] = self.T111.tolist()
            d["T122"] = self.T122.tolist()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MomentSet":
        return cls(d["m1"], d["M11"], d["M22"], d.get("T111"), d.get("T122"))


def isotropic(cubic: bool = False) -> MomentSet:
    eye = np.eye(3) / 3
    z3 = np.zeros((3, 3, 3)) if cubic else None
    return MomentSet(np.zeros(3), eye, eye.copy(), z3, None if z3 is None else z3.copy())


def _uniaxial(axis, amp):
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    return np.eye(3) / 3 + amp * (1.5 * np.outer(a, a) - 0.5 * np.eye(3))


SEEDS = ("Isotropic", "UniaxialSeed", "BiaxialSeed", "PolarSeed")


def seed(name: str, cubic: bool = False, amplitude: float = 0.2) -> MomentSet:
    """Preset starting moments.

    UniaxialSeed raises the z eigenvalue of M11 by ``amplitude``;
    BiaxialSeed also splits M11 and M22 along x and y; PolarSeed adds
    m1 = 0.3 z to the uniaxial seed.
    """
    iso = isotropic(cubic)
    z = np.array([0.0, 0.0, 1.0])
    if name == "Isotropic":
        return iso
    if name == "UniaxialSeed":
        return replace(iso, M11=_uniaxial(z, amplitude))
    if name == "BiaxialSeed":
        m11 = np.eye(3) / 3 + amplitude * np.diag([-0.75, -0.25, 1.0])
        m22 = np.eye(3) / 3 + amplitude * np.diag([0.75, -0.5, -0.25])
        return replace(iso, M11=m11, M22=m22)
    if name == "PolarSeed":
        return replace(iso, M11=_uniaxial(z, amplitude), m1=0.3 * z)
    raise ValueError(f"unknown seed {name!r}; expected one of {SEEDS}")


def _expand(kp):
    """Flatten a KernelPolynomial into (weight, own indices, partner indices)."""
    out = []
    for c, term in zip(kp.coeffs, kp.basis.terms):
        for coef, mono in term:
            iis, jjs = [], []
            for i, j, e in mono:
                iis += [i] * e
                jjs += [j] * e
            out.append((float(c) * coef, tuple(iis), tuple(jjs)))
    return out


class MeanField:
    """W(P) = sum_k c_k <q_k(P^T P')>_{P'} for fixed partner moments."""

    batched = True

    def __init__(self, kp, moments: MomentSet):
        self.kernel = kp
        self.moments = moments
        self.const = 0.0
        self.parts = []
        for w, iis, jjs in _expand(kp):
            if w == 0.0:
                continue
            if not iis:
                self.const += w
                continue
            if 3 in iis or 3 in jjs:
                raise ValueError("kernels involving m3 are not supported")
            self.parts.append((w, iis, moments.tensor(jjs)))

    @property
    def uses_m2(self) -> bool:
        return any(2 in iis for _, iis, _ in self.parts)

    def on_axes(self, m1: np.ndarray, m2: Optional[np.ndarray]) -> np.ndarray:
        axes = {1: m1, 2: m2}
        out = np.full(len(m1), self.const)
        for w, iis, t in self.parts:
            out += w * np.einsum(_EINSUM[len(iis)], t, *(axes[i] for i in iis))
        return out

    def __call__(self, p_bars) -> np.ndarray:
        p = np.asarray(getattr(p_bars, "m", p_bars), dtype=float)
        single = p.ndim == 2
        if single:
            p = p[None]
        w = self.on_axes(p[:, :, 0], p[:, :, 1])
        return w[0] if single else w

    def contract(self, other: MomentSet) -> float:
        """<W>_f computed from the moments of f alone."""
        total = self.const
        for w, iis, t in self.parts:
            total += w * float(np.sum(t * other.tensor(iis)))
        return total


def mean_field(kp, m: MomentSet) -> MeanField:
    needs_cubic = kp.basis.degree >= 3
    if needs_cubic and not m.cubic:
        raise ValueError(f"{kp.symmetry_class.value} kernel needs third moments")
    return MeanField(kp, m)


def _axes(quad):
    if isinstance(quad, SO3Quadrature):
        return quad.matrices[:, :, 0], quad.matrices[:, :, 1]
    if isinstance(quad, S2Quadrature):
        return quad.nodes, None
    raise TypeError(f"unsupported quadrature {type(quad).__name__}")


def boltzmann_weights(W, quad) -> tuple[np.ndarray, float, np.ndarray]:
    """Normalized node masses of f = exp(-W)/Z, log Z and W on the nodes."""
    m1, m2 = _axes(quad)
    if isinstance(W, MeanField):
        if m2 is None and W.uses_m2:
            raise ValueError("mean field depends on m2; an S2 quadrature cannot represent it")
        wv = W.on_axes(m1, m2)
    else:
        if m2 is None:
            raise TypeError("on an S2 quadrature W must be a MeanField")
        wv = np.asarray(W(quad.matrices), dtype=float)
    shift = float(np.min(wv))
    e = quad.weights * np.exp(-(wv - shift))
    z = float(e.sum())
    return e / z, np.log(z) - shift, wv


def boltzmann_moments(W, quad, cubic: bool = False) -> tuple[MomentSet, float]:
    """Moments of f = exp(-W)/Z on the quadrature nodes, and log Z.

    On an S2 quadrature f is taken uniform about m1, so <m2 m2> = (I - <m1 m1>)/2.
    """
    f, log_z, _ = boltzmann_weights(W, quad)
    m1, m2 = _axes(quad)
    mean1 = f @ m1
    M11 = np.einsum("n,na,nb->ab", f, m1, m1)
    if m2 is None:
        if cubic:
            raise ValueError("third moments need the full SO(3) quadrature")
        M22 = 0.5 * (np.eye(3) - M11)
        return MomentSet(mean1, M11, M22), log_z
    M22 = np.einsum("n,na,nb->ab", f, m2, m2)
    t111 = t122 = None
    if cubic:
        t111 = np.einsum("n,na,nb,nc->abc", f, m1, m1, m1)
        t122 = np.einsum("n,na,nb,nc->abc", f, m1, m2, m2)
    return MomentSet(mean1, M11, M22, t111, t122), log_z
