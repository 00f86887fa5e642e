"""Excluded volume of two spherotriangles through the Steiner polynomial.

With T1 the triangle of molecule 1 and T2 = Pbar T1 that of molecule 2,
the excluded region is K + B_D with K = T1 - T2 and

    V = V3(K) + D V2(K) + pi D^2 V1(K) + 4/3 pi D^3.

Edges are a = AO, b = OB, c = BA of T1 and a', b', c' of -T2.
"""
from __future__ import annotations

from dataclasses import dataclass
import enum
import math

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..shapes import MoleculeShape, ShapeKind, triangle_vertices
from ..so3 import Rotation
from .result import ExcludedVolumeResult, Method

ZERO_TOL = 1e-9


class CaseTag(str, enum.Enum):
    INTERSECTING = "Intersecting"
    DISJOINT = "Disjoint"
    PARALLEL = "Parallel"


@dataclass(frozen=True, eq=False)
class EdgeSet:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    ap: np.ndarray
    bp: np.ndarray
    cp: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c", "ap", "bp", "cp"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        scale = max(np.linalg.norm(v) for v in (self.a, self.b, self.c, self.ap, self.bp, self.cp))
        if (np.max(np.abs(self.a + self.b + self.c)) > 1e-12 * max(scale, 1.0)
                or np.max(np.abs(self.ap + self.bp + self.cp)) > 1e-12 * max(scale, 1.0)):
            raise ValueError("edge vectors do not close a triangle")

    @property
    def own(self):
        return (self.a, self.b, self.c)

    @property
    def other(self):
        return (self.ap, self.bp, self.cp)

    @property
    def scale(self) -> float:
        return max(float(np.linalg.norm(v)) for v in self.own + self.other)

    def negated_other(self) -> "EdgeSet":
        """Edges of T1 against +T2 instead of -T2."""
        return EdgeSet(self.a, self.b, self.c, -self.ap, -self.bp, -self.cp)


@dataclass(frozen=True)
class SteinerDecomposition:
    v3: float
    v2: float
    v1: float
    case_tag: CaseTag
    main_text_case: CaseTag | None = None

    def volume(self, D: float) -> float:
        return self.v3 + D * self.v2 + math.pi * D * D * self.v1 + 4.0 / 3.0 * math.pi * D ** 3


def edges_from_triangles(t1: np.ndarray, t2: np.ndarray) -> EdgeSet:
    """EdgeSet of K = T1 - T2 for vertex rows (O, A, B)."""
    o, a, b = t1
    o2, a2, b2 = -np.asarray(t2)
    return EdgeSet(o - a, b - o, a - b, o2 - a2, b2 - o2, a2 - b2)


def spherotriangle_edges(shape: MoleculeShape, p_bar: Rotation) -> EdgeSet:
    tri = np.array(triangle_vertices(shape))
    return edges_from_triangles(tri, tri @ p_bar.m.T)


def _triple(u, v, w) -> float:
    return float(np.dot(np.cross(u, v), w))


def _cross_norm(u, v) -> float:
    return float(np.linalg.norm(np.cross(u, v)))


def steiner_v3(e: EdgeSet) -> float:
    """Volume of K as a sum of triangular prisms.

    Either triple of prisms tiles K; each prism over a triangle with
    edges u, v and lateral edge w has volume |u x v . w| / 2, so the
    symmetric average carries an overall 1/4.
    """
    n = np.cross(e.a, e.b)
    n2 = np.cross(e.ap, e.bp)
    return 0.25 * (sum(abs(float(np.dot(n, v))) for v in e.other)
                  + sum(abs(float(np.dot(n2, v))) for v in e.own))


def steiner_v1(e: EdgeSet) -> float:
    return 0.5 * sum(float(np.linalg.norm(v)) for v in e.own + e.other)


def _rotations(edges):
    a, b, c = edges
    return [(a, b, c), (b, c, a), (c, a, b)]


def _plane_normal(edges) -> np.ndarray | None:
    a, b, c = edges
    n = np.cross(a, b)
    for u, v in ((a, b), (b, c), (c, a)):
        cand = np.cross(u, v)
        if np.linalg.norm(cand) > np.linalg.norm(n):
            n = cand
    nn = np.linalg.norm(n)
    if nn == 0.0:
        return None
    return n / nn


def _segment_normal(edges, other_normal) -> np.ndarray:
    # a degenerate (collinear) triangle: any plane through the segment works;
    # take the one containing the other triangle's normal when possible
    d = max(edges, key=np.linalg.norm)
    d = d / np.linalg.norm(d)
    ref = other_normal if other_normal is not None else np.array([0.0, 0.0, 1.0])
    n = np.cross(d, np.cross(ref, d))
    if np.linalg.norm(n) < 1e-12:
        t = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        n = np.cross(d, t)
    return n / np.linalg.norm(n)


def normals(e: EdgeSet, m3=None, m3p=None) -> tuple[np.ndarray, np.ndarray]:
    n1 = m3 if m3 is not None else _plane_normal(e.own)
    n2 = m3p if m3p is not None else _plane_normal(e.other)
    if n1 is None:
        n1 = _segment_normal(e.own, n2)
    if n2 is None:
        n2 = _segment_normal(e.other, n1)
    return np.asarray(n1, float), np.asarray(n2, float)


def label_edges(e: EdgeSet, m3, m3p):
    """Scan the nine cyclic relabelings; first one with O and O' straddled wins.

    The conditions are (m3 . a')(m3 . b') >= 0 and (m3' . a)(m3' . b) >= 0.
    """
    tol = ZERO_TOL * e.scale ** 2
    fallback = None
    best_score = -math.inf
    for own in _rotations(e.own):
        for other in _rotations(e.other):
            s1 = float(np.dot(m3, other[0]) * np.dot(m3, other[1]))
            s2 = float(np.dot(m3p, own[0]) * np.dot(m3p, own[1]))
            if s1 >= -tol and s2 >= -tol:
                return own, other
            score = min(s1, s2)
            if score > best_score:
                best_score, fallback = score, (own, other)
    return fallback


def _v2_intersecting(own, other) -> float:
    a, b, c = own
    ap, bp, cp = other
    return (_cross_norm(a, b) + _cross_norm(ap, bp) + _cross_norm(a, ap) + _cross_norm(a, bp)
            + _cross_norm(b, ap) + _cross_norm(b, bp) + _cross_norm(c, cp))


def _v2_disjoint(own, other) -> float:
    a, b, c = own
    ap, bp, cp = other
    return (_cross_norm(a, b) + _cross_norm(ap, bp) + _cross_norm(c, ap) + _cross_norm(c, bp)
            + _cross_norm(a, cp) + _cross_norm(b, cp))


def _minkowski_points(e: EdgeSet) -> np.ndarray:
    a, b, c = e.own
    ap, bp, cp = e.other
    t1 = np.array([np.zeros(3), -a, b])  # O, A, B with O at the origin
    t2 = np.array([np.zeros(3), -ap, bp])  # O', A', B' of -T2
    return (t1[:, None, :] + t2[None, :, :]).reshape(-1, 3)


def _flat_area(points: np.ndarray, normal: np.ndarray) -> float:
    u = np.cross(normal, [1.0, 0.0, 0.0])
    if np.linalg.norm(u) < 0.5:
        u = np.cross(normal, [0.0, 1.0, 0.0])
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    pts = np.column_stack([points @ u, points @ v])
    try:
        return float(ConvexHull(pts).volume)
    except QhullError:
        return 0.0


def steiner_v2(e: EdgeSet, m3=None, m3p=None) -> tuple[float, CaseTag]:
    """Surface area of K and the geometric case that produced it.

    ``m3``/``m3p`` are the unit normals of the two triangle planes; they
    are derived from the edges when omitted.
    """
    v2, tag, _ = _steiner_v2_full(e, m3, m3p)
    return v2, tag


def _steiner_v2_full(e: EdgeSet, m3=None, m3p=None):
    m3, m3p = normals(e, m3, m3p)
    if np.linalg.norm(np.cross(m3, m3p)) < ZERO_TOL:
        # both triangles in one plane: K is flat and V2 is twice its area
        return 2.0 * _flat_area(_minkowski_points(e), m3), CaseTag.PARALLEL, None
    own, other = label_edges(e, m3, m3p)
    a, b, c = own
    ap, bp, cp = other
    split = float(np.dot(m3, cp) * np.dot(m3p, c))
    tag = CaseTag.INTERSECTING if split < 0.0 else CaseTag.DISJOINT
    v2 = _v2_intersecting(own, other) if split < 0.0 else _v2_disjoint(own, other)
    cc = np.cross(c, cp)
    main = float(np.dot(cc, a) * np.dot(cc, ap))
    main_tag = None if abs(main) < ZERO_TOL * e.scale ** 6 else (
        CaseTag.INTERSECTING if main > 0 else CaseTag.DISJOINT)
    return v2, tag, main_tag


def steiner_decomposition(e: EdgeSet, m3=None, m3p=None) -> SteinerDecomposition:
    v2, tag, main_tag = _steiner_v2_full(e, m3, m3p)
    return SteinerDecomposition(steiner_v3(e), v2, steiner_v1(e), tag, main_tag)


def edge_cross_sum(e: EdgeSet) -> float:
    """Right-hand side of V2(T1 - T2) + V2(T1 + T2)."""
    return (sum(_cross_norm(u, v) for u in e.own for v in e.other)
            + 2.0 * (_cross_norm(e.a, e.b) + _cross_norm(e.ap, e.bp)))


def spherotriangle_decomposition(shape: MoleculeShape, p_bar: Rotation) -> SteinerDecomposition:
    if shape.kind is not ShapeKind.SPHERO_TRIANGLE:
        raise ValueError(f"expected a spherotriangle, got {shape.kind.value}")
    e = spherotriangle_edges(shape, p_bar)
    return steiner_decomposition(e, np.array([0.0, 0.0, 1.0]), p_bar.m[:, 2])


def spherotriangle_excluded_volume(shape: MoleculeShape, p_bar: Rotation) -> ExcludedVolumeResult:
    dec = spherotriangle_decomposition(shape, p_bar)
    return ExcludedVolumeResult(dec.volume(shape.D), 0.0, Method.ANALYTIC, dec.case_tag.value)


def rod_excluded_volume(L: float, D: float, cross: float) -> float:
    """2 L^2 D |m x m'| + 2 pi L D^2 + 4/3 pi D^3 for |m x m'| = ``cross``."""
    if not (0.0 <= cross <= 1.0 + 1e-12):
        raise ValueError(f"|m x m'| must lie in [0, 1], got {cross}")
    if L < 0 or D < 0:
        raise ValueError("L and D must be non-negative")
    return 2.0 * L * L * D * min(cross, 1.0) + 2.0 * math.pi * L * D * D + 4.0 / 3.0 * math.pi * D ** 3


def _norms_cross(u, v):
    return np.linalg.norm(np.cross(u, v), axis=-1)


def spherotriangle_batch(shape: MoleculeShape, p_bars: np.ndarray):
    """Vectorized (v3, v2, v1, intersecting) over an ``(n, 3, 3)`` stack of Pbar.

    Uses the same label scan and case predicate as the scalar path;
    coplanar configurations are sent to :func:`spherotriangle_decomposition`.
    """
    p_bars = np.asarray(p_bars, dtype=float)
    n = len(p_bars)
    o, a_pt, b_pt = triangle_vertices(shape)
    own = np.array([o - a_pt, b_pt - o, a_pt - b_pt])                  # (3, 3)
    a2 = p_bars @ a_pt
    b2 = p_bars @ b_pt
    other = np.stack([a2, -b2, b2 - a2], axis=1)                       # (n, 3, 3)
    m3 = np.array([0.0, 0.0, 1.0])
    m3p = p_bars[:, :, 2]
    scale = max(np.linalg.norm(own, axis=1).max(), 1e-300)
    tol = ZERO_TOL * scale ** 2

    h_other = other @ m3                                               # (n, 3): m3 . other edges
    h_own = np.einsum("nk,ik->ni", m3p, own)                           # (n, 3): m3' . own edges
    chosen_r = np.full(n, -1)
    chosen_q = np.full(n, -1)
    best = np.full(n, -np.inf)
    fb_r = np.zeros(n, dtype=int)
    fb_q = np.zeros(n, dtype=int)
    for r in range(3):
        s2 = h_own[:, r] * h_own[:, (r + 1) % 3]
        for q in range(3):
            s1 = h_other[:, q] * h_other[:, (q + 1) % 3]
            ok = (s1 >= -tol) & (s2 >= -tol) & (chosen_r < 0)
            chosen_r[ok] = r
            chosen_q[ok] = q
            score = np.minimum(s1, s2)
            better = score > best
            best[better] = score[better]
            fb_r[better] = r
            fb_q[better] = q
    miss = chosen_r < 0
    chosen_r[miss] = fb_r[miss]
    chosen_q[miss] = fb_q[miss]

    idx = np.arange(n)
    ra, rb, rc = chosen_r, (chosen_r + 1) % 3, (chosen_r + 2) % 3
    qa, qb, qc = chosen_q, (chosen_q + 1) % 3, (chosen_q + 2) % 3
    ea, eb, ec = own[ra], own[rb], own[rc]
    fa, fb, fc = other[idx, qa], other[idx, qb], other[idx, qc]
    split = h_other[idx, qc] * h_own[idx, rc]
    inter = split < 0.0
    base = np.linalg.norm(np.cross(own[0], own[1])) + _norms_cross(other[:, 0], other[:, 1])
    v2_int = base + _norms_cross(ea, fa) + _norms_cross(ea, fb) + _norms_cross(eb, fa) + _norms_cross(eb, fb) \
        + _norms_cross(ec, fc)
    v2_dis = base + _norms_cross(ec, fa) + _norms_cross(ec, fb) + _norms_cross(ea, fc) + _norms_cross(eb, fc)
    v2 = np.where(inter, v2_int, v2_dis)

    n1 = np.cross(own[0], own[1])
    n2 = np.cross(other[:, 0], other[:, 1])
    v3 = 0.25 * (np.abs(other @ n1).sum(axis=1) + np.abs(np.einsum("nk,ik->ni", n2, own)).sum(axis=1))
    v1 = np.full(n, 0.5 * (np.linalg.norm(own, axis=1).sum() * 2.0))

    flat = _norms_cross(np.broadcast_to(m3, m3p.shape), m3p) < ZERO_TOL
    for k in np.flatnonzero(flat):
        d = spherotriangle_decomposition(shape, Rotation(p_bars[k]))
        v3[k], v2[k], inter[k] = d.v3, d.v2, False
    return v3, v2, v1, inter


def spherotriangle_volumes(shape: MoleculeShape, p_bars: np.ndarray, D: float | None = None) -> np.ndarray:
    D = shape.D if D is None else D
    v3, v2, v1, _ = spherotriangle_batch(shape, p_bars)
    return v3 + D * v2 + math.pi * D * D * v1 + 4.0 / 3.0 * math.pi * D ** 3
