"""Closed-form quadratic coefficients of the spherotriangle excluded volume.

Two conventions are offered.  ``printed`` evaluates the published
closed forms as they stand.  ``corrected`` halves their L^3 parts, which
come from the volume V3 of T1 - T2 and were derived with a prism volume
twice too large; only ``corrected`` agrees with projecting the actual
excluded volume.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np

from ..exvol.steiner import spherotriangle_volumes
from ..shapes import MoleculeShape
from ..so3 import aligned_integral, sample_haar_matrices
from .projection import batched

CONVENTIONS = ("printed", "corrected")


def _v3_factor(convention: str) -> float:
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    return 1.0 if convention == "printed" else 0.5


def _check_theta(theta):
    if not (0.0 < theta <= math.pi):
        raise ValueError(f"theta must lie in (0, pi], got {theta}")


def steiner_kernel(shape: MoleculeShape, c: float = 1.0):
    """c V(Pbar) as a batched kernel."""
    @batched
    def G(p):
        return c * spherotriangle_volumes(shape, np.asarray(p))
    return G


def quadratic_coeffs(theta, L, D, c=1.0, convention="printed") -> tuple[float, float, float]:
    """(c2, c3, c4) of the C2v quadratic kernel."""
    _check_theta(theta)
    f = _v3_factor(convention)
    ch, sh = math.cos(theta / 2), math.sin(theta / 2)
    st = math.sin(theta)
    c2 = -f * 15 / 64 * c * L ** 3 * st * ch ** 2 - 15 * math.pi / 128 * c * L * L * D * ch ** 4
    c3 = (-f * 15 / 64 * c * L ** 3 * st * sh * (1 + sh)
          - 15 * math.pi / 128 * c * L * L * D * sh ** 2 * (1 + sh) ** 2)
    c4 = (-f * 15 / 128 * c * L ** 3 * st * (1 + sh)
          - 15 * math.pi / 128 * c * L * L * D * ch ** 2 * sh * (1 + sh))
    return c2, c3, c4


def k_moments(theta, L, D, c=1.0, convention="printed") -> tuple[float, float, float, float]:
    """Haar averages k0 = <cV>, k1 = <cV p11^2>, k2 = <cV p12^2>, k3 = <cV p22^2>.

    The constant C drops out of c2..c4.  ``printed`` keeps the reference
    closed form, ``corrected`` the one that reproduces the averages of V.
    """
    _check_theta(theta)
    f = _v3_factor(convention)
    ch, sh = math.cos(theta / 2), math.sin(theta / 2)
    st = math.sin(theta)
    cc, ss = ch * ch, sh * sh
    if convention == "printed":
        big_c = (0.25 * L * L * D * st + D * D * L * (1 + sh) + 4.0 / 3.0 * math.pi * D ** 3) / 3.0
    else:
        # twice the orientation-free part of V: faces D L^2 sin(theta) / 2, rims, ball
        big_c = 2.0 * (0.5 * L * L * D * st + math.pi * D * D * L * (1 + sh) + 4.0 / 3.0 * math.pi * D ** 3) / 3.0
    w = c * L * L * D * math.pi / 64
    two_k0 = f * 0.25 * c * L ** 3 * st * (1 + sh) + math.pi / 4 * c * L * L * D * (1 + 2 * sh + ss) + 3 * big_c
    two_k1 = (f / 32 * c * L ** 3 * st * (2 * cc + 3 * ss + 3 * sh)
              + w * (4 * cc * cc + 5 * ss * ss + 12 * ss * cc + 2 * sh * (6 * cc + 5 * ss) + 5 * ss) + big_c)
    two_k2 = (f / 64 * c * L ** 3 * st * (5 + 5 * sh)
              + w * (6 * cc * cc + 6 * ss * ss + 9 * ss * cc + sh * (9 * cc + 12 * ss) + 6 * ss) + big_c)
    two_k3 = (f / 32 * c * L ** 3 * st * (3 * cc + 2 * ss + 2 * sh)
              + w * (5 * cc * cc + 4 * ss * ss + 12 * ss * cc + 2 * sh * (6 * cc + 4 * ss) + 4 * ss) + big_c)
    return two_k0 / 2, two_k1 / 2, two_k2 / 2, two_k3 / 2


def coeffs_from_k(k0, k1, k2, k3) -> tuple[float, float, float]:
    """(c2, c3, c4) from the Haar moments of the kernel."""
    return (5 * (4 * k1 + 4 * k2 + k3 - 3 * k0),
            5 * (k1 + 4 * k2 + 4 * k3 - 3 * k0),
            5 * (2 * k1 + 5 * k2 + 2 * k3 - 3 * k0))


class SpherotriangleCoeffs(NamedTuple):
    c1: float
    c2: float
    c3: float
    c4: float
    K: float
    K_stderr: float


def analytic_spherotriangle_coeffs(theta, L, D, c=1.0, convention="printed", K=None,
                                   n_samples=1_000_000, seed=0) -> SpherotriangleCoeffs:
    """c1 = 3/8 c L^2 D K(theta) and the closed-form c2..c4.

    K is estimated by :func:`k_theta` unless given.
    """
    if K is None:
        K, kerr = k_theta(theta, n_samples, seed)
    else:
        kerr = 0.0
    c2, c3, c4 = quadratic_coeffs(theta, L, D, c, convention)
    return SpherotriangleCoeffs(3.0 / 8.0 * c * L * L * D * K, c2, c3, c4, K, kerr)


# --- Table of <p_ij^2 |u . Pbar u'|> and <p_ij^2 |u x Pbar u'|> -----------------

MOMENTS = ("p11^2", "p22^2", "p12^2", "p21^2")
_MOMENT_INDEX = {"p11^2": (0, 0), "p22^2": (1, 1), "p12^2": (0, 1), "p21^2": (1, 0)}


def _unit(name, theta):
    ch, sh = math.cos(theta / 2), math.sin(theta / 2)
    return {"m3": np.array([0.0, 0.0, 1.0]), "ea": np.array([ch, sh, 0.0]),
            "eb": np.array([-ch, sh, 0.0]), "ec": np.array([0.0, -1.0, 0.0])}[name]


def _cosrow(p11_like, p22_like):
    # entries alternate between the two forms A = c^2/8 + 3 s^2/16 and B = 3 c^2/16 + s^2/8
    return lambda ch, sh: [(ch * ch / 8 + 3 * sh * sh / 16) if k == "A" else (3 * ch * ch / 16 + sh * sh / 8)
                           for k in p11_like + p22_like]


def _cross4(ch, sh):
    x = math.pi * (ch ** 4 / 16 + 5 * sh ** 4 / 64 + 3 * sh * sh * ch * ch / 16)
    return [x, x, x, x]


def _pi_row(*pairs):
    return lambda ch, sh: [math.pi * (a * ch * ch + b * sh * sh) for a, b in pairs]


@dataclass(frozen=True)
class Table1Row:
    term_id: str
    u: str          # axis of molecule 1
    u_prime: str    # axis of molecule 2 (rotated by Pbar)
    printed_op: str  # "dot" or "cross" as printed
    printed: object  # (cos(theta/2), sin(theta/2)) -> 4 values in MOMENTS order
    flagged: bool = False  # printed with "." in a slot whose values are of cross type


TABLE1 = (
    Table1Row("|m3'.ea|", "ea", "m3", "dot", _cosrow("AB", "AB")),
    Table1Row("|m3'.eb|", "eb", "m3", "dot", _cosrow("AB", "AB")),
    Table1Row("|m3'.ec|", "ec", "m3", "dot", lambda ch, sh: [3 / 16, 1 / 8, 3 / 16, 1 / 8]),
    Table1Row("|m3.ea'|", "m3", "ea", "dot", _cosrow("AB", "BA")),
    Table1Row("|m3.eb'|", "m3", "eb", "dot", _cosrow("AB", "BA")),
    Table1Row("|m3.ec'|", "m3", "ec", "dot", lambda ch, sh: [3 / 16, 1 / 8, 1 / 8, 3 / 16]),
    Table1Row("|ea x ea'|", "ea", "ea", "cross", _cross4),
    Table1Row("|ea x eb'|", "ea", "eb", "cross", _cross4),
    Table1Row("|ea . ec'|", "ea", "ec", "dot",
              _pi_row((3 / 32, 5 / 64), (3 / 32, 1 / 16), (1 / 16, 3 / 32), (5 / 64, 3 / 32)), True),
    Table1Row("|eb x ea'|", "eb", "ea", "cross", _cross4),
    Table1Row("|eb x eb'|", "eb", "eb", "cross", _cross4),
    Table1Row("|eb . ec'|", "eb", "ec", "dot",
              _pi_row((3 / 32, 5 / 64), (3 / 32, 1 / 16), (1 / 16, 3 / 32), (5 / 64, 3 / 32)), True),
    Table1Row("|ec . ea'|", "ec", "ea", "dot",
              _pi_row((3 / 32, 5 / 64), (3 / 32, 1 / 16), (5 / 64, 3 / 32), (1 / 16, 3 / 32)), True),
    Table1Row("|ec . ec'|", "ec", "ec", "dot",
              lambda ch, sh: [5 * math.pi / 64, math.pi / 16, 3 * math.pi / 32, 3 * math.pi / 32], True),
)
_ROWS = {r.term_id: r for r in TABLE1}


def _row(term_id) -> Table1Row:
    try:
        return _ROWS[term_id]
    except KeyError:
        raise KeyError(f"unknown table row {term_id!r}; known: {list(_ROWS)}") from None


def table1_entry(term_id: str, moment_id: str, theta: float) -> float:
    """The published value of <p_ij^2 * integrand>."""
    row = _row(term_id)
    if moment_id not in MOMENTS:
        raise KeyError(f"unknown moment {moment_id!r}; known: {MOMENTS}")
    return float(row.printed(math.cos(theta / 2), math.sin(theta / 2))[MOMENTS.index(moment_id)])


_FOLDS = {"dot": np.abs, "cross": lambda x: np.sqrt(np.maximum(1.0 - x * x, 0.0))}


def table1_oracle(term_id: str, moment_id: str, theta: float, op: str | None = None, n: int = 48) -> float:
    """<p_ij^2 f(u . Pbar u')> evaluated directly, with f = |x| (dot) or sqrt(1 - x^2) (cross).

    ``op`` defaults to the printed operator.
    """
    row = _row(term_id)
    i, j = _MOMENT_INDEX[moment_id]
    fold = _FOLDS[op or row.printed_op]
    return aligned_integral(_unit(row.u, theta), _unit(row.u_prime, theta), fold,
                            lambda p: p[..., i, j] ** 2, n=n)


def table1_mc(term_id: str, moment_id: str, theta: float, op: str | None = None,
              n_samples: int = 1_000_000, seed: int = 0) -> tuple[float, float]:
    row = _row(term_id)
    i, j = _MOMENT_INDEX[moment_id]
    p = sample_haar_matrices(np.random.default_rng(seed), n_samples)
    x = np.einsum("k,nkl,l->n", _unit(row.u, theta), p, _unit(row.u_prime, theta))
    vals = _FOLDS[op or row.printed_op](x) * p[:, i, j] ** 2
    return float(vals.mean()), float(vals.std() / math.sqrt(n_samples))


# --- K(theta): the p11 moment of the orientation-dependent part of V2 ------------

# (edge pair of -T2, edge pair of T1, (edge of -T2, edge of T1) in the split test,
#  unit-cross terms when the split product is < 0, and when it is > 0)
_K_BRANCHES = (
    ("ab", "ab", "cc", "aa ab ba bb cc", "ac bc ca cb"),
    ("bc", "ab", "ac", "ab ac bb bc ca", "aa ba cb cc"),
    ("ca", "ab", "bc", "ac aa bc ba cb", "ab bb cc ca"),
    ("ab", "bc", "ca", "ba bb ca cb ac", "bc cc aa ab"),
    ("bc", "bc", "aa", "bb bc cb cc aa", "ba ca ab ac"),
    ("ca", "bc", "ba", "bc ba cc ca ab", "bb cb ac aa"),
    ("ab", "ca", "cb", "ca cb aa ab bc", "cc ac ba bb"),
    ("bc", "ca", "ab", "cb cc ab ac ba", "ca aa bb bc"),
    ("ca", "ca", "bb", "cc ca ac aa bb", "cb ab bc ba"),
)


def _k_integrand(theta: float, p: np.ndarray):
    """p11 times the gated sum of I-terms, and a mask of tie samples."""
    ch, sh = math.cos(theta / 2), math.sin(theta / 2)
    e = {"a": np.array([ch, sh, 0.0]), "b": np.array([-ch, sh, 0.0]), "c": np.array([0.0, -1.0, 0.0])}
    length = {"a": 0.5, "b": 0.5, "c": sh}  # in units of L
    own = {k: length[k] * e[k] for k in e}
    # edges of -T2 are minus the rotated edges of T
    other = {k: -length[k] * (p @ e[k]) for k in e}
    m3p = p[:, :, 2]
    h_other = {k: other[k][:, 2] for k in other}
    h_own = {k: m3p @ own[k] for k in own}
    unit = {x + y: np.linalg.norm(np.cross(own[x], other[y]), axis=-1) / 0.25 for x in "abc" for y in "abc"}
    total = np.zeros(len(p))
    ties = np.zeros(len(p), dtype=bool)
    for op, wp, split, lt, gt in _K_BRANCHES:
        g1 = h_other[op[0]] * h_other[op[1]]
        g2 = h_own[wp[0]] * h_own[wp[1]]
        s = h_other[split[0]] * h_own[split[1]]
        ties |= (g1 == 0) | (g2 == 0) | (s == 0)
        gate = (g1 > 0) & (g2 > 0)
        total += np.where(gate & (s < 0), sum(unit[k] for k in lt.split()), 0.0)
        total += np.where(gate & (s > 0), sum(unit[k] for k in gt.split()), 0.0)
    return p[:, 0, 0] * total, ties


def k_theta(theta: float, n_samples: int = 1_000_000, seed: int = 0, chunk: int = 500_000) -> tuple[float, float]:
    """Monte Carlo estimate of K(theta) and its standard error.

    Samples on which any gating product is exactly zero are discarded
    and redrawn.
    """
    _check_theta(theta)
    if n_samples < 10_000:
        raise ValueError("k_theta needs at least 10^4 samples")
    rng = np.random.default_rng(seed)
    kept = []
    left = n_samples
    while left > 0:
        p = sample_haar_matrices(rng, min(chunk, left))
        vals, ties = _k_integrand(theta, p)
        vals = vals[~ties]
        kept.append(vals)
        left -= len(vals)
    v = np.concatenate(kept)[:n_samples]
    return float(v.mean()), float(v.std() / math.sqrt(len(v)))
