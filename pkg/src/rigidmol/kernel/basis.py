"""Symmetry-adapted polynomial bases in the entries p_ij of Pbar.

A basis term is a short polynomial: a tuple of (coefficient, monomial)
pairs, a monomial being ((i, j, exponent), ...) with 1-based indices.
"""
from __future__ import annotations

from dataclasses import dataclass
import enum

import numpy as np


class SymmetryClass(str, enum.Enum):
    DINF_H = "Dinf_h"
    CINF = "Cinf"
    C2V_QUADRATIC = "C2v_quadratic"
    C2V_CUBIC = "C2v_cubic"


ONE = ((1.0, ()),)
P11 = ((1.0, ((1, 1, 1),)),)
P11_2 = ((1.0, ((1, 1, 2),)),)
P22_2 = ((1.0, ((2, 2, 2),)),)
P12_P21 = ((1.0, ((1, 2, 2),)), (1.0, ((2, 1, 2),)))
P11_3 = ((1.0, ((1, 1, 3),)),)
P11_P22_2 = ((1.0, ((1, 1, 1), (2, 2, 2))),)
P11_P12_P21 = ((1.0, ((1, 1, 1), (1, 2, 2))), (1.0, ((1, 1, 1), (2, 1, 2))))
P12_P21_P22 = ((1.0, ((1, 2, 1), (2, 1, 1), (2, 2, 1))),)

_TERMS = {
    SymmetryClass.DINF_H: (ONE, P11_2),
    SymmetryClass.CINF: (ONE, P11, P11_2),
    SymmetryClass.C2V_QUADRATIC: (ONE, P11, P11_2, P22_2, P12_P21),
    SymmetryClass.C2V_CUBIC: (ONE, P11, P11_2, P22_2, P12_P21, P11_3, P11_P22_2, P11_P12_P21, P12_P21_P22),
}

_NAMES = {
    ONE: "1", P11: "p11", P11_2: "p11^2", P22_2: "p22^2", P12_P21: "p12^2+p21^2", P11_3: "p11^3",
    P11_P22_2: "p11*p22^2", P11_P12_P21: "p11*(p12^2+p21^2)", P12_P21_P22: "p12*p21*p22",
}


@dataclass(frozen=True)
class MonomialBasis:
    symmetry_class: SymmetryClass
    terms: tuple

    def __len__(self):
        return len(self.terms)

    @property
    def names(self) -> list[str]:
        return [_NAMES.get(t, repr(t)) for t in self.terms]

    @property
    def degree(self) -> int:
        return max(sum(e for _, _, e in mono) for term in self.terms for _, mono in term)

    def evaluate(self, p_bars) -> np.ndarray:
        """Term values, shape (n, len(basis)), for an (n, 3, 3) stack (or one matrix)."""
        p = np.asarray(p_bars, dtype=float)
        single = p.ndim == 2
        if single:
            p = p[None]
        out = np.empty((len(p), len(self.terms)))
        for k, term in enumerate(self.terms):
            acc = np.zeros(len(p))
            for coef, mono in term:
                val = np.full(len(p), coef)
                for i, j, e in mono:
                    val = val * p[:, i - 1, j - 1] ** e
                acc += val
            out[:, k] = acc
        return out[0] if single else out


def build_basis(symmetry_class) -> MonomialBasis:
    sc = SymmetryClass(symmetry_class)
    return MonomialBasis(sc, _TERMS[sc])


def symmetry_operations(symmetry_class, n_axial: int = 5) -> list:
    """Maps Pbar -> Pbar' under which every term of the class is invariant.

    Each map acts on an (n, 3, 3) stack.
    """
    sc = SymmetryClass(symmetry_class)
    ops = [lambda p: np.swapaxes(p, -1, -2)]  # molecule exchange
    if sc in (SymmetryClass.C2V_QUADRATIC, SymmetryClass.C2V_CUBIC):
        t = np.diag([1.0, -1.0, -1.0])
        for j in (np.diag([-1.0, -1.0, 1.0]), np.diag([-1.0, 1.0, -1.0])):
            ops.append(lambda p, j=j: j @ p @ j)
        ops += [lambda p: p @ t, lambda p: t @ p]
    else:
        for k in range(1, n_axial + 1):
            phi = 2 * np.pi * k / (n_axial + 1) + 0.3
            r = np.array([[1, 0, 0], [0, np.cos(phi), -np.sin(phi)], [0, np.sin(phi), np.cos(phi)]])
            ops += [lambda p, r=r: p @ r, lambda p, r=r: r @ p]
        if sc is SymmetryClass.DINF_H:
            j = np.diag([-1.0, -1.0, 1.0])
            ops.append(lambda p: p @ j)
    return ops
