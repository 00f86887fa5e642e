"""Uniaxial self-consistency for G = -alpha p11^2, reduced to one scalar.

With <m1 m1> uniaxial of top eigenvalue s about z, the mean field is
-eta z^2 + const with eta = alpha (3 s - 1) / 2, and self-consistency
reads s = g(eta), g(eta) = int x^2 e^{eta x^2} / int e^{eta x^2} over [0, 1].
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad as _quad
from scipy.optimize import brentq, minimize_scalar

from ..kernel.projection import KernelPolynomial, Provenance


def maier_saupe_kernel(alpha: float) -> KernelPolynomial:
    return KernelPolynomial.from_coeffs("Dinf_h", [0.0, -alpha], Provenance.MANUAL, alpha=alpha)


def g(eta: float) -> float:
    # shift the exponent by its maximum so large eta does not overflow
    top = max(eta, 0.0)
    num = _quad(lambda x: x * x * math.exp(eta * x * x - top), 0.0, 1.0, epsabs=0, epsrel=1e-13)[0]
    den = _quad(lambda x: math.exp(eta * x * x - top), 0.0, 1.0, epsabs=0, epsrel=1e-13)[0]
    return num / den


def coupling_for(eta: float) -> float:
    """The alpha at which a nematic state of strength eta is self-consistent."""
    return 2.0 * eta / (3.0 * g(eta) - 1.0)


def onset_coupling() -> tuple[float, float]:
    """(alpha*, eta*): the smallest coupling with a nematic solution."""
    r = minimize_scalar(coupling_for, bracket=(0.5, 2.0, 6.0), tol=1e-10)
    return float(r.fun), float(r.x)


def nematic_order(alpha: float) -> float:
    """Top eigenvalue s of <m1 m1> on the stable nematic branch (largest root)."""
    a_star, eta_star = onset_coupling()
    if alpha < a_star:
        raise ValueError(f"no nematic solution below alpha* = {a_star:.6f}")
    hi = eta_star
    while coupling_for(hi) < alpha:
        hi *= 2.0
    eta = brentq(lambda e: coupling_for(e) - alpha, eta_star, hi, xtol=1e-13)
    return g(eta)


def scf_onset(quad, lo: float = 6.0, hi: float = 7.5, tol: float = 1e-3, order_gap: float = 0.05,
              max_iter: int = 20000) -> float:
    """Smallest coupling at which the SCF solver holds a nematic branch, by bisection.

    Each trial starts from a strongly ordered uniaxial seed; the Boltzmann
    map is monotone in the order, so the iteration settles on the upper
    nematic branch whenever it exists and falls to isotropy otherwise.
    """
    from .solver import SCFConfig, scf_solve

    def nematic(alpha):
        cfg = SCFConfig(quad, damping=1.0, tol=1e-12, max_iter=max_iter, init="UniaxialSeed", seed_amplitude=0.6)
        br = scf_solve(maier_saupe_kernel(alpha), cfg)
        return br.order_params.eig11[0] > 1.0 / 3.0 + order_gap

    if nematic(lo) or not nematic(hi):
        raise ValueError(f"onset not bracketed by [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if nematic(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
