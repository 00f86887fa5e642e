import math

import mpmath
import numpy as np
import pytest

from rigidmol.kernel.projection import KernelPolynomial
from rigidmol.scf.analysis import (branch_sweep, commutator_norm, dedupe, fingerprint, same_branch, select_phase,
                                   validate_theorems)
from rigidmol.scf.maier_saupe import coupling_for, maier_saupe_kernel, nematic_order, onset_coupling
from rigidmol.scf.moments import MomentSet, boltzmann_moments, isotropic, mean_field, seed
from rigidmol.scf.solver import (SCFConfig, free_energy, free_energy_terms, order_parameters, principal_frame,
                                 reduce_to_s2, scf_solve)
from rigidmol.so3 import Rotation, haar_quadrature, s2_quadrature, sample_haar
from rigidmol.verification import random_seed_moments

Q16 = haar_quadrature(16, 16, 16)

# independent oracle (mpmath, 30 digits): min over eta of the self-consistent coupling
ALPHA_STAR = 6.7314864
ETA_STAR = 2.17829


def _mp_onset():
    mpmath.mp.dps = 30

    def alpha(eta):
        z = mpmath.quad(lambda x: mpmath.exp(eta * x * x), [0, 1])
        s = mpmath.quad(lambda x: x * x * mpmath.exp(eta * x * x), [0, 1]) / z
        return 2 * eta / (3 * s - 1)
    eta = mpmath.findroot(lambda e: mpmath.diff(alpha, e), 2.0)
    return float(alpha(eta)), float(eta)


def test_frozen_onset_oracle():
    a, e = _mp_onset()
    assert a == pytest.approx(ALPHA_STAR, abs=1e-6)
    assert e == pytest.approx(ETA_STAR, abs=1e-4)


def test_module_onset_matches_oracle():
    a, e = onset_coupling()
    assert a == pytest.approx(ALPHA_STAR, abs=1e-6)
    assert e == pytest.approx(ETA_STAR, abs=1e-4)
    assert coupling_for(e) == pytest.approx(a)


def test_zero_kernel_keeps_isotropy():
    kp = KernelPolynomial.from_coeffs("C2v_quadratic", np.zeros(5))
    br = scf_solve(kp, SCFConfig(Q16, init="BiaxialSeed"))
    assert br.converged
    assert br.moments.distance(isotropic()) < 1e-12
    # free energy of the uniform density on the unit-mass measure
    assert br.free_energy == pytest.approx(0.0, abs=1e-12)


def test_weak_coupling_is_isotropic():
    br = scf_solve(maier_saupe_kernel(4.0), SCFConfig(Q16, init="UniaxialSeed"))
    assert br.converged
    assert max(br.order_params.eig11) == pytest.approx(1 / 3, abs=1e-8)


@pytest.mark.parametrize("alpha", [7.0, 10.0])
def test_maier_saupe_nematic(alpha):
    q = haar_quadrature(32, 32, 32)
    br = scf_solve(maier_saupe_kernel(alpha), SCFConfig(q, init="UniaxialSeed"))
    assert br.converged
    s = br.order_params.eig11
    assert s[0] == pytest.approx(nematic_order(alpha), abs=1e-6)
    assert abs(s[1] - s[2]) < 1e-6


def test_nematic_order_below_onset():
    with pytest.raises(ValueError):
        nematic_order(6.0)


def test_boltzmann_moments_are_valid(rng):
    for _ in range(5):
        m = random_seed_moments(rng, Q16)
        assert m.violations(1e-12) == []


def test_boltzmann_of_constant_field_is_isotropic():
    m, log_z = boltzmann_moments(lambda p: np.full(len(p), 2.0), Q16)
    assert m.distance(isotropic()) < 1e-13
    assert log_z == pytest.approx(-2.0)


def test_mean_field_matches_direct_average(rng):
    # W(P) = <G(P^T P')> over P' drawn from f, checked by brute force on the nodes
    kp = KernelPolynomial.from_coeffs("C2v_cubic", rng.normal(size=9))

    def W0(p):
        return 0.3 * p[:, :, 0] @ [1.0, 0.2, -0.5] + p[:, :, 1] @ [0.1, 0.4, 0.0]
    f_moments, _ = boltzmann_moments(W0, Q16, cubic=True)
    e = Q16.weights * np.exp(-W0(Q16.matrices))
    e /= e.sum()
    W = mean_field(kp, f_moments)
    for _ in range(3):
        P = sample_haar(rng).m
        direct = float(e @ kp(np.einsum("ba,nbc->nac", P, Q16.matrices)))
        assert W(P) == pytest.approx(direct, rel=1e-11, abs=1e-12)


def test_cubic_kernel_needs_cubic_moments():
    kp = KernelPolynomial.from_coeffs("C2v_cubic", np.ones(9))
    with pytest.raises(ValueError):
        mean_field(kp, isotropic())


def test_free_energy_two_paths(rng):
    kp = KernelPolynomial.from_coeffs("C2v_quadratic", [0.0, 0.5, -8.0, -3.0, -2.0])
    br = scf_solve(kp, SCFConfig(Q16, init="BiaxialSeed"))
    _, by_nodes, by_moments = free_energy_terms(kp, br.moments, Q16)
    assert by_nodes == pytest.approx(by_moments, abs=1e-8)


def test_free_energy_of_fixed_point_equals_entropy_plus_energy():
    kp = maier_saupe_kernel(8.0)
    br = scf_solve(kp, SCFConfig(Q16, init="UniaxialSeed"))
    W = mean_field(kp, br.moments)
    p = Q16.matrices
    f = np.exp(-W(p))
    f /= Q16.integrate(f)
    G = kp(np.einsum("nba,mbc->nmac", p, p).reshape(-1, 3, 3)).reshape(len(p), len(p))
    w = Q16.weights
    direct = float(w @ (f * np.log(f))) + 0.5 * float((w * f) @ G @ (w * f))
    assert free_energy(kp, br, Q16) == pytest.approx(direct, abs=1e-8)
    assert free_energy(kp, br, Q16, concentration_terms_dropped=False, c=2.0, f0=1.0) == pytest.approx(
        direct + 0.5 + math.log(2.0), abs=1e-8)
    with pytest.raises(ValueError):
        free_energy(kp, br, Q16, concentration_terms_dropped=False)


def test_fixed_point_certificate():
    kp = KernelPolynomial.from_coeffs("C2v_quadratic", [0.0, 0.0, -9.0, -4.0, -6.0])
    br = scf_solve(kp, SCFConfig(Q16, init="BiaxialSeed"))
    assert br.converged
    again, _ = boltzmann_moments(mean_field(kp, br.moments), Q16)
    assert br.moments.distance(again) <= 1e-10


def test_rotation_covariance():
    # the fixed-point map commutes with lab rotations up to quadrature error
    q = haar_quadrature(32, 32, 32)
    kp = KernelPolynomial.from_coeffs("C2v_quadratic", [0.0, 0.0, -9.0, -4.0, -6.0])
    m = scf_solve(kp, SCFConfig(q, init="BiaxialSeed")).moments
    R = Rotation.about_axis([1.0, 2.0, 0.5], 0.9)
    a, _ = boltzmann_moments(mean_field(kp, m.rotated(R)), q)
    b = m.rotated(R)
    assert a.distance(b) < 1e-6


def test_s2_reduction_matches_full_solver():
    kp = maier_saupe_kernel(8.0)
    full = scf_solve(kp, SCFConfig(haar_quadrature(24, 24, 24), init="UniaxialSeed"))
    red = reduce_to_s2(kp, s2_quadrature(24, 24)).solve(init="UniaxialSeed")
    assert red.converged
    assert np.allclose(full.moments.M11, red.moments.M11, atol=1e-8)
    assert red.free_energy == pytest.approx(full.free_energy, abs=1e-8)


def test_s2_reduction_refuses_biaxial_kernel():
    kp = KernelPolynomial.from_coeffs("C2v_quadratic", [0.0, 0.0, -1.0, -1.0, 0.0])
    with pytest.raises(ValueError):
        reduce_to_s2(kp, s2_quadrature(8, 8))


def test_polar_order_for_strong_dipolar_term():
    q = haar_quadrature(24, 24, 24)
    kp = KernelPolynomial.from_coeffs("Cinf", [0.0, -4.0, -6.0])
    br = scf_solve(kp, SCFConfig(q, init="PolarSeed"))
    assert br.converged
    assert br.order_params.m1_norm > 0.1
    rep = validate_theorems(kp, [br], q, symmetry_ops=[])
    assert rep.branches[0]["c_m1_eigenvector"].applicable
    assert rep.passed


def test_no_polar_order_for_weak_dipolar_term():
    kp = KernelPolynomial.from_coeffs("Cinf", [0.0, -0.9, -8.0])
    br = scf_solve(kp, SCFConfig(Q16, init="PolarSeed"))
    assert br.converged and br.order_params.m1_norm < 1e-6


def test_cubic_closure_round_trip():
    kp = KernelPolynomial.from_coeffs("C2v_cubic", [0.0, 0.0, -7.0, -3.0, -2.0, 0.0, 0.0, 0.0, 0.0])
    br = scf_solve(kp, SCFConfig(Q16, init="BiaxialSeed"))
    assert br.converged and br.moments.cubic
    assert br.moments.violations(1e-9) == []
    assert MomentSet.from_json(br.moments.to_json()).distance(br.moments) == 0.0


def test_iteration_cap_reports_unconverged():
    br = scf_solve(maier_saupe_kernel(8.0), SCFConfig(Q16, max_iter=3, init="UniaxialSeed"))
    assert not br.converged and not br.diverged
    assert br.iterations == 3 and br.residual > 1e-6


def test_huge_coupling_stays_finite():
    # the exponent is shifted by its minimum, so a stiff field does not overflow
    br = scf_solve(maier_saupe_kernel(1e6), SCFConfig(haar_quadrature(4, 4, 4), damping=1.0, max_iter=5,
                                                      init="UniaxialSeed"))
    assert not br.diverged and np.all(np.isfinite(br.moments.flat()))


def test_config_validation():
    for bad in (dict(damping=0.0), dict(damping=1.5), dict(tol=0.0), dict(max_iter=0)):
        with pytest.raises(ValueError):
            SCFConfig(Q16, **bad)
    with pytest.raises(ValueError):
        seed("Spiral")


def test_order_parameters_of_isotropic():
    op = order_parameters(isotropic())
    assert op.m1_norm == 0.0 and math.isnan(op.alignment)
    assert op.five == pytest.approx((1 / 3, 1 / 3, 1 / 3, 1 / 3, 0.0))


def test_fingerprint_is_rotation_invariant(rng):
    m = random_seed_moments(rng, Q16)
    R = sample_haar(rng)
    assert np.allclose(fingerprint(m), fingerprint(m.rotated(R)), atol=1e-13)
    assert same_branch(m, m.rotated(R))
    assert not same_branch(m, isotropic())


def test_sweep_finds_both_branches():
    cfg = SCFConfig(Q16, max_iter=3000)
    rows = branch_sweep(maier_saupe_kernel, [6.0, 8.0], cfg, seeds=("Isotropic", "UniaxialSeed"))
    at = {}
    for r in rows:
        at.setdefault(r.param, []).append(r.branch)
    assert len(at[6.0]) == 1
    assert len(at[8.0]) == 2
    best = select_phase(rows)
    assert max(best[8.0].branch.order_params.eig11) > 0.6
    assert len(dedupe(at[8.0] + at[8.0])) == 2
    with pytest.raises(ValueError):
        branch_sweep(maier_saupe_kernel, [1.0, 3.0, 2.0], cfg)


def test_commuting_kernel_gives_commuting_moments(rng):
    q = haar_quadrature(24, 24, 24)
    c2, c3 = -9.0, -4.0
    kp = KernelPolynomial.from_coeffs("C2v_quadratic", [0.0, 0.5, c2, c3, -math.sqrt(c2 * c3)])
    br = scf_solve(kp, SCFConfig(q, init=random_seed_moments(rng, q), align_frame=True))
    assert br.converged
    assert commutator_norm(br.moments) < 1e-6


def test_frame_alignment_only_rotates(rng):
    m = random_seed_moments(rng, Q16)
    r = principal_frame(m)
    assert np.allclose(r.T @ r, np.eye(3)) and np.linalg.det(r) == pytest.approx(1.0)
    a = m.rotated(r.T)
    assert np.allclose(fingerprint(a), fingerprint(m), atol=1e-13)
    assert commutator_norm(a) == pytest.approx(commutator_norm(m), abs=1e-13)
    # A = M11 + 0.1 M22 is diagonal in the new frame
    A = a.M11 + 0.1 * a.M22
    assert np.allclose(A, np.diag(np.diag(A)), atol=1e-13)
    assert np.array_equal(principal_frame(isotropic()), np.eye(3))


def test_aligned_solver_stops_orbit_drift(rng):
    q = haar_quadrature(24, 24, 24)
    kp = KernelPolynomial.from_coeffs("C2v_quadratic", [0.0, 1.26, -5.23, -9.47, 7.04])
    init = random_seed_moments(rng, q)
    free = scf_solve(kp, SCFConfig(q, init=init, max_iter=300))
    aligned = scf_solve(kp, SCFConfig(q, init=init, max_iter=300, align_frame=True))
    assert aligned.converged
    assert aligned.residual < free.residual
    # same branch; the drifting iterate carries the quadrature error of an oblique sharp state
    assert np.allclose(fingerprint(aligned.moments), fingerprint(free.moments), atol=5e-3)
