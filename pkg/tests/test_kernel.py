import math

import numpy as np
import pytest

from rigidmol.kernel.basis import P11_2, MonomialBasis, SymmetryClass, build_basis
from rigidmol.kernel.projection import (KernelPolynomial, batched, SingularGram, onsager_c2, onsager_kernel, project_kernel,
                                        projected_kernel, verify_kernel_symmetry)
from rigidmol.kernel import spherotriangle as st
from rigidmol.shapes import PI_ABOUT_M1, MoleculeShape, symmetry_group
from rigidmol.so3 import haar_quadrature, sample_haar_matrices

Q16 = haar_quadrature(16, 16, 16)

# Steiner kernel projected at 48^3, theta = pi/2, L = 1, D = 0.1 (frozen oracle run)
PROJECTED_C2_C4 = (-0.06781, -0.19518, -0.12229)


@pytest.mark.parametrize("sc", list(SymmetryClass))
def test_basis_terms_respect_their_symmetry(sc, rng):
    b = build_basis(sc)
    p = sample_haar_matrices(rng, 50)
    q = b.evaluate(p)
    # Pbar -> Pbar^T swaps the two molecules
    assert np.allclose(b.evaluate(np.transpose(p, (0, 2, 1))), q, atol=1e-14)
    # the pi turn about m1 belongs to every class, on either molecule
    t = PI_ABOUT_M1
    assert np.allclose(b.evaluate(t @ p), q, atol=1e-14)
    assert np.allclose(b.evaluate(p @ t), q, atol=1e-14)
    assert q.shape == (50, len(b))
    assert np.allclose(q[:, 0], 1.0)


def test_gram_closed_form():
    rep = project_kernel(batched(lambda p: np.zeros(len(p))), build_basis("Dinf_h"), Q16)
    assert np.allclose(rep.gram, [[1, 1 / 3], [1 / 3, 1 / 5]], atol=1e-14)


@pytest.mark.parametrize("sc", list(SymmetryClass))
def test_projection_is_idempotent(sc, rng):
    c = rng.normal(size=len(build_basis(sc)))
    kp = KernelPolynomial.from_coeffs(sc, c)
    rep = project_kernel(kp, kp.basis, Q16)
    assert np.max(np.abs(rep.coeffs - c)) < 1e-10
    assert rep.residual_l2 < 1e-10


def test_projection_is_linear():
    a = onsager_kernel(1.0, 0.1)
    b = onsager_kernel(2.0, 0.05)
    basis = build_basis("Dinf_h")
    ra = project_kernel(a, basis, Q16).coeffs
    rb = project_kernel(b, basis, Q16).coeffs
    rs = project_kernel(batched(lambda p: 2 * a(p) - b(p)), basis, Q16).coeffs
    assert np.allclose(rs, 2 * ra - rb, atol=1e-13)


def test_duplicate_term_is_singular():
    basis = MonomialBasis(SymmetryClass.DINF_H, build_basis("Dinf_h").terms + (P11_2,))
    with pytest.raises(SingularGram):
        project_kernel(onsager_kernel(1.0, 0.1), basis, Q16)


def test_onsager_projection():
    kp, rep = projected_kernel(onsager_kernel(1.0, 0.1, 3.0), "Dinf_h", haar_quadrature(32, 32, 32))
    assert kp.coefficient("p11^2") == pytest.approx(-15 * math.pi / 32 * 3.0 * 0.1, rel=1e-3)
    assert onsager_c2(1.0, 0.1, 3.0) == pytest.approx(-15 * math.pi / 32 * 0.3)
    # <G> is preserved: c0 + c2 / 3 = (pi / 4) 2 L^2 D c
    assert kp.coeffs[0] + kp.coeffs[1] / 3 == pytest.approx(math.pi / 4 * 2 * 0.1 * 3.0, rel=1e-4)


def test_kernel_json_round_trip():
    kp = KernelPolynomial.from_coeffs("C2v_cubic", np.arange(9.0), "Analytic", theta=1.0)
    back = KernelPolynomial.from_json(kp.to_json())
    assert np.array_equal(back.coeffs, kp.coeffs)
    assert back.params == {"theta": 1.0} and back.provenance.value == "Analytic"
    with pytest.raises(ValueError):
        KernelPolynomial.from_json({**kp.to_json(), "extra": 1})
    with pytest.raises(ValueError):
        KernelPolynomial.from_coeffs("Dinf_h", [1.0, 2.0, 3.0])


def test_steiner_kernel_has_c2v_symmetry():
    shape = MoleculeShape.sphero_triangle(1.0, 0.1, 2.0)
    rep = verify_kernel_symmetry(st.steiner_kernel(shape), symmetry_group(shape), n_samples=100)
    assert rep.passed, rep


def test_onsager_kernel_has_rod_symmetry():
    shape = MoleculeShape.rod(1.0, 0.1)
    assert verify_kernel_symmetry(onsager_kernel(1.0, 0.1), symmetry_group(shape), n_samples=100).passed


def test_symmetry_check_catches_a_broken_kernel():
    shape = MoleculeShape.sphero_triangle(1.0, 0.1, 2.0)
    rep = verify_kernel_symmetry(batched(lambda p: p[:, 0, 2]), symmetry_group(shape), n_samples=50)
    assert not rep.passed


@pytest.mark.parametrize("conv", st.CONVENTIONS)
@pytest.mark.parametrize("theta", np.linspace(0.1, math.pi - 0.1, 7))
def test_k_route_reproduces_closed_forms(conv, theta):
    k = st.k_moments(theta, 1.3, 0.07, 2.0, conv)
    a = np.array(st.quadratic_coeffs(theta, 1.3, 0.07, 2.0, conv))
    b = np.array(st.coeffs_from_k(*k))
    assert np.max(np.abs(a - b)) <= 1e-12 * 15 * max(map(abs, k))


def test_printed_coefficients_frozen():
    c = st.quadratic_coeffs(math.pi / 2, 1.0, 0.1, 1.0, "printed")
    assert c == pytest.approx((-0.126391385, -0.336559823, -0.222271719), abs=1e-9)


def test_corrected_coefficients_match_projection():
    c = st.quadratic_coeffs(math.pi / 2, 1.0, 0.1, 1.0, "corrected")
    assert c == pytest.approx(PROJECTED_C2_C4, rel=1e-3)


def test_convention_name_checked():
    with pytest.raises(ValueError):
        st.quadratic_coeffs(1.0, 1.0, 0.1, 1.0, "other")


@pytest.mark.slow
def test_corrected_k_moments_match_quadrature():
    shape = MoleculeShape.sphero_triangle(1.0, 0.1, 2.0)
    q = haar_quadrature(32, 32, 32)
    p = q.matrices
    v = st.steiner_kernel(shape)(p)
    k_num = [float(q.integrate(v * w)) for w in (1.0, p[:, 0, 0] ** 2, p[:, 0, 1] ** 2, p[:, 1, 1] ** 2)]
    assert st.k_moments(2.0, 1.0, 0.1, 1.0, "corrected") == pytest.approx(k_num, rel=1e-3)


def test_table1_unflagged_rows_except_cross_rows():
    # the four |e x e'| rows agree only at a right apex angle
    for theta in (math.pi / 6, math.pi / 2, 5 * math.pi / 6):
        for row in st.TABLE1:
            cross_row = " x " in row.term_id
            if row.flagged or (cross_row and theta != math.pi / 2):
                continue
            for mom in st.MOMENTS:
                assert st.table1_entry(row.term_id, mom, theta) == pytest.approx(
                    st.table1_oracle(row.term_id, mom, theta), abs=1e-4), (row.term_id, mom, theta)


def test_table1_flagged_rows_are_cross_products():
    for row in st.TABLE1:
        if row.flagged:
            for mom in st.MOMENTS:
                assert st.table1_entry(row.term_id, mom, 1.0) == pytest.approx(
                    st.table1_oracle(row.term_id, mom, 1.0, op="cross"), abs=1e-4)


def test_table1_oracle_against_monte_carlo():
    row = st.TABLE1[7]
    exact = st.table1_oracle(row.term_id, "p12^2", 1.2)
    mc, se = st.table1_mc(row.term_id, "p12^2", 1.2, n_samples=400_000, seed=5)
    assert abs(mc - exact) < 5 * se


def test_k_theta_seed_consistency():
    a, sa = st.k_theta(math.pi / 2, 200_000, seed=0)
    b, sb = st.k_theta(math.pi / 2, 200_000, seed=1)
    assert abs(a - b) < 5 * math.hypot(sa, sb)
    with pytest.raises(ValueError):
        st.k_theta(1.0, 100)


def test_analytic_coeffs_c1_from_k():
    co = st.analytic_spherotriangle_coeffs(2.0, 1.0, 0.1, 1.0, K=0.5)
    assert co.c1 == pytest.approx(3 / 8 * 0.1 * 0.5)
    assert (co.c2, co.c3, co.c4) == st.quadratic_coeffs(2.0, 1.0, 0.1, 1.0)
