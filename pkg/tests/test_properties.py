import math

import numpy as np
from hypothesis import given, settings, strategies as st

from rigidmol.exvol.steiner import (edges_from_triangles, spherotriangle_decomposition,
                                    spherotriangle_excluded_volume, steiner_decomposition)
from rigidmol.kernel.projection import KernelPolynomial, project_kernel
from rigidmol.scf.analysis import fingerprint
from rigidmol.scf.moments import boltzmann_moments
from rigidmol.shapes import MoleculeShape, triangle_vertices
from rigidmol.so3 import EulerAngles, euler_to_matrix, haar_quadrature, matrix_to_euler, relative_rotation

Q8 = haar_quadrature(8, 8, 8)

alpha = st.floats(0.0, math.pi)
turn = st.floats(0.0, 2 * math.pi, exclude_max=True)
euler = st.builds(EulerAngles, alpha, turn, turn)
rotations = euler.map(euler_to_matrix)
thetas = st.floats(0.05, math.pi)
radii = st.floats(0.01, 0.5)


@given(euler)
def test_euler_round_trip(a):
    r = euler_to_matrix(a)
    assert np.allclose(euler_to_matrix(matrix_to_euler(r)).m, r.m, atol=1e-10)


@given(rotations, thetas, radii)
@settings(max_examples=60, deadline=None)
def test_excluded_volume_swap_symmetry(P, theta, D):
    shape = MoleculeShape.sphero_triangle(1.0, D, theta)
    a = spherotriangle_excluded_volume(shape, P).value
    b = spherotriangle_excluded_volume(shape, P.inverse).value
    assert math.isclose(a, b, rel_tol=1e-10)


@given(rotations, thetas, radii)
@settings(max_examples=60, deadline=None)
def test_steiner_functionals_are_nonnegative(P, theta, D):
    dec = spherotriangle_decomposition(MoleculeShape.sphero_triangle(1.0, D, theta), P)
    assert dec.v3 >= -1e-12 and dec.v2 >= 0 and dec.v1 > 0
    # a triangle of side >= L/2 swept around itself covers more than a ball
    assert dec.volume(D) > 4 / 3 * math.pi * D ** 3


@given(rotations, rotations, thetas)
@settings(max_examples=40, deadline=None)
def test_volume_from_lab_frame_triangles(P1, P2, theta):
    shape = MoleculeShape.sphero_triangle(1.0, 0.1, theta)
    tri = np.array(triangle_vertices(shape))
    lab = steiner_decomposition(edges_from_triangles(tri @ P1.m.T, tri @ P2.m.T)).volume(0.1)
    body = spherotriangle_excluded_volume(shape, relative_rotation(P1, P2)).value
    assert math.isclose(lab, body, rel_tol=1e-10)


@given(st.lists(st.floats(-10, 10), min_size=5, max_size=5))
@settings(max_examples=30, deadline=None)
def test_projection_recovers_polynomial(c):
    kp = KernelPolynomial.from_coeffs("C2v_quadratic", c)
    assert np.allclose(project_kernel(kp, kp.basis, Q8).coeffs, c, atol=1e-9)


@given(st.lists(st.floats(-3, 3), min_size=9, max_size=9), rotations)
@settings(max_examples=30, deadline=None)
def test_boltzmann_moments_valid_and_covariant(a, R):
    A = np.array(a).reshape(3, 3)

    def W(p):
        return np.einsum("ab,na,nb->n", A, p[:, :, 0], p[:, :, 1]) + p[:, 2, 0]
    m, _ = boltzmann_moments(W, Q8, cubic=True)
    assert m.violations(1e-10) == []
    back = m.rotated(R).rotated(R.inverse)
    assert back.distance(m) < 1e-13
    assert np.allclose(fingerprint(m.rotated(R)), fingerprint(m), atol=1e-12)
