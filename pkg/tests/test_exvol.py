import math

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from rigidmol.exvol.bentcore import bentcore_excluded_volume, spheroparallelogram_volume
from rigidmol.exvol.montecarlo import mc_excluded_volume
from rigidmol.exvol.soft import GridSpec, soft_kernel
from rigidmol.exvol.steiner import (CaseTag, edge_cross_sum, rod_excluded_volume, spherotriangle_decomposition,
                                    spherotriangle_edges, spherotriangle_excluded_volume, spherotriangle_volumes,
                                    steiner_v2)
from rigidmol.shapes import MoleculeShape, PairPotential, triangle_vertices
from rigidmol.so3 import Rotation, sample_haar, sample_haar_matrices

ST = MoleculeShape.sphero_triangle(1.0, 0.1, 2 * math.pi / 3)


def hull_functionals(shape, P):
    """V3, surface area and mean-width term of T1 - T2 from a convex hull."""
    tri = np.array(triangle_vertices(shape))
    pts = (tri[:, None, :] - (tri @ P.m.T)[None, :, :]).reshape(-1, 3)
    h = ConvexHull(pts)
    normals = h.equations[:, :3]
    v1 = 0.0
    for f, nbrs in enumerate(h.neighbors):
        for k, g in enumerate(nbrs):
            if g < f:
                continue
            edge = np.delete(h.simplices[f], k)
            length = np.linalg.norm(pts[edge[0]] - pts[edge[1]])
            ang = math.acos(np.clip(normals[f] @ normals[g], -1, 1))
            v1 += length * ang
    return h.volume, h.area, v1 / (2 * math.pi)


@pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 2, 2 * math.pi / 3, 5 * math.pi / 6])
def test_steiner_functionals_match_convex_hull(theta, rng):
    shape = MoleculeShape.sphero_triangle(1.0, 0.1, theta)
    for _ in range(10):
        P = sample_haar(rng)
        dec = spherotriangle_decomposition(shape, P)
        v3, v2, v1 = hull_functionals(shape, P)
        assert dec.v3 == pytest.approx(v3, rel=1e-9)
        assert dec.v2 == pytest.approx(v2, rel=1e-9)
        # qhull leaves near-coplanar slivers, so the dihedral sum is looser
        assert dec.v1 == pytest.approx(v1, rel=1e-7)


def test_batch_matches_scalar_path(rng):
    p = sample_haar_matrices(rng, 50)
    batch = spherotriangle_volumes(ST, p)
    one = [spherotriangle_excluded_volume(ST, Rotation(m)).value for m in p]
    assert np.allclose(batch, one, rtol=1e-12, atol=0)


def test_parallel_triangles():
    # equal orientation: K = T - T is a hexagon, flat, so V3 = 0
    dec = spherotriangle_decomposition(ST, Rotation.identity())
    assert dec.v3 == pytest.approx(0.0, abs=1e-14)
    assert dec.case_tag is CaseTag.PARALLEL
    flip = Rotation(np.diag([-1.0, 1.0, -1.0]))
    assert spherotriangle_decomposition(ST, flip).case_tag is CaseTag.PARALLEL


def test_excluded_volume_is_symmetric_under_swap(rng):
    for _ in range(10):
        P = sample_haar(rng)
        a = spherotriangle_excluded_volume(ST, P).value
        b = spherotriangle_excluded_volume(ST, P.inverse).value
        assert a == pytest.approx(b, rel=1e-12)


def test_v2_reflection_identity(rng):
    for _ in range(20):
        e = spherotriangle_edges(ST, sample_haar(rng))
        assert steiner_v2(e)[0] + steiner_v2(e.negated_other())[0] == pytest.approx(edge_cross_sum(e), abs=1e-12)


def test_rod_limit(rng):
    shape = MoleculeShape.sphero_triangle(1.0, 0.1, math.pi)
    for _ in range(10):
        P = sample_haar(rng)
        cross = np.linalg.norm(np.cross([0, 1, 0], P.m[:, 1]))
        assert spherotriangle_excluded_volume(shape, P).value == pytest.approx(
            rod_excluded_volume(1.0, 0.1, cross), abs=1e-12)


def test_rod_formula_guards():
    assert rod_excluded_volume(1.0, 0.1, 0.0) == pytest.approx(2 * math.pi * 0.01 + 4 / 3 * math.pi * 1e-3)
    with pytest.raises(ValueError):
        rod_excluded_volume(1.0, 0.1, 1.5)


def test_spherotriangle_against_monte_carlo(rng):
    for k in range(3):
        P = sample_haar(rng)
        ex = spherotriangle_excluded_volume(ST, P).value
        mc = mc_excluded_volume(ST, P, n_samples=400_000, seed=k)
        assert abs(ex - mc.value) < 4 * mc.stderr


def test_monte_carlo_of_two_balls():
    # single-bead rods of vanishing length are not allowed; a short rod pair is close to a ball of radius D
    shape = MoleculeShape.rod(1e-9, 0.5)
    mc = mc_excluded_volume(shape, Rotation.identity(), n_samples=400_000, seed=3)
    assert abs(mc.value - 4 / 3 * math.pi * 0.125) < 4 * mc.stderr


def test_spheroparallelogram_flat_limit():
    # a segment: the parallelogram of width zero is a spherocylinder
    u = np.array([1.0, 0.0, 0.0])
    assert spheroparallelogram_volume(u, 1e-15 * np.array([0, 1.0, 0]), 0.1) == pytest.approx(
        math.pi * 0.01 + 4 / 3 * math.pi * 1e-3, rel=1e-9)
    v = np.array([0.0, 2.0, 0.0])
    want = 2 * 0.2 + (2 * 1 + 2 * 2) * math.pi * 0.01 / 2 + 4 / 3 * math.pi * 1e-3
    assert spheroparallelogram_volume(u, v, 0.1) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("theta", [math.pi / 3, 2 * math.pi / 3])
def test_bentcore_against_monte_carlo(theta, rng):
    shape = MoleculeShape.bent_core(1.0, 0.1, theta)
    for k in range(2):
        P = sample_haar(rng)
        ex = bentcore_excluded_volume(shape, P)
        mc = mc_excluded_volume(shape, P, n_samples=400_000, seed=10 + k)
        assert abs(ex.value - mc.value) < 4 * math.hypot(mc.stderr, ex.stderr)


def test_bentcore_needs_bentcore():
    with pytest.raises(ValueError):
        bentcore_excluded_volume(ST, Rotation.identity())


def test_soft_hardcore_rod_converges():
    shape = MoleculeShape.rod(1.0, 0.1, N=10)
    P = Rotation.about_axis([0.0, 0.0, 1.0], math.pi / 2)
    want = rod_excluded_volume(1.0, 0.1, 1.0)
    errs = [abs(soft_kernel(shape, PairPotential("HardCore", 0.1), 1.0, P, GridSpec(n)) / want - 1) for n in (20, 40)]
    assert errs[1] < errs[0]


def test_soft_lj_attraction_fades_with_temperature():
    # the attractive well makes the Mayer integral negative when cold
    shape = MoleculeShape.rod(1.0, 0.2, N=4)
    P = Rotation.about_axis([0.0, 0.0, 1.0], 1.0)
    pot = PairPotential("LennardJones", 0.2)
    vals = [soft_kernel(shape, pot, T, P, GridSpec(24)) for T in (0.8, 2.0, 50.0)]
    assert vals[0] < vals[1] < vals[2]
    assert vals[0] < 0 < vals[2]


def test_soft_rejects_bad_temperature():
    with pytest.raises(ValueError):
        soft_kernel(MoleculeShape.rod(1.0, 0.1, N=4), PairPotential("HardCore", 0.1), 0.0, Rotation.identity(),
                    GridSpec(8))
