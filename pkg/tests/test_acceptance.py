"""One check per acceptance criterion, tolerances pinned here.

Each test prints a PASS/FAIL line; pytest also repeats them in the
terminal summary.  ``python tests/test_acceptance.py`` prints the lines
without pytest.
"""
import math
import time

import pytest

from rigidmol import verification as v

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = {}

ONSAGER_REL = 1e-3
ONSAGER_SECONDS = 10.0
TABLE_ABS = 1e-4
TABLE_SECONDS = 300.0
IDENTITY_REL = 1e-12
COEFF_REL = 1e-2
ROD_ABS = 1e-9
MC_Z = 3.0
MC_SAMPLES = 10_000_000
MC_ORIENTATIONS = 20
MC_SECONDS = 600.0
REFLECTION_ABS = 1e-10
MS_COUPLING = 0.01
MS_GAP = 1e-6
ORDER_TOL = 1e-6
HAAR_ABS = 1e-10
SOFT_REL = 0.01
SOFT_SECONDS = 300.0


def onsager():
    ok, d = v.onsager_projection(res=32)
    return d["rel_err"] <= ONSAGER_REL and d["projection_seconds"] < ONSAGER_SECONDS, \
        f"c2={d['c2']:.6g} expected {d['expected']:.6g} rel {d['rel_err']:.1e} in {d['projection_seconds']:.1f}s"


def table1():
    t = time.perf_counter()
    ok, d = v.table1(tol=TABLE_ABS)
    secs = time.perf_counter() - t
    bad = d["unflagged_mismatches"]
    return not bad and d["mc_worst_z"] < 5 and secs < TABLE_SECONDS, \
        (f"{d['entries']} entries, {len(bad)} unflagged mismatches; flagged rows match as printed "
         f"{d['flagged_match_as_printed']}/{d['flagged_total']}, as cross product "
         f"{d['flagged_match_as_cross']}/{d['flagged_total']}; {secs:.0f}s")


def coefficients():
    ok, d = v.analytic_vs_numeric(res=48)
    good = d["identity_max_rel"] <= IDENTITY_REL and d["printed_vs_projection_rel"] <= COEFF_REL
    return good, (f"identity {d['identity_max_rel']:.1e}, printed vs projection {d['printed_vs_projection_rel']:.2f} "
                  f"(corrected {d['diagnostic_corrected_vs_projection_rel']:.1e})")


def rod_limit():
    ok, d = v.rod_limit(n=20)
    return d["max_abs_err"] <= ROD_ABS, f"max abs error {d['max_abs_err']:.1e} over 20 orientations"


def mc_oracle():
    ok, d = v.mc_equivalence(n=MC_ORIENTATIONS, n_samples=MC_SAMPLES, z_max=MC_Z)
    zs = {k: d[k]["max_abs_z"] for k in ("spherotriangle", "bentcore")}
    good = all(len(d[k]["z"]) >= MC_ORIENTATIONS and z <= MC_Z for k, z in zs.items()) and d["seconds"] < MC_SECONDS
    return good, f"max |z| spherotriangle {zs['spherotriangle']:.2f}, bent-core {zs['bentcore']:.2f}; {d['seconds']:.0f}s"


def v2_reflection():
    ok, d = v.v2_reflection_identity(n=100)
    return d["max_abs_err"] <= REFLECTION_ABS, f"max abs error {d['max_abs_err']:.1e} over 100 pairs"


def maier_saupe():
    ok, d = v.maier_saupe()
    gap = max(b["gap"] for b in d["branches"].values())
    good = (abs(d["scf_onset"] - d["oracle_onset"]) <= MS_COUPLING and gap < MS_GAP
            and all(b["converged"] for b in d["branches"].values()))
    return good, f"onset {d['scf_onset']:.4f} vs oracle {d['oracle_onset']:.4f}; max gap {gap:.1e}"


def polar_commuting():
    ok, d = v.polar_and_commuting(res=32)
    polar = d["polar"]
    comm = d["commuting"]
    good = (len(polar) == 10 and len(comm) == 5
            and all(r["converged"] and r["m1_norm"] < ORDER_TOL for r in polar)
            and all(r["converged"] and r["commutator"] < ORDER_TOL for r in comm)
            and all(r["coeffs"][1] >= -1 for r in polar + comm)
            and all(math.isclose(r["coeffs"][4] ** 2, r["coeffs"][2] * r["coeffs"][3], rel_tol=1e-12) for r in comm))
    return good, (f"max |m1| {max(r['m1_norm'] for r in polar):.1e}, "
                  f"max commutator {max(r['commutator'] for r in comm):.1e}")


def haar():
    ok, d = v.haar_identities()
    worst = max(d["normalization"], d["first_moments"], d["second_moments"], d["orthogonality"])
    return worst <= HAAR_ABS, f"worst deviation {worst:.1e}"


def soft_kernel():
    t = time.perf_counter()
    ok, d = v.soft_kernel_rod(grids=(20, 40, 80))
    secs = time.perf_counter() - t
    err = d["rel_errors"][80]
    return err <= SOFT_REL and secs < SOFT_SECONDS, f"relative error {err:.2e} at 80^3 in {secs:.0f}s"


CHECKS = {1: ("onsager", onsager), 2: ("table1", table1), 3: ("coefficients", coefficients),
          4: ("rod_limit", rod_limit), 5: ("mc_oracle", mc_oracle), 6: ("v2_reflection", v2_reflection),
          7: ("maier_saupe", maier_saupe), 8: ("polar_commuting", polar_commuting), 9: ("haar", haar),
          10: ("soft_kernel", soft_kernel)}


def run(number):
    name, fn = CHECKS[number]
    passed, info = fn()
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d} {name}: {info}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed, line


SLOW = {2, 3, 5}


@pytest.mark.parametrize("number", [pytest.param(k, marks=pytest.mark.slow) if k in SLOW else k for k in CHECKS])
def test_criterion(number):
    passed, line = run(number)
    assert passed, line


if __name__ == "__main__":
    for k in CHECKS:
        run(k)
