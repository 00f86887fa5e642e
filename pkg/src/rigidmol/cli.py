"""Command-line front end: exvol, project, solve, sweep, verify.

Each subcommand reads one JSON config (``--config``), validates it, and
writes JSON and/or CSV next to ``out``.  Every file carries the resolved
config and the package version.  Exit status 2 means a bad config.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, load, resolve

CSV_FMT = "{:.17g}"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return CSV_FMT.format(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def _header(cfg) -> dict:
    return {"version": __version__, "config": cfg}


_PROTECTED: set = set()


def _guard(path: str):
    if os.path.abspath(path) in _PROTECTED:
        raise ConfigError(f"output {path} would overwrite the config file; choose another 'out'")


def write_json(path: str, cfg: dict, payload: dict):
    _guard(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({**_header(cfg), **payload}, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def write_csv(path: str, cfg: dict, columns: list[str], rows: list[list]):
    """CSV with a leading '#' line holding version and config."""
    _guard(path)
    buf = io.StringIO()
    buf.write("# " + json.dumps(_header(cfg), sort_keys=True, default=_default) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _out(cfg, suffix, default_stem):
    stem = cfg.get("out", default_stem)
    for ext in (".json", ".csv"):
        if stem.endswith(ext):
            stem = stem[: -len(ext)]
    return stem + suffix


# --- builders ------------------------------------------------------------------

def _shape(cfg):
    from .shapes import MoleculeShape
    if "shape" not in cfg:
        raise ConfigError("config error at <root>: 'shape' is required for this command")
    try:
        return MoleculeShape.from_json(cfg["shape"])
    except ValueError as exc:
        raise ConfigError(f"config error at shape: {exc}") from None


def _quad(cfg):
    from .so3 import haar_quadrature
    q = cfg["quadrature"]
    return haar_quadrature(q["n_alpha"], q["n_beta"], q["n_gamma"])


def _orientation(cfg):
    from .so3 import Rotation
    o = cfg.get("orientation", {})
    if "matrix" in o and "euler" in o:
        raise ConfigError("config error at orientation: give either euler or matrix")
    if "matrix" in o:
        try:
            return Rotation(np.array(o["matrix"], dtype=float))
        except ValueError as exc:
            raise ConfigError(f"config error at orientation/matrix: {exc}") from None
    return Rotation.from_euler(*o.get("euler", [math.pi / 2, math.pi / 2, 0.0]))


def _exvol_one(cfg, shape, p_bar, seed):
    from .exvol.bentcore import bentcore_excluded_volume
    from .exvol.montecarlo import mc_excluded_volume
    from .exvol.result import ExcludedVolumeResult, Method
    from .exvol.soft import GridSpec, soft_kernel
    from .exvol.steiner import rod_excluded_volume, spherotriangle_excluded_volume
    from .shapes import PairPotential, ShapeKind

    method = cfg["exvol"]["method"]
    if method == "auto":
        method = "slab2d" if shape.kind is ShapeKind.BENT_CORE else "analytic"
    if method == "analytic":
        if shape.kind is ShapeKind.ROD:
            cross = float(np.linalg.norm(np.cross([1.0, 0.0, 0.0], p_bar.m[:, 0])))
            return ExcludedVolumeResult(rod_excluded_volume(shape.L, shape.D, cross), 0.0, Method.ANALYTIC)
        if shape.kind is ShapeKind.SPHERO_TRIANGLE:
            return spherotriangle_excluded_volume(shape, p_bar)
        raise ConfigError("config error at exvol/method: no closed form for a bent-core; use slab2d")
    if method == "slab2d":
        if shape.kind is not ShapeKind.BENT_CORE:
            raise ConfigError("config error at exvol/method: slab2d applies to bent-cores only")
        return bentcore_excluded_volume(shape, p_bar)
    if method == "montecarlo":
        return mc_excluded_volume(shape, p_bar, n_samples=cfg["exvol"]["n_samples"], seed=seed)
    pot = cfg.get("potential", {"kind": "HardCore"})
    pp = PairPotential(pot["kind"], shape.D, pot.get("epsilon", 1.0))
    val = soft_kernel(shape, pp, pot.get("T", 1.0), p_bar, GridSpec(cfg["exvol"]["grid_n"]))
    return ExcludedVolumeResult(val, 0.0, Method.MAYER_GRID)


def cmd_exvol(cfg) -> int:
    from .shapes import MoleculeShape
    from .so3 import Rotation, matrix_to_euler
    shape = _shape(cfg)
    sweep = cfg.get("sweep")
    if not sweep:
        res = _exvol_one(cfg, shape, _orientation(cfg), cfg["seed"])
        write_json(_out(cfg, ".json", "exvol"), cfg, {"result": res.to_json()})
        return 0
    base = _orientation(cfg)
    ang = list(matrix_to_euler(base).as_tuple()) if "matrix" in cfg.get("orientation", {}) \
        else list(cfg.get("orientation", {}).get("euler", [math.pi / 2, math.pi / 2, 0.0]))
    rows = []
    for k, x in enumerate(np.linspace(sweep["from"], sweep["to"], sweep["steps"])):
        sh, a = shape, list(ang)
        if sweep["param"] == "theta":
            if shape.theta is None:
                raise ConfigError("config error at sweep/param: a rod has no theta")
            try:
                sh = MoleculeShape(shape.kind, shape.L, shape.D, float(x), shape.N)
            except ValueError as exc:
                raise ConfigError(f"config error at sweep: {exc}") from None
        elif sweep["param"] in ("alpha", "beta", "gamma"):
            a["alpha beta gamma".split().index(sweep["param"])] = float(x)
        else:
            raise ConfigError("config error at sweep/param: exvol sweeps theta, alpha, beta or gamma")
        r = _exvol_one(cfg, sh, Rotation.from_euler(*a), cfg["seed"] * 100003 + k)
        rows.append([float(x), *a, r.value, r.stderr, r.method.value, r.case_tag or ""])
    write_csv(_out(cfg, ".csv", "exvol"), cfg,
              [sweep["param"], "alpha", "beta", "gamma", "value", "stderr", "method", "case_tag"], rows)
    return 0


def _kernel_function(cfg, shape, kcfg):
    from .kernel.projection import onsager_kernel
    from .kernel.spherotriangle import steiner_kernel
    from .exvol.steiner import rod_excluded_volume
    from .exvol.bentcore import bentcore_excluded_volume
    from .kernel.projection import batched
    from .shapes import ShapeKind
    from .so3 import Rotation
    c = kcfg.get("c", 1.0)
    source = kcfg.get("source", "exvol")
    if source == "onsager":
        return onsager_kernel(shape.L, shape.D, c)
    if shape.kind is ShapeKind.SPHERO_TRIANGLE:
        return steiner_kernel(shape, c)
    if shape.kind is ShapeKind.ROD:
        @batched
        def G(p):
            cross = np.sqrt(np.maximum(1.0 - np.asarray(p)[:, 0, 0] ** 2, 0.0))
            return c * rod_excluded_volume(shape.L, shape.D, cross)
        return G
    return lambda r: c * bentcore_excluded_volume(shape, r).value


def cmd_project(cfg) -> int:
    from .kernel.projection import projected_kernel
    from .kernel import spherotriangle as st
    from .shapes import MoleculeShape, ShapeKind
    shape = _shape(cfg)
    kcfg = cfg.get("kernel", {})
    sc = kcfg.get("symmetry_class")
    if sc is None:
        raise ConfigError("config error at kernel: symmetry_class is required")
    quad = _quad(cfg)
    c = kcfg.get("c", 1.0)
    conv = kcfg.get("convention", "printed")
    sweep = cfg.get("sweep")
    if not sweep:
        kp, rep = projected_kernel(_kernel_function(cfg, shape, kcfg), sc, quad, **shape.to_json(), c=c)
        payload = {"kernel": kp.to_json(), "report": rep.to_json()}
        if shape.kind is ShapeKind.SPHERO_TRIANGLE:
            a = st.analytic_spherotriangle_coeffs(shape.theta, shape.L, shape.D, c, conv,
                                                  n_samples=kcfg.get("k_samples", 1_000_000), seed=cfg["seed"])
            payload["analytic"] = {"convention": conv, **a._asdict()}
        write_json(_out(cfg, ".json", "project"), cfg, payload)
        return 0
    if sweep["param"] != "theta" or shape.kind is not ShapeKind.SPHERO_TRIANGLE:
        raise ConfigError("config error at sweep: project sweeps theta for spherotriangles only")
    rows = []
    names = None
    for k, th in enumerate(np.linspace(sweep["from"], sweep["to"], sweep["steps"])):
        try:
            sh = MoleculeShape.sphero_triangle(shape.L, shape.D, float(th))
        except ValueError as exc:
            raise ConfigError(f"config error at sweep: {exc}") from None
        kp, rep = projected_kernel(_kernel_function(cfg, sh, kcfg), sc, quad)
        names = kp.basis.names
        a = st.analytic_spherotriangle_coeffs(float(th), sh.L, sh.D, c, conv,
                                              n_samples=kcfg.get("k_samples", 1_000_000),
                                              seed=cfg["seed"] * 100003 + k)
        rows.append([float(th), a.c1, a.c2, a.c3, a.c4, a.K_stderr, *kp.coeffs, rep.residual_l2])
    cols = ["theta", "c1_analytic", "c2_analytic", "c3_analytic", "c4_analytic", "K_stderr",
            *[f"proj[{n}]" for n in names], "residual_l2"]
    write_csv(_out(cfg, ".csv", "project"), cfg, cols, rows)
    return 0


def _kernel_family(cfg):
    """Map a sweep parameter (or None) to a KernelPolynomial."""
    from .kernel.projection import KernelPolynomial, Provenance
    from .kernel import spherotriangle as st
    from .shapes import MoleculeShape
    kcfg = cfg.get("kernel")
    if not kcfg:
        raise ConfigError("config error at <root>: 'kernel' is required for this command")
    source = kcfg.get("source", "manual" if "coeffs" in kcfg else "analytic")
    if source == "manual":
        if "coeffs" not in kcfg or "symmetry_class" not in kcfg:
            raise ConfigError("config error at kernel: manual kernels need symmetry_class and coeffs")
        try:
            base = KernelPolynomial.from_coeffs(kcfg["symmetry_class"], kcfg["coeffs"])
        except ValueError as exc:
            raise ConfigError(f"config error at kernel: {exc}") from None

        def family(x=None):
            if x is None:
                return base
            return KernelPolynomial(base.basis, np.asarray(base.coeffs) * x, Provenance.MANUAL, {"scale": x})
        return family, "c"
    if source != "analytic":
        raise ConfigError("config error at kernel/source: solve/sweep take manual or analytic kernels")
    shape = _shape(cfg)
    if shape.kind.value != "SpheroTriangle":
        raise ConfigError("config error at shape: analytic kernels exist for spherotriangles only")
    conv = kcfg.get("convention", "printed")
    c0 = kcfg.get("c", 1.0)

    def family(x=None, param="c"):
        c, th = c0, shape.theta
        if x is not None:
            if param == "c":
                c = x
            else:
                th = x
        c2, c3, c4 = st.quadratic_coeffs(th, shape.L, shape.D, c, conv)
        # c1 vanishes for the spherotriangle (see k_theta); c0 does not affect solutions
        return KernelPolynomial.from_coeffs("C2v_quadratic", [0.0, 0.0, c2, c3, c4], Provenance.ANALYTIC,
                                            c=c, theta=th, L=shape.L, D=shape.D, convention=conv)
    return family, None


BRANCH_COLUMNS = ["eig11_1", "eig11_2", "eig11_3", "eig22_1", "eig22_2", "eig22_3", "m1_norm",
                  "free_energy", "residual", "converged", "iterations", "init"]


def _branch_row(br):
    op = br.order_params
    return [*op.eig11, *op.eig22, op.m1_norm, br.free_energy, br.residual, br.converged, br.iterations,
            br.meta.get("init", "")]


def _scf_config(cfg, init="Isotropic"):
    from .scf.solver import SCFConfig
    s = cfg["scf"]
    return SCFConfig(_quad(cfg), s["damping"], s["tol"], s["max_iter"], init, align_frame=s["align_frame"])


def cmd_solve(cfg) -> int:
    from dataclasses import replace
    from .scf.analysis import dedupe
    from .scf.solver import scf_solve
    family, _ = _kernel_family(cfg)
    kp = family()
    base = _scf_config(cfg)
    found = [scf_solve(kp, replace(base, init=s)) for s in cfg["scf"]["seeds"]]
    unique = dedupe([b for b in found if b.converged]) or found[:1]
    cols = list(kp.basis.names)
    rows = [[*kp.coeffs, *_branch_row(b)] for b in unique]
    write_csv(_out(cfg, ".csv", "solve"), cfg, [f"coef[{n}]" for n in cols] + BRANCH_COLUMNS, rows)
    write_json(_out(cfg, ".json", "solve"), cfg,
               {"kernel": kp.to_json(), "branches": [b.to_json() for b in unique],
                "free_energy_convention": "F0/c + log c dropped"})
    return 0 if any(b.converged for b in found) else 1


def cmd_sweep(cfg) -> int:
    from .scf.analysis import branch_sweep
    sweep = cfg.get("sweep")
    if not sweep:
        raise ConfigError("config error at <root>: 'sweep' is required for this command")
    family, fixed = _kernel_family(cfg)
    param = sweep["param"]
    if fixed == "c" and param != "c":
        raise ConfigError("config error at sweep/param: manual kernels sweep only the scale 'c'")
    if fixed is None and param not in ("c", "theta"):
        raise ConfigError("config error at sweep/param: analytic kernels sweep 'c' or 'theta'")
    grid = np.linspace(sweep["from"], sweep["to"], sweep["steps"])
    if fixed is None:
        if param == "theta" and (grid.min() <= 0 or grid.max() > math.pi):
            raise ConfigError("config error at sweep: theta must lie in (0, pi]")
        fam = lambda x: family(x, param)
    else:
        fam = family
    rows_out = branch_sweep(fam, grid, _scf_config(cfg), seeds=cfg["scf"]["seeds"])
    names = fam(float(grid[0])).basis.names
    rows = [[r.param, *r.kernel.coeffs, *_branch_row(r.branch)] for r in rows_out]
    write_csv(_out(cfg, ".csv", "sweep"), cfg, [param] + [f"coef[{n}]" for n in names] + BRANCH_COLUMNS, rows)
    write_json(_out(cfg, ".json", "sweep"), cfg,
               {"rows": [{"param": r.param, "kernel": r.kernel.to_json(), "branch": r.branch.to_json()}
                         for r in rows_out], "free_energy_convention": "F0/c + log c dropped"})
    if len(grid) and not rows_out:
        return 1
    return 0


def _untimed(x):
    # wall-clock fields would make repeated runs differ
    if isinstance(x, dict):
        return {k: _untimed(v) for k, v in x.items() if not k.endswith("seconds")}
    if isinstance(x, list):
        return [_untimed(v) for v in x]
    return x


def cmd_verify(cfg) -> int:
    from .verification import run_suite, select
    v = cfg.get("verify", {})
    try:
        select(v.get("only"))
    except KeyError as exc:
        raise ConfigError(f"config error at verify/only: {exc.args[0]}") from None
    overrides = {int(k): val for k, val in v.get("overrides", {}).items()}
    results = run_suite(v.get("only"), overrides)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    report = {"passed": not failed, "failed": failed,
              "criteria": [_untimed(r.to_json()) for r in results]}
    write_json(_out(cfg, ".json", "verify"), cfg, report)
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
    return 1 if failed else 0


COMMANDS = {"exvol": cmd_exvol, "project": cmd_project, "solve": cmd_solve, "sweep": cmd_sweep,
            "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rigidmol", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rigidmol {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", "-c", help="JSON config file")
        s.add_argument("--out", "-o", help="output path stem (overrides config)")
        s.add_argument("--seed", type=int, help="rng seed (overrides config)")
        s.add_argument("--set", action="append", default=[], metavar="KEY.PATH=JSON",
                       help="override one config value, e.g. quadrature.n_alpha=24")
        if name == "verify":
            s.add_argument("--only", help="comma-separated criterion names or numbers")
    return p


def _apply_set(raw: dict, item: str):
    if "=" not in item:
        raise ConfigError(f"--set expects KEY.PATH=JSON, got {item!r}")
    key, val = item.split("=", 1)
    try:
        val = json.loads(val)
    except json.JSONDecodeError:
        pass
    node = raw
    parts = key.split(".")
    for k in parts[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set path {key} crosses a non-object")
    node[parts[-1]] = val


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load(args.config) if args.config else {}
        if args.config:
            _PROTECTED.add(os.path.abspath(args.config))
        for item in args.set:
            _apply_set(raw, item)
        if args.out:
            raw["out"] = args.out
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.command == "verify" and args.only:
            raw.setdefault("verify", {})["only"] = [x for x in args.only.split(",") if x]
        cfg = resolve(raw)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"rigidmol: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
