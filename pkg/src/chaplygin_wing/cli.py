"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 solver failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, load_config
from .gas import FreeStream
from .geometry import INTERIOR_REGIMES, GeometryError, WingAngles, classify_regime
from .mesh import MeshError, build_domain, generate_grid
from .oracle import OracleError
from .shock_polar import ConcentrationError, polar_state
from .solver import ContinuationFailure, NewtonFailure, SolverError, epsilon_sweep
from .verify import run_verification

log = logging.getLogger("chaplygin_wing")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2


class _Invalid(Exception):
    pass


def _angle(value: float, degrees: bool) -> float:
    return math.radians(value) if degrees else value


def _write_meta(outdir: Path, command: str, argv, seconds: float, extra=None) -> None:
    from importlib.metadata import PackageNotFoundError, version
    try:
        ver = version("artifact")
    except PackageNotFoundError:
        ver = "unknown"
    meta = {"command": command, "argv": list(argv), "seconds": seconds,
            "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "python": platform.python_version(),
            "numpy": np.__version__, "package_version": ver, **(extra or {})}
    (outdir / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_polar(args) -> int:
    try:
        ps = polar_state(args.u0, args.c0, _angle(args.theta, args.degrees))
    except ConcentrationError as exc:
        raise _Invalid(str(exc)) from exc
    except ValueError as exc:
        raise _Invalid(str(exc)) from exc
    out = {"u1": ps.u1, "v1": ps.v1, "c1": ps.c1, "gamma": ps.gamma, "theta": ps.theta}
    sys.stdout.write(io.dumps(out))
    return EXIT_OK


def _report(q_inf, alpha, sigma, beta):
    try:
        fs = FreeStream(q_inf, alpha)
        return fs, classify_regime(fs, WingAngles(sigma, beta))
    except (ValueError, GeometryError) as exc:
        raise _Invalid(str(exc)) from exc


def cmd_geometry(args) -> int:
    deg = args.degrees
    _, rep = _report(args.q_inf, _angle(args.alpha, deg), _angle(args.sigma, deg), _angle(args.beta, deg))
    out = _outdir(args.out)
    io.emit_report_json(rep, out / "geometry.json")
    io.emit_geometry_svg(rep, out / "geometry.svg")
    sys.stdout.write(io.dumps(rep))
    return EXIT_OK


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    _, rep = _report(cfg.q_inf, cfg.alpha, cfg.sigma, cfg.beta)
    if rep.regime not in INTERIOR_REGIMES:
        raise _Invalid(f"regime {rep.regime.value} has no elliptic problem in scope")
    out = _outdir(args.out or cfg.outputs.directory)
    domain = build_domain(rep)
    grid = generate_grid(domain, cfg.grid.Ns, cfg.grid.Nt, cfg.grid.stretch)
    sweep = epsilon_sweep(grid, cfg.solver, cfg.gas)
    if not sweep.fields:
        raise SolverError(sweep.error or "no epsilon converged")
    final = sweep.fields[-1]
    summary = {
        "config": cfg.to_dict(),
        "regime": rep.regime.value,
        "eps": [f.eps for f in sweep.fields],
        "failed_eps": sweep.failed_eps,
        "error": sweep.error,
        "stages": [f.diagnostics.get("stages", []) for f in sweep.fields],
        "margin": [f.margin for f in sweep.fields],
        "max_interior_L2": [float(np.max(f.L2[grid.tags == 0])) for f in sweep.fields],
        "extrapolated": None if sweep.extrapolated is None else {
            "estimate": True, "min_phi_minus_S": sweep.extrapolated.margin,
            "from_eps": sweep.extrapolated.diagnostics.get("extrapolated_from")},
    }
    io.emit_report_json(summary, out / "solve.json")
    if cfg.outputs.field_csv:
        io.emit_field_csv(final, out / "field.csv")
    if cfg.outputs.heatmap_svg:
        io.emit_heatmap_svg(final, out / "heatmap_w.svg", "w")
        io.emit_heatmap_svg(final, out / "heatmap_L2.svg", "L2")
    if cfg.outputs.geometry_svg:
        io.emit_geometry_svg(rep, out / "geometry.svg")
    _write_meta(out, "solve", sys.argv, time.perf_counter() - t0)
    print(f"solved {len(sweep.fields)} eps values, final eps={final.eps:g}, margin={final.margin:.6g}; "
          f"outputs in {out}")
    return EXIT_OK if sweep.failed_eps is None else EXIT_SOLVER


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    out = _outdir(args.out or cfg.outputs.directory)
    result = run_verification(cfg, with_mms=args.mms)
    io.emit_report_json(result, out / "verify.json")
    _write_meta(out, "verify", sys.argv, time.perf_counter() - t0)
    for c in result["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: value={c['value']:.3e} tol={c['tolerance']:.1e}")
    return EXIT_OK if result["passed"] else EXIT_SOLVER


def cmd_sweep(args) -> int:
    if args.over != "beta":
        raise _Invalid("only --over beta is supported")
    if args.steps < 2:
        raise _Invalid("--steps must be at least 2")
    deg = args.degrees
    q_inf, alpha, sigma = args.q_inf, _angle(args.alpha, deg), _angle(args.sigma, deg)
    rows = []
    for beta in np.linspace(_angle(args.start, deg), _angle(args.stop, deg), args.steps):
        _, rep = _report(q_inf, alpha, sigma, float(beta))
        row = {"beta": float(beta), "regime": rep.regime.value, "beta_c": rep.beta_c, "beta0": rep.beta0}
        for name in ("P0", "P1", "P2", "P4", "P5", "P6", "P7", "PR"):
            p = rep.points.get(name)
            row[f"{name}_xi1"] = None if p is None else float(p[0])
            row[f"{name}_xi2"] = None if p is None else float(p[1])
        rows.append(row)
    out = _outdir(args.out)
    io.write_atlas_csv(rows, out / "atlas.csv")
    print(f"wrote {len(rows)} rows to {out / 'atlas.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chaplygin-wing", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("polar", help="downstream state of a planar shock, as JSON")
    sp.add_argument("--u0", type=float, required=True)
    sp.add_argument("--c0", type=float, required=True)
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--degrees", action="store_true", help="angles in degrees (default radians)")
    sp.set_defaults(func=cmd_polar)

    sp = sub.add_parser("geometry", help="regime report JSON and shock-pattern SVG")
    for name in ("--q-inf", "--alpha", "--sigma", "--beta"):
        sp.add_argument(name, type=float, required=True)
    sp.add_argument("--degrees", action="store_true")
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_geometry)

    for name, func, text in (("solve", cmd_solve, "regularized solve and field output"),
                             ("verify", cmd_verify, "run the property checks")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None, help="overrides [outputs] directory")
        if name == "verify":
            sp.add_argument("--mms", action="store_true", help="include manufactured-solution orders")
        sp.set_defaults(func=func)

    sp = sub.add_parser("sweep", help="regime atlas over beta")
    sp.add_argument("--over", default="beta")
    sp.add_argument("--from", dest="start", type=float, required=True)
    sp.add_argument("--to", dest="stop", type=float, required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--q-inf", type=float, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--sigma", type=float, required=True)
    sp.add_argument("--degrees", action="store_true")
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (_Invalid, ConfigError, MeshError, OracleError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NewtonFailure, ContinuationFailure, SolverError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
