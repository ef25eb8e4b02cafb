"""Suite runner and report emitter: the package's only user-facing surface.

Batch use only.  All randomness flows from one seeded generator (default
seed 0), with per-task child generators so that report values are identical
for a fixed seed regardless of thread count.  Timing fields are the single
exception to reproducibility.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import GeometryError, ModelSpecError
from .fiber import (avg_max_ratio_check, berger_average_check, h_stats,
                    rayleigh_check, sphere_laplacian_identity_check,
                    variance_identity_check)
from .geometry import ChartPoint, curvature
from .gray import (gray_l_value, l_h_squared_check, l_h_squared_integral_check,
                   surface_identity_checks, tangent_data)
from .models import catalog_model, CATALOG_SPECS, make_model, parse_spec_file
from .polynomials import SymPoly
from .report import VerificationReport, failed_report, to_csv, to_json_lines, to_table

SUITES = ["berger", "prop31", "gray-L", "lemma23", "variance", "rayleigh",
          "theorem4", "surface", "all"]

# cheap algebraic suites first, second-covariant-derivative suites last
ALL_ORDER = ["prop31", "berger", "variance", "theorem4", "rayleigh",
             "gray-L", "lemma23", "surface"]

DEFAULT_TOL = {
    "berger": 1e-8,
    "prop31": 1e-9,
    "gray-L": 1e-8,
    "lemma23": 1e-7,
    "variance": 1e-9,
    "rayleigh": 1e-8,
    "theorem4": 1e-6,
    "surface": 1e-7,
}

DEFAULT_POINTS = {
    "berger": 20,
    "prop31": 50,
    "gray-L": 100,
    "lemma23": 100,
    "variance": 20,
    "rayleigh": 1,
    "theorem4": 10,
    "surface": 10,
}


def resolve_model(token: str):
    if token in CATALOG_SPECS:
        return catalog_model(token)
    path = Path(token)
    if path.exists():
        return make_model(parse_spec_file(path))
    raise ModelSpecError(f"unknown model {token!r}: not a catalog name "
                         f"({sorted(CATALOG_SPECS)}) and not a spec file")


# ---------------------------------------------------------------------------
# suite task builders: each task is a callable returning a list of reports
# ---------------------------------------------------------------------------

def _spawn(seed: int, count: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _suite_tasks(suite: str, model, points: int, tol: float, seed: int):
    if suite == "berger":
        rngs = _spawn(seed, points)
        return [lambda r=r: berger_average_check(model, pt=model.sample_point(r),
                                                 tol=tol, rng=r) for r in rngs]
    if suite == "prop31":
        n = model.dim
        tasks = []
        for degree in range(1, 7):
            rngs = _spawn(seed + degree, points)

            def task(degree=degree, rngs=rngs):
                out = []
                for r in rngs:
                    poly = SymPoly.random_homogeneous(n, degree, r)
                    out.append(sphere_laplacian_identity_check(
                        poly, degree, n, tol=tol, label=model.name))
                return out

            tasks.append(task)
        return tasks
    if suite == "gray-L":
        groups = max(1, math.ceil(points / 25))
        per = math.ceil(points / groups)
        rngs = _spawn(seed, groups)

        def task(r):
            hd = tangent_data(model, rng=r)
            out = []
            for _ in range(per):
                t0 = time.perf_counter()
                x = r.standard_normal(model.dim)
                x /= np.linalg.norm(x)
                out.append(VerificationReport(
                    identity="operator-on-h", model=model.name,
                    lhs=gray_l_value(hd, x), rhs=0.0, tol=tol,
                    point=list(hd.point.coords),
                    runtime_ms=(time.perf_counter() - t0) * 1e3))
            return out

        return [lambda r=r: task(r) for r in rngs]
    if suite == "lemma23":
        groups = max(1, math.ceil(points / 25))
        per = math.ceil(points / groups)
        rngs = _spawn(seed, groups)

        def task(r):
            hd = tangent_data(model, rng=r)
            out = []
            for _ in range(per):
                x = r.standard_normal(model.dim)
                x /= np.linalg.norm(x)
                out.extend(l_h_squared_check(hd, x=x, tol=tol))
            return out

        tasks = [lambda r=r: task(r) for r in rngs]
        rng_int = np.random.default_rng(seed + 10_000)
        tasks.append(lambda: l_h_squared_integral_check(model, tol=tol, rng=rng_int))
        return tasks
    if suite == "variance":
        rngs = _spawn(seed, points)
        return [lambda r=r: [variance_identity_check(model, pt=model.sample_point(r),
                                                     tol=tol, rng=r)] for r in rngs]
    if suite == "rayleigh":
        rng = np.random.default_rng(seed)
        return [lambda: rayleigh_check(model, tol=tol, rng=rng)]
    if suite == "theorem4":
        rng = np.random.default_rng(seed)
        return [lambda: avg_max_ratio_check(model, points=points, tol=tol, rng=rng)]
    if suite == "surface":
        rngs = _spawn(seed, points)
        return [lambda r=r: surface_identity_checks(model, pt=model.sample_point(r),
                                                    tol_expr=tol, rng=r) for r in rngs]
    raise ModelSpecError(f"unknown suite {suite!r}")


def run_suite(suite: str, model, points=None, tol=None, seed: int = 0,
              threads: int = 1) -> list[VerificationReport]:
    names = ALL_ORDER if suite == "all" else [suite]
    reports: list[VerificationReport] = []
    for name in names:
        s_tol = DEFAULT_TOL[name] if tol is None else tol
        s_points = DEFAULT_POINTS[name] if points is None else points
        try:
            tasks = _suite_tasks(name, model, s_points, s_tol, seed)
        except GeometryError as exc:
            reports.append(failed_report(name, model.name, s_tol, f"{type(exc).__name__}: {exc}"))
            continue
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [pool.submit(_run_task, t, name, model.name, s_tol) for t in tasks]
                for fut in futures:
                    reports.extend(fut.result())
        else:
            for t in tasks:
                reports.extend(_run_task(t, name, model.name, s_tol))
    return reports


def _run_task(task, suite: str, model_name: str, tol: float) -> list[VerificationReport]:
    try:
        return task()
    except GeometryError as exc:
        return [failed_report(suite, model_name, tol, f"{type(exc).__name__}: {exc}")]


# ---------------------------------------------------------------------------
# argument parsing and subcommands
# ---------------------------------------------------------------------------

def _parse_point(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.replace(";", ",").split(",") if t.strip()])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spherebundle",
        description="Numerical verification of curvature identities on the "
                    "unit sphere bundle of explicit model manifolds.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", required=True, choices=SUITES)
    v.add_argument("--model", required=True,
                   help="catalog name or model spec file (TOML)")
    v.add_argument("--points", type=int, default=None,
                   help="sample points / tangents per suite")
    v.add_argument("--tol", type=float, default=None, help="override suite tolerance")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", type=Path, default=None)
    v.add_argument("--format", choices=["json", "csv", "table"], default="table")

    c = sub.add_parser("curvature", help="dump frame-indexed curvature at a point")
    c.add_argument("--model", required=True)
    c.add_argument("--point", required=True, help="comma-separated chart coordinates")
    c.add_argument("--chart", type=int, default=0)
    c.add_argument("--deriv-order", type=int, default=0, choices=[0, 1, 2])
    c.add_argument("--out", type=Path, default=None)

    s = sub.add_parser("stats", help="dump fiber statistics of H at a point")
    s.add_argument("--model", required=True)
    s.add_argument("--point", default=None, help="comma-separated chart coordinates")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", type=Path, default=None)
    return parser


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_verify(args) -> int:
    model = resolve_model(args.model)
    threads = int(os.environ.get("SPHEREBUNDLE_THREADS", "1"))
    reports = run_suite(args.suite, model, points=args.points, tol=args.tol,
                        seed=args.seed, threads=max(1, threads))
    if args.format == "json":
        text = to_json_lines(reports)
    elif args.format == "csv":
        text = to_csv(reports)
    else:
        text = to_table(reports)
    _emit(text, args.out)
    return 0 if all(r.passed for r in reports) else 1


def cmd_curvature(args) -> int:
    model = resolve_model(args.model)
    pt = ChartPoint(args.chart, _parse_point(args.point))
    data = curvature(model, pt, args.deriv_order)
    payload = {
        "model": model.name,
        "point": list(map(float, pt.coords)),
        "chart": pt.chart_id,
        "frame": data.frame.vectors.tolist(),
        "adapted": data.frame.adapted,
        "R": data.R.tolist(),
        "ricci": data.ricci.tolist(),
        "scalar": data.scalar,
    }
    if data.dR is not None:
        payload["dR_max_abs"] = float(np.max(np.abs(data.dR)))
        payload["dR"] = data.dR.tolist()
    if data.d2R is not None:
        payload["d2R_max_abs"] = float(np.max(np.abs(data.d2R)))
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def cmd_stats(args) -> int:
    model = resolve_model(args.model)
    rng = np.random.default_rng(args.seed)
    pt = model.sample_point(rng) if args.point is None else ChartPoint(0, _parse_point(args.point))
    stats = h_stats(model, pt, rng=rng)
    payload = {
        "model": model.name,
        "point": list(map(float, pt.coords)),
        "h_av": stats.h_av,
        "h_max": stats.h_max,
        "variance": stats.variance,
        "gradv_sq_integral": stats.gradv_sq_integral,
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "curvature":
            return cmd_curvature(args)
        if args.command == "stats":
            return cmd_stats(args)
    except ModelSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    parser.error("unknown command")
    return 2


if __name__ == "__main__":
    sys.exit(main())
