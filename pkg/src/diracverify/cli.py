"""Command-line entry point.

    diracverify list
    diracverify run <scenario> [--samples N] [--tol NAME=VALUE ...] [--seed S]
                               [--report FILE] [--basepoint-variant {0,1}]
    diracverify check <config.toml> [same flags]
    diracverify integrate <path-config.toml> [--report FILE]

Exit codes: 0 all checks pass, 1 some check fails, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import ad
from .algebroid import (
    algebroid_from_dirac,
    check_infinitesimal_symmetry,
    check_JA_morphism,
    im_form_from_dirac,
)
from .apath import check_apath, integrate_J
from .config import ConfigError, StructureConfig, expr_array, load_toml, parse_path
from .courant import check_involutive, check_lagrangian
from .expr import ExprEvalError
from .report import CheckReport, dumps, residual_report
from .scenarios import (
    REGISTRY,
    CheckSpec,
    Scenario,
    get_scenario,
    run_scenario,
    spec_im,
    spec_ker_r,
    spec_lemma,
    spec_lquot_dirac,
    spec_rank_ared,
    spec_thm,
    spec_well_defined,
    standard_preflight,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def parse_tol(items: Sequence[str]) -> dict:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ConfigError(f"--tol expects NAME=VALUE, got {item!r}")
        try:
            tol = float(value)
        except ValueError:
            raise ConfigError(f"--tol {name}: not a number: {value!r}") from None
        if not (tol > 0 and math.isfinite(tol)):
            raise ConfigError(f"--tol {name}: tolerance must be positive and finite")
        out[name] = tol
    return out


def write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def custom_scenario(cfg: StructureConfig) -> Scenario:
    """Dirac checks always; symmetry checks with an action; reduction checks with a quotient."""
    L, act, q = cfg.L, cfg.act, cfg.quotient
    gates = []
    if act is not None:
        gates += [s for s in standard_preflight() if s.name in ("action-homomorphism", "action-free", "action-preserves-dirac")]
    if q is not None:
        gates += [s for s in standard_preflight() if s.name == "quotient-model"]
    checks = [
        CheckSpec("lagrangian", 1e-7, lambda c, t: check_lagrangian(L.frame, c.x, t)),
        CheckSpec("involutive", 1e-7, lambda c, t: check_involutive(L.frame, c.x, t)),
        spec_im(),
    ]
    if act is not None:
        A = lambda: algebroid_from_dirac(L)  # noqa: E731
        mu = lambda: im_form_from_dirac(L)  # noqa: E731
        checks += [
            CheckSpec("ja-morphism", 1e-6, lambda c, t: check_JA_morphism(A(), mu(), act, c.x, t)),
            CheckSpec("infinitesimal-symmetry", 1e-6, lambda c, t: check_infinitesimal_symmetry(A(), mu(), act, c.x, t)),
        ]
    if q is not None:
        checks += [*spec_lquot_dirac(), spec_lemma(), spec_well_defined()]
        exp = cfg.expect
        if "thm_red_predicate" in exp:
            checks.append(spec_thm(bool(exp["thm_red_predicate"])))
        if "rank_ared" in exp:
            checks.append(spec_rank_ared(int(exp["rank_ared"])))
        if "dim_ker_r" in exp:
            checks.append(spec_ker_r(int(exp["dim_ker_r"])))
    return Scenario("custom", L.name, L, act, q, None, tuple(checks), gates=tuple(gates))


def _print_reports(title: str, reports: list, out) -> None:
    print(f"{title}:", file=out)
    for r in reports:
        print("  " + r.line(), file=out)
        if not r.passed:
            if r.worst_point:
                print("      worst point: " + ", ".join(f"{v:.6g}" for v in r.worst_point), file=out)
            for key, val in r.details.items():
                print(f"      {key}: {val}", file=out)


def _finish(payload: dict, reports: list, report_path: Optional[str], out) -> int:
    passed = all(r.passed for r in reports)
    payload["passed"] = passed
    if report_path:
        write_atomic(report_path, dumps(payload))
    n_ok = sum(r.passed for r in reports)
    print(f"{n_ok}/{len(reports)} checks passed", file=out)
    return EXIT_OK if passed else EXIT_FAIL


def _run(sc: Scenario, args, header: dict, out) -> int:
    overrides = parse_tol(args.tol)
    result = run_scenario(sc, args.samples, args.seed, overrides)
    print(f"scenario {sc.name}: {sc.description}", file=out)
    _print_reports("preflight", result.preflight, out)
    _print_reports("checks", result.checks, out)
    payload = {**header, "tol_overrides": overrides, **result.to_dict()}
    return _finish(payload, result.preflight + result.checks, args.report, out)


def cmd_list(args, out) -> int:
    for name in REGISTRY:
        sc = get_scenario(name)
        print(f"{name:24s} {sc.description}", file=out)
        for spec in sc.checks:
            print(f"    {spec.name} (tol {spec.tol:.1e})", file=out)
    return EXIT_OK


def cmd_run(args, out) -> int:
    if args.scenario not in REGISTRY:
        raise ConfigError(f"unknown scenario {args.scenario!r}; available: {', '.join(REGISTRY)}")
    sc = get_scenario(args.scenario, args.basepoint_variant)
    header = {"command": "run", "basepoint_variant": args.basepoint_variant}
    return _run(sc, args, header, out)


def cmd_check(args, out) -> int:
    cfg = StructureConfig(load_toml(args.config))
    return _run(custom_scenario(cfg), args, {"command": "check", "config": cfg.raw}, out)


def cmd_integrate(args, out) -> int:
    raw = load_toml(args.config)
    expect = raw.get("expect", {})
    cfg = StructureConfig({k: v for k, v in raw.items() if k != "expect"})
    if cfg.act is None:
        raise ConfigError("integrate needs an [action] to pair the IM form with")
    if "path" not in raw:
        raise ConfigError("missing table [path]")
    A, mu = algebroid_from_dirac(cfg.L), im_form_from_dirac(cfg.L)
    path = parse_path(raw["path"], cfg.chart, A.k)
    tol = float(raw["path"].get("tol", 1e-3))
    reports = [check_apath(path, A, tol)]
    J = integrate_J(path, mu, cfg.act)
    if "j" in expect:
        j = expr_array(expect["j"], (cfg.act.dim,), cfg.chart.dim, cfg.names, "expect.j")
        ends = ad.real_part(j(path.x[[0, -1]]))
        diff = np.abs(J - (ends[0] - ends[1]))
        reports.append(
            residual_report(
                "path-momentum",
                np.array([np.max(diff)]),
                path.x[:1],
                float(expect.get("tol", 1e-6)),
                "path integral equals source minus target of j",
                j_source=ends[0].tolist(),
                j_target=ends[1].tolist(),
            )
        )
    print(f"J = [{', '.join(f'{v:.12g}' for v in J)}]", file=out)
    _print_reports("checks", reports, out)
    payload = {
        "command": "integrate",
        "config": raw,
        "N": path.N,
        "J": J.tolist(),
        "checks": [r.to_dict() for r in reports],
    }
    return _finish(payload, reports, args.report, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diracverify", description="Numerical checks for Dirac reduction.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--samples", type=int, default=200, help="sample points per chart (default 200)")
        p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="override a check tolerance; NAME may be a glob")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--report", metavar="FILE", help="write a JSON report")
        p.add_argument("--basepoint-variant", type=int, choices=(0, 1), default=0)

    sub.add_parser("list", help="list scenarios and their checks")
    p_run = sub.add_parser("run", help="run a built-in scenario")
    p_run.add_argument("scenario")
    common(p_run)
    p_check = sub.add_parser("check", help="check a structure given in a TOML config")
    p_check.add_argument("config")
    common(p_check)
    p_int = sub.add_parser("integrate", help="integrate the momentum along a path from a TOML config")
    p_int.add_argument("config")
    p_int.add_argument("--report", metavar="FILE")
    return parser


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if getattr(args, "samples", 1) < 1:
        print("error: --samples must be positive", file=sys.stderr)
        return EXIT_CONFIG
    handler = {"list": cmd_list, "run": cmd_run, "check": cmd_check, "integrate": cmd_integrate}[args.command]
    try:
        return handler(args, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExprEvalError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
