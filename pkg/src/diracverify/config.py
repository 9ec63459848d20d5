"""TOML configurations for user-defined structures and paths.

A structure config has the tables ``[chart]``, ``[structure]`` and optionally
``[action]``, ``[quotient]`` and ``[expect]``.  A path config adds ``[path]``.
Coefficients are expression strings in the chart coordinates (see
:mod:`diracverify.expr`); plain numbers are accepted as well.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import ad
from .algebroid import GroupActionData, LieAlgebraData, abelian, levi_civita, su2_plus_r
from .apath import APath
from .courant import DiracStructure, SectionFrame, graph_of_poisson, graph_of_twoform
from .expr import ExprSyntaxError, compile_expr
from .reduction import QuotientModel
from .smooth import Chart, SmoothMap, TwoForm

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key."""


def load_toml(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _table(cfg: dict, key: str, required: bool = True) -> Optional[dict]:
    val = cfg.get(key)
    if val is None:
        if required:
            raise ConfigError(f"missing table [{key}]")
        return None
    if not isinstance(val, dict):
        raise ConfigError(f"[{key}] must be a table")
    return val


def _get(tab: dict, key: str, where: str):
    if key not in tab:
        raise ConfigError(f"{where}: missing key {key!r}")
    return tab[key]


def _compile(text, n: int, names: Sequence[str], where: str) -> Callable:
    if isinstance(text, bool) or not isinstance(text, (str, int, float)):
        raise ConfigError(f"{where}: expected an expression string, got {type(text).__name__}")
    try:
        return compile_expr(str(text), n, names)
    except ExprSyntaxError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def expr_array(entries, shape: tuple, n: int, names: Sequence[str], where: str) -> Callable:
    """Nested lists of expressions with the given shape -> fn(x) of shape (..., *shape)."""
    try:
        arr = np.asarray(entries, dtype=object)
    except ValueError:
        raise ConfigError(f"{where}: ragged nested lists") from None
    if arr.shape != shape:
        raise ConfigError(f"{where}: expected shape {shape}, got {arr.shape}")
    fns = {idx: _compile(arr[idx], n, names, where + "".join(f"[{i}]" for i in idx)) for idx in np.ndindex(*shape)}

    def build(x, idx=()):
        if len(idx) == len(shape):
            return fns[idx](x)
        return ad.stack([build(x, idx + (i,)) for i in range(shape[len(idx)])], axis=len(idx) - len(shape))

    return build


def _names(tab: dict, n: int, default: Sequence[str], where: str) -> tuple:
    names = tuple(tab.get("names", default))
    if len(names) != n:
        raise ConfigError(f"{where}.names: expected {n} names, got {len(names)}")
    return names


def parse_chart(tab: dict, where: str, default_prefix: str = "x") -> tuple[Chart, tuple]:
    lower = _get(tab, "lower", where)
    upper = _get(tab, "upper", where)
    try:
        chart = Chart(str(tab.get("id", where)), tuple(lower), tuple(upper))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    n = chart.dim
    names = _names(tab, n, tuple(f"{default_prefix}{i + 1}" for i in range(n)), where)
    return chart, names


def parse_structure(tab: dict, chart: Chart, names: tuple) -> DiracStructure:
    n = chart.dim
    kind = _get(tab, "kind", "structure")
    name = str(tab.get("name", kind))
    try:
        if kind == "poisson":
            pi = expr_array(_get(tab, "matrix", "structure"), (n, n), n, names, "structure.matrix")
            return graph_of_poisson(chart, pi, name)
        if kind == "twoform":
            w = expr_array(_get(tab, "matrix", "structure"), (n, n), n, names, "structure.matrix")
            return graph_of_twoform(TwoForm(chart, w), name)
        if kind == "frame":
            rows = expr_array(_get(tab, "rows", "structure"), (n, 2 * n), n, names, "structure.rows")
            return DiracStructure(SectionFrame(chart, rows, n), name)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"structure: {exc}") from exc
    raise ConfigError(f"structure.kind: expected poisson, twoform or frame, got {kind!r}")


def parse_algebra(tab: dict, d: int) -> LieAlgebraData:
    kind = tab.get("algebra", "abelian")
    try:
        if kind == "abelian":
            return abelian(d)
        if kind == "su2":
            alg = LieAlgebraData(levi_civita(), np.eye(3))
        elif kind == "su2+r":
            alg = su2_plus_r()
        elif kind == "custom":
            alg = LieAlgebraData(np.asarray(_get(tab, "structure_constants", "action"), dtype=float))
        else:
            raise ConfigError(f"action.algebra: expected abelian, su2, su2+r or custom, got {kind!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"action: {exc}") from exc
    if alg.dim != d:
        raise ConfigError(f"action: algebra has dimension {alg.dim} but {d} generators are given")
    return alg


def parse_action(tab: dict, chart: Chart, names: tuple) -> GroupActionData:
    gens = _get(tab, "generators", "action")
    d = len(gens)
    if d == 0:
        raise ConfigError("action.generators: empty")
    fn = expr_array(gens, (d, chart.dim), chart.dim, names, "action.generators")
    return GroupActionData(parse_algebra(tab, d), chart, fn)


def parse_quotient(tab: dict, M: Chart, m_names: tuple) -> QuotientModel:
    N, n_names = parse_chart(tab, "quotient", "y")
    p = expr_array(_get(tab, "p", "quotient"), (N.dim,), M.dim, m_names, "quotient.p")
    sigma = expr_array(_get(tab, "sigma", "quotient"), (M.dim,), N.dim, n_names, "quotient.sigma")
    try:
        return QuotientModel(SmoothMap(M, N, p), SmoothMap(N, M, sigma))
    except ValueError as exc:
        raise ConfigError(f"quotient: {exc}") from exc


class StructureConfig:
    def __init__(self, cfg: dict):
        self.raw = cfg
        self.chart, self.names = parse_chart(_table(cfg, "chart"), "chart")
        self.L = parse_structure(_table(cfg, "structure"), self.chart, self.names)
        act_tab = _table(cfg, "action", required=False)
        self.act = parse_action(act_tab, self.chart, self.names) if act_tab is not None else None
        q_tab = _table(cfg, "quotient", required=False)
        if q_tab is not None and self.act is None:
            raise ConfigError("[quotient] requires an [action]")
        self.quotient = parse_quotient(q_tab, self.chart, self.names) if q_tab is not None else None
        self.expect = _table(cfg, "expect", required=False) or {}
        unknown = set(self.expect) - {"thm_red_predicate", "rank_ared", "dim_ker_r"}
        if unknown:
            raise ConfigError(f"[expect]: unknown keys {sorted(unknown)}")


def parse_path(tab: dict, chart: Chart, k: int) -> APath:
    N = _get(tab, "N", "path")
    if isinstance(N, bool) or not isinstance(N, int) or N < 2:
        raise ConfigError("path.N: expected an integer >= 2")
    x = expr_array(_get(tab, "x", "path"), (chart.dim,), 1, ("t",), "path.x")
    a = expr_array(_get(tab, "a", "path"), (k,), 1, ("t",), "path.a")
    t = np.linspace(0.0, 1.0, N + 1)[:, None]
    xs, as_ = ad.real_part(x(t)), ad.real_part(a(t))
    xdot = None
    if "xdot" in tab:
        xdot = ad.real_part(expr_array(tab["xdot"], (chart.dim,), 1, ("t",), "path.xdot")(t))
    return APath(t[:, 0], xs, as_, xdot)
