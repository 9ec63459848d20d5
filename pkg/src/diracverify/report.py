"""Check reports: named residuals with tolerances and verdicts."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class CheckReport:
    name: str
    max_residual: float
    tolerance: float
    n_points: int
    worst_point: tuple = ()
    anchor: str = ""
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    @property
    def passed(self) -> bool:
        return bool(self.max_residual < self.tolerance)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "max_residual": _json_float(self.max_residual),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "n_points": self.n_points,
            "worst_point": [float(v) for v in self.worst_point],
            "anchor": self.anchor,
            "details": _jsonable(self.details),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CheckReport":
        r = cls(
            name=d["name"],
            max_residual=_from_json_float(d["max_residual"]),
            tolerance=float(d["tolerance"]),
            n_points=int(d["n_points"]),
            worst_point=tuple(float(v) for v in d["worst_point"]),
            anchor=d.get("anchor", ""),
            details=d.get("details", {}),
        )
        if r.passed != d["passed"]:
            raise ValueError(f"inconsistent pass flag in serialized report {d['name']!r}")
        return r

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.name}: residual {self.max_residual:.3e} (tol {self.tolerance:.1e}, {self.n_points} pts)"

    def with_tolerance(self, tol: float) -> "CheckReport":
        return CheckReport(self.name, self.max_residual, tol, self.n_points, self.worst_point, self.anchor, self.details)


def _json_float(x: float):
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def _from_json_float(x) -> float:
    return float(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _json_float(obj)
    return obj


def residual_report(
    name: str,
    residuals: np.ndarray,
    points: np.ndarray,
    tol: float,
    anchor: str = "",
    **details,
) -> CheckReport:
    """Build a report from per-point residuals (shape (P,)) at ``points`` (P, n)."""
    residuals = np.asarray(residuals, dtype=float).reshape(-1)
    points = np.asarray(points, dtype=float)
    if residuals.size == 0:
        return CheckReport(name, 0.0, tol, 0, (), anchor, details)
    bad = ~np.isfinite(residuals)
    if np.any(bad):
        k = int(np.argmax(bad))
        worst = math.inf
    else:
        k = int(np.argmax(residuals))
        worst = float(residuals[k])
    wp = tuple(points[k]) if points.ndim == 2 and len(points) == len(residuals) else ()
    return CheckReport(name, worst, tol, int(residuals.size), wp, anchor, details)


def verdict_report(name: str, ok: bool, anchor: str = "", n_points: int = 0, **details) -> CheckReport:
    """Boolean expected-verdict check: residual 0 when it holds, 1 otherwise."""
    return CheckReport(name, 0.0 if ok else 1.0, 0.5, n_points, (), anchor, details)


def integer_report(name: str, observed, expected: int, anchor: str = "", n_points: int = 0, **details) -> CheckReport:
    """Exact integer verdict (ranks, dimensions): residual = max |observed - expected|."""
    obs = np.atleast_1d(np.asarray(observed, dtype=int))
    res = float(np.max(np.abs(obs - expected))) if obs.size else 0.0
    details = {"expected": expected, "observed": sorted(set(obs.tolist())), **details}
    return CheckReport(name, res, 0.5, n_points or int(obs.size), (), anchor, details)


def dumps(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n"
