"""Discretized A-paths and the path-integrated momentum map."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson, trapezoid

from . import ad
from .algebroid import AnchoredAlgebroid, GroupActionData, IMForm
from .report import CheckReport, residual_report
from .smooth import SmoothMap


@dataclass(frozen=True)
class APath:
    """Samples on a uniform grid of [0, 1]: base points x, fiber coefficients a."""

    t: np.ndarray  # (N+1,)
    x: np.ndarray  # (N+1, n)
    a: np.ndarray  # (N+1, k)
    xdot: Optional[np.ndarray] = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("a path needs at least two samples")
        if not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-9, atol=1e-12):
            raise ValueError("time grid must be uniform")
        x = np.asarray(self.x, dtype=float).reshape(len(t), -1)
        a = np.asarray(self.a, dtype=float).reshape(len(t), -1)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "a", a)
        if self.xdot is None:
            xd = np.gradient(x, t, axis=0, edge_order=2) if len(t) > 2 else np.gradient(x, t, axis=0)
            object.__setattr__(self, "xdot", xd)

    @property
    def N(self) -> int:
        return len(self.t) - 1

    @classmethod
    def from_functions(cls, x_fn: Callable, a_fn: Callable, N: int) -> "APath":
        t = np.linspace(0.0, 1.0, N + 1)
        return cls(t, x_fn(t), a_fn(t))

    @classmethod
    def constant(cls, x0, a0, N: int) -> "APath":
        t = np.linspace(0.0, 1.0, N + 1)
        return cls(t, np.tile(np.asarray(x0, float), (N + 1, 1)), np.tile(np.asarray(a0, float), (N + 1, 1)))


def anchor_image(path: APath, A: AnchoredAlgebroid) -> np.ndarray:
    rho = A.anchor_values(path.x)  # (N+1, k, n)
    return np.einsum("tk,tkn->tn", path.a, rho)


def check_apath(path: APath, A: AnchoredAlgebroid, tol: float) -> CheckReport:
    """max_i |rho(a(t_i)) - xdot(t_i)|."""
    if path.a.shape[1] != A.k:
        raise ValueError(f"path has {path.a.shape[1]} coefficients, algebroid rank is {A.k}")
    res = np.linalg.norm(anchor_image(path, A) - path.xdot, axis=1)
    return residual_report("a-path", res, path.t[:, None], tol, anchor="anchor of a(t) is the base velocity")


def quadrature(values: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Composite Simpson for an even number of intervals, trapezoid otherwise."""
    if len(t) < 3:
        raise ValueError("need N >= 2 intervals")
    if (len(t) - 1) % 2 == 0:
        return simpson(values, x=t, axis=0)
    return trapezoid(values, x=t, axis=0)


def momentum_integrand(path: APath, mu: IMForm, act: GroupActionData) -> np.ndarray:
    """(N+1, d): <mu(a(t)), u_M(x(t))> per basis element."""
    m = mu.values(path.x)  # (N+1, k, n)
    u = act.values(path.x)  # (N+1, d, n)
    return np.einsum("tk,tkn,tdn->td", path.a, m, u)


def integrate_J(path: APath, mu: IMForm, act: GroupActionData) -> np.ndarray:
    return quadrature(momentum_integrand(path, mu, act), path.t)


def integrate_coefficients(path: APath) -> np.ndarray:
    """Integral of a(t): the momentum of a path in an algebra over a point."""
    return quadrature(path.a, path.t)


def concat(p1: APath, p2: APath, tol: float = 1e-9) -> APath:
    """p1 then p2, each rescaled to half the interval (coefficients doubled)."""
    if p1.N != p2.N:
        raise ValueError("concatenation expects equal sample counts")
    if np.max(np.abs(p1.x[-1] - p2.x[0])) > tol:
        raise ValueError(f"endpoint mismatch: {p1.x[-1]} vs {p2.x[0]}")
    N = p1.N
    t = np.linspace(0.0, 1.0, 2 * N + 1)
    x = np.vstack([p1.x, p2.x[1:]])
    a = np.vstack([2 * p1.a[:-1], (p1.a[-1:] + p2.a[:1]), 2 * p2.a[1:]])
    xdot = np.vstack([2 * p1.xdot[:-1], p1.xdot[-1:] + p2.xdot[:1], 2 * p2.xdot[1:]])
    return APath(t, x, a, xdot)


def reparametrize(x_fn: Callable, a_fn: Callable, tau: Callable, dtau: Callable, N: int) -> APath:
    """Path t -> (x(tau(t)), tau'(t) a(tau(t))) for a monotone tau of [0, 1]."""
    t = np.linspace(0.0, 1.0, N + 1)
    s = tau(t)
    return APath(t, x_fn(s), dtau(t)[:, None] * a_fn(s))


def map_apath(
    psi: Callable,
    base: Optional[SmoothMap],
    path: APath,
    target: Optional[AnchoredAlgebroid] = None,
    tol: float = 1e-6,
) -> tuple[APath, Optional[CheckReport]]:
    """Push a path through a fiberwise-linear map psi(x) (k2, k1) over ``base``.

    ``base=None`` maps to a point.  When ``target`` is given the image is
    checked to be an A-path of it.
    """
    mats = ad.real_part(psi(path.x))
    if mats.ndim != 3 or mats.shape[-1] != path.a.shape[1]:
        raise ValueError("fiber map has inconsistent dimensions")
    a2 = np.einsum("tij,tj->ti", mats, path.a)
    x2 = np.zeros((len(path.t), 0)) if base is None else ad.real_part(base(path.x))
    image = APath(path.t, x2, a2)
    report = check_apath(image, target, tol) if target is not None else None
    return image, report
