"""Sections of TM + T*M, the pairing and Courant bracket, and Dirac structures.

A section is stored as a single evaluator returning the concatenated vector
``(X, alpha)`` of length 2n.  A frame is an evaluator returning k such rows at
once, shape ``(..., k, 2n)``; batching all rows through one call keeps the AD
passes cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import ad
from .linalg import RANK_TOL, min_singular_value, numerical_rank, span_distance
from .report import CheckReport, residual_report
from .smooth import (
    Chart,
    ChartMismatchError,
    OneForm,
    TwoForm,
    VectorField,
    _coords,
)


class PreconditionError(ValueError):
    """Input violates a pointwise precondition; carries the offending point."""

    def __init__(self, message: str, point=None):
        if point is not None:
            message = f"{message} at point {list(np.round(np.asarray(point, dtype=float), 12))}"
        super().__init__(message)
        self.point = None if point is None else np.asarray(point, dtype=float)


@dataclass(frozen=True)
class CourantSection:
    chart: Chart
    fn: Callable  # x (..., n) -> (..., 2n)

    @classmethod
    def from_parts(cls, X: VectorField, alpha: OneForm) -> "CourantSection":
        if X.chart != alpha.chart:
            raise ChartMismatchError("vector and form parts live on different charts")
        return cls(X.chart, lambda x: ad.concatenate([X.fn(x), alpha.fn(x)], axis=-1))

    @property
    def n(self) -> int:
        return self.chart.dim

    def __call__(self, x):
        return self.fn(_coords(x, self.chart))

    @property
    def x_part(self) -> VectorField:
        n = self.n
        return VectorField(self.chart, lambda x: self.fn(x)[..., :n])

    @property
    def a_part(self) -> OneForm:
        n = self.n
        return OneForm(self.chart, lambda x: self.fn(x)[..., n:])

    def scale(self, f: Callable) -> "CourantSection":
        """Multiply by a scalar function f(x)."""
        return CourantSection(self.chart, lambda x: ad.expand_dims(f(x), -1) * self.fn(x))

    def __add__(self, other: "CourantSection") -> "CourantSection":
        _check_chart(self.chart, other.chart)
        return CourantSection(self.chart, lambda x: self.fn(x) + other.fn(x))

    def __sub__(self, other: "CourantSection") -> "CourantSection":
        _check_chart(self.chart, other.chart)
        return CourantSection(self.chart, lambda x: self.fn(x) - other.fn(x))


def _check_chart(a: Chart, b: Chart):
    if a != b:
        raise ChartMismatchError(f"chart {b.chart_id!r} does not match {a.chart_id!r}")


@dataclass(frozen=True)
class SectionFrame:
    """k sections evaluated jointly: ``fn(x)`` has shape (..., k, 2n)."""

    chart: Chart
    fn: Callable
    k: int
    rank_tol: float = RANK_TOL

    @classmethod
    def from_sections(cls, sections: Sequence[CourantSection], rank_tol: float = RANK_TOL) -> "SectionFrame":
        sections = list(sections)
        if not sections:
            raise ValueError("a frame needs at least one section")
        chart = sections[0].chart
        for s in sections[1:]:
            _check_chart(chart, s.chart)
        return cls(chart, lambda x: ad.stack([s.fn(x) for s in sections], axis=-2), len(sections), rank_tol)

    @property
    def n(self) -> int:
        return self.chart.dim

    def __call__(self, x):
        return self.fn(_coords(x, self.chart))

    def section(self, i: int) -> CourantSection:
        if not 0 <= i < self.k:
            raise IndexError(i)
        return CourantSection(self.chart, lambda x: self.fn(x)[..., i, :])

    def sections(self) -> list[CourantSection]:
        return [self.section(i) for i in range(self.k)]

    def values(self, x) -> np.ndarray:
        return ad.real_part(self(x))

    def jet(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Real values (P, k, 2n) and Jacobians (P, k, 2n, n)."""
        val, jac = ad.jacobian(self.fn, _coords(x, self.chart))
        return ad.real_part(val), ad.real_part(jac)

    def check_independent(self, x) -> None:
        """Raise if the k rows are not linearly independent at some point."""
        vals = self.values(x)
        sv = min_singular_value(vals)
        bad = np.flatnonzero(sv <= self.rank_tol)
        if bad.size:
            raise PreconditionError(
                f"frame rows dependent (smallest singular value {sv[bad[0]]:.3e})", np.asarray(x)[bad[0]]
            )


@dataclass(frozen=True)
class DiracStructure:
    frame: SectionFrame
    name: str = ""
    reports: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.frame.k != self.frame.n:
            raise ValueError(f"a Dirac structure needs n = {self.frame.n} frame sections, got {self.frame.k}")

    @property
    def chart(self) -> Chart:
        return self.frame.chart

    @property
    def n(self) -> int:
        return self.frame.n


# pointwise algebra --------------------------------------------------------------

def pair_values(u, v, n: int):
    """<(X,a),(Y,b)> = b(X) + a(Y) on concatenated vectors; broadcasts."""
    return ad.einsum("...i,...i->...", u[..., :n], v[..., n:]) + ad.einsum("...i,...i->...", u[..., n:], v[..., :n])


def pairing(s1: CourantSection, s2: CourantSection, x):
    _check_chart(s1.chart, s2.chart)
    return pair_values(s1(x), s2(x), s1.n)


def bracket_from_jets(v1, j1, v2, j2, n: int):
    """Courant bracket from values (..., 2n) and Jacobians (..., 2n, n).

    Jacobian convention: ``j[..., c, l]`` is the derivative of component c in
    coordinate direction l.  Returns ([X,Y], L_X b - i_Y da).  Works on duals.
    """
    X, a, DX, Da = v1[..., :n], v1[..., n:], j1[..., :n, :], j1[..., n:, :]
    Y, b, DY, Db = v2[..., :n], v2[..., n:], j2[..., :n, :], j2[..., n:, :]
    vec = ad.einsum("...l,...ml->...m", X, DY) - ad.einsum("...l,...ml->...m", Y, DX)
    lie = ad.einsum("...l,...ml->...m", X, Db) + ad.einsum("...l,...lm->...m", b, DX)
    ida = ad.einsum("...l,...ml->...m", Y, Da) - ad.einsum("...l,...lm->...m", Y, Da)
    return ad.concatenate([vec, lie - ida], axis=-1)


def courant_bracket(s1: CourantSection, s2: CourantSection) -> CourantSection:
    """([X,Y], L_X b - i_Y da) as a new AD-capable section."""
    _check_chart(s1.chart, s2.chart)
    n = s1.n

    def fn(x):
        v1, j1 = ad.jacobian(s1.fn, x)
        v2, j2 = ad.jacobian(s2.fn, x)
        return bracket_from_jets(v1, j1, v2, j2, n)

    return CourantSection(s1.chart, fn)


def bracket_table(frame: SectionFrame, x) -> tuple[np.ndarray, np.ndarray]:
    """Frame values (P,k,2n) and all pairwise brackets (P,k,k,2n)."""
    val, jac = frame.jet(x)
    n = frame.n
    table = bracket_from_jets(val[:, :, None], jac[:, :, None], val[:, None, :], jac[:, None, :], n)
    return val, table


# constructors -------------------------------------------------------------------

def _validation_points(chart: Chart, n: int = 16) -> np.ndarray:
    rng = np.random.default_rng(20240531)
    return np.vstack([chart.center()[None, :], chart.sample(n, rng, shrink=0.9)])


def graph_of_poisson(chart: Chart, pi: Callable, name: str = "", antisym_tol: float = 1e-12) -> DiracStructure:
    """Frame {(pi^sharp dx_i, dx_i)}: row i of the bivector paired with dx_i.

    ``pi(x)`` returns the bivector matrix (..., n, n) with pi[i, j] = {x_i, x_j}.
    Antisymmetry is validated at a fixed set of points inside the chart.
    """
    pts = _validation_points(chart)
    m = ad.real_part(pi(pts))
    defect = np.max(np.abs(m + np.swapaxes(m, -1, -2)))
    if defect > antisym_tol:
        k = int(np.argmax(np.max(np.abs(m + np.swapaxes(m, -1, -2)), axis=(-1, -2))))
        raise PreconditionError(f"bivector is not antisymmetric (defect {defect:.3e})", pts[k])
    n = chart.dim
    eye = np.eye(n)

    def fn(x):
        p = pi(x)
        return ad.concatenate([p, ad.broadcast_to(eye, ad._shape(p))], axis=-1)

    return DiracStructure(SectionFrame(chart, fn, n), name or "graph of bivector")


def graph_of_twoform(omega: TwoForm, name: str = "") -> DiracStructure:
    """Frame {(d_i, i_{d_i} omega)}; row i of omega is i_{d_i} omega."""
    chart = omega.chart
    n = chart.dim
    eye = np.eye(n)

    def fn(x):
        w = omega.fn(x)
        return ad.concatenate([ad.broadcast_to(eye, ad._shape(w)), w], axis=-1)

    return DiracStructure(SectionFrame(chart, fn, n), name or "graph of two-form")


def tangent_dirac(chart: Chart) -> DiracStructure:
    n = chart.dim
    return graph_of_twoform(TwoForm(chart, lambda x: np.zeros(ad._shape(x)[:-1] + (n, n))), "TM")


def cotangent_dirac(chart: Chart) -> DiracStructure:
    n = chart.dim
    return graph_of_poisson(chart, lambda x: np.zeros(ad._shape(x)[:-1] + (n, n)), "T*M")


def dirac_from_im(
    chart: Chart,
    anchor: Callable,
    mu: Callable,
    points: np.ndarray,
    tol: float = 1e-7,
    name: str = "",
) -> DiracStructure:
    """Dirac structure {(rho(e_i), mu(e_i))} from an algebroid with an IM form.

    ``anchor(x)`` and ``mu(x)`` return (..., k, n).  Requires k = n and that the
    rows (rho_i, mu_i) are independent at every sample (ker rho and ker mu meet
    trivially); the Lagrangian and involutivity reports are attached.
    """
    n = chart.dim
    k = ad._shape(anchor(points[:1]))[-2]
    if k != n:
        raise PreconditionError(f"algebroid rank {k} differs from the dimension {n}")
    frame = SectionFrame(chart, lambda x: ad.concatenate([anchor(x), mu(x)], axis=-1), k)
    vals = frame.values(points)
    sv = min_singular_value(vals)
    bad = np.flatnonzero(sv <= frame.rank_tol)
    if bad.size:
        raise PreconditionError("ker rho and ker mu intersect nontrivially", points[bad[0]])
    reports = (check_lagrangian(frame, points, tol), check_involutive(frame, points, tol))
    return DiracStructure(frame, name or "Dirac structure from IM form", reports)


# verifiers ---------------------------------------------------------------------

def check_lagrangian(frame: SectionFrame, points: np.ndarray, tol: float = 1e-7, name: str = "lagrangian") -> CheckReport:
    """Isotropy (Gram matrix of pairings vanishes) and maximality (rank n)."""
    vals = frame.values(points)
    n = frame.n
    gram = pair_values(vals[:, :, None, :], vals[:, None, :, :], n)
    iso = np.max(np.abs(gram), axis=(-1, -2))
    ranks = numerical_rank(vals, frame.rank_tol)
    deficit = (n - ranks).astype(float)
    sv = min_singular_value(vals)
    return residual_report(
        name,
        np.maximum(iso, deficit),
        points,
        tol,
        anchor="L equals its orthogonal under the symmetric pairing",
        max_isotropy_defect=float(np.max(iso)),
        min_rank=int(np.min(ranks)),
        expected_rank=n,
        min_singular_value=float(np.min(sv)),
    )


def check_involutive(frame: SectionFrame, points: np.ndarray, tol: float = 1e-7, name: str = "involutive") -> CheckReport:
    """Distance of every pairwise bracket to the span of the frame."""
    vals, table = bracket_table(frame, points)
    k = frame.k
    iu, ju = np.triu_indices(k, 1)
    if iu.size == 0:
        return residual_report(name, np.zeros(len(points)), points, tol, anchor="closure under the Courant bracket")
    brackets = table[:, iu, ju, :]
    dist = span_distance(vals, brackets)
    worst_pair = np.unravel_index(int(np.argmax(dist)), dist.shape)
    return residual_report(
        name,
        np.max(dist, axis=1),
        points,
        tol,
        anchor="closure under the Courant bracket",
        worst_pair=[int(iu[worst_pair[1]]), int(ju[worst_pair[1]])],
    )


def poisson_jacobiator(pi: Callable, points: np.ndarray) -> np.ndarray:
    """Per-point max over (i,j,k) of the cyclic sum of {x_i,{x_j,x_k}}.

    {x_i, f} = pi[i, l] d_l f, so {x_i,{x_j,x_k}} = pi[i, l] d_l pi[j, k].
    """
    val, jac = ad.jacobian(pi, points)
    p, d = ad.real_part(val), ad.real_part(jac)  # d[..., j, k, l] = d_l pi[j, k]
    t = np.einsum("pil,pjkl->pijk", p, d)
    cyc = t + np.transpose(t, (0, 2, 3, 1)) + np.transpose(t, (0, 3, 1, 2))
    return np.max(np.abs(cyc), axis=(1, 2, 3))


def check_jacobi(pi: Callable, points: np.ndarray, tol: float = 1e-7, name: str = "jacobi") -> CheckReport:
    return residual_report(name, poisson_jacobiator(pi, points), points, tol, anchor="Jacobi identity of the bivector")
