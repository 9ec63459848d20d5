"""Coordinate charts, fields and the basic calculus on them.

Fields wrap pure evaluators ``x -> value`` acting on batched coordinates of
shape ``(..., n)``.  Evaluators must be written with :mod:`diracverify.ad`
functions so that they accept dual-number inputs; every operator below is then
itself AD-capable and can be nested (Lie bracket of Lie brackets, exterior
derivative of a pulled-back form, ...).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import ad


class ChartMismatchError(ValueError):
    """Two objects that must live on the same chart do not."""


@dataclass(frozen=True)
class Chart:
    """An open box in R^n with declared bounds."""

    chart_id: str
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi):
            raise ValueError("chart bounds have different lengths")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise ValueError(f"chart {self.chart_id!r}: empty box {lo} .. {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def contains(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=float)
        return np.all((c > np.array(self.lower)) & (c < np.array(self.upper)), axis=-1)

    def sub_box(self, shrink: float) -> tuple[np.ndarray, np.ndarray]:
        if not 0.0 < shrink <= 1.0:
            raise ValueError("shrink must lie in (0, 1]")
        lo, hi = np.array(self.lower), np.array(self.upper)
        mid, half = (lo + hi) / 2, (hi - lo) / 2 * shrink
        return mid - half, mid + half

    def sample(self, n: int, rng: np.random.Generator, shrink: float = 1.0) -> np.ndarray:
        """``n`` points drawn uniformly from the (shrunk) box, shape (n, dim)."""
        lo, hi = self.sub_box(shrink)
        return rng.uniform(lo, hi, size=(n, self.dim))

    def point(self, coords) -> "ChartPoint":
        return ChartPoint(tuple(float(c) for c in coords), self.chart_id, self.dim)

    def center(self) -> np.ndarray:
        return (np.array(self.lower) + np.array(self.upper)) / 2


@dataclass(frozen=True)
class ChartPoint:
    coords: tuple
    chart_id: str
    dim: int = field(default=-1, compare=False)

    def __post_init__(self):
        if self.dim >= 0 and len(self.coords) != self.dim:
            raise ValueError(
                f"point has {len(self.coords)} coordinates but chart {self.chart_id!r} has dimension {self.dim}"
            )
        if not np.all(np.isfinite(self.coords)):
            raise ValueError(f"non-finite coordinates {self.coords}")

    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


def _coords(x, chart: Chart):
    if isinstance(x, ChartPoint):
        if x.chart_id != chart.chart_id:
            raise ChartMismatchError(f"point on chart {x.chart_id!r} given to field on {chart.chart_id!r}")
        return x.array()
    return x


def _same_chart(*objs) -> Chart:
    chart = objs[0].chart
    for o in objs[1:]:
        if o.chart != chart:
            raise ChartMismatchError(f"chart {o.chart.chart_id!r} does not match {chart.chart_id!r}")
    return chart


@dataclass(frozen=True)
class _Field:
    chart: Chart
    fn: Callable

    def __call__(self, x):
        return self.fn(_coords(x, self.chart))

    def jet(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Real value and Jacobian (last axis = coordinate direction) at ``x``."""
        val, jac = ad.jacobian(self.fn, _coords(x, self.chart))
        return ad.real_part(val), ad.real_part(jac)


class ScalarField(_Field):
    def gradient(self, x) -> np.ndarray:
        return self.jet(x)[1]

    def hessian(self, x) -> np.ndarray:
        g = lambda y: ad.jacobian(self.fn, y)[1]  # noqa: E731
        return ad.real_part(ad.jacobian(g, _coords(x, self.chart))[1])

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _same_chart(self, other)
        return ScalarField(self.chart, lambda x: self.fn(x) + other.fn(x))

    def __mul__(self, other: "ScalarField") -> "ScalarField":
        _same_chart(self, other)
        return ScalarField(self.chart, lambda x: self.fn(x) * other.fn(x))


class VectorField(_Field):
    def __add__(self, other: "VectorField") -> "VectorField":
        _same_chart(self, other)
        return VectorField(self.chart, lambda x: self.fn(x) + other.fn(x))

    def __sub__(self, other: "VectorField") -> "VectorField":
        _same_chart(self, other)
        return VectorField(self.chart, lambda x: self.fn(x) - other.fn(x))

    def scale(self, f: ScalarField) -> "VectorField":
        _same_chart(self, f)
        return VectorField(self.chart, lambda x: ad.expand_dims(f.fn(x), -1) * self.fn(x))


class OneForm(_Field):
    def __add__(self, other: "OneForm") -> "OneForm":
        _same_chart(self, other)
        return OneForm(self.chart, lambda x: self.fn(x) + other.fn(x))

    def __sub__(self, other: "OneForm") -> "OneForm":
        _same_chart(self, other)
        return OneForm(self.chart, lambda x: self.fn(x) - other.fn(x))

    def scale(self, f: ScalarField) -> "OneForm":
        _same_chart(self, f)
        return OneForm(self.chart, lambda x: ad.expand_dims(f.fn(x), -1) * self.fn(x))


class TwoForm(_Field):
    def antisymmetry_defect(self, x) -> float:
        w = ad.real_part(self(x))
        return float(np.max(np.abs(w + np.swapaxes(w, -1, -2)), initial=0.0))


@dataclass(frozen=True)
class SmoothMap:
    domain: Chart
    codomain: Chart
    fn: Callable

    def __call__(self, x):
        return self.fn(_coords(x, self.domain))

    def jacobian(self, x):
        """Jacobian of shape (..., codomain.dim, domain.dim); AD-capable."""
        return ad.jacobian(self.fn, _coords(x, self.domain))[1]

    def compose(self, inner: "SmoothMap") -> "SmoothMap":
        """``self o inner``."""
        if inner.codomain != self.domain:
            raise ChartMismatchError("cannot compose maps with mismatched charts")
        return SmoothMap(inner.domain, self.codomain, lambda x: self.fn(inner.fn(x)))


def identity_map(chart: Chart) -> SmoothMap:
    return SmoothMap(chart, chart, lambda x: x)


# constructors ---------------------------------------------------------------

def _batch(x) -> tuple:
    return ad._shape(x)[:-1]


def constant_scalar(chart: Chart, c: float) -> ScalarField:
    return ScalarField(chart, lambda x: np.full(_batch(x), float(c)))


def coordinate_function(chart: Chart, i: int) -> ScalarField:
    return ScalarField(chart, lambda x: x[..., i])


def constant_vector(chart: Chart, v) -> VectorField:
    v = np.asarray(v, dtype=float)
    if v.shape != (chart.dim,):
        raise ValueError("constant vector has wrong length")
    return VectorField(chart, lambda x: np.broadcast_to(v, _batch(x) + v.shape))


def coordinate_vector(chart: Chart, i: int) -> VectorField:
    e = np.zeros(chart.dim)
    e[i] = 1.0
    return constant_vector(chart, e)


def constant_oneform(chart: Chart, a) -> OneForm:
    a = np.asarray(a, dtype=float)
    if a.shape != (chart.dim,):
        raise ValueError("constant covector has wrong length")
    return OneForm(chart, lambda x: np.broadcast_to(a, _batch(x) + a.shape))


def coordinate_differential(chart: Chart, i: int) -> OneForm:
    e = np.zeros(chart.dim)
    e[i] = 1.0
    return constant_oneform(chart, e)


def zero_vector(chart: Chart) -> VectorField:
    return constant_vector(chart, np.zeros(chart.dim))


def zero_oneform(chart: Chart) -> OneForm:
    return constant_oneform(chart, np.zeros(chart.dim))


def vector_field(chart: Chart, components: list[Callable]) -> VectorField:
    """Vector field from per-component scalar evaluators."""
    if len(components) != chart.dim:
        raise ValueError("wrong number of components")
    return VectorField(chart, lambda x: ad.stack([c(x) for c in components], axis=-1))


def one_form(chart: Chart, components: list[Callable]) -> OneForm:
    if len(components) != chart.dim:
        raise ValueError("wrong number of components")
    return OneForm(chart, lambda x: ad.stack([c(x) for c in components], axis=-1))


def two_form(chart: Chart, entries: list[list[Callable]]) -> TwoForm:
    n = chart.dim
    if len(entries) != n or any(len(r) != n for r in entries):
        raise ValueError("two-form needs an n x n table of entries")
    return TwoForm(
        chart,
        lambda x: ad.stack([ad.stack([e(x) for e in row], axis=-1) for row in entries], axis=-2),
    )


# calculus ---------------------------------------------------------------------

def directional_derivative(f: Callable, x, v):
    return ad.jvp(f, x, v)[1]


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y] = (DY) X - (DX) Y."""
    chart = _same_chart(X, Y)

    def fn(x):
        return directional_derivative(Y.fn, x, X.fn(x)) - directional_derivative(X.fn, x, Y.fn(x))

    return VectorField(chart, fn)


def differential(f: ScalarField) -> OneForm:
    return OneForm(f.chart, lambda x: ad.jacobian(f.fn, x)[1])


def exterior_derivative(alpha: OneForm) -> TwoForm:
    """(d alpha)_ij = d_i alpha_j - d_j alpha_i."""

    def fn(x):
        jac = ad.jacobian(alpha.fn, x)[1]  # jac[..., j, i] = d_i alpha_j
        return ad.swapaxes(jac, -1, -2) - jac

    return TwoForm(alpha.chart, fn)


def interior_twoform(X: VectorField, omega: TwoForm) -> OneForm:
    """(i_X omega)_j = X^i omega_ij."""
    chart = _same_chart(X, omega)
    return OneForm(chart, lambda x: ad.einsum("...i,...ij->...j", X.fn(x), omega.fn(x)))


def contract(alpha: OneForm, X: VectorField) -> ScalarField:
    chart = _same_chart(alpha, X)
    return ScalarField(chart, lambda x: ad.einsum("...i,...i->...", alpha.fn(x), X.fn(x)))


def lie_derivative_scalar(X: VectorField, f: ScalarField) -> ScalarField:
    chart = _same_chart(X, f)
    return ScalarField(chart, lambda x: directional_derivative(f.fn, x, X.fn(x)))


def lie_derivative_oneform(X: VectorField, alpha: OneForm) -> OneForm:
    """Cartan formula L_X alpha = i_X d alpha + d(i_X alpha)."""
    chart = _same_chart(X, alpha)
    first = interior_twoform(X, exterior_derivative(alpha))
    second = differential(contract(alpha, X))
    return OneForm(chart, lambda x: first.fn(x) + second.fn(x))


def pullback_scalar(phi: SmoothMap, f: ScalarField) -> ScalarField:
    if f.chart != phi.codomain:
        raise ChartMismatchError("function does not live on the codomain of the map")
    return ScalarField(phi.domain, lambda x: f.fn(phi.fn(x)))


def pullback_oneform(phi: SmoothMap, beta: OneForm) -> OneForm:
    """(phi^* beta)(x) = D phi(x)^T beta(phi(x))."""
    if beta.chart != phi.codomain:
        raise ChartMismatchError("form does not live on the codomain of the map")

    def fn(x):
        y, jac = ad.jacobian(phi.fn, x)
        return ad.einsum("...ai,...a->...i", jac, beta.fn(y))

    return OneForm(phi.domain, fn)


def pullback_twoform(phi: SmoothMap, omega: TwoForm) -> TwoForm:
    """(phi^* omega)(x) = D phi(x)^T omega(phi(x)) D phi(x)."""
    if omega.chart != phi.codomain:
        raise ChartMismatchError("form does not live on the codomain of the map")

    def fn(x):
        y, jac = ad.jacobian(phi.fn, x)
        return ad.einsum("...ai,...ab,...bj->...ij", jac, omega.fn(y), jac)

    return TwoForm(phi.domain, fn)


def pushforward_vector(phi: SmoothMap, x, v) -> np.ndarray:
    """D phi(x) v."""
    xc = _coords(x, phi.domain)
    v = np.asarray(v, dtype=float) if not isinstance(v, ad.Dual) else v
    if ad._shape(v)[-1] != phi.domain.dim:
        raise ValueError(f"tangent vector must have length {phi.domain.dim}")
    return directional_derivative(phi.fn, xc, v)


def closedness_defect(omega: TwoForm, x) -> np.ndarray:
    """Per-point max |d omega| with (d omega)_ijk = d_i w_jk + d_j w_ki + d_k w_ij."""
    jac = ad.real_part(ad.jacobian(omega.fn, _coords(x, omega.chart))[1])  # [..., j, k, i]
    d = jac.transpose(*range(jac.ndim - 3), -1, -3, -2)  # [..., i, j, k] = d_i w_jk
    cyc = d + np.moveaxis(d, -1, -3) + np.moveaxis(d, -3, -1)
    return np.max(np.abs(cyc), axis=(-1, -2, -3))
