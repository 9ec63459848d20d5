"""Tagged forward-mode dual numbers over numpy arrays.

A :class:`Dual` carries a primal part ``val`` and a tangent part ``der`` of the
same shape, plus an integer ``tag`` identifying the perturbation.  Primal and
tangent parts may themselves be duals with *smaller* tags, which is how nested
derivatives (Hessians, derivatives of Lie brackets, ...) are obtained without
perturbation confusion.  Array-valued duals vectorize over sample points.

All functions in this module accept plain ndarrays, Python scalars or duals.
"""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

_tag_counter = itertools.count(1)


def new_tag() -> int:
    return next(_tag_counter)


def _shape(x) -> tuple:
    if isinstance(x, Dual):
        return x.shape
    return np.shape(x)


def broadcast_to(x, shape):
    if isinstance(x, Dual):
        if x.shape == tuple(shape):
            return x
        return Dual(broadcast_to(x.val, shape), broadcast_to(x.der, shape), x.tag)
    return np.broadcast_to(np.asarray(x, dtype=float), shape)


class Dual:
    """A tagged dual number ``val + der * eps_tag`` with array components."""

    __slots__ = ("val", "der", "tag", "shape")
    __array_ufunc__ = None  # make numpy defer to our reflected operators

    def __init__(self, val, der, tag: int):
        if not isinstance(val, Dual):
            val = np.asarray(val, dtype=float)
        if not isinstance(der, Dual):
            der = np.asarray(der, dtype=float)
        sv, sd = _shape(val), _shape(der)
        if sv != sd:
            shape = np.broadcast_shapes(sv, sd)
            val = broadcast_to(val, shape)
            der = broadcast_to(der, shape)
            sv = shape
        self.val = val
        self.der = der
        self.tag = tag
        self.shape = tuple(sv)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    def __repr__(self) -> str:
        return f"Dual(tag={self.tag}, val={self.val!r}, der={self.der!r})"

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return Dual(-self.val, -self.der, self.tag)

    def __pos__(self):
        return self

    def __pow__(self, n):
        return power(self, n)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return Dual(self.val[idx], self.der[idx], self.tag)

    def __len__(self):
        return self.shape[0]

    def __bool__(self):
        raise TypeError("truth value of a Dual is ambiguous; compare real_part() instead")

    @property
    def T(self):
        return swapaxes(self, -1, -2)


def _top_tag(*xs) -> int:
    top = 0
    for x in xs:
        if isinstance(x, Dual) and x.tag > top:
            top = x.tag
    return top


def _split(x, tag: int):
    """(primal, tangent) of ``x`` with respect to ``tag``; tangent None if constant."""
    if isinstance(x, Dual) and x.tag == tag:
        return x.val, x.der
    return x, None


def add(a, b):
    t = _top_tag(a, b)
    if t == 0:
        return np.add(a, b)
    av, ad_ = _split(a, t)
    bv, bd = _split(b, t)
    if ad_ is None:
        der = bd
    elif bd is None:
        der = ad_
    else:
        der = ad_ + bd
    return Dual(av + bv, der, t)


def sub(a, b):
    t = _top_tag(a, b)
    if t == 0:
        return np.subtract(a, b)
    av, ad_ = _split(a, t)
    bv, bd = _split(b, t)
    if ad_ is None:
        der = -bd
    elif bd is None:
        der = ad_
    else:
        der = ad_ - bd
    return Dual(av - bv, der, t)


def mul(a, b):
    t = _top_tag(a, b)
    if t == 0:
        return np.multiply(a, b)
    av, ad_ = _split(a, t)
    bv, bd = _split(b, t)
    if ad_ is None:
        der = av * bd
    elif bd is None:
        der = ad_ * bv
    else:
        der = ad_ * bv + av * bd
    return Dual(av * bv, der, t)


def div(a, b):
    t = _top_tag(a, b)
    if t == 0:
        return np.divide(a, b)
    av, ad_ = _split(a, t)
    bv, bd = _split(b, t)
    q = av / bv
    if bd is None:
        der = ad_ / bv
    elif ad_ is None:
        der = -(q * bd) / bv
    else:
        der = (ad_ - q * bd) / bv
    return Dual(q, der, t)


def power(x, n: int):
    if int(n) != n:
        raise ValueError("only integer exponents are supported")
    n = int(n)
    if not isinstance(x, Dual):
        return np.power(np.asarray(x, dtype=float), n)
    if n == 0:
        return np.ones(x.shape)
    if n < 0:
        return div(1.0, power(x, -n))
    v = x.val
    return Dual(power(v, n), n * power(v, n - 1) * x.der, x.tag)


def _unary(x, f: Callable, df: Callable):
    if not isinstance(x, Dual):
        return f(x)
    return Dual(f(x.val), df(x.val) * x.der, x.tag)


def sin(x):
    return _unary(x, sin, cos) if isinstance(x, Dual) else np.sin(x)


def cos(x):
    return _unary(x, cos, lambda v: -sin(v)) if isinstance(x, Dual) else np.cos(x)


def exp(x):
    return _unary(x, exp, exp) if isinstance(x, Dual) else np.exp(x)


def log(x):
    return _unary(x, log, lambda v: 1.0 / v) if isinstance(x, Dual) else np.log(x)


def sqrt(x):
    if not isinstance(x, Dual):
        return np.sqrt(x)
    r = sqrt(x.val)
    return Dual(r, x.der / (2.0 * r), x.tag)


def arctan2(y, x):
    t = _top_tag(y, x)
    if t == 0:
        return np.arctan2(y, x)
    yv, yd = _split(y, t)
    xv, xd = _split(x, t)
    r2 = xv * xv + yv * yv
    if yd is None:
        der = -(yv * xd) / r2
    elif xd is None:
        der = (xv * yd) / r2
    else:
        der = (xv * yd - yv * xd) / r2
    return Dual(arctan2(yv, xv), der, t)


# linear structural operations ---------------------------------------------

def _linear(x, fn: Callable):
    if isinstance(x, Dual):
        return Dual(_linear(x.val, fn), _linear(x.der, fn), x.tag)
    return fn(x)


def swapaxes(x, a: int, b: int):
    return _linear(x, lambda v: np.swapaxes(v, a, b))


def reshape(x, shape):
    return _linear(x, lambda v: np.reshape(v, shape))


def sum(x, axis=None):  # noqa: A001 - mirrors numpy
    return _linear(x, lambda v: np.sum(v, axis=axis))


def expand_dims(x, axis):
    return _linear(x, lambda v: np.expand_dims(v, axis))


def stack(items: Sequence, axis: int = 0):
    items = list(items)
    shape = np.broadcast_shapes(*(_shape(i) for i in items))
    t = _top_tag(*items)
    if t == 0:
        return np.stack([np.broadcast_to(np.asarray(i, dtype=float), shape) for i in items], axis=axis)
    vals, ders = [], []
    for i in items:
        v, d = _split(i, t)
        vals.append(broadcast_to(v, shape))
        ders.append(np.zeros(shape) if d is None else broadcast_to(d, shape))
    return Dual(stack(vals, axis), stack(ders, axis), t)


def concatenate(items: Sequence, axis: int = 0):
    items = list(items)
    t = _top_tag(*items)
    if t == 0:
        return np.concatenate([np.asarray(i, dtype=float) for i in items], axis=axis)
    vals, ders = [], []
    for i in items:
        v, d = _split(i, t)
        vals.append(v)
        ders.append(np.zeros(_shape(i)) if d is None else d)
    return Dual(concatenate(vals, axis), concatenate(ders, axis), t)


def einsum(spec: str, *operands):
    t = _top_tag(*operands)
    if t == 0:
        return np.einsum(spec, *operands, optimize=False)
    prim = [_split(o, t)[0] for o in operands]
    val = einsum(spec, *prim)
    der = None
    for k, o in enumerate(operands):
        _, d = _split(o, t)
        if d is None:
            continue
        args = list(prim)
        args[k] = d
        term = einsum(spec, *args)
        der = term if der is None else der + term
    return Dual(val, der, t)


def matmul(a, b):
    if _top_tag(a, b) == 0:
        return np.matmul(a, b)
    if len(_shape(a)) < 2 or len(_shape(b)) < 2:
        raise ValueError("matmul on duals expects at least 2-d operands; use einsum")
    return einsum("...ij,...jk->...ik", a, b)


def solve(a, b):
    """Batched ``a^{-1} b`` differentiated implicitly: d(x) = a^{-1}(db - da x)."""
    t = _top_tag(a, b)
    if t == 0:
        return np.linalg.solve(a, b)
    av, ad_ = _split(a, t)
    bv, bd = _split(b, t)
    x = solve(av, bv)
    rhs = None
    if bd is not None:
        rhs = bd
    if ad_ is not None:
        corr = einsum("...ij,...jk->...ik", ad_, x)
        rhs = -corr if rhs is None else rhs - corr
    return Dual(x, solve(av, rhs), t)


# tagging / extraction -------------------------------------------------------

def real_part(x) -> np.ndarray:
    """Innermost float array, stripping every perturbation."""
    while isinstance(x, Dual):
        x = x.val
    return np.asarray(x, dtype=float)


def primal(y, tag: int):
    if isinstance(y, Dual) and y.tag == tag:
        return y.val
    return y


def tangent(y, tag: int):
    if isinstance(y, Dual) and y.tag == tag:
        return y.der
    return np.zeros(_shape(y))


def jvp(f: Callable, x, v):
    """Return ``(f(x), Df(x) v)``; ``x`` and ``v`` may carry outer perturbations."""
    t = new_tag()
    shape = np.broadcast_shapes(_shape(x), _shape(v))
    out = f(Dual(broadcast_to(x, shape), broadcast_to(v, shape), t))
    return primal(out, t), tangent(out, t)


def jacobian(f: Callable, x):
    """Value and Jacobian of ``f`` at batched points ``x`` of shape (..., n).

    The Jacobian has shape ``out_shape + (n,)`` with the last axis indexing the
    differentiation direction.
    """
    n = _shape(x)[-1]
    batch = _shape(x)
    value = None
    cols = []
    for i in range(n):
        e = np.zeros(batch)
        e[..., i] = 1.0
        value, d = jvp(f, x, e)
        cols.append(d)
    if n == 0:
        value = f(x)
        return value, np.zeros(_shape(value) + (0,))
    return value, stack(cols, axis=-1)


def zeros(shape) -> np.ndarray:
    return np.zeros(shape)


def ones(shape) -> np.ndarray:
    return np.ones(shape)
