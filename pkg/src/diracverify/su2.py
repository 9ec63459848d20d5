"""SU(2) as unit quaternions in an exponential chart g(a) = g0 exp(a).

The basis e_k of su(2) corresponds to half the imaginary unit i_k, so that
[e_i, e_j] = eps_ijk e_k and exp(a) = (cos |a|/2, sin(|a|/2) a/|a|).  All
functions accept dual numbers; charts must stay away from a = 0 where |a| is
not differentiable.
"""

from __future__ import annotations

import numpy as np

from . import ad


def qmul(p, q):
    """Hamilton product of (..., 4) quaternions (w, x, y, z)."""
    pw, px, py, pz = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    qw, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return ad.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def qconj(q):
    return ad.concatenate([q[..., :1], -q[..., 1:]], axis=-1)


def qexp(a):
    """exp of a in R^3 = su(2); a must avoid the origin."""
    r = ad.sqrt(ad.einsum("...i,...i->...", a, a))
    half = 0.5 * r
    s = ad.sin(half) / r
    return ad.concatenate([ad.expand_dims(ad.cos(half), -1), ad.expand_dims(s, -1) * a], axis=-1)


def qexp_axis(k: int, s):
    """exp(s e_k), smooth through s = 0."""
    z = 0.0 * s
    comps = [ad.cos(0.5 * s), z, z, z]
    comps[k + 1] = ad.sin(0.5 * s)
    return ad.stack(comps, axis=-1)


def qlog(q):
    """Inverse of :func:`qexp` on the chart domain (rotation angle below 2 pi)."""
    v = q[..., 1:]
    nv = ad.sqrt(ad.einsum("...i,...i->...", v, v))
    ang = 2.0 * ad.arctan2(nv, q[..., 0])
    return ad.expand_dims(ang / nv, -1) * v


def im_coords(q):
    """Coordinates of a pure quaternion in the basis e_k (= i_k / 2)."""
    return 2.0 * q[..., 1:]


class SU2Chart:
    """Exponential chart around a basepoint g0 (a unit quaternion)."""

    def __init__(self, g0):
        g0 = np.asarray(g0, dtype=float)
        self.g0 = g0 / np.linalg.norm(g0)
        self.g0inv = np.concatenate([self.g0[:1], -self.g0[1:]])

    def group(self, a):
        return qmul(ad.broadcast_to(self.g0, ad._shape(a)[:-1] + (4,)), qexp(a))

    def coords(self, g):
        return qlog(qmul(ad.broadcast_to(self.g0inv, ad._shape(g)[:-1] + (4,)), g))

    def left_invariant(self, a):
        """(..., 3, 3): row k is the chart expression of the left-invariant field of e_k.

        Its flow is right multiplication g -> g exp(s e_k).
        """
        rows = []
        for k in range(3):
            f = lambda s, k=k: qlog(qmul(qexp(a), qexp_axis(k, s)))  # noqa: E731
            rows.append(ad.jvp(f, np.zeros(ad._shape(a)[:-1]), np.ones(ad._shape(a)[:-1]))[1])
        return ad.stack(rows, axis=-2)

    def right_invariant(self, a):
        """(..., 3, 3): row k generates left multiplication g -> exp(s e_k) g."""
        rows = []
        batch = ad._shape(a)[:-1]
        g = self.group(a)
        for k in range(3):
            def f(s, k=k):
                h = qmul(qexp_axis(k, s), g)
                return self.coords(h)

            rows.append(ad.jvp(f, np.zeros(batch), np.ones(batch))[1])
        return ad.stack(rows, axis=-2)

    def right_maurer_cartan(self, a):
        """theta[..., k, i]: component k of dg g^{-1} applied to the coordinate vector d_i."""
        g, dg = ad.jacobian(self.group, a)  # dg[..., c, i]
        cols = []
        for i in range(3):
            cols.append(im_coords(qmul(dg[..., :, i], qconj(g))))
        return ad.stack(cols, axis=-1)
