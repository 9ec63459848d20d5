import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracverify import ad
from diracverify.courant import (
    CourantSection,
    PreconditionError,
    SectionFrame,
    check_involutive,
    check_jacobi,
    check_lagrangian,
    cotangent_dirac,
    courant_bracket,
    dirac_from_im,
    graph_of_poisson,
    graph_of_twoform,
    pairing,
    poisson_jacobiator,
    tangent_dirac,
)
from diracverify.smooth import Chart, TwoForm, differential, ScalarField

from helpers import random_exact_twoform, su2_bivector

R1 = Chart("R", (-1,), (1,))
R2 = Chart("R2", (-1, -1), (1, 1))
R3 = Chart("R3", (-1, -1, -1), (1, 1, 1))
R4 = Chart("R4", (-1,) * 4, (1,) * 4)
PTS3 = R3.sample(200, np.random.default_rng(42), 0.9)


def const_section(chart, vec):
    vec = np.asarray(vec, float)
    return CourantSection(chart, lambda x: ad.broadcast_to(vec, ad._shape(x)[:-1] + vec.shape))


def test_pairing_examples():
    x = np.array([0.1, 0.2])
    assert pairing(const_section(R2, [1, 2, 0, 0]), const_section(R2, [-1, 0.5, 0, 0]), x) == 0.0
    assert pairing(const_section(R2, [1, 0, 0, 1]), const_section(R2, [0, 1, 1, 0]), x) == 2.0
    assert pairing(const_section(R2, [1, 0, 1, 0]), const_section(R2, [1, 0, -1, 0]), x) == 0.0


def test_bracket_examples():
    pts = R2.sample(20, np.random.default_rng(0))
    X = CourantSection(R2, lambda x: ad.stack([x[..., 1] ** 2, ad.sin(x[..., 0]), 0 * x[..., 0], 0 * x[..., 0]], -1))
    Y = CourantSection(R2, lambda x: ad.stack([x[..., 0], x[..., 0] * x[..., 1], 0 * x[..., 0], 0 * x[..., 0]], -1))
    br = ad.real_part(courant_bracket(X, Y)(pts))
    assert np.max(np.abs(br[:, 2:])) == 0.0
    f = ScalarField(R2, lambda x: ad.sin(x[..., 0] * x[..., 1]))
    g = ScalarField(R2, lambda x: x[..., 0] ** 3 + ad.exp(x[..., 1]))
    zero = lambda x: 0 * x  # noqa: E731
    df = CourantSection(R2, lambda x: ad.concatenate([zero(x), differential(f).fn(x)], -1))
    dg = CourantSection(R2, lambda x: ad.concatenate([zero(x), differential(g).fn(x)], -1))
    assert np.max(np.abs(ad.real_part(courant_bracket(df, dg)(pts)))) < 1e-10
    d1 = const_section(R2, [1, 0, 0, 0])
    x1dx2 = CourantSection(R2, lambda x: ad.stack([0 * x[..., 0], 0 * x[..., 0], 0 * x[..., 0], x[..., 0]], -1))
    out = ad.real_part(courant_bracket(d1, x1dx2)(pts))
    np.testing.assert_allclose(out, np.broadcast_to([0, 0, 0, 1.0], out.shape), atol=1e-14)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_bracket_antisymmetric_up_to_exact_term(seed):
    rng = np.random.default_rng(seed)
    M1, M2 = rng.normal(size=(2, 6, 3)), rng.normal(size=(2, 6, 3))

    def section(M):
        return CourantSection(R3, lambda x: ad.sin(ad.einsum("ai,...i->...a", M[0], x)) + ad.einsum("ai,...i->...a", M[1], x) ** 2)

    s1, s2 = section(M1), section(M2)
    pts = R3.sample(50, rng)
    lhs = ad.real_part(courant_bracket(s1, s2)(pts) + courant_bracket(s2, s1)(pts))
    _, dpair = ad.jacobian(lambda x: pairing(s1, s2, x), pts)
    rhs = np.concatenate([np.zeros((50, 3)), ad.real_part(dpair)], -1)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_zero_poisson_is_cotangent_bundle():
    vals = cotangent_dirac(R3).frame.values(PTS3)
    np.testing.assert_array_equal(vals[:, :, :3], 0.0)
    np.testing.assert_array_equal(vals[:, :, 3:], np.broadcast_to(np.eye(3), (200, 3, 3)))


@pytest.mark.parametrize(
    "L",
    [
        graph_of_poisson(R3, su2_bivector, "su(2)*"),
        graph_of_poisson(R2, lambda x: ad.broadcast_to(np.array([[0, 1.0], [-1.0, 0]]), ad._shape(x)[:-1] + (2, 2))),
        graph_of_twoform(TwoForm(R4, lambda x: ad.broadcast_to(np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]]), ad._shape(x)[:-1] + (4, 4)))),
        tangent_dirac(R3),
        cotangent_dirac(R3),
        graph_of_twoform(random_exact_twoform(R3, 0)),
        graph_of_twoform(random_exact_twoform(R3, 1)),
        graph_of_twoform(random_exact_twoform(R3, 2)),
    ],
    ids=["su2", "symplectic-R2", "symplectic-R4", "TM", "T*M", "exact-0", "exact-1", "exact-2"],
)
def test_constructed_structures_are_dirac(L):
    pts = L.chart.sample(200, np.random.default_rng(42), 0.9)
    assert check_lagrangian(L.frame, pts, 1e-7).passed
    assert check_involutive(L.frame, pts, 1e-7).passed


def test_nonclosed_twoform_fails_involutivity():
    w = TwoForm(R3, lambda x: ad.einsum("...,ij->...ij", x[..., 2], np.array([[0, 1, 0], [-1, 0, 0], [0, 0, 0.0]])))
    rep = check_involutive(graph_of_twoform(w).frame, PTS3, 1e-7)
    assert not rep.passed and rep.max_residual > 1e-3


def test_isotropy_failure_on_the_diagonal():
    frame = SectionFrame(R1, lambda x: ad.broadcast_to(np.array([[1.0, 1.0]]), ad._shape(x)[:-1] + (1, 2)), 1)
    rep = check_lagrangian(frame, np.array([[0.3]]), 1e-7)
    assert not rep.passed and rep.details["max_isotropy_defect"] == 2.0


def test_non_antisymmetric_bivector_rejected():
    with pytest.raises(PreconditionError):
        graph_of_poisson(R2, lambda x: ad.broadcast_to(np.eye(2), ad._shape(x)[:-1] + (2, 2)))


def bivector_family(c):
    """pi = x3 d1^d2 + c x2 d2^d3: Jacobi fails for c != 0 (v . curl v = -c x3 for v = (c x2, 0, x3))."""

    def pi(x):
        z = 0 * x[..., 0]
        a, b = x[..., 2], c * x[..., 1]
        return ad.stack([ad.stack([z, a, z], -1), ad.stack([-a, z, b], -1), ad.stack([z, -b, z], -1)], -2)

    return pi


@pytest.mark.parametrize("c", [0.0, 1.0, -0.5])
def test_involutivity_agrees_with_jacobi_oracle(c):
    pi = bivector_family(c)
    jac_ok = check_jacobi(pi, PTS3, 1e-7).passed
    inv_ok = check_involutive(graph_of_poisson(R3, pi).frame, PTS3, 1e-7).passed
    assert jac_ok == inv_ok == (c == 0.0)
    assert np.max(poisson_jacobiator(su2_bivector, PTS3)) < 1e-12


def test_dirac_from_im_examples():
    eye = lambda x: ad.broadcast_to(np.eye(3), ad._shape(x)[:-1] + (3, 3))  # noqa: E731
    zero = lambda x: np.zeros(ad._shape(x)[:-1] + (3, 3))  # noqa: E731
    L = dirac_from_im(R3, eye, zero, PTS3)
    np.testing.assert_array_equal(L.frame.values(PTS3), tangent_dirac(R3).frame.values(PTS3))
    assert all(r.passed for r in L.reports)
    L2 = dirac_from_im(R3, su2_bivector, eye, PTS3)
    np.testing.assert_allclose(L2.frame.values(PTS3), graph_of_poisson(R3, su2_bivector).frame.values(PTS3))

    def degenerate(x):
        m = np.array(ad.real_part(eye(x)))
        m[..., 0, :] = 0.0
        return m

    with pytest.raises(PreconditionError):
        dirac_from_im(R3, degenerate, zero, PTS3)
