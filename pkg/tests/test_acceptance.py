"""Acceptance suite: one test per criterion, summarized as PASS/FAIL lines at the end of the run."""

import io
import numpy as np
import pytest

from diracverify import ad
from diracverify.algebroid import IMForm, algebroid_from_dirac, check_im_conditions, check_JA_morphism, im_form_from_dirac, tangent_algebroid
from diracverify.apath import APath, concat, integrate_J, reparametrize
from diracverify.cli import main
from diracverify.courant import check_involutive, check_lagrangian, graph_of_poisson, graph_of_twoform
from diracverify.expr import BinOp, Call, Neg, Num, Pow, Var, parse, to_text
from diracverify.reduction import check_pushforward_well_defined, pushforward_dirac
from diracverify.scenarios import get_scenario
from diracverify.smooth import Chart, TwoForm

from helpers import random_exact_twoform, su2_bivector
from test_ad import fd_jacobian, smooth_map
from test_apath import area_setup, poly_path, smooth_path

R3 = Chart("R3", (-1, -1, -1), (1, 1, 1))
SCENARIOS = ["tangent-dirac", "poisson-rotation", "cotangent-lift", "nonintegrable-quotient"]


def by_name(result):
    return {r.name: r for r in result.preflight + result.checks}


def test_criterion_1_dirac_axioms():
    """1 Dirac axioms: Lie-Poisson and closed-form graphs pass below 1e-7, non-closed form fails above 1e-3"""
    pts = R3.sample(200, np.random.default_rng(42), 0.9)
    for L in [graph_of_poisson(R3, su2_bivector)] + [graph_of_twoform(random_exact_twoform(R3, s)) for s in range(3)]:
        assert check_lagrangian(L.frame, pts, 1e-7).max_residual < 1e-7
        assert check_involutive(L.frame, pts, 1e-7).max_residual < 1e-7
    w = TwoForm(R3, lambda x: ad.einsum("...,ij->...ij", x[..., 2], np.array([[0, 1, 0], [-1, 0, 0], [0, 0, 0.0]])))
    assert check_involutive(graph_of_twoform(w).frame, pts, 1e-7).max_residual > 1e-3


def test_criterion_2_im_axioms(runs):
    """2 IM axioms: residuals below 1e-6 on every built-in structure, corrupted form fails"""
    for name in SCENARIOS:
        assert by_name(runs(name))["im-conditions"].max_residual < 1e-6
    pts = R3.sample(200, np.random.default_rng(42), 0.9)
    bad = np.zeros((3, 3))
    bad[0, 0] = 1.0
    rep = check_im_conditions(tangent_algebroid(R3), IMForm(R3, lambda x: ad.broadcast_to(bad, ad._shape(x)[:-1] + (3, 3))), pts, 1e-6)
    assert not rep.passed


def test_criterion_3_momentum_morphism(runs):
    """3 J_A is a morphism on poisson-rotation below 1e-6, sign mutation fails"""
    res = runs("poisson-rotation")
    assert by_name(res)["ja-morphism"].max_residual < 1e-6
    sc = get_scenario("poisson-rotation")
    A, mu = algebroid_from_dirac(sc.L), im_form_from_dirac(sc.L)
    assert not check_JA_morphism(A, mu, sc.act, res.x_points, 1e-6, signs=(1.0, 1.0)).passed


def test_criterion_4_tangent_bundle_ranks(runs):
    """4 L = TM: rank A_red = 3, rank L_quot = 2, dim ker r = 1, reduced IM form below 1e-12"""
    res = runs("tangent-dirac")
    checks = by_name(res)
    assert checks["rank-A_red"].passed and checks["rank-A_red"].details["observed"] == [3]
    assert checks["dim-ker-r"].passed and checks["dim-ker-r"].details["observed"] == [1]
    assert checks["mu-red-zero"].max_residual < 1e-12
    sc = get_scenario("tangent-dirac")
    rows = pushforward_dirac(sc.L, sc.quotient, sc.act, res.y_points)
    assert {int(np.linalg.matrix_rank(r, tol=1e-8)) for r in rows} == {2}
    assert checks["lquot-is-TN"].passed


def test_criterion_5_poisson_scenarios(runs):
    """5 Poisson scenarios: predicate holds, r injective, L_quot matches the target graph below 1e-7"""
    for name, target in (("poisson-rotation", "lquot-vs-pushed-poisson"), ("cotangent-lift", "lquot-vs-canonical")):
        checks = by_name(runs(name))
        thm = checks["thm-red-predicate"]
        assert thm.passed and thm.details["predicate"] is True
        assert checks["r-injective"].details["min_singular_value"] > 1e-6
        assert checks[target].max_residual < 1e-7


CRITERION_6 = {
    "casimir": 1e-8,
    "p_rt-poisson-map": 1e-6,
    "rank-L-Kperp": None,
    "dim-K-cap-L": None,
    "lquot-vs-graph-pi_lambda": 1e-6,
    "leaf-form": 1e-6,
    "rho-red-image": 1e-6,
}


def test_criterion_6_nonintegrable_pipeline(runs):
    """6 Non-integrable quotient: every stage passes at both chart basepoints"""
    verdicts = []
    for variant in (0, 1):
        res = runs("nonintegrable-quotient", variant)
        checks = by_name(res)
        for name, tol in CRITERION_6.items():
            assert checks[name].passed, checks[name].line()
            if tol is not None:
                assert checks[name].tolerance == tol and checks[name].max_residual < tol
        assert checks["rank-L-Kperp"].details["expected"] == 4
        assert checks["dim-K-cap-L"].details["expected"] == 1
        assert res.passed
        verdicts.append([r.passed for r in res.checks])
    assert verdicts[0] == verdicts[1]


def test_criterion_7_path_momentum(runs):
    """7 Path momentum: additive, fourth-order Simpson, reparametrization invariant, matches j on cotangent paths"""
    A, mu, act = area_setup()
    errs = [abs(integrate_J(poly_path(N), mu, act)[0] + 1.0) for N in (8, 16, 32)]
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5
    rng = np.random.default_rng(7)
    tau = lambda t: t + 0.3 * np.sin(np.pi * t) / np.pi  # noqa: E731
    dtau = lambda t: 1 + 0.3 * np.cos(np.pi * t)  # noqa: E731
    for _ in range(10):
        x_fn, a_fn = smooth_path(rng, 400)
        p1 = APath.from_functions(x_fn, a_fn, 400)
        assert abs(integrate_J(p1, mu, act)[0] - integrate_J(reparametrize(x_fn, a_fn, tau, dtau, 400), mu, act)[0]) < 1e-8
        p2 = APath.from_functions(*smooth_path(rng, 400, x0=p1.x[-1]), 400)
        gap = integrate_J(concat(p1, p2), mu, act) - integrate_J(p1, mu, act) - integrate_J(p2, mu, act)
        assert abs(gap[0]) < 1e-9
    assert by_name(runs("cotangent-lift"))["path-momentum"].max_residual < 1e-6


def test_criterion_8_pushforward_well_defined(runs):
    """8 Pushforward is independent of the orbit representative below 1e-5"""
    for name in SCENARIOS[1:]:
        rep = by_name(runs(name))["pushforward-well-defined"]
        assert rep.tolerance == 1e-5 and rep.max_residual < 1e-5
    sc, res = get_scenario("tangent-dirac"), runs("tangent-dirac")
    rep = check_pushforward_well_defined(sc.L, sc.act, sc.quotient, res.y_points, np.random.default_rng(8), 1e-5)
    assert rep.max_residual < 1e-5


def random_tree(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        return Num(float(rng.integers(0, 1000)) / 8) if rng.random() < 0.5 else Var(int(rng.integers(0, 3)))
    kind = rng.integers(0, 4)
    if kind == 0:
        return Neg(random_tree(rng, depth - 1))
    if kind == 1:
        return BinOp(str(rng.choice(list("+-*/"))), random_tree(rng, depth - 1), random_tree(rng, depth - 1))
    if kind == 2:
        return Pow(random_tree(rng, depth - 1), int(rng.integers(-3, 5)))
    return Call(str(rng.choice(["sin", "cos", "exp", "sqrt"])), random_tree(rng, depth - 1))


def test_criterion_9_infrastructure(tmp_path):
    """9 Infrastructure: AD agrees with finite differences, parser round trips, reports are byte-identical"""
    x = np.random.default_rng(0).uniform(-1, 1, (100, 3))
    _, jac = ad.jacobian(smooth_map, x)
    fd = fd_jacobian(smooth_map, x)
    assert (np.abs(ad.real_part(jac) - fd) / np.maximum(1.0, np.abs(fd))).max() < 1e-4
    rng = np.random.default_rng(9)
    for _ in range(200):
        tree = random_tree(rng, 6)
        assert parse(to_text(tree), 3) == tree
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert main(["run", "poisson-rotation", "--seed", "42", "--report", str(p)], out=io.StringIO()) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
