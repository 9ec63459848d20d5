import numpy as np
import pytest

from diracverify.courant import PreconditionError
from diracverify.report import CheckReport
from diracverify.scenarios import (
    REGISTRY,
    CheckSpec,
    get_scenario,
    resolve_tol,
    run_scenario,
)

NAMES = list(REGISTRY)


def test_registry_names_are_stable():
    assert NAMES == ["tangent-dirac", "poisson-rotation", "cotangent-lift", "nonintegrable-quotient"]
    with pytest.raises(KeyError):
        get_scenario("no-such-scenario")


@pytest.mark.parametrize("name", NAMES)
def test_every_scenario_passes_its_gates_and_checks(runs, name):
    res = runs(name)
    gates = {r.name: r for r in res.preflight}
    for gate in ("action-homomorphism", "action-free", "lagrangian", "involutive"):
        assert gates[gate].passed, gates[gate].line()
    failed = [r.line() for r in res.checks if not r.passed]
    assert not failed
    assert res.passed


def test_tangent_dirac_has_seven_checks(runs):
    assert len(runs("tangent-dirac").checks) == 7


def test_nonintegrable_verdicts_at_second_basepoint(runs):
    a, b = runs("nonintegrable-quotient", 0), runs("nonintegrable-quotient", 1)
    assert b.passed
    assert [r.name for r in a.checks] == [r.name for r in b.checks]
    assert [r.passed for r in a.checks] == [r.passed for r in b.checks]


def test_reports_round_trip(runs):
    for r in runs("poisson-rotation").checks:
        assert CheckReport.from_dict(r.to_dict()) == r


def test_sample_points_are_recorded_and_seeded():
    sc = get_scenario("tangent-dirac")
    a = run_scenario(sc, 20, 7).to_dict()
    b = run_scenario(sc, 20, 7).to_dict()
    c = run_scenario(sc, 20, 8).to_dict()
    assert a == b
    assert a["sample_points"] != c["sample_points"]
    assert np.asarray(a["sample_points"]["M"]).shape == (20, 3)


def test_tolerance_overrides():
    assert resolve_tol("lemma-2red", 1e-7, {}) == 1e-7
    assert resolve_tol("lemma-2red", 1e-7, {"lemma-2red": 1e-3}) == 1e-3
    assert resolve_tol("lquot-lagrangian", 1e-6, {"lquot-*": 1e-2, "*-lagrangian": 1e-4}) == 1e-4
    assert resolve_tol("casimir", 1e-8, {"lquot-*": 1e-2}) == 1e-8
    res = run_scenario(get_scenario("poisson-rotation"), 20, 42, {"*": 1e-15})
    assert not res.passed


def test_precondition_errors_become_failed_reports():
    sc = get_scenario("tangent-dirac")

    def boom(c, t):
        raise PreconditionError("rank drops")

    bad = type(sc)(sc.name, sc.description, sc.L, sc.act, sc.quotient, sc.matched, (CheckSpec("boom", 1e-6, boom),))
    res = run_scenario(bad, 10, 0)
    (rep,) = res.checks
    assert not rep.passed and rep.max_residual == float("inf")
    assert "rank drops" in rep.details["error"]
