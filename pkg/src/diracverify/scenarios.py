"""Built-in scenarios: structures, symmetry, quotient model and expected verdicts.

Each scenario carries two ordered check lists.  Preflight gates establish the
standing hypotheses (homomorphism and freeness of the action, validity of the
quotient model, L Dirac and preserved by the action); the registry holds the
expected verdicts.  A run passes when every report in both lists passes.
"""

from __future__ import annotations

import fnmatch
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import ad
from .algebroid import (
    GroupActionData,
    IMForm,
    abelian,
    algebroid_from_dirac,
    check_action_preserves_dirac,
    check_exact_momentum,
    check_im_conditions,
    check_infinitesimal_symmetry,
    check_JA_morphism,
    im_form_from_dirac,
    levi_civita,
    su2_plus_r,
)
from .apath import APath, check_apath, integrate_J
from .courant import (
    DiracStructure,
    PreconditionError,
    SectionFrame,
    check_involutive,
    check_lagrangian,
    graph_of_poisson,
    graph_of_twoform,
    poisson_jacobiator,
    tangent_dirac,
)
from .linalg import min_singular_value, null_space, numerical_rank, orth, subspace_distance
from .reduction import (
    MatchedFrames,
    QuotientModel,
    backward_image,
    check_lemma_2red,
    check_pushforward_well_defined,
    intersect_L_Kperp,
    k_cap_l_dim,
    lkperp_frame,
    pushforward_dirac,
    pushforward_frame,
    r_kernel_dim,
    reduced_algebroid,
    thm_red_predicate,
)
from .report import CheckReport, integer_report, residual_report, verdict_report
from .smooth import Chart, SmoothMap, TwoForm, closedness_defect, pullback_twoform
from .su2 import SU2Chart

SHRINK = 0.9


@dataclass
class Context:
    scenario: "Scenario"
    x: np.ndarray  # samples on M
    y: np.ndarray  # samples on N
    rng: np.random.Generator
    cache: dict = field(default_factory=dict)

    def memo(self, key: str, fn: Callable):
        if key not in self.cache:
            self.cache[key] = fn()
        return self.cache[key]


@dataclass(frozen=True)
class CheckSpec:
    name: str
    tol: float
    run: Callable  # (ctx, tol) -> CheckReport
    anchor: str = ""


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    L: DiracStructure
    act: Optional[GroupActionData]
    quotient: Optional[QuotientModel]
    matched: Optional[MatchedFrames]
    checks: tuple
    extra: dict = field(default_factory=dict)
    gates: Optional[tuple] = None

    @property
    def M(self) -> Chart:
        return self.L.chart

    @property
    def N(self) -> Optional[Chart]:
        return self.quotient.N if self.quotient is not None else None

    def preflight(self) -> tuple:
        return standard_preflight() if self.gates is None else self.gates


@dataclass
class RunResult:
    scenario: str
    seed: int
    n_samples: int
    preflight: list
    checks: list
    x_points: np.ndarray
    y_points: np.ndarray

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.preflight) and all(r.passed for r in self.checks)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "passed": self.passed,
            "preflight": [r.to_dict() for r in self.preflight],
            "checks": [r.to_dict() for r in self.checks],
            "sample_points": {"M": self.x_points.tolist(), "N": self.y_points.tolist()},
        }


def resolve_tol(name: str, default: float, overrides: dict) -> float:
    """Last matching override wins; keys are exact names or shell-style patterns."""
    tol = default
    for pattern, value in overrides.items():
        if pattern == name or fnmatch.fnmatchcase(name, pattern):
            tol = float(value)
    return tol


def _safe_run(spec: CheckSpec, ctx: Context, tol: float) -> CheckReport:
    try:
        rep = spec.run(ctx, tol)
    except PreconditionError as exc:
        return CheckReport(spec.name, float("inf"), tol, 0, (), spec.anchor, {"error": str(exc)})
    if rep.name != spec.name or rep.tolerance != tol:
        rep = CheckReport(spec.name, rep.max_residual, tol, rep.n_points, rep.worst_point, rep.anchor or spec.anchor, rep.details)
    return rep


def run_scenario(sc: Scenario, n_samples: int = 200, seed: int = 42, tol_overrides: Optional[dict] = None) -> RunResult:
    overrides = tol_overrides or {}
    rng = np.random.default_rng(seed)
    x = sc.M.sample(n_samples, rng, SHRINK)
    y = sc.N.sample(n_samples, rng, SHRINK) if sc.N is not None else np.zeros((0, 0))
    ctx = Context(sc, x, y, np.random.default_rng([seed, 1]))
    pre = [_safe_run(s, ctx, resolve_tol(s.name, s.tol, overrides)) for s in sc.preflight()]
    checks = [_safe_run(s, ctx, resolve_tol(s.name, s.tol, overrides)) for s in sc.checks]
    return RunResult(sc.name, seed, n_samples, pre, checks, x, y)


# shared check builders ---------------------------------------------------------

def standard_preflight() -> tuple:
    return (
        CheckSpec("action-homomorphism", 1e-8, lambda c, t: c.scenario.act.check_homomorphism(c.x, t)),
        CheckSpec("action-free", 0.5, lambda c, t: c.scenario.act.check_free(c.x)),
        CheckSpec("quotient-model", 1e-8, lambda c, t: c.scenario.quotient.validate(c.scenario.act, c.y, t)),
        CheckSpec("lagrangian", 1e-7, lambda c, t: check_lagrangian(c.scenario.L.frame, c.x, t)),
        CheckSpec("involutive", 1e-7, lambda c, t: check_involutive(c.scenario.L.frame, c.x, t)),
        CheckSpec(
            "action-preserves-dirac",
            1e-7,
            lambda c, t: check_action_preserves_dirac(c.scenario.L, c.scenario.act, c.x, t),
        ),
    )


def _fiber(c: Context):
    return c.memo("fiber", lambda: reduced_algebroid(c.scenario.L, c.scenario.act, c.scenario.quotient, c.y))


def _lquot(c: Context):
    return c.memo("lquot", lambda: pushforward_dirac(c.scenario.L, c.scenario.quotient, c.scenario.act, c.y))


def spec_im(tol: float = 1e-6) -> CheckSpec:
    def run(c, t):
        L = c.scenario.L
        return check_im_conditions(algebroid_from_dirac(L), im_form_from_dirac(L), c.x, t)

    return CheckSpec("im-conditions", tol, run)


def spec_rank_ared(expected: int) -> CheckSpec:
    def run(c, t):
        f = _fiber(c)
        return integer_report("rank-A_red", np.full(len(c.y), f.rank), expected, "rank of the reduced algebroid")

    return CheckSpec("rank-A_red", 0.5, run)


def spec_ker_r(expected: int) -> CheckSpec:
    def run(c, t):
        return integer_report("dim-ker-r", r_kernel_dim(_fiber(c)), expected, "kernel of the comparison map r")

    return CheckSpec("dim-ker-r", 0.5, run)


def spec_thm(expected: bool) -> CheckSpec:
    def run(c, t):
        holds, rep = thm_red_predicate(c.scenario.L, c.scenario.act, c.x)
        return verdict_report(
            "thm-red-predicate",
            holds == expected,
            rep.anchor,
            len(c.x),
            predicate=holds,
            expected=expected,
            dims=rep.details["dims"],
        )

    return CheckSpec("thm-red-predicate", 0.5, run)


def spec_lemma(tol: float = 1e-7) -> CheckSpec:
    def run(c, t):
        sc = c.scenario
        return check_lemma_2red(sc.L, sc.act, sc.quotient, c.y, t, sc.matched)

    return CheckSpec("lemma-2red", tol, run)


def spec_r_injective() -> CheckSpec:
    """Residual 1/sigma_min(r); the tolerance 1e6 encodes sigma_min > 1e-6."""

    def run(c, t):
        sv = min_singular_value(_fiber(c).r_matrix())
        with np.errstate(divide="ignore"):
            res = 1.0 / sv
        return residual_report(
            "r-injective", res, c.y, t, "r is injective on every fiber", min_singular_value=float(np.min(sv))
        )

    return CheckSpec("r-injective", 1e6, run)


def spec_lquot_dirac(tol: float = 1e-6) -> tuple:
    def frame(c):
        sc = c.scenario
        return c.memo("lquot-frame", lambda: pushforward_frame(sc.L, sc.act, sc.quotient))

    return (
        CheckSpec("lquot-lagrangian", tol, lambda c, t: check_lagrangian(frame(c), c.y, t, "lquot-lagrangian")),
        CheckSpec("lquot-involutive", tol, lambda c, t: check_involutive(frame(c), c.y, t, "lquot-involutive")),
    )


def spec_well_defined(tol: float = 1e-5) -> CheckSpec:
    def run(c, t):
        sc = c.scenario
        return check_pushforward_well_defined(sc.L, sc.act, sc.quotient, c.y, c.rng, t)

    return CheckSpec("pushforward-well-defined", tol, run)


def graph_rows(pi: np.ndarray) -> np.ndarray:
    """Rows (P, m, 2m) of the graph of bivector matrices pi (P, m, m)."""
    m = pi.shape[-1]
    return np.concatenate([pi, np.broadcast_to(np.eye(m), pi.shape)], axis=-1)


def twoform_rows(w: np.ndarray) -> np.ndarray:
    m = w.shape[-1]
    return np.concatenate([np.broadcast_to(np.eye(m), w.shape), w], axis=-1)


def subspace_report(name: str, a_rows: np.ndarray, b_rows: np.ndarray, points, tol, anchor: str) -> CheckReport:
    d = np.array([subspace_distance(a_rows[i].T, b_rows[i].T) for i in range(len(a_rows))])
    return residual_report(name, d, points, tol, anchor)


def bivector_from_graph_frame(frame: SectionFrame) -> Callable:
    """pi(y) with graph rows (pi[i,:], e_i) from a frame transverse to TN."""
    m = frame.n

    def pi(y):
        rows = frame.fn(y)
        X, beta = rows[..., :m], rows[..., m:]
        return ad.solve(beta, X)

    return pi


def const_field(value: np.ndarray) -> Callable:
    value = np.asarray(value, dtype=float)
    return lambda x: np.broadcast_to(value, ad._shape(x)[:-1] + value.shape)


# tangent-dirac -------------------------------------------------------------------

def scenario_tangent_dirac() -> Scenario:
    M = Chart("R3", (-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
    N = Chart("R2", (-1.0, -1.0), (1.0, 1.0))
    L = tangent_dirac(M)
    act = GroupActionData(abelian(1), M, const_field([[0.0, 0.0, 1.0]]))
    p = SmoothMap(M, N, lambda x: x[..., :2])
    sigma = SmoothMap(N, M, lambda y: ad.concatenate([y, 0.0 * y[..., :1]], axis=-1))
    up = np.hstack([np.eye(3), np.zeros((3, 3))])
    down = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, 0, 0]])
    matched = MatchedFrames(SectionFrame(M, const_field(up), 3), SectionFrame(N, const_field(down), 3))

    def lquot_tn(c, t):
        rows = _lquot(c)
        tn = np.broadcast_to(np.hstack([np.eye(2), np.zeros((2, 2))]), rows.shape)
        return subspace_report("lquot-is-TN", rows, tn, c.y, t, "quotient of TM is TN")

    def mu_red_zero(c, t):
        f = _fiber(c)
        return residual_report("mu-red-zero", np.max(np.abs(f.mu), axis=(1, 2)), c.y, t, "reduced IM form vanishes")

    checks = (
        spec_im(),
        spec_rank_ared(3),
        CheckSpec("lquot-is-TN", 1e-7, lquot_tn),
        spec_ker_r(1),
        CheckSpec("mu-red-zero", 1e-12, mu_red_zero),
        spec_lemma(),
        spec_thm(False),
    )
    return Scenario(
        "tangent-dirac",
        "L = TM on R^3, translations along x3, N = R^2",
        L,
        act,
        QuotientModel(p, sigma),
        matched,
        checks,
    )


# poisson-rotation ------------------------------------------------------------------

def lie_poisson_su2(sign: float = 1.0) -> Callable:
    eps = levi_civita()
    return lambda x: sign * ad.einsum("ijk,...k->...ij", eps, x)


def scenario_poisson_rotation() -> Scenario:
    M = Chart("su2*", (0.4, -1.0, -1.0), (1.5, 1.0, 1.0))
    N = Chart("sz", (0.2, -1.0), (2.0, 1.0))
    pi = lie_poisson_su2()
    L = graph_of_poisson(M, pi, "su(2)* Lie-Poisson")
    act = GroupActionData(
        abelian(1), M, lambda x: ad.expand_dims(ad.stack([-x[..., 1], x[..., 0], 0.0 * x[..., 0]], axis=-1), -2)
    )
    p = SmoothMap(M, N, lambda x: ad.stack([x[..., 0] ** 2 + x[..., 1] ** 2, x[..., 2]], axis=-1))
    sigma = SmoothMap(N, M, lambda y: ad.stack([ad.sqrt(y[..., 0]), 0.0 * y[..., 0], y[..., 1]], axis=-1))

    def up(x):
        z = 0.0 * x[..., 0]
        ds = ad.stack([2 * x[..., 0], 2 * x[..., 1], z], axis=-1)
        dz = ad.stack([z, z, z + 1.0], axis=-1)
        forms = ad.stack([ds, dz], axis=-2)
        vecs = ad.einsum("...ri,...ij->...rj", forms, pi(x))
        return ad.concatenate([vecs, forms], axis=-1)

    down = np.array([[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
    matched = MatchedFrames(SectionFrame(M, up, 2), SectionFrame(N, const_field(down), 2))

    def pushed_bivector(c):
        x = ad.real_part(sigma(c.y))
        dp = ad.real_part(p.jacobian(x))
        return np.einsum("pai,pij,pbj->pab", dp, ad.real_part(pi(x)), dp)

    def lquot_target(c, t):
        return subspace_report(
            "lquot-vs-pushed-poisson", _lquot(c), graph_rows(pushed_bivector(c)), c.y, t, "L_quot is the graph of p_* pi"
        )

    def lquot_tn(c, t):
        rows = _lquot(c)
        m = 2
        dims = np.array([m - numerical_rank(r[:, m:].T) for r in rows])  # (X, 0) in L_quot iff beta-part degenerate
        return integer_report("lquot-meets-TN", dims, 0, "L_quot is transverse to TN")

    def quotient_jacobi(c, t):
        frame = c.memo("lquot-frame", lambda: pushforward_frame(L, act, QuotientModel(p, sigma)))
        return residual_report(
            "quotient-jacobi",
            poisson_jacobiator(bivector_from_graph_frame(frame), c.y),
            c.y,
            t,
            "downstairs bivector satisfies Jacobi",
        )

    def ja(c, t):
        return check_JA_morphism(algebroid_from_dirac(L), im_form_from_dirac(L), act, c.x, t)

    def sym(c, t):
        return check_infinitesimal_symmetry(algebroid_from_dirac(L), im_form_from_dirac(L), act, c.x, t)

    checks = (
        spec_im(),
        CheckSpec("ja-morphism", 1e-6, ja),
        CheckSpec("infinitesimal-symmetry", 1e-6, sym),
        spec_thm(True),
        spec_rank_ared(2),
        spec_ker_r(0),
        spec_r_injective(),
        CheckSpec("lquot-vs-pushed-poisson", 1e-7, lquot_target),
        CheckSpec("lquot-meets-TN", 0.5, lquot_tn),
        *spec_lquot_dirac(),
        CheckSpec("quotient-jacobi", 1e-6, quotient_jacobi),
        spec_lemma(),
        spec_well_defined(),
    )
    return Scenario(
        "poisson-rotation",
        "su(2)* Lie-Poisson off the x3-axis, rotations about x3, N = (s, z)",
        L,
        act,
        QuotientModel(p, sigma),
        matched,
        checks,
        {"pi": pi, "pushed_bivector": pushed_bivector},
    )


# cotangent-lift -------------------------------------------------------------------

DARBOUX_2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def darboux(n: int) -> np.ndarray:
    """sum dq_i ^ dp_i on coordinates (q_1..q_n, p_1..p_n)."""
    w = np.zeros((2 * n, 2 * n))
    w[:n, n:] = np.eye(n)
    w[n:, :n] = -np.eye(n)
    return w


def scenario_cotangent_lift() -> Scenario:
    # M = T*R^2 with coordinates (q1, q2, p1, p2); N = (q2, p2, p1)
    M = Chart("T*R2", (-1.0,) * 4, (1.0,) * 4)
    N = Chart("T*R x R", (-1.0,) * 3, (1.0,) * 3)
    omega = TwoForm(M, const_field(darboux(2)))
    L = graph_of_twoform(omega, "canonical symplectic")
    act = GroupActionData(abelian(1), M, const_field([[1.0, 0.0, 0.0, 0.0]]))
    p = SmoothMap(M, N, lambda x: ad.stack([x[..., 1], x[..., 3], x[..., 2]], axis=-1))
    sigma = SmoothMap(N, M, lambda y: ad.stack([0.0 * y[..., 0], y[..., 0], y[..., 2], y[..., 1]], axis=-1))
    j = [lambda x: x[..., 2]]

    up = np.array(
        [
            [1, 0, 0, 0, 0, 0, 1, 0],  # (d/dq1, dp1)
            [0, 1, 0, 0, 0, 0, 0, 1],  # (d/dq2, dp2)
            [0, 0, 0, 1, 0, -1, 0, 0],  # (d/dp2, -dq2)
        ],
        dtype=float,
    )
    down = np.array(
        [
            [0, 0, 0, 0, 0, 1],  # (0, dp1)
            [1, 0, 0, 0, 1, 0],  # (d/dq2, dp2)
            [0, 1, 0, -1, 0, 0],  # (d/dp2, -dq2)
        ],
        dtype=float,
    )
    matched = MatchedFrames(SectionFrame(M, const_field(up), 3), SectionFrame(N, const_field(down), 3))

    def canonical_bivector_n() -> np.ndarray:
        pi = np.zeros((3, 3))
        pi[:2, :2] = np.linalg.inv(DARBOUX_2)  # graph(pi) = graph(dq2 ^ dp2) on the leaves, p1 Casimir
        return pi

    def lquot_canonical(c, t):
        target = graph_rows(np.broadcast_to(canonical_bivector_n(), (len(c.y), 3, 3)))
        return subspace_report("lquot-vs-canonical", _lquot(c), target, c.y, t, "quotient is canonical on T*R")

    def level_zero(c, t):
        y0 = c.y.copy()
        y0[:, 2] = 0.0
        rows = pushforward_dirac(L, QuotientModel(p, sigma), act, y0)
        di = np.broadcast_to(np.eye(3)[:, :2], (len(y0), 3, 2))
        back = backward_image(rows, di)
        target = np.broadcast_to(twoform_rows(DARBOUX_2[None]), back.shape)
        return subspace_report("level-zero-slice", back, target, y0[:, :2], t, "reduction at level zero is T*R")

    def exact(c, t):
        return check_exact_momentum(algebroid_from_dirac(L), im_form_from_dirac(L), act, j, c.x, t)

    def exact_zero(c, t):
        rep = check_exact_momentum(
            algebroid_from_dirac(L), im_form_from_dirac(L), act, [lambda x: 0.0 * x[..., 0]], c.x, 1e-7
        )
        return verdict_report(
            "exact-momentum-zero-j-fails", not rep.passed, rep.anchor, len(c.x), control_residual=rep.max_residual
        )

    def ja(c, t):
        return check_JA_morphism(algebroid_from_dirac(L), im_form_from_dirac(L), act, c.x, t)

    def path_momentum(c, t):
        return cotangent_path_check(L, act, j[0], c.rng, t)

    checks = (
        spec_im(),
        CheckSpec("ja-morphism", 1e-6, ja),
        CheckSpec("exact-momentum", 1e-7, exact),
        CheckSpec("exact-momentum-zero-j-fails", 0.5, exact_zero),
        spec_thm(True),
        spec_rank_ared(3),
        spec_ker_r(0),
        spec_r_injective(),
        CheckSpec("lquot-vs-canonical", 1e-7, lquot_canonical),
        CheckSpec("level-zero-slice", 1e-7, level_zero),
        *spec_lquot_dirac(),
        spec_lemma(),
        spec_well_defined(),
        CheckSpec("path-momentum", 1e-6, path_momentum),
    )
    return Scenario(
        "cotangent-lift",
        "T*R^2 canonical, lifted translation in q1, N = T*R x R",
        L,
        act,
        QuotientModel(p, sigma),
        matched,
        checks,
        {"j": j},
    )


def cotangent_path_check(L: DiracStructure, act: GroupActionData, j: Callable, rng: np.random.Generator, tol: float, N: int = 200) -> CheckReport:
    """Integrate J along smooth A-paths and compare with j(x0) - j(x1).

    In the graph of a 2-form the anchor is the identity on frame coefficients,
    so a(t) = x'(t) makes an A-path.
    """
    A = algebroid_from_dirac(L)
    mu = im_form_from_dirac(L)
    res, worst = [], []
    for _ in range(5):
        x0 = rng.uniform(-0.5, 0.5, 4)
        c1 = rng.uniform(-0.5, 0.5, 4)
        c2 = rng.uniform(-0.5, 0.5, 4)
        x_fn = lambda t: x0 + np.outer(np.sin(t), c1) + np.outer(t**3, c2)  # noqa: E731
        a_fn = lambda t: np.outer(np.cos(t), c1) + np.outer(3 * t**2, c2)  # noqa: E731
        path = APath.from_functions(x_fn, a_fn, N)
        ap = check_apath(path, A, 1e-3)
        J = integrate_J(path, mu, act)
        xs = path.x[[0, -1]]
        expected = j(xs[0]) - j(xs[1])
        res.append(max(abs(float(J[0]) - float(expected)), 0.0 if ap.passed else np.inf))
        worst.append(x0)
    return residual_report(
        "path-momentum",
        np.array(res),
        np.array(worst),
        tol,
        "path integral of the IM form equals source minus target of j",
    )


# nonintegrable-quotient --------------------------------------------------------------

BASEPOINTS = (
    np.array([0.9, 0.2, -0.3, 0.25]),
    np.array([0.3, -0.6, 0.5, 0.55]),
)

LIE_POISSON_SIGN = -1.0  # fixed by the p_rt Poisson-map oracle; see check "p_rt-poisson-map"


def lie_poisson_g(sign: float = LIE_POISSON_SIGN) -> Callable:
    """Linear Poisson structure on (su(2) + R)* = R^4; the R* coordinate is a Casimir."""
    eps = np.zeros((4, 4, 4))
    eps[:3, :3, :3] = levi_civita()
    return lambda xi: sign * ad.einsum("ijk,...k->...ij", eps, xi)


def casimir(xi):
    return 0.5 * (ad.einsum("...i,...i->...", xi[..., :3], xi[..., :3]) - xi[..., 3] * xi[..., 3])


def level_embedding(y):
    """phi(theta1, theta2, tau) = ((1 + tau^2) n(theta), tau sqrt(2 + tau^2)) on C = 1/2."""
    th1, th2, tau = y[..., 0], y[..., 1], y[..., 2]
    r = 1.0 + tau * tau
    return ad.stack(
        [
            r * ad.sin(th1) * ad.cos(th2),
            r * ad.sin(th1) * ad.sin(th2),
            r * ad.cos(th1),
            tau * ad.sqrt(2.0 + tau * tau),
        ],
        axis=-1,
    )


def level_left_inverse(y):
    """(..., 3, 4): (Dphi^T Dphi)^{-1} Dphi^T, exact on tangent vectors of the level set."""
    d = ad.jacobian(level_embedding, y)[1]  # (..., 4, 3)
    g = ad.einsum("...ai,...aj->...ij", d, d)
    return ad.solve(g, ad.swapaxes(d, -1, -2))


def pi_lambda(sign: float = LIE_POISSON_SIGN) -> Callable:
    lp = lie_poisson_g(sign)

    def fn(y):
        A = level_left_inverse(y)
        return ad.einsum("...ia,...ab,...jb->...ij", A, lp(level_embedding(y)), A)

    return fn


def scenario_nonintegrable(variant: int = 0) -> Scenario:
    if variant not in (0, 1):
        raise ValueError("basepoint variant must be 0 or 1")
    g = SU2Chart(BASEPOINTS[variant])
    M = Chart("M_lambda", (0.3, 0.3, 0.3, -1.0, 0.5, -2.5, -1.0), (0.9, 0.9, 0.9, 1.0, 2.6, 2.5, 1.0))
    N = Chart("level set", (0.5, -2.5, -1.0), (2.6, 2.5, 1.0))
    TG = Chart("T*G", (0.3, 0.3, 0.3, -1.0, -1.0, -1.0, -1.0, -1.0), (0.9, 0.9, 0.9, 1.0, 1.0, 1.0, 1.0, 1.0))
    lp = lie_poisson_g()
    a_star = np.array([0.6, 0.6, 0.6, 0.0])

    def mc4(a):
        th = g.right_maurer_cartan(a)  # (..., 3, 3)
        z = np.zeros(ad._shape(a)[:-1] + (3, 1))
        top = ad.concatenate([th, z], axis=-1)
        bottom = np.broadcast_to(np.array([0.0, 0.0, 0.0, 1.0]), ad._shape(a)[:-1] + (1, 4))
        return ad.concatenate([top, bottom], axis=-2)  # theta[k, i] incl. the R factor

    def embed(x):
        q = x[..., :4]
        xi = level_embedding(x[..., 4:])
        pcov = ad.einsum("...ki,...k->...i", mc4(x[..., :3]), xi)
        return ad.concatenate([q, pcov], axis=-1)

    iota = SmoothMap(M, TG, embed)
    Omega = TwoForm(TG, const_field(darboux(4)))
    omega = pullback_twoform(iota, Omega)
    L = graph_of_twoform(omega, "graph of omega_lambda")

    def generators(x):
        uL = g.left_invariant(x[..., :3])  # (..., 3, 3)
        batch = ad._shape(x)[:-1]
        rows = ad.concatenate([uL, np.zeros(batch + (3, 4))], axis=-1)
        last = np.broadcast_to(np.eye(7)[3], batch + (1, 7))
        return ad.concatenate([rows, last], axis=-2)

    act = GroupActionData(su2_plus_r(), M, generators)
    p = SmoothMap(M, N, lambda x: x[..., 4:])
    sigma = SmoothMap(
        N, M, lambda y: ad.concatenate([ad.broadcast_to(a_star, ad._shape(y)[:-1] + (4,)), y], axis=-1)
    )

    def right_inv4(x):
        uR = g.right_invariant(x[..., :3])
        batch = ad._shape(x)[:-1]
        top = ad.concatenate([uR, np.zeros(batch + (3, 1))], axis=-1)
        return ad.concatenate([top, np.broadcast_to(np.eye(4)[3], batch + (1, 4))], axis=-2)

    def coadjoint_level(y):
        """(..., 4, 3): Hamiltonian fields of the coordinates xi_k, in level coordinates."""
        A = level_left_inverse(y)
        return ad.einsum("...ia,...ka->...ki", A, lp(level_embedding(y)))

    def up(x):
        vec = ad.concatenate([right_inv4(x), coadjoint_level(x[..., 4:])], axis=-1)  # (..., 4, 7)
        form = ad.einsum("...ri,...ij->...rj", vec, omega.fn(x))
        return ad.concatenate([vec, form], axis=-1)

    def down(y):
        dphi = ad.jacobian(level_embedding, y)[1]  # (..., 4, 3); row k = d phi_k
        return ad.concatenate([coadjoint_level(y), dphi], axis=-1)

    matched = MatchedFrames(SectionFrame(M, up, 4), SectionFrame(N, down, 4))
    pil = pi_lambda()

    def casimir_check(c, t):
        rng = np.random.default_rng(7)
        xi = rng.uniform(-2.0, 2.0, (len(c.x), 4))
        _, dC = ad.jacobian(casimir, xi)
        P = lp(xi)
        res = np.zeros(len(xi))
        for _ in range(20):
            b, Q = rng.normal(size=4), rng.normal(size=(4, 4))
            df = b + xi @ (Q + Q.T)
            res = np.maximum(res, np.abs(np.einsum("pi,pij,pj->p", dC, P, df)))
        return residual_report("casimir", res, xi, t, "C is a Casimir of the linear Poisson structure")

    def prt_check(c, t):
        return prt_poisson_residual(g, TG, LIE_POISSON_SIGN, c.rng, len(c.x), t)

    def omega_closed(c, t):
        anti = np.max(np.abs(ad.real_part(omega(c.x)) + np.swapaxes(ad.real_part(omega(c.x)), -1, -2)), axis=(1, 2))
        res = np.maximum(closedness_defect(omega, c.x), anti)
        return residual_report("omega-closed", res, c.x, t, "omega_lambda is a closed 2-form")

    def lk_rank(c, t):
        b = c.memo("lk", lambda: intersect_L_Kperp(L, act, c.x))
        return integer_report("rank-L-Kperp", np.full(len(c.x), b.shape[1]), 4, "L meet K-perp has constant rank")

    def lk_isotropic(c, t):
        rep = check_lagrangian(lkperp_frame(L, act), c.x, 1e-7)
        ok = rep.details["max_isotropy_defect"] < 1e-7 and rep.details["min_rank"] == 4
        return verdict_report(
            "L-Kperp-isotropic-not-maximal", ok, rep.anchor, len(c.x), **{k: rep.details[k] for k in ("max_isotropy_defect", "min_rank", "expected_rank")}
        )

    def kl_dim(c, t):
        return integer_report("dim-K-cap-L", k_cap_l_dim(L, act, c.x), 1, "K meets L in the kernel of omega_lambda")

    def lquot_graph(c, t):
        y = c.y[:50]
        rows = pushforward_dirac(L, QuotientModel(p, sigma), act, y)
        return subspace_report(
            "lquot-vs-graph-pi_lambda", rows, graph_rows(ad.real_part(pil(y))), y, t, "L_quot is the graph of pi_lambda"
        )

    def leaf_form(c, t):
        y = c.y[:30]
        P = ad.real_part(pil(y))
        w = np.linalg.inv(P[:, :2, :2])
        # unit-sphere area form sin(theta1) dtheta1 ^ dtheta2 with the orientation induced by the
        # Lie-Poisson sign and the inversion convention graph(omega) = graph(omega^{-1})
        orient = -LIE_POISSON_SIGN
        ref = orient * (1.0 + y[:, 2] ** 2) * np.sin(y[:, 0])
        rel = np.abs(w[:, 0, 1] - ref) / np.abs(ref)
        return residual_report(
            "leaf-form", rel, y, t, "leaves carry (1 + t^2) times the unit-sphere form", tau_column=2
        )

    def rho_red_image(c, t):
        f = _fiber(c)
        xi = ad.real_part(level_embedding(c.y))
        A = ad.real_part(level_left_inverse(c.y))
        cross = np.cross(np.eye(3)[None, :, :], xi[:, None, :3])  # e_k x xi
        gens = np.einsum("pia,pka->pki", A[..., :3], cross)
        d = np.array([subspace_distance(orth(f.rho[i].T), orth(gens[i].T)) for i in range(len(c.y))])
        return residual_report("rho-red-image", d, c.y, t, "A_red is the coadjoint action algebroid")

    checks = (
        CheckSpec("casimir", 1e-8, casimir_check),
        CheckSpec("p_rt-poisson-map", 1e-6, prt_check),
        CheckSpec("omega-closed", 1e-8, omega_closed),
        spec_im(),
        CheckSpec("rank-L-Kperp", 0.5, lk_rank),
        CheckSpec("L-Kperp-isotropic-not-maximal", 0.5, lk_isotropic),
        CheckSpec("dim-K-cap-L", 0.5, kl_dim),
        spec_thm(False),
        spec_rank_ared(4),
        spec_ker_r(1),
        CheckSpec("lquot-vs-graph-pi_lambda", 1e-6, lquot_graph),
        CheckSpec("leaf-form", 1e-6, leaf_form),
        CheckSpec("rho-red-image", 1e-6, rho_red_image),
        *spec_lquot_dirac(),
        spec_lemma(1e-6),
        spec_well_defined(),
    )
    return Scenario(
        "nonintegrable-quotient",
        f"SU(2) x R x C^-1(1/2) with the pulled-back form, basepoint variant {variant}",
        L,
        act,
        QuotientModel(p, sigma),
        matched,
        checks,
        {"su2": g, "iota": iota, "omega": omega, "pi_lambda": pil, "variant": variant},
    )


def prt_poisson_residual(g: SU2Chart, TG: Chart, sign: float, rng: np.random.Generator, n: int, tol: float) -> CheckReport:
    """{f o p_rt, h o p_rt}_Omega - {f, h} o p_rt for random quadratics f, h.

    p_rt(q, p)_k = <p, u_k(q)> with u_k the right-invariant fields (generators of
    left multiplication); Omega = sum dq ^ dp and pi_Omega = Omega^{-1}.
    """
    lp = lie_poisson_g(sign)
    pts = TG.sample(n, rng, SHRINK)
    pi_omega = np.linalg.inv(darboux(4))

    def prt(z):
        a = z[..., :3]
        uR = g.right_invariant(a)  # (..., 3, 3)
        pc = z[..., 4:]
        xi3 = ad.einsum("...ki,...i->...k", uR, pc[..., :3])
        return ad.concatenate([xi3, pc[..., 3:]], axis=-1)

    xi, dxi = ad.jacobian(prt, pts)
    xi, dxi = ad.real_part(xi), ad.real_part(dxi)  # dxi[p, k, z]
    P = ad.real_part(lp(xi))
    res = np.zeros(n)
    for _ in range(5):
        bf, Qf = rng.normal(size=4), rng.normal(size=(4, 4))
        bh, Qh = rng.normal(size=4), rng.normal(size=(4, 4))
        df = bf + xi @ (Qf + Qf.T)
        dh = bh + xi @ (Qh + Qh.T)
        up = np.einsum("pk,pkz,zw,plw,pl->p", df, dxi, pi_omega, dxi, dh)
        down = np.einsum("pk,pkl,pl->p", df, P, dh)
        res = np.maximum(res, np.abs(up - down))
    return residual_report("p_rt-poisson-map", res, pts, tol, "right trivialization is a Poisson map", lie_poisson_sign=sign)


REGISTRY: dict[str, Callable[..., Scenario]] = {
    "tangent-dirac": scenario_tangent_dirac,
    "poisson-rotation": scenario_poisson_rotation,
    "cotangent-lift": scenario_cotangent_lift,
    "nonintegrable-quotient": scenario_nonintegrable,
}


def get_scenario(name: str, basepoint_variant: int = 0) -> Scenario:
    if name not in REGISTRY:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(REGISTRY)}")
    if name == "nonintegrable-quotient":
        return scenario_nonintegrable(basepoint_variant)
    return REGISTRY[name]()
