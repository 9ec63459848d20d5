"""Anchored algebroids, closed IM 2-forms, infinitesimal actions and momentum maps.

An algebroid is presented by a frame e_1..e_k of abstract generators with an
anchor evaluator ``anchor(x) -> (..., k, n)``.  Brackets of generators come
either from structure functions ``c(x)[i, j, l]`` with [e_i, e_j] = sum_l c e_l,
or, for algebroids induced by a Dirac structure, from the Courant bracket of
the frame sections.  An IM form is ``mu(x) -> (..., k, n)``, mu(e_i) per row.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import ad
from .courant import (
    CourantSection,
    DiracStructure,
    PreconditionError,
    SectionFrame,
    bracket_from_jets,
    bracket_table,
    courant_bracket,
)
from .linalg import frame_coefficients, min_singular_value, numerical_rank, span_distance
from .report import CheckReport, residual_report
from .smooth import Chart, ChartMismatchError, VectorField, lie_bracket, lie_derivative_oneform


@dataclass(frozen=True)
class LieAlgebraData:
    """Structure constants f[i, j, k] with [e_i, e_j] = sum_k f[i, j, k] e_k."""

    structure: np.ndarray
    bilinear: Optional[np.ndarray] = None
    labels: tuple = ()
    tol: float = 1e-12

    def __post_init__(self):
        f = np.asarray(self.structure, dtype=float)
        object.__setattr__(self, "structure", f)
        d = f.shape[0]
        if f.shape != (d, d, d):
            raise ValueError("structure constants must have shape (d, d, d)")
        if np.max(np.abs(f + np.swapaxes(f, 0, 1)), initial=0.0) > self.tol:
            raise ValueError("structure constants are not antisymmetric")
        if self.jacobi_defect() > self.tol:
            raise ValueError(f"structure constants violate the Jacobi identity (defect {self.jacobi_defect():.3e})")
        if self.bilinear is not None:
            b = np.asarray(self.bilinear, dtype=float)
            object.__setattr__(self, "bilinear", b)
            if b.shape != (d, d) or np.max(np.abs(b - b.T)) > self.tol:
                raise ValueError("bilinear form must be symmetric d x d")
            if abs(np.linalg.det(b)) < self.tol:
                raise ValueError("bilinear form is degenerate")
            if self.invariance_defect() > self.tol:
                raise ValueError("bilinear form is not ad-invariant")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"e{i + 1}" for i in range(d)))

    @property
    def dim(self) -> int:
        return self.structure.shape[0]

    def jacobi_defect(self) -> float:
        """max over basis triples of |[e_i,[e_j,e_k]] + cyclic| (brute force)."""
        f = self.structure
        d = self.dim
        worst = 0.0
        for i in range(d):
            for j in range(d):
                for k in range(d):
                    total = np.zeros(d)
                    for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
                        inner = f[b, c]  # [e_b, e_c]
                        total += np.einsum("m,mq->q", inner, f[a])  # [e_a, sum_m inner_m e_m]
                    worst = max(worst, float(np.max(np.abs(total))))
        return worst

    def invariance_defect(self) -> float:
        """max |B([u,v],w) + B(v,[u,w])| over basis triples."""
        f, b = self.structure, self.bilinear
        d = self.dim
        worst = 0.0
        for u in range(d):
            for v in range(d):
                for w in range(d):
                    val = f[u, v] @ b[:, w] + b[v, :] @ f[u, w]
                    worst = max(worst, abs(float(val)))
        return worst

    def bracket(self, u, v) -> np.ndarray:
        return np.einsum("i,j,ijk->k", u, v, self.structure)


def su2_plus_r() -> LieAlgebraData:
    """su(2) + R with the basis e_1..e_3 of su(2) ([e_i,e_j] = eps_ijk e_k), B = diag(1,1,1,-1)."""
    f = np.zeros((4, 4, 4))
    f[:3, :3, :3] = levi_civita()
    return LieAlgebraData(f, np.diag([1.0, 1.0, 1.0, -1.0]), ("e1", "e2", "e3", "t"))


def abelian(d: int) -> LieAlgebraData:
    return LieAlgebraData(np.zeros((d, d, d)))


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    return eps


@dataclass(frozen=True)
class GroupActionData:
    """Infinitesimal action: generators(x) -> (..., d, n), row k = (e_k)_M."""

    algebra: LieAlgebraData
    chart: Chart
    generators: Callable

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def generator(self, k: int) -> VectorField:
        return VectorField(self.chart, lambda x: self.generators(x)[..., k, :])

    def values(self, x) -> np.ndarray:
        return ad.real_part(self.generators(x))

    def jet(self, x) -> tuple[np.ndarray, np.ndarray]:
        val, jac = ad.jacobian(self.generators, x)
        return ad.real_part(val), ad.real_part(jac)

    def check_homomorphism(self, points: np.ndarray, tol: float = 1e-8) -> CheckReport:
        """[u_i, u_j] = sum_k f_ij^k u_k for all generator pairs."""
        u, du = self.jet(points)  # du[p, i, m, l] = d_l u_i^m
        br = np.einsum("pil,pjml->pijm", u, du) - np.einsum("pjl,piml->pijm", u, du)
        rhs = np.einsum("ijk,pkm->pijm", self.algebra.structure, u)
        res = np.max(np.abs(br - rhs), axis=(1, 2, 3)) if self.dim else np.zeros(len(points))
        return residual_report(
            "action-homomorphism",
            res,
            points,
            tol,
            anchor="infinitesimal action is a Lie algebra homomorphism",
            hint="generators of a right action satisfy the homomorphism convention; negate generators of a left action",
        )

    def check_free(self, points: np.ndarray, rank_tol: float = 1e-8) -> CheckReport:
        u = self.values(points)
        sv = min_singular_value(u)
        ranks = numerical_rank(u, rank_tol)
        res = (self.dim - ranks).astype(float)
        return residual_report(
            "action-free",
            res,
            points,
            0.5,
            anchor="generators pointwise independent",
            min_singular_value=float(np.min(sv)) if sv.size else 0.0,
        )


class ActionNotFreeError(PreconditionError):
    pass


@dataclass(frozen=True)
class AnchoredAlgebroid:
    chart: Chart
    k: int
    anchor: Callable
    structure: Optional[Callable] = None
    frame: Optional[SectionFrame] = None

    def __post_init__(self):
        if (self.structure is None) == (self.frame is None):
            raise ValueError("give exactly one of structure functions or a Dirac frame")

    @property
    def dirac_induced(self) -> bool:
        return self.frame is not None

    def anchor_values(self, x) -> np.ndarray:
        return ad.real_part(self.anchor(x))

    def bracket_coefficients(self, x) -> np.ndarray:
        """c[p, i, j, l] with [e_i, e_j] = sum_l c e_l at each point."""
        if self.structure is not None:
            return ad.real_part(self.structure(x))
        vals, table = bracket_table(self.frame, x)
        P, k = vals.shape[:2]
        flat = table.reshape(P, k * k, -1)
        return frame_coefficients(vals, flat).reshape(P, k, k, k)

    def check_antisymmetry(self, points: np.ndarray, tol: float = 1e-10) -> CheckReport:
        c = self.bracket_coefficients(points)
        res = np.max(np.abs(c + np.swapaxes(c, 1, 2)), axis=(1, 2, 3))
        return residual_report("bracket-antisymmetry", res, points, tol, anchor="antisymmetry of structure functions")

    def check_anchor_morphism(self, points: np.ndarray, tol: float = 1e-8) -> CheckReport:
        """rho([e_i,e_j]) - [rho(e_i), rho(e_j)] over all pairs."""
        r, dr = ad.jacobian(self.anchor, points)
        r, dr = ad.real_part(r), ad.real_part(dr)
        br = np.einsum("pil,pjml->pijm", r, dr) - np.einsum("pjl,piml->pijm", r, dr)
        c = self.bracket_coefficients(points)
        res = np.max(np.abs(np.einsum("pijl,plm->pijm", c, r) - br), axis=(1, 2, 3))
        return residual_report("anchor-morphism", res, points, tol, anchor="anchor intertwines brackets")


def structure_algebroid(chart: Chart, anchor: Callable, structure: Callable, k: int) -> AnchoredAlgebroid:
    return AnchoredAlgebroid(chart, k, anchor, structure=structure)


def tangent_algebroid(chart: Chart) -> AnchoredAlgebroid:
    n = chart.dim
    return AnchoredAlgebroid(
        chart,
        n,
        lambda x: ad.broadcast_to(np.eye(n), ad._shape(x)[:-1] + (n, n)),
        structure=lambda x: np.zeros(ad._shape(x)[:-1] + (n, n, n)),
    )


def algebroid_from_dirac(L: DiracStructure | SectionFrame) -> AnchoredAlgebroid:
    frame = L.frame if isinstance(L, DiracStructure) else L
    n = frame.n
    return AnchoredAlgebroid(frame.chart, frame.k, lambda x: frame.fn(x)[..., :n], frame=frame)


@dataclass(frozen=True)
class IMForm:
    chart: Chart
    fn: Callable  # x -> (..., k, n)

    def values(self, x) -> np.ndarray:
        return ad.real_part(self.fn(x))


def im_form_from_dirac(L: DiracStructure | SectionFrame) -> IMForm:
    frame = L.frame if isinstance(L, DiracStructure) else L
    n = frame.n
    return IMForm(frame.chart, lambda x: frame.fn(x)[..., n:])


def _anchored_pairs(A: AnchoredAlgebroid, mu: IMForm):
    if A.chart != mu.chart:
        raise ChartMismatchError("algebroid and IM form live on different charts")
    return lambda x: ad.concatenate([A.anchor(x), mu.fn(x)], axis=-1)


def check_im_conditions(A: AnchoredAlgebroid, mu: IMForm, points: np.ndarray, tol: float = 1e-6) -> CheckReport:
    """Both closed-IM identities over all generator pairs.

    first:  i_{rho a} mu(b) + i_{rho b} mu(a)
    second: mu([a,b]) - L_{rho a} mu(b) + i_{rho b} d mu(a)
    """
    n = A.chart.dim
    joint = _anchored_pairs(A, mu)
    val, jac = ad.jacobian(joint, points)
    val, jac = ad.real_part(val), ad.real_part(jac)
    rho, m = val[..., :n], val[..., n:]
    first = np.einsum("pil,pjl->pij", rho, m)
    first = first + np.swapaxes(first, 1, 2)
    rhs = bracket_from_jets(val[:, :, None], jac[:, :, None], val[:, None, :], jac[:, None, :], n)[..., n:]
    c = A.bracket_coefficients(points)
    lhs = np.einsum("pijl,plm->pijm", c, m)
    second = lhs - rhs
    r1 = np.max(np.abs(first), axis=(1, 2))
    r2 = np.max(np.abs(second), axis=(1, 2, 3))
    return residual_report(
        "im-conditions",
        np.maximum(r1, r2),
        points,
        tol,
        anchor="closed IM 2-form identities",
        first_identity=float(np.max(r1)),
        second_identity=float(np.max(r2)),
    )


# symmetries --------------------------------------------------------------------

def _generator_section(act: GroupActionData, k: int) -> CourantSection:
    n = act.chart.dim
    return CourantSection(act.chart, lambda x: ad.concatenate([act.generators(x)[..., k, :], np.zeros(ad._shape(x))], axis=-1))


def lifted_derivation(act: GroupActionData, k: int, s: CourantSection) -> CourantSection:
    """D(X, a) = ([u_M, X], L_{u_M} a), the bracket of (u_M, 0) with the section."""
    if act.chart != s.chart:
        raise ChartMismatchError("action and section live on different charts")
    return courant_bracket(_generator_section(act, k), s)


def corrupted_derivation(act: GroupActionData, k: int, s: CourantSection) -> CourantSection:
    """Drops the Lie-derivative term of the form part (mutation control)."""
    n = s.n
    d = lifted_derivation(act, k, s)
    return CourantSection(s.chart, lambda x: ad.concatenate([d.fn(x)[..., :n], np.zeros(ad._shape(x))], axis=-1))


def _derivation_table(act: GroupActionData, frame: SectionFrame, points: np.ndarray) -> np.ndarray:
    """(P, d, k, 2n) values of D_u(s_i) for all generators and frame sections."""
    n = frame.n
    u, du = act.jet(points)
    vals, jac = frame.jet(points)
    P, d = u.shape[:2]
    gv = np.concatenate([u, np.zeros_like(u)], axis=-1)[:, :, None]
    gj = np.concatenate([du, np.zeros_like(du)], axis=-2)[:, :, None]
    return bracket_from_jets(gv, gj, vals[:, None], jac[:, None], n)


def check_action_preserves_dirac(
    L: DiracStructure, act: GroupActionData, points: np.ndarray, tol: float = 1e-7
) -> CheckReport:
    """Distance of every D_u(s_i) to the span of the frame of L."""
    if act.chart != L.chart:
        raise ChartMismatchError("action and Dirac structure live on different charts")
    table = _derivation_table(act, L.frame, points)
    vals = L.frame.values(points)
    P, d, k, m = table.shape
    dist = span_distance(vals, table.reshape(P, d * k, m))
    return residual_report(
        "action-preserves-dirac",
        np.max(dist, axis=1) if dist.size else np.zeros(P),
        points,
        tol,
        anchor="lifted action preserves L",
    )


def check_infinitesimal_symmetry(
    A: AnchoredAlgebroid,
    mu: IMForm,
    act: GroupActionData,
    points: np.ndarray,
    tol: float = 1e-6,
    derivation: Callable = lifted_derivation,
    preserve_tol: float = 1e-7,
) -> CheckReport:
    """Derivation, anchor and equivariance identities for the lifted action.

    derivation:   D[a,b] - [Da,b] - [a,Db]
    anchor:       rho(D a) - [u_M, rho(a)]
    equivariance: L_{u_M} mu(a) - mu(D a)
    """
    if not A.dirac_induced:
        raise PreconditionError("the lifted derivation is only defined for Dirac-induced algebroids")
    frame = A.frame
    L = DiracStructure(frame) if frame.k == frame.n else None
    pre = check_action_preserves_dirac(L, act, points, preserve_tol) if L is not None else None
    if pre is not None and not pre.passed:
        raise PreconditionError(f"action does not preserve the Dirac structure (residual {pre.max_residual:.3e})")
    n = frame.n
    secs = frame.sections()
    r_der, r_anc, r_eq = [], [], []
    for kk in range(act.dim):
        u = act.generator(kk)
        D = [derivation(act, kk, s) for s in secs]
        for i, si in enumerate(secs):
            dval = D[i](points)
            anchor_res = ad.real_part(dval)[..., :n] - ad.real_part(lie_bracket(u, si.x_part)(points))
            eq_res = ad.real_part(lie_derivative_oneform(u, si.a_part)(points)) - ad.real_part(dval)[..., n:]
            r_anc.append(np.max(np.abs(anchor_res), axis=-1))
            r_eq.append(np.max(np.abs(eq_res), axis=-1))
            for j in range(i + 1, len(secs)):
                sj = secs[j]
                lhs = derivation(act, kk, courant_bracket(si, sj))(points)
                rhs = courant_bracket(D[i], sj)(points) + courant_bracket(si, D[j])(points)
                r_der.append(np.max(np.abs(ad.real_part(lhs) - ad.real_part(rhs)), axis=-1))
    P = len(points)
    stack = lambda rs: np.max(np.stack(rs), axis=0) if rs else np.zeros(P)  # noqa: E731
    der, anc, eq = stack(r_der), stack(r_anc), stack(r_eq)
    return residual_report(
        "infinitesimal-symmetry",
        np.maximum(np.maximum(der, anc), eq),
        points,
        tol,
        anchor="lifted action acts by derivations compatible with anchor and IM form",
        derivation_identity=float(np.max(der)),
        anchor_identity=float(np.max(anc)),
        equivariance_identity=float(np.max(eq)),
    )


# momentum maps -----------------------------------------------------------------

def j_can(act: GroupActionData, x, alpha) -> np.ndarray:
    """Components alpha(u_M(x)) per basis element of the algebra."""
    u = act.values(np.asarray(x, dtype=float))
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape[-1] != act.chart.dim:
        raise ValueError("covector has wrong length")
    return np.einsum("...km,...m->...k", u, alpha)


def j_A(A: AnchoredAlgebroid, mu: IMForm, act: GroupActionData, x, coeffs) -> np.ndarray:
    """J_can(mu(a)) for the fiber element with the given frame coefficients."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != A.k:
        raise ValueError(f"need {A.k} fiber coefficients")
    m = mu.values(np.asarray(x, dtype=float))
    return j_can(act, x, np.einsum("...i,...im->...m", coeffs, m))


def check_JA_morphism(
    A: AnchoredAlgebroid,
    mu: IMForm,
    act: GroupActionData,
    points: np.ndarray,
    tol: float = 1e-6,
    signs: Sequence[float] = (1.0, -1.0),
) -> CheckReport:
    """J_A([a,b]) - L_{rho a} J_A(b) + L_{rho b} J_A(a) over generator pairs.

    ``signs`` are the coefficients of the two Lie-derivative terms; the
    identity uses (1, -1).
    """

    def ja(x):
        return ad.einsum("...im,...km->...ik", mu.fn(x), act.generators(x))

    jv, jd = ad.jacobian(ja, points)
    jv, jd = ad.real_part(jv), ad.real_part(jd)  # jd[p, i, k, l] = d_l J_A(e_i)_k
    rho = A.anchor_values(points)
    lie = np.einsum("pil,pjkl->pijk", rho, jd)  # L_{rho_i} J_A(e_j)
    c = A.bracket_coefficients(points)
    lhs = np.einsum("pijl,plk->pijk", c, jv)
    res = lhs - signs[0] * lie - signs[1] * np.swapaxes(lie, 1, 2)
    return residual_report(
        "ja-morphism",
        np.max(np.abs(res), axis=(1, 2, 3)),
        points,
        tol,
        anchor="J_A is a morphism to the abelian algebra",
        signs=list(signs),
    )


def check_exact_momentum(
    A: AnchoredAlgebroid,
    mu: IMForm,
    act: GroupActionData,
    j: Sequence[Callable],
    points: np.ndarray,
    tol: float = 1e-7,
) -> CheckReport:
    """<mu(a), u_M> + d j^u (rho(a)) over generators and frame sections."""
    if len(j) != act.dim:
        raise ValueError(f"need one function per basis element ({act.dim})")
    jfn = lambda x: ad.stack([f(x) for f in j], axis=-1)  # noqa: E731
    _, dj = ad.jacobian(jfn, points)
    dj = ad.real_part(dj)  # (P, d, n)
    m = mu.values(points)
    u = act.values(points)
    rho = A.anchor_values(points)
    res = np.einsum("pim,pkm->pik", m, u) + np.einsum("pkm,pim->pik", dj, rho)
    return residual_report(
        "exact-momentum",
        np.max(np.abs(res), axis=(1, 2)),
        points,
        tol,
        anchor="IM form pairing with generators is exact",
    )
