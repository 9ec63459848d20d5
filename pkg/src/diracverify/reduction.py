"""Reduction by a free symmetry modelled by an explicit submersion p: M -> N.

All downstairs objects at y are computed at the representative x = sigma(y).
Frames are built from pointwise null spaces; the smooth variants
(:func:`lkperp_frame`, :func:`pushforward_frame`) produce AD-capable frames so
that brackets of the resulting sections can be taken.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import ad
from .algebroid import ActionNotFreeError, GroupActionData
from .courant import DiracStructure, PreconditionError, SectionFrame, bracket_from_jets
from .linalg import (
    RANK_TOL,
    min_singular_value,
    null_space,
    numerical_rank,
    orth,
    smooth_column_frame,
    smooth_null_frame,
    span_distance,
    subspace_distance,
)
from .report import CheckReport, residual_report
from .smooth import Chart, SmoothMap


class ConstantRankError(PreconditionError):
    """A rank that must be locally constant varies across the samples."""


@dataclass(frozen=True)
class QuotientModel:
    p: SmoothMap  # M -> N
    sigma: SmoothMap  # N -> M

    def __post_init__(self):
        if self.p.codomain != self.sigma.domain or self.sigma.codomain != self.p.domain:
            raise ValueError("p and sigma charts do not match")

    @property
    def M(self) -> Chart:
        return self.p.domain

    @property
    def N(self) -> Chart:
        return self.p.codomain

    def validate(self, act: GroupActionData, y_points: np.ndarray, tol: float = 1e-8) -> CheckReport:
        """p o sigma = id, Dp of full rank and ker Dp = span of the generators."""
        x = ad.real_part(self.sigma(y_points))
        ps = ad.real_part(self.p(x))
        sec = np.max(np.abs(ps - y_points), axis=-1)
        dp = ad.real_part(self.p.jacobian(x))
        m = self.N.dim
        rank_def = (m - numerical_rank(dp)).astype(float)
        u = act.values(x)
        ker = np.array([subspace_distance(null_space(dp[i]), u[i].T) for i in range(len(x))])
        res = np.maximum(np.maximum(sec, rank_def), ker)
        return residual_report(
            "quotient-model",
            res,
            y_points,
            tol,
            anchor="p is a submersion whose fibres are the orbits",
            section_defect=float(np.max(sec)),
            kernel_distance=float(np.max(ker)),
        )


def orbit_distribution(act: GroupActionData, points: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Generator values (P, d, n); raises at the first point where they are dependent."""
    u = act.values(points)
    if act.dim == 0:
        return u
    sv = min_singular_value(u)
    bad = np.flatnonzero(sv <= rank_tol)
    if bad.size:
        raise ActionNotFreeError(f"orbit distribution drops rank (singular value {sv[bad[0]]:.3e})", points[bad[0]])
    return u


def _constraint_matrix(frame_vals, u, n):
    """M[p, k, i] = alpha_i(u_k): the covector constraints on frame coefficients."""
    return np.einsum("pkm,pim->pki", u, frame_vals[..., n:])


def intersect_L_Kperp(L: DiracStructure, act: GroupActionData, points: np.ndarray) -> np.ndarray:
    """Basis rows (P, r, 2n) of L intersected with K-perp at each point.

    Raises :class:`ConstantRankError` when r varies across the points.
    """
    vals = L.frame.values(points)
    u = act.values(points)
    cons = _constraint_matrix(vals, u, L.n)
    ranks = numerical_rank(cons) if act.dim else np.zeros(len(points), dtype=int)
    dims = L.n - ranks
    if np.any(dims != dims[0]):
        k = int(np.flatnonzero(dims != dims[0])[0])
        raise ConstantRankError(f"rank of L meet K-perp varies ({dims[0]} vs {dims[k]})", points[k])
    out = np.empty((len(points), int(dims[0]), 2 * L.n))
    for i in range(len(points)):
        c = null_space(cons[i]) if act.dim else np.eye(L.n)
        out[i] = c.T @ vals[i]
    return out


def lkperp_frame(L: DiracStructure, act: GroupActionData) -> SectionFrame:
    """AD-capable local frame of L meet K-perp (rank read off at evaluation)."""
    n = L.n

    def fn(x):
        vals = L.frame.fn(x)
        u = act.generators(x)
        cons = ad.einsum("...km,...im->...ki", u, vals[..., n:])
        coeff = smooth_null_frame(cons)  # (..., k, r)
        return ad.einsum("...ir,...im->...rm", coeff, vals)

    x0 = L.chart.center()[None, :]
    r = ad.real_part(fn(x0)).shape[-2]
    return SectionFrame(L.chart, fn, r)


def k_cap_l_dim(L: DiracStructure, act: GroupActionData, points: np.ndarray) -> np.ndarray:
    """dim (K meet L) per point by brute-force null space.

    Unknowns: frame coefficients c and orbit coefficients w; conditions
    sum c_i X_i - sum w_k u_k = 0 and sum c_i alpha_i = 0.
    """
    vals = L.frame.values(points)
    u = act.values(points)
    n = L.n
    dims = np.empty(len(points), dtype=int)
    for i in range(len(points)):
        top = np.hstack([vals[i][:, :n].T, -u[i].T])
        bottom = np.hstack([vals[i][:, n:].T, np.zeros((n, act.dim))])
        ns = null_space(np.vstack([top, bottom]))
        # project onto the frame coefficients; w is determined by c since u is free
        dims[i] = numerical_rank(ns[: L.n]) if ns.size else 0
    return dims


def _dp_and_beta(dp, alpha):
    """Solve Dp^T beta = alpha in the least-squares sense; return beta and the residual."""
    g = np.einsum("...ai,...bi->...ab", dp, dp)
    rhs = np.einsum("...ai,...ri->...ra", dp, alpha)
    beta = np.swapaxes(np.linalg.solve(g, np.swapaxes(rhs, -1, -2)), -1, -2)
    resid = np.einsum("...ai,...ra->...ri", dp, beta) - alpha
    return beta, resid


@dataclass(frozen=True)
class ReducedAlgebroidFiber:
    y: np.ndarray  # (P, m)
    x: np.ndarray  # (P, n) = sigma(y)
    basis: np.ndarray  # (P, r, 2n)
    rho: np.ndarray  # (P, r, m)
    mu: np.ndarray  # (P, r, m)
    solve_residual: np.ndarray  # (P,)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def r_matrix(self) -> np.ndarray:
        """(P, 2m, r) matrix of r in the fiber basis."""
        return np.swapaxes(np.concatenate([self.rho, self.mu], axis=-1), -1, -2)


def reduced_algebroid_at(L: DiracStructure, act: GroupActionData, q: QuotientModel, x: np.ndarray, y=None) -> ReducedAlgebroidFiber:
    basis = intersect_L_Kperp(L, act, x)
    n = L.n
    dp = ad.real_part(q.p.jacobian(x))
    rho = np.einsum("pai,pri->pra", dp, basis[..., :n])
    mu, resid = _dp_and_beta(dp, basis[..., n:])
    solve_res = np.max(np.abs(resid), axis=(1, 2)) if resid.size else np.zeros(len(x))
    if np.any(solve_res > 1e-9):
        k = int(np.argmax(solve_res))
        raise PreconditionError(f"form part not in the annihilator of K (residual {solve_res[k]:.3e})", x[k])
    if y is None:
        y = ad.real_part(q.p(x))
    return ReducedAlgebroidFiber(y, x, basis, rho, mu, solve_res)


def reduced_algebroid(L: DiracStructure, act: GroupActionData, q: QuotientModel, y_points: np.ndarray) -> ReducedAlgebroidFiber:
    x = ad.real_part(q.sigma(y_points))
    return reduced_algebroid_at(L, act, q, x, y_points)


def r_map(fiber: ReducedAlgebroidFiber, coeffs) -> tuple[np.ndarray, np.ndarray]:
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != fiber.rank:
        raise ValueError(f"need {fiber.rank} coefficients")
    return np.einsum("...r,...ra->...a", coeffs, fiber.rho), np.einsum("...r,...ra->...a", coeffs, fiber.mu)


def r_kernel_dim(fiber: ReducedAlgebroidFiber) -> np.ndarray:
    return fiber.rank - numerical_rank(fiber.r_matrix())


def r_image(fiber: ReducedAlgebroidFiber) -> list[np.ndarray]:
    """Orthonormal column bases of image(r) in T_yN + T*_yN."""
    return [orth(m) for m in fiber.r_matrix()]


def pushforward_at(L: DiracStructure, act: GroupActionData, q: QuotientModel, x: np.ndarray) -> np.ndarray:
    """Rows (P, m, 2m) spanning {(Dp X, beta) : (X, Dp^T beta) in L_x}.

    Solved directly from the definition: unknowns are frame coefficients c and
    beta with sum c_i alpha_i = Dp^T beta.
    """
    vals = L.frame.values(x)
    dp = ad.real_part(q.p.jacobian(x))
    n, m = L.n, q.N.dim
    out = np.empty((len(x), m, 2 * m))
    for i in range(len(x)):
        ns = null_space(np.hstack([vals[i][:, n:].T, -dp[i].T]))
        c, beta = ns[:n], ns[n:]
        cols = orth(np.vstack([dp[i] @ (vals[i][:, :n].T @ c), beta]))
        if cols.shape[1] != m:
            raise ConstantRankError(f"pushforward has rank {cols.shape[1]}, expected {m}", x[i])
        out[i] = cols.T
    return out


def pushforward_dirac(L: DiracStructure, q: QuotientModel, act: GroupActionData, y_points: np.ndarray) -> np.ndarray:
    """Rows (P, m, 2m) spanning {(Dp X, beta) : (X, Dp^T beta) in L} at sigma(y)."""
    return pushforward_at(L, act, q, ad.real_part(q.sigma(y_points)))


def pushforward_frame(L: DiracStructure, act: GroupActionData, q: QuotientModel) -> SectionFrame:
    """AD-capable frame of L_quot on N built along sigma."""
    n, m = L.n, q.N.dim
    up = lkperp_frame(L, act)

    def fn(y):
        x = q.sigma.fn(y)
        rows = up.fn(x)  # (..., r, 2n)
        dp = ad.jacobian(q.p.fn, x)[1]  # (..., m, n)
        vec = ad.einsum("...ai,...ri->...ra", dp, rows[..., :n])
        g = ad.einsum("...ai,...bi->...ab", dp, dp)
        rhs = ad.einsum("...ai,...ri->...ar", dp, rows[..., n:])
        beta = ad.swapaxes(ad.solve(g, rhs), -1, -2)
        v = ad.swapaxes(ad.concatenate([vec, beta], axis=-1), -1, -2)  # (..., 2m, r)
        cols = smooth_column_frame(v, m)
        return ad.swapaxes(cols, -1, -2)

    return SectionFrame(q.N, fn, m)


def thm_red_predicate(L: DiracStructure, act: GroupActionData, points: np.ndarray) -> tuple[bool, CheckReport]:
    """True iff K meets L trivially at every sample."""
    dims = k_cap_l_dim(L, act, points)
    holds = bool(np.all(dims == 0))
    rep = CheckReport(
        "k-cap-l-trivial",
        float(np.max(dims)) if dims.size else 0.0,
        0.5,
        len(points),
        tuple(points[int(np.argmax(dims))]) if dims.size else (),
        "A_red and L_quot agree iff K meets L trivially",
        {"dims": sorted(set(dims.tolist()))},
    )
    return holds, rep


# comparison of reductions ---------------------------------------------------------

@dataclass(frozen=True)
class MatchedFrames:
    """Invariant sections of L meet K-perp upstairs and their images downstairs."""

    upstairs: SectionFrame
    downstairs: SectionFrame


def check_lemma_2red(
    L: DiracStructure,
    act: GroupActionData,
    q: QuotientModel,
    y_points: np.ndarray,
    tol: float = 1e-7,
    matched: Optional[MatchedFrames] = None,
) -> CheckReport:
    """image(r) = L_quot, dim ker r = dim (K meet L), mu_quot o r = mu_red, and
    (with matched frames) r intertwines brackets."""
    m = q.N.dim
    fiber = reduced_algebroid(L, act, q, y_points)
    target = pushforward_dirac(L, q, act, y_points)
    imgs = r_image(fiber)
    dist = np.array([subspace_distance(imgs[i], target[i].T) for i in range(len(y_points))])
    kdim = r_kernel_dim(fiber)
    kl = k_cap_l_dim(L, act, fiber.x)
    kerr = np.abs(kdim - kl).astype(float)
    # mu_quot o r: express r(a) in the L_quot frame and read off the form part
    rvals = np.swapaxes(fiber.r_matrix(), -1, -2)  # (P, r, 2m)
    coeff = np.einsum("pqa,pra->prq", target, rvals)  # target rows are orthonormal
    recon = np.einsum("prq,pqa->pra", coeff, target)
    mu_err = np.max(np.abs(recon[..., m:] - fiber.mu), axis=(1, 2))
    parts = {"image_distance": dist, "kernel_mismatch": kerr, "mu_quot_defect": mu_err}
    if matched is not None:
        parts.update(_matched_residuals(L, act, q, matched, y_points))
    res = np.max(np.stack(list(parts.values())), axis=0)
    return residual_report(
        "lemma-2red",
        res,
        y_points,
        tol,
        anchor="image of r is L_quot and ker r is (K meet L)/G",
        **{k: float(np.max(v)) for k, v in parts.items()},
        kernel_dims=sorted(set(kdim.tolist())),
    )


def _matched_residuals(L, act, q, matched: MatchedFrames, y_points) -> dict:
    n, m = L.n, q.N.dim
    x = ad.real_part(q.sigma(y_points))
    up_vals, up_jac = matched.upstairs.jet(x)
    dn_vals, dn_jac = matched.downstairs.jet(y_points)
    dp = ad.real_part(q.p.jacobian(x))
    lvals = L.frame.values(x)
    u = act.values(x)

    def r_of(rows):
        vec = np.einsum("pai,p...i->p...a", dp, rows[..., :n])
        beta, resid = _dp_and_beta(dp, rows[..., n:].reshape(len(x), -1, n))
        beta = beta.reshape(rows.shape[:-1] + (m,))
        return np.concatenate([vec, beta], axis=-1), np.abs(resid).reshape(len(x), -1).max(axis=1)

    k = up_vals.shape[1]
    # upstairs frame must lie in L and in K-perp
    in_l = np.max(span_distance(lvals, up_vals), axis=1)
    in_kperp = np.max(np.abs(np.einsum("pkm,pim->pik", u, up_vals[..., n:])), axis=(1, 2))
    img, r1 = r_of(up_vals)
    match = np.max(np.abs(img - dn_vals), axis=(1, 2))
    up_br = bracket_from_jets(up_vals[:, :, None], up_jac[:, :, None], up_vals[:, None], up_jac[:, None], n)
    dn_br = bracket_from_jets(dn_vals[:, :, None], dn_jac[:, :, None], dn_vals[:, None], dn_jac[:, None], m)
    img_br, r2 = r_of(up_br)
    morph = np.max(np.abs(img_br - dn_br), axis=(1, 2, 3))
    return {
        "matched_in_l": in_l,
        "matched_in_kperp": in_kperp,
        "matched_images": match,
        "bracket_morphism": morph,
        "annihilator_defect": np.maximum(r1, r2),
    }


def rk4_flow(field: Callable, x0: np.ndarray, t: float, steps: int = 20) -> np.ndarray:
    """Classical fourth-order one-step integration of x' = field(x)."""
    h = t / steps
    x = np.array(x0, dtype=float)
    for _ in range(steps):
        k1 = field(x)
        k2 = field(x + 0.5 * h * k1)
        k3 = field(x + 0.5 * h * k2)
        k4 = field(x + h * k3)
        x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def check_pushforward_well_defined(
    L: DiracStructure,
    act: GroupActionData,
    q: QuotientModel,
    y_points: np.ndarray,
    rng: np.random.Generator,
    tol: float = 1e-5,
    flow_time: float = 0.2,
) -> CheckReport:
    """Move sigma(y) along a random generator combination and compare L_quot."""
    x0 = ad.real_part(q.sigma(y_points))
    w = rng.normal(size=(len(y_points), act.dim))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    field = lambda x: np.einsum("pk,pkm->pm", w, act.values(x))  # noqa: E731
    x1 = rk4_flow(field, x0, flow_time)
    a = pushforward_at(L, act, q, x0)
    b = pushforward_at(L, act, q, x1)
    drift = np.max(np.abs(ad.real_part(q.p(x1)) - y_points), axis=1)
    dist = np.array([subspace_distance(a[i].T, b[i].T) for i in range(len(y_points))])
    return residual_report(
        "pushforward-well-defined",
        dist,
        y_points,
        tol,
        anchor="L_quot independent of the orbit representative",
        max_fibre_drift=float(np.max(drift)),
        flow_time=flow_time,
    )


def backward_image(frame_vals: np.ndarray, di: np.ndarray) -> np.ndarray:
    """Pull a Lagrangian subspace back along an immersion with Jacobian di (P, m, s).

    Returns rows (P, s, 2s) spanning {(V, di^T a) : (di V, a) in L}.
    """
    P, m2 = frame_vals.shape[0], frame_vals.shape[-1]
    m = m2 // 2
    s = di.shape[-1]
    out = np.empty((P, s, 2 * s))
    for i in range(P):
        F = frame_vals[i]  # (m, 2m), rows (X, a)
        # unknowns: frame coefficients c (m) and V (s); condition sum c X = di V
        A = np.hstack([F[:, :m].T, -di[i]])
        ns = null_space(A)
        c, V = ns[:m], ns[m:]
        a = F[:, m:].T @ c
        rows = np.vstack([V, di[i].T @ a])  # (2s, q)
        cols = orth(rows)
        if cols.shape[1] != s:
            raise ConstantRankError(f"backward image has rank {cols.shape[1]}, expected {s}")
        out[i] = cols.T
    return out
