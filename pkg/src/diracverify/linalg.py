"""Small dense linear algebra on batches of frames and subspaces."""

from __future__ import annotations

import numpy as np

from . import ad

RANK_TOL = 1e-8


def numerical_rank(m: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Rank of each matrix in a batch (..., a, b) by singular values > tol."""
    if m.shape[-1] == 0 or m.shape[-2] == 0:
        return np.zeros(m.shape[:-2], dtype=int)
    s = np.linalg.svd(m, compute_uv=False)
    return np.sum(s > tol, axis=-1)


def min_singular_value(m: np.ndarray) -> np.ndarray:
    if m.shape[-1] == 0 or m.shape[-2] == 0:
        return np.zeros(m.shape[:-2])
    return np.linalg.svd(m, compute_uv=False)[..., -1]


def null_space(m: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of ker m for a single matrix."""
    m = np.atleast_2d(m)
    n = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(m)
    rank = int(np.sum(s > tol))
    return vt[rank:].T.copy()


def orth(m: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the column space of a single matrix."""
    m = np.atleast_2d(m)
    if m.shape[1] == 0:
        return np.zeros((m.shape[0], 0))
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    rank = int(np.sum(s > tol))
    return u[:, :rank].copy()


def projector(basis_cols: np.ndarray) -> np.ndarray:
    q = orth(basis_cols)
    return q @ q.T


def subspace_distance(a_cols: np.ndarray, b_cols: np.ndarray) -> float:
    """Frobenius norm of the difference of the orthogonal projectors."""
    return float(np.linalg.norm(projector(a_cols) - projector(b_cols)))


def span_distance(rows: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Euclidean distance from vectors to the span of frame rows, batched.

    rows: (P, k, m) frame vectors; v: (P, m) or (P, q, m).  Least squares via a
    QR factorisation of the frame.
    """
    single = v.ndim == rows.ndim - 1
    if single:
        v = v[:, None, :]
    if rows.shape[-2] == 0:
        dist = np.linalg.norm(v, axis=-1)
    else:
        q, _ = np.linalg.qr(np.swapaxes(rows, -1, -2))  # (P, m, k)
        coeff = np.einsum("pmk,pqm->pqk", q, v)
        dist = np.linalg.norm(v - np.einsum("pmk,pqk->pqm", q, coeff), axis=-1)
    return dist[:, 0] if single else dist


def frame_coefficients(rows: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Least-squares coefficients c with sum_i c_i rows_i ~ v (batched)."""
    single = v.ndim == rows.ndim - 1
    if single:
        v = v[:, None, :]
    g = np.einsum("pkm,plm->pkl", rows, rows)
    rhs = np.einsum("pkm,pqm->pkq", rows, v)
    c = np.swapaxes(np.linalg.solve(g, rhs), -1, -2)  # (P, q, k)
    return c[:, 0] if single else c


def smooth_null_frame(m):
    """Local smooth basis of ker m(x) for a batch of (possibly dual) matrices.

    At the real evaluation point the rank and a reference null basis N0 are
    read off an SVD; the returned basis is (I - R^T (R R^T)^{-1} R) N0 with
    R = W0^T m, which is smooth in x and spans ker m whenever the rank is
    locally constant.  m: (..., d, n) -> (..., n, n - r).
    """
    m0 = ad.real_part(m)
    n = m0.shape[-1]
    ranks = numerical_rank(m0)
    r = int(ranks.reshape(-1)[0]) if ranks.size else 0
    if np.any(ranks != r):
        raise np.linalg.LinAlgError("rank varies across the batch")
    if m0.shape[-2] == 0 or r == 0:
        eye = np.broadcast_to(np.eye(n), m0.shape[:-2] + (n, n))
        return eye
    u, _, vt = np.linalg.svd(m0)
    w0 = u[..., :, :r]  # (..., d, r)
    n0 = np.swapaxes(vt[..., r:, :], -1, -2)  # (..., n, n - r)
    rr = ad.einsum("...dr,...dn->...rn", w0, m)
    gram = ad.einsum("...rn,...sn->...rs", rr, rr)
    rn0 = ad.einsum("...rn,...nk->...rk", rr, n0)
    corr = ad.einsum("...rn,...rk->...nk", rr, ad.solve(gram, rn0))
    return n0 - corr


def smooth_column_frame(v, rank: int):
    """Local smooth basis of the column space of v(x) (..., m, k) with known rank."""
    v0 = ad.real_part(v)
    _, _, vt = np.linalg.svd(v0)
    q0 = np.swapaxes(vt[..., :rank, :], -1, -2)  # (..., k, rank)
    return ad.einsum("...mk,...kr->...mr", v, q0)
