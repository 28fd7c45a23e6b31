"""Thick-restart Golub-Kahan-Lanczos bidiagonalization for the top singular triplets.

Only matrix-vector products ``A @ v`` and ``A.T @ u`` are needed, so the
operator may be a sparse matrix plus a low-rank correction that is never
formed. Both Krylov bases are fully reorthogonalized, which is affordable for
the few dozen vectors we keep and removes the ghost-value problems of plain
Lanczos.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (max relative residual {residual:.3e} after {iterations} restarts)")
        self.residual = residual
        self.iterations = iterations


@dataclass
class SvdResult:
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray
    residuals: np.ndarray
    restarts: int
    matvecs: int


def _reorth(w: np.ndarray, basis: np.ndarray) -> np.ndarray:
    if basis.shape[1] == 0:
        return w
    # two passes of classical Gram-Schmidt ("twice is enough")
    w = w - basis @ (basis.T @ w)
    w = w - basis @ (basis.T @ w)
    return w


def _fresh_direction(rng, basis: np.ndarray, dim: int) -> np.ndarray | None:
    if basis.shape[1] >= dim:
        return None
    for _ in range(5):
        w = _reorth(rng.standard_normal(dim), basis)
        nrm = np.linalg.norm(w)
        if nrm > 1e-8:
            return w / nrm
    return None


def truncated_svd(
    matvec: Callable[[np.ndarray], np.ndarray],
    rmatvec: Callable[[np.ndarray], np.ndarray],
    shape: tuple[int, int],
    k: int,
    tol: float = 1e-10,
    max_iterations: int = 1000,
    seed: int = 0,
    work_size: int | None = None,
) -> SvdResult:
    """Largest ``k`` singular triplets of an implicit ``shape`` operator.

    Convergence: every wanted Ritz triplet has residual
    ``||A^T u - s v|| <= tol * s_max`` (the other residual is zero by construction).
    ``max_iterations`` bounds the number of restarts.
    """
    m, n = shape
    small = min(m, n)
    if not 1 <= k < small:
        raise ValueError(f"k={k} outside [1, {small - 1}]")
    if work_size is None:
        work_size = max(2 * k + 10, k + 20)
    mb = int(min(max(work_size, k + 1), small))
    keep = min(k + max(3, (mb - k) // 2), mb - 1)

    rng = np.random.default_rng(seed)
    U = np.zeros((m, mb))
    V = np.zeros((n, mb + 1))
    B = np.zeros((mb, mb))
    v0 = rng.standard_normal(n)
    V[:, 0] = v0 / np.linalg.norm(v0)

    start = 0
    matvecs = 0
    norm_est = 0.0
    residuals = np.full(k, np.inf)
    for restart in range(max_iterations + 1):
        for j in range(start, mb):
            p = matvec(V[:, j])
            matvecs += 1
            if j > 0:
                p = p - U[:, :j] @ B[:j, j]
            p = _reorth(p, U[:, :j])
            alpha = np.linalg.norm(p)
            norm_est = max(norm_est, alpha)
            if alpha <= 1e-13 * max(norm_est, 1.0):
                alpha = 0.0
                p = _fresh_direction(rng, U[:, :j], m)
                if p is None:
                    mb_eff = j
                    break
            else:
                p = p / alpha
            U[:, j] = p
            B[j, j] = alpha

            r = rmatvec(U[:, j]) - alpha * V[:, j]
            matvecs += 1
            r = _reorth(r, V[:, : j + 1])
            beta = np.linalg.norm(r)
            norm_est = max(norm_est, beta)
            if beta <= 1e-13 * max(norm_est, 1.0):
                beta = 0.0
                nxt = _fresh_direction(rng, V[:, : j + 1], n)
                V[:, j + 1] = 0.0 if nxt is None else nxt
            else:
                V[:, j + 1] = r / beta
            if j + 1 < mb:
                B[j, j + 1] = beta
        else:
            mb_eff = mb

        # only reached via break when both bases span their whole spaces
        Bm = B[:mb_eff, :mb_eff]
        X, s, Yt = np.linalg.svd(Bm)
        last_beta = beta if mb_eff == mb else 0.0
        res = np.abs(last_beta * X[mb_eff - 1, :])
        scale = max(s[0], np.finfo(float).tiny)
        residuals = res[:k] / scale
        if mb_eff < k:
            raise ValueError(f"operator rank {mb_eff} is below k={k}")
        if np.all(residuals <= tol) or mb_eff < mb:
            u = U[:, :mb_eff] @ X[:, :k]
            v = V[:, :mb_eff] @ Yt[:k].T
            return SvdResult(u, s[:k], v.T, residuals, restart, matvecs)
        if restart == max_iterations:
            break

        # thick restart: keep the leading Ritz vectors plus the residual direction
        kk = keep
        Vk = V[:, :mb] @ Yt[:kk].T
        Uk = U[:, :mb] @ X[:, :kk]
        v_next = V[:, mb].copy()
        rho = last_beta * X[mb - 1, :kk]
        U[:] = 0.0
        V[:] = 0.0
        B[:] = 0.0
        U[:, :kk] = Uk
        V[:, :kk] = Vk
        V[:, kk] = v_next
        B[:kk, :kk] = np.diag(s[:kk])
        B[:kk, kk] = rho
        start = kk

    raise ConvergenceError("Lanczos bidiagonalization did not converge", float(np.max(residuals)), max_iterations)
