"""Independent reference implementations; deliberately naive and slow."""

import itertools
import math

import numpy as np


def dense_ca(A: np.ndarray, k: int):
    """CA through a dense SVD of the explicitly formed standardized residual matrix."""
    A = np.asarray(A, dtype=float)
    P = A / A.sum()
    r = P.sum(axis=1)
    c = P.sum(axis=0)
    S = np.diag(r ** -0.5) @ (P - np.outer(r, c)) @ np.diag(c ** -0.5)
    U, s, Vt = np.linalg.svd(S, full_matrices=False)
    F = np.diag(r ** -0.5) @ U[:, :k] * s[:k]
    G = np.diag(c ** -0.5) @ Vt[:k].T * s[:k]
    return F, G, s[:k]


def align_signs(ref: np.ndarray, other: np.ndarray) -> np.ndarray:
    """Flip columns of ``other`` to best match ``ref``."""
    signs = np.sign(np.sum(ref * other, axis=0))
    signs[signs == 0] = 1
    return other * signs


def ridge_augmented(X: np.ndarray, y: np.ndarray, alpha: float):
    """Ridge with an unpenalized intercept via the augmented normal equations."""
    n, k = X.shape
    Z = np.hstack([np.ones((n, 1)), X])
    pen = alpha * np.eye(k + 1)
    pen[0, 0] = 0.0
    theta = np.linalg.solve(Z.T @ Z + pen, Z.T @ y)
    return theta[1:], theta[0]


def _binom_tail_ge(k, n, p):
    return sum(math.comb(n, i) * p ** i * (1 - p) ** (n - i) for i in range(k, n + 1))


def _binom_cdf_le(k, n, p):
    return sum(math.comb(n, i) * p ** i * (1 - p) ** (n - i) for i in range(0, k + 1))


def _bisect(f, target, increasing, lo=0.0, hi=1.0, iters=200):
    for _ in range(iters):
        mid = (lo + hi) / 2
        v = f(mid)
        if (v < target) == increasing:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def clopper_pearson_bisect(k, n, alpha=0.05):
    """Exact interval by bisection on binomial tail sums."""
    lo = 0.0 if k == 0 else _bisect(lambda p: _binom_tail_ge(k, n, p), alpha / 2, increasing=True)
    hi = 1.0 if k == n else _bisect(lambda p: _binom_cdf_le(k, n, p), alpha / 2, increasing=False)
    return lo, hi


def auc_pairs(scores, labels):
    """Fraction of (positive, negative) pairs ranked correctly, ties counting half."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = 0.0
    for a, b in itertools.product(pos, neg):
        total += 1.0 if a > b else 0.5 if a == b else 0.0
    return total / (len(pos) * len(neg))


def weighted_ll(b, w, x, y):
    n1 = y.sum()
    n0 = y.size - n1
    sw = np.where(y == 1, y.size / (2 * n1), y.size / (2 * n0))
    eta = b + w * x
    return np.sum(sw * (y * eta - np.logaddexp(0, eta)))


def logistic_grid(x, y, center=(0.0, 0.0), half=20.0, levels=12, pts=41):
    """Zooming grid search for the maximizer of the class-balanced log-likelihood."""
    cb, cw = center
    for _ in range(levels):
        bs = np.linspace(cb - half, cb + half, pts)
        ws = np.linspace(cw - half, cw + half, pts)
        B, W = np.meshgrid(bs, ws, indexing="ij")
        eta = B[..., None] + W[..., None] * x
        n1 = y.sum()
        n0 = y.size - n1
        sw = np.where(y == 1, y.size / (2 * n1), y.size / (2 * n0))
        ll = np.sum(sw * (y * eta - np.logaddexp(0, eta)), axis=-1)
        i, j = np.unravel_index(np.argmax(ll), ll.shape)
        cb, cw = bs[i], ws[j]
        half /= 4
    return cb, cw


def filter_bruteforce(edges, min_out, counts=None, min_count=None):
    """Retained (followers, elites) sets by direct counting."""
    followers = sorted({f for f, _ in edges})
    keep_f = set()
    for f in followers:
        deg = len({e for g, e in edges if g == f})
        if deg >= min_out and (min_count is None or counts[f] >= min_count):
            keep_f.add(f)
    keep_e = {e for f, e in edges if f in keep_f}
    return keep_f, keep_e


def quintiles_sort(values):
    """Bucket = 1 + number of 20% breakpoints at or below the share of strictly smaller values."""
    n = len(values)
    order = sorted(values)
    out = []
    for v in values:
        smaller = order.index(v)  # first position of v in sorted order
        bucket = 1
        for b in range(1, 5):
            if smaller * 5 >= b * n:
                bucket = b + 1
        out.append(bucket)
    return out
