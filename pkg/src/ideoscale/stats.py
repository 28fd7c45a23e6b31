"""Statistics kernels used by the calibration, media and validation stages."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.stats import rankdata

from . import _kernels

WEIGHT_CAP = 30.0
_BOOT_CHUNK = 64


def pearson(x, y) -> float:
    """Sample Pearson correlation; raises on length mismatch or zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-D vectors of equal length")
    if x.size < 2:
        raise ValueError("pearson needs at least two points")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("zero variance")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def clopper_pearson(k: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    """Exact two-sided binomial interval for ``k`` successes out of ``n``."""
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"invalid counts k={k}, n={n}")
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    lo = 0.0 if k == 0 else float(special.betaincinv(k, n - k + 1, alpha / 2))
    hi = 1.0 if k == n else float(special.betaincinv(k + 1, n - k, 1 - alpha / 2))
    return lo, hi


@dataclass(frozen=True)
class DipResult:
    dip: float
    p_value: float
    n_boot: int
    seed: int
    n: int


def dip_statistic(samples) -> float:
    x = np.asarray(samples, dtype=np.float64)
    x = np.sort(x[np.isfinite(x)])
    if x.size < 2:
        raise ValueError("dip statistic needs at least two finite samples")
    return float(_kernels.dip_sorted(x))


def _null_chunk(n: int, seed: int, chunk: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, n, chunk]))
    rows = np.sort(rng.random((size, n)), axis=1)
    return _kernels.dip_batch(rows)


@lru_cache(maxsize=512)
def _null_dips(n: int, n_boot: int, seed: int, threads: int) -> np.ndarray:
    sizes = [min(_BOOT_CHUNK, n_boot - s) for s in range(0, n_boot, _BOOT_CHUNK)]
    jobs = [(n, seed, c, size) for c, size in enumerate(sizes)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda a: _null_chunk(*a), jobs))
    else:
        parts = [_null_chunk(*a) for a in jobs]
    out = np.concatenate(parts)
    out.setflags(write=False)
    return out


def null_dip_distribution(n: int, n_boot: int = 2000, seed: int = 0, threads: int = 1) -> np.ndarray:
    """Dip statistics of ``n_boot`` uniform samples of size ``n``.

    Replicates come in fixed-size chunks, each with its own seed stream derived
    from ``(seed, n, chunk)``, so the result does not depend on ``threads``.
    """
    return _null_dips(int(n), int(n_boot), int(seed), max(1, int(threads)))


def dip_test(samples, n_boot: int = 2000, seed: int = 0, threads: int = 1) -> DipResult:
    """Hartigan's dip test against the uniform null (Monte Carlo p-value)."""
    x = np.asarray(samples, dtype=np.float64)
    x = np.sort(x[np.isfinite(x)])
    if x.size < 2:
        raise ValueError("dip test needs at least two finite samples")
    if n_boot < 1:
        raise ValueError("n_boot must be positive")
    dip = float(_kernels.dip_sorted(x))
    null = null_dip_distribution(x.size, n_boot, seed, threads)
    p = float(np.count_nonzero(null >= dip)) / n_boot
    return DipResult(dip=dip, p_value=p, n_boot=n_boot, seed=seed, n=int(x.size))


@dataclass(frozen=True)
class LogisticFit:
    weight: float
    intercept: float
    converged: bool
    iterations: int

    @property
    def cutoff(self) -> float:
        if self.weight == 0.0:
            return math.nan
        return -self.intercept / self.weight

    def decision(self, positions) -> np.ndarray:
        return self.intercept + self.weight * np.asarray(positions, dtype=np.float64)

    def predict_proba(self, positions) -> np.ndarray:
        return special.expit(self.decision(positions))


def balanced_sample_weights(labels) -> np.ndarray:
    y = np.asarray(labels).astype(bool)
    n = y.size
    n1 = int(y.sum())
    n0 = n - n1
    return np.where(y, n / (2.0 * n1), n / (2.0 * n0))


def weighted_log_likelihood(intercept: float, weight: float, x, y, sw) -> float:
    eta = intercept + weight * np.asarray(x, dtype=np.float64)
    # log(1 + e^eta) computed stably
    return float(np.sum(sw * (y * eta - np.logaddexp(0.0, eta))))


def weighted_gradient(intercept: float, weight: float, x, y, sw) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    resid = sw * (y - special.expit(intercept + weight * x))
    return np.array([resid.sum(), resid @ x])


def _fit_intercept(weight, x, y, sw, b0, max_iter=100):
    b = b0
    for it in range(1, max_iter + 1):
        p = special.expit(b + weight * x)
        g = np.sum(sw * (y - p))
        h = np.sum(sw * p * (1 - p))
        if h <= 0:
            break
        step = g / h
        ll = weighted_log_likelihood(b, weight, x, y, sw)
        t = 1.0
        while t > 1e-10 and weighted_log_likelihood(b + t * step, weight, x, y, sw) < ll:
            t *= 0.5
        b += t * step
        if abs(t * step) < 1e-8:
            return b, it
    return b, max_iter


def balanced_logistic_fit(positions, labels, max_iter: int = 100, tol: float = 1e-8) -> LogisticFit:
    """One-feature logistic regression with class-balanced sample weights.

    Damped Newton (IRLS). Each sample weighs ``n_total / (2 * n_class)``.
    Under (quasi-)complete separation the slope is capped at ``WEIGHT_CAP``
    per position unit, the intercept is refit for that slope, and the fit is
    flagged ``converged=False``.
    """
    x = np.asarray(positions, dtype=np.float64)
    y = np.asarray(labels).astype(np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("positions and labels must be 1-D of equal length")
    if not np.all(np.isfinite(x)):
        raise ValueError("positions must be finite")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary")
    if y.sum() == 0 or y.sum() == y.size:
        raise ValueError("both classes must be present")
    sw = balanced_sample_weights(y)

    # in one dimension (quasi-)complete separation is an order condition
    x0, x1 = x[y == 0], x[y == 1]
    if np.ptp(x) > 0 and (x0.max() <= x1.min() or x1.max() <= x0.min()):
        w = WEIGHT_CAP if x0.max() <= x1.min() else -WEIGHT_CAP
        b0 = -w * (0.5 * (x0.max() + x1.min()) if w > 0 else 0.5 * (x1.max() + x0.min()))
        b, it = _fit_intercept(w, x, y, sw, b0)
        return LogisticFit(weight=w, intercept=float(b), converged=False, iterations=it)

    theta = np.zeros(2)
    ll = weighted_log_likelihood(theta[0], theta[1], x, y, sw)
    for it in range(1, max_iter + 1):
        eta = theta[0] + theta[1] * x
        p = special.expit(eta)
        resid = sw * (y - p)
        g = np.array([resid.sum(), resid @ x])
        h = sw * p * (1 - p)
        H = np.array([[h.sum(), h @ x], [h @ x, h @ (x * x)]])
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        t = 1.0
        while True:
            cand = theta + t * step
            cand_ll = weighted_log_likelihood(cand[0], cand[1], x, y, sw)
            if cand_ll >= ll or t < 1e-10:
                break
            t *= 0.5
        theta, ll = cand, cand_ll
        if abs(theta[1]) > WEIGHT_CAP:
            w = math.copysign(WEIGHT_CAP, theta[1])
            b, extra = _fit_intercept(w, x, y, sw, theta[0])
            return LogisticFit(weight=w, intercept=float(b), converged=False, iterations=it + extra)
        if np.max(np.abs(t * step)) < tol:
            return LogisticFit(weight=float(theta[1]), intercept=float(theta[0]), converged=True, iterations=it)
    return LogisticFit(weight=float(theta[1]), intercept=float(theta[0]), converged=False, iterations=max_iter)


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC with mid-ranks for ties; label 1 is the positive class."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    n1 = int(y.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("roc_auc needs both classes")
    ranks = rankdata(s)  # average ranks
    u = ranks[y].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


@dataclass(frozen=True)
class BinaryMetrics:
    roc_auc: float
    f1_a_as_success: float
    f1_b_as_success: float
    f1_avg: float
    precision: float
    recall: float
    precision_b: float
    recall_b: float
    n_a: int
    n_b: int


def _prf(pred: np.ndarray, truth: np.ndarray) -> tuple[float, float, float]:
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
    return precision, recall, f1


def classification_metrics(fit: LogisticFit, positions, labels) -> BinaryMetrics:
    """Training-set metrics of a fitted model; label 1 is class B, label 0 class A.

    Predictions threshold the probability at 0.5. AUC is ranked on the
    decision function (monotone in the probability, but free of the ties
    that saturated probabilities create). ``precision``/``recall`` take class
    A as the success, the ``_b`` variants class B.
    """
    y = np.asarray(labels).astype(bool)
    eta = fit.decision(positions)
    pred_b = eta > 0
    p_a, r_a, f1_a = _prf(~pred_b, ~y)
    p_b, r_b, f1_b = _prf(pred_b, y)
    return BinaryMetrics(
        roc_auc=roc_auc(eta, y),
        f1_a_as_success=f1_a,
        f1_b_as_success=f1_b,
        f1_avg=(f1_a + f1_b) / 2,
        precision=p_a,
        recall=r_a,
        precision_b=p_b,
        recall_b=r_b,
        n_a=int(np.sum(~y)),
        n_b=int(np.sum(y)),
    )
