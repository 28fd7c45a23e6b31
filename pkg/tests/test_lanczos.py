import numpy as np
import pytest

from ideoscale.lanczos import ConvergenceError, truncated_svd


def _ops(M):
    return (lambda x: M @ x), (lambda y: M.T @ y)


@pytest.mark.parametrize("shape,k", [((60, 20), 4), ((20, 60), 4), ((300, 40), 10), ((15, 12), 11)])
def test_against_numpy(shape, k):
    M = np.random.default_rng(1).normal(size=shape)
    res = truncated_svd(*_ops(M), shape, k)
    s = np.linalg.svd(M, compute_uv=False)
    np.testing.assert_allclose(res.s, s[:k], rtol=1e-10)
    np.testing.assert_allclose(res.u.T @ res.u, np.eye(k), atol=1e-10)
    np.testing.assert_allclose(M @ res.vt.T, res.u * res.s, atol=1e-9)
    assert np.all(res.residuals <= 1e-10 * res.s[0] * 10)


def test_low_rank_operator():
    rng = np.random.default_rng(2)
    M = rng.normal(size=(50, 3)) @ rng.normal(size=(3, 30))
    res = truncated_svd(*_ops(M), M.shape, 3)
    np.testing.assert_allclose(res.s, np.linalg.svd(M, compute_uv=False)[:3], rtol=1e-10)


def test_argument_checks():
    M = np.eye(5)
    with pytest.raises(ValueError):
        truncated_svd(*_ops(M), M.shape, 5)
    with pytest.raises(ValueError):
        truncated_svd(*_ops(M), M.shape, 0)


def test_nonconvergence_reports_residual():
    M = np.random.default_rng(3).normal(size=(400, 200))
    with pytest.raises(ConvergenceError) as err:
        truncated_svd(*_ops(M), M.shape, 20, tol=1e-14, max_iterations=1, work_size=22)
    assert err.value.residual > 0
