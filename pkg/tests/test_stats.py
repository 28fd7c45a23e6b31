import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.special import expit

from ideoscale.stats import (
    WEIGHT_CAP,
    balanced_logistic_fit,
    balanced_sample_weights,
    classification_metrics,
    clopper_pearson,
    dip_statistic,
    dip_test,
    null_dip_distribution,
    pearson,
    roc_auc,
    weighted_gradient,
    weighted_log_likelihood,
)
from oracles import auc_pairs, clopper_pearson_bisect, logistic_grid

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


# ------------------------------------------------------------------ pearson

def test_pearson_affine():
    x = np.arange(10.0)
    assert pearson(x, 2 * x + 1) == 1.0
    assert pearson(x, -x) == -1.0


def test_pearson_direct_formula():
    x = np.array([0.3, 1.7, 2.2, -0.4, 5.1, 3.3, 0.0, 2.9, 1.1, -2.5])
    y = np.array([1.0, 0.2, 2.5, -1.1, 4.4, 2.0, 0.7, 3.9, 0.1, -0.8])
    n = len(x)
    sx, sy = x.sum(), y.sum()
    r = (n * (x * y).sum() - sx * sy) / np.sqrt((n * (x * x).sum() - sx ** 2) * (n * (y * y).sum() - sy ** 2))
    assert pearson(x, y) == pytest.approx(r, abs=1e-12)


@pytest.mark.parametrize("x,y", [([1, 1, 1], [1, 2, 3]), ([1], [2]), ([1, 2], [1, 2, 3])])
def test_pearson_errors(x, y):
    with pytest.raises(ValueError):
        pearson(x, y)


# ----------------------------------------------------------- clopper-pearson

def test_cp_boundaries():
    assert clopper_pearson(0, 10)[0] == 0.0
    assert clopper_pearson(10, 10)[1] == 1.0


@pytest.mark.parametrize("k,n", [(5, 10), (1, 30), (29, 30), (0, 7), (50, 100)])
def test_cp_oracle(k, n):
    lo, hi = clopper_pearson(k, n)
    olo, ohi = clopper_pearson_bisect(k, n)
    assert abs(lo - olo) < 1e-9 and abs(hi - ohi) < 1e-9


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 300), data=st.data(), a1=st.floats(0.01, 0.5), a2=st.floats(0.01, 0.5))
def test_cp_properties(n, data, a1, a2):
    k = data.draw(st.integers(0, n))
    lo, hi = clopper_pearson(k, n)
    assert lo <= k / n <= hi
    small, big = sorted([a1, a2])
    lo_s, hi_s = clopper_pearson(k, n, small)
    lo_b, hi_b = clopper_pearson(k, n, big)
    assert lo_s <= lo_b + 1e-15 and hi_s >= hi_b - 1e-15


@pytest.mark.parametrize("k,n,alpha", [(-1, 5, 0.05), (6, 5, 0.05), (0, 0, 0.05), (1, 5, 0.0)])
def test_cp_errors(k, n, alpha):
    with pytest.raises(ValueError):
        clopper_pearson(k, n, alpha)


# ----------------------------------------------------------------------- dip

def test_dip_two_points():
    assert dip_statistic([0.0, 1.0]) == 0.25


@pytest.mark.parametrize("n", [3, 10, 100, 1000])
def test_dip_grid(n):
    assert dip_statistic(np.linspace(-3, 7, n)) == pytest.approx(1 / (2 * n), abs=1e-12)


def test_dip_reference_package():
    diptest = pytest.importorskip("diptest")
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(5, 400))
        x = np.concatenate([rng.normal(0, 1, n // 2), rng.normal(rng.uniform(0, 6), 1, n - n // 2)])
        assert dip_statistic(x) == pytest.approx(diptest.dipstat(x), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(xs=st.lists(finite, min_size=2, max_size=60, unique=True), a=st.floats(0.01, 100), b=finite)
def test_dip_affine_invariant_and_bounded(xs, a, b):
    x = np.asarray(xs)
    d = dip_statistic(x)
    assert 1 / (2 * len(x)) - 1e-12 <= d <= 0.25 + 1e-12
    y = a * x + b
    assume(len(np.unique(y)) == len(x))
    assert dip_statistic(y) == pytest.approx(d, abs=1e-9)


def test_dip_ignores_nonfinite():
    assert dip_statistic([0.0, np.nan, 1.0, np.inf]) == 0.25
    with pytest.raises(ValueError):
        dip_statistic([1.0, np.nan])


def test_dip_bimodal_significant():
    rng = np.random.default_rng(0)
    x = np.concatenate([rng.normal(0, 0.1, 500), rng.normal(10, 0.1, 500)])
    res = dip_test(x, n_boot=500, seed=1)
    assert res.p_value < 0.01
    assert res.n == 1000 and res.n_boot == 500


def test_dip_uniform_not_significant():
    x = np.random.default_rng(4).random(300)
    assert dip_test(x, n_boot=300, seed=2).p_value > 0.05


def test_null_independent_of_threads():
    a = null_dip_distribution(50, 300, seed=9, threads=1)
    b = null_dip_distribution(50, 300, seed=9, threads=4)
    assert a.tobytes() == b.tobytes()
    assert len(a) == 300


def test_p_value_resolution():
    res = dip_test(np.linspace(0, 1, 20), n_boot=40, seed=0)
    assert (res.p_value * 40) == int(res.p_value * 40)
    assert 0 <= res.p_value <= 1


# ------------------------------------------------------------------- roc auc

def test_auc_ties_and_order():
    assert roc_auc([1, 1, 1, 1], [0, 1, 0, 1]) == 0.5
    assert roc_auc([0, 1, 2, 3], [0, 0, 1, 1]) == 1.0


def test_auc_single_class():
    with pytest.raises(ValueError):
        roc_auc([1, 2], [1, 1])


@pytest.mark.parametrize("seed", range(5))
def test_auc_pair_oracle(seed):
    rng = np.random.default_rng(seed)
    s = rng.integers(0, 5, 20).astype(float)
    y = rng.integers(0, 2, 20)
    y[:2] = [0, 1]
    assert roc_auc(s, y) == auc_pairs(s, y)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.booleans()), min_size=2, max_size=40))
def test_auc_complement(pairs):
    s = np.array([p[0] for p in pairs], float)
    y = np.array([p[1] for p in pairs])
    assume(0 < y.sum() < len(y))
    assert roc_auc(s, y) + roc_auc(s, ~y) == 1.0


# ------------------------------------------------------------------ logistic

def test_logistic_no_signal():
    x = np.repeat([1.0, 2.0, 3.0], 10)
    y = np.tile([0, 1], 15)
    fit = balanced_logistic_fit(x, y)
    assert abs(fit.weight) < 1e-8
    np.testing.assert_allclose(fit.predict_proba(x), 0.5, atol=1e-8)


def test_logistic_all_tied():
    fit = balanced_logistic_fit(np.full(6, 4.0), np.array([0, 0, 0, 1, 1, 0]))
    assert fit.weight == 0.0 and fit.converged


def test_logistic_quasi_separation():
    fit = balanced_logistic_fit(np.array([1.0, 2.0, 2.0, 3.0]), np.array([0, 0, 1, 1]))
    assert not fit.converged and fit.weight == WEIGHT_CAP


def test_logistic_separation():
    x = np.array([0.0, 1.0, 9.0, 10.0])
    y = np.array([0, 0, 1, 1])
    fit = balanced_logistic_fit(x, y)
    assert not fit.converged
    assert fit.weight == WEIGHT_CAP
    assert 1 < fit.cutoff < 9
    m = classification_metrics(fit, x, y)
    assert m.roc_auc == 1.0
    assert m.f1_a_as_success == m.f1_b_as_success == m.f1_avg == 1.0
    assert m.precision == m.recall == 1.0


def _imbalanced(seed=0):
    rng = np.random.default_rng(seed)
    x = np.concatenate([rng.normal(3, 1.5, 30), rng.normal(6, 1.5, 10)])
    y = np.concatenate([np.zeros(30), np.ones(10)])
    return x, y


def test_logistic_grid_oracle():
    x, y = _imbalanced()
    fit = balanced_logistic_fit(x, y)
    assert fit.converged
    b, w = logistic_grid(x, y)
    assert abs(fit.intercept - b) < 1e-3 and abs(fit.weight - w) < 1e-3


def test_logistic_gradient_zero_at_optimum():
    x, y = _imbalanced(1)
    fit = balanced_logistic_fit(x, y)
    g = weighted_gradient(fit.intercept, fit.weight, x, y, balanced_sample_weights(y))
    assert np.linalg.norm(g) < 1e-6


@pytest.mark.parametrize("point", [(0.3, -0.2), (-1.0, 0.5), (2.0, 0.05)])
def test_gradient_matches_finite_differences(point):
    x, y = _imbalanced(2)
    sw = balanced_sample_weights(y)
    g = weighted_gradient(*point, x, y, sw)
    h = 1e-6
    fd = np.array([
        (weighted_log_likelihood(point[0] + h, point[1], x, y, sw)
         - weighted_log_likelihood(point[0] - h, point[1], x, y, sw)) / (2 * h),
        (weighted_log_likelihood(point[0], point[1] + h, x, y, sw)
         - weighted_log_likelihood(point[0], point[1] - h, x, y, sw)) / (2 * h),
    ])
    np.testing.assert_allclose(g, fd, rtol=1e-5)


def test_balanced_weights_sum():
    w = balanced_sample_weights(np.array([0, 0, 0, 1]))
    assert w[:3].sum() == pytest.approx(w[3:].sum())
    assert w.sum() == pytest.approx(4)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_logistic_negation(seed):
    x, y = _imbalanced(seed)
    a = balanced_logistic_fit(x, y)
    b = balanced_logistic_fit(-x, y)
    assert b.weight == pytest.approx(-a.weight, rel=1e-6, abs=1e-9)
    assert b.cutoff == pytest.approx(-a.cutoff, rel=1e-6, abs=1e-9)
    ma, mb = classification_metrics(a, x, y), classification_metrics(b, -x, y)
    assert ma.roc_auc == pytest.approx(mb.roc_auc)
    assert ma.f1_avg == pytest.approx(mb.f1_avg)


@pytest.mark.parametrize("x,y", [([0.0, 1.0], [1, 1]), ([np.nan, 1.0], [0, 1]), ([0.0, 1.0], [0, 2])])
def test_logistic_errors(x, y):
    with pytest.raises(ValueError):
        balanced_logistic_fit(np.array(x), np.array(y))


def test_metrics_hand_count():
    x = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
    y = np.array([0, 0, 1, 0, 1, 1])
    from ideoscale.stats import LogisticFit
    fit = LogisticFit(weight=1.0, intercept=-2.5, converged=True, iterations=1)  # cutoff 2.5
    m = classification_metrics(fit, x, y)
    # predicted B: 3, 4, 5 -> B tp=2 fp=1 fn=1; A tp=2 fp=1 fn=1
    assert m.precision_b == pytest.approx(2 / 3) and m.recall_b == pytest.approx(2 / 3)
    assert m.precision == pytest.approx(2 / 3) and m.recall == pytest.approx(2 / 3)
    assert m.f1_avg == pytest.approx(2 / 3)
    assert m.roc_auc == pytest.approx(auc_pairs(x, y))
    assert (m.n_a, m.n_b) == (3, 3)


def test_auc_uses_decision_not_saturated_probability():
    x = np.array([100.0, 101.0, 102.0, 103.0])
    y = np.array([0, 0, 1, 1])
    from ideoscale.stats import LogisticFit
    fit = LogisticFit(weight=30.0, intercept=-2950.0, converged=False, iterations=1)
    assert np.all(expit(fit.decision(x)) == 1.0)
    assert classification_metrics(fit, x, y).roc_auc == 1.0
