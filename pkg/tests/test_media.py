import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ideoscale.media import (
    ShareRecord,
    aggregate_shares,
    assign_quintiles,
    attach_categories,
    category_distributions,
    normalize_domain,
    profiles_frame,
    quintile_indices,
)
from oracles import quintiles_sort


def _positions(values):
    return pd.DataFrame({"lrgen_19": values}, index=[f"u{i}" for i in range(len(values))])


@pytest.mark.parametrize("raw,expected", [("https://www.Example.com/a/b?x=1", "www.example.com"),
                                          ("lemonde.fr", "lemonde.fr"), ("HTTP://user@site.org:8080/", "site.org")])
def test_normalize_domain(raw, expected):
    assert normalize_domain(raw) == expected


def test_share_record_validation():
    with pytest.raises(ValueError):
        ShareRecord("u0", "a.com", 0)


def test_single_user_domain():
    prof = aggregate_shares([ShareRecord("u0", "a.com")], _positions([3.0]), min_users=1, n_boot=20)
    assert prof[0].mean["lrgen_19"] == 3.0
    assert prof[0].std["lrgen_19"] == 0.0
    assert np.isnan(prof[0].dip["lrgen_19"])


def test_multiplicity_ignored():
    recs = [ShareRecord("u0", "a.com"), ShareRecord("u1", "a.com", 3), ShareRecord("u1", "a.com"),
            ShareRecord("u2", "a.com")]
    prof = aggregate_shares(recs, _positions([2.0, 4.0, 6.0]), min_users=1, n_boot=20)[0]
    assert prof.mean["lrgen_19"] == 4.0
    assert prof.std["lrgen_19"] == pytest.approx(np.sqrt(8 / 3))
    assert prof.user_count == 3 and prof.tweet_count == 6


def test_threshold_and_order():
    recs = [ShareRecord(f"u{i}", "big.com") for i in range(5)] + [ShareRecord(f"u{i}", "small.com") for i in range(2)]
    recs += [ShareRecord(f"u{i}", "alsobig.com") for i in range(5)]
    prof = aggregate_shares(recs, _positions(np.arange(5.0)), min_users=3, n_boot=20)
    assert [p.domain for p in prof] == ["alsobig.com", "big.com"]


def test_unknown_users_dropped():
    recs = [ShareRecord("u0", "a.com"), ShareRecord("ghost", "a.com")]
    prof = aggregate_shares(recs, _positions([1.0]), min_users=1, n_boot=20)
    assert prof[0].user_count == 1


records = st.lists(st.tuples(st.integers(0, 9), st.sampled_from(["a.com", "b.org", "c.net"]), st.integers(1, 5)),
                   min_size=1, max_size=40)


@settings(max_examples=40, deadline=None)
@given(recs=records, dup=st.integers(0, 39))
def test_duplication_and_bounds(recs, dup):
    pos = _positions(np.random.default_rng(0).uniform(0, 10, 10))
    base = [ShareRecord(f"u{u}", d, c) for u, d, c in recs]
    extra = base + [base[dup % len(base)]]
    a = aggregate_shares(base, pos, min_users=1, n_boot=10)
    b = aggregate_shares(extra, pos, min_users=1, n_boot=10)
    for pa, pb in zip(a, b):
        assert pa.mean == pb.mean and pa.std == pb.std and pa.dip == pb.dip
    for p in a:
        users = {f"u{u}" for u, d, _ in recs if d == p.domain}
        vals = pos.loc[sorted(users), "lrgen_19"]
        assert vals.min() - 1e-12 <= p.mean["lrgen_19"] <= vals.max() + 1e-12
        assert p.std["lrgen_19"] >= 0
        assert p.pval.get("lrgen_19") is None or np.isnan(p.pval["lrgen_19"]) or 0 <= p.pval["lrgen_19"] <= 1


def test_domain_independence():
    pos = _positions(np.linspace(0, 10, 10))
    recs = [ShareRecord(f"u{i}", "a.com") for i in range(5)] + [ShareRecord(f"u{i}", "b.com") for i in range(3, 10)]
    full = {p.domain: p for p in aggregate_shares(recs, pos, min_users=1, n_boot=10)}
    only_b = aggregate_shares([r for r in recs if r.domain == "b.com"], pos, min_users=1, n_boot=10)[0]
    assert only_b.mean == full["b.com"].mean and only_b.std == full["b.com"].std


def test_quintiles_distinct_and_tied():
    assert quintile_indices([5, 1, 3, 2, 4]).tolist() == [5, 1, 3, 2, 4]
    assert quintile_indices([2.0] * 7).tolist() == [1] * 7


@pytest.mark.parametrize("seed", range(5))
def test_quintiles_sort_oracle(seed):
    vals = np.round(np.random.default_rng(seed).normal(size=13), 1).tolist()
    assert quintile_indices(vals).tolist() == quintiles_sort(vals)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=50))
def test_quintiles_property(vals):
    q = quintile_indices(vals)
    assert q.tolist() == quintiles_sort(vals)
    assert q.min() >= 1 and q.max() <= 5
    order = np.argsort(vals, kind="stable")
    assert np.all(np.diff(q[order]) >= 0)


def test_categories_ordering():
    pos = _positions(np.r_[np.full(5, 3.0), np.full(5, 7.0)])
    recs = [ShareRecord(f"u{i}", f"left{i % 2}.com") for i in range(5)]
    recs += [ShareRecord(f"u{i}", f"right{i % 2}.com") for i in range(5, 10)]
    prof = aggregate_shares(recs, pos, min_users=1, n_boot=10)
    cats = {"left0.com": "L", "left1.com": "L", "right0.com": "R", "right1.com": "R"}
    dist = category_distributions(prof, cats, "lrgen_19")
    assert dist["L"].mean < dist["R"].mean
    assert dist["L"].count == 2
    single = category_distributions(prof, {"left0.com": "L"}, "lrgen_19")
    assert single["L"].std == 0.0 and single["L"].mean == 3.0
    with pytest.raises(ValueError):
        category_distributions(prof, {}, "lrgen_19")


def test_profiles_frame_layout():
    pos = pd.DataFrame({"a_19": [1.0, 2.0], "b_23": [3.0, 4.0]}, index=["u0", "u1"])
    prof = aggregate_shares([ShareRecord("u0", "x.com"), ShareRecord("u1", "x.com")], pos, min_users=1, n_boot=10)
    attach_categories(prof, {"X.com": "Centre"})
    df = profiles_frame(prof, ["a_19", "b_23"])
    assert list(df.columns) == ["domain", "media_category", "user_count", "tweet_count", "a_19_mean", "b_23_mean",
                                "a_19_std", "b_23_std", "a_19_quantile", "b_23_quantile", "a_19_dip", "b_23_dip",
                                "a_19_pval", "b_23_pval"]
    assert df.loc[0, "media_category"] == "Centre"
    assert len(profiles_frame(prof, [f"d{i}_19" for i in range(16)]).columns) == 84
