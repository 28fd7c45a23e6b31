import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ideoscale.model import (
    BipartiteNetwork,
    EntityRecord,
    ParseError,
    PseudoIdMap,
    compute_activity,
    degree_summary,
    filter_network,
    ingest_edges,
    read_edges_csv,
)
from oracles import filter_bruteforce

edge_lists = st.lists(
    st.tuples(st.sampled_from([f"u{i}" for i in range(8)]), st.sampled_from([f"m{j}" for j in range(5)])),
    max_size=40,
)


def test_empty_stream():
    net = ingest_edges([])
    assert net.edge_count == 0
    assert net.n_followers == 0 and net.n_elites == 0


def test_duplicate_edges_collapse():
    net = ingest_edges([("u1", "m1"), ("u1", "m1")])
    assert net.edge_count == 1


def test_first_seen_order():
    net = ingest_edges([("b", "y"), ("a", "x"), ("b", "x")])
    assert net.follower_ids == ("b", "a")
    assert net.elite_ids == ("y", "x")


@pytest.mark.parametrize("record", [("u1",), ("u1", "m1", "x"), ("", "m1"), ("u1", "  ")])
def test_malformed_record_reports_line(record):
    with pytest.raises(ParseError) as err:
        ingest_edges([("u0", "m0"), record])
    assert err.value.line == 2


def test_csv_line_numbers(tmp_path):
    p = tmp_path / "edges.csv"
    p.write_text("follower_id,elite_id\nu1,m1\nu2\n")
    with pytest.raises(ParseError) as err:
        read_edges_csv(p)
    assert err.value.line == 3


def test_csv_header_checked(tmp_path):
    p = tmp_path / "edges.csv"
    p.write_text("a,b\nu1,m1\n")
    with pytest.raises(ParseError):
        read_edges_csv(p)


def test_follower_below_threshold_dropped():
    net = ingest_edges([("u1", "m1"), ("u1", "m2"), ("u2", "m1"), ("u2", "m2"), ("u2", "m3")])
    out = filter_network(net, 3)
    assert out.follower_ids == ("u2",)
    assert out.edge_count == 3


def test_elites_without_followers_pruned():
    net = ingest_edges([("u1", "m1"), ("u1", "m2"), ("u1", "m3"), ("u2", "m4")])
    out = filter_network(net, 3)
    assert set(out.elite_ids) == {"m1", "m2", "m3"}


def test_toy_instance_matches_bruteforce():
    edges = [("f1", "e1"), ("f1", "e2"), ("f1", "e3"), ("f2", "e1"), ("f2", "e4"), ("f3", "e1"),
             ("f3", "e2"), ("f3", "e4"), ("f4", "e3"), ("f5", "e1"), ("f5", "e2"), ("f5", "e3"),
             ("f5", "e4"), ("f6", "e2"), ("f6", "e3")]
    out = filter_network(ingest_edges(edges), 3)
    keep_f, keep_e = filter_bruteforce(edges, 3)
    assert set(out.follower_ids) == keep_f
    assert set(out.elite_ids) == keep_e


@settings(max_examples=60, deadline=None)
@given(edges=edge_lists, k=st.integers(1, 4), cut=st.one_of(st.none(), st.integers(0, 60)))
def test_filter_matches_bruteforce(edges, k, cut):
    counts = {f"u{i}": 10 * i for i in range(8)}
    net = ingest_edges(edges)
    out = filter_network(net, k, cut, counts if cut is not None else None)
    keep_f, keep_e = filter_bruteforce(set(edges), k, counts, cut)
    assert set(out.follower_ids) == keep_f
    assert set(out.elite_ids) == keep_e
    assert set(out.edge_pairs()) == {(f, e) for f, e in set(edges) if f in keep_f}
    if out.edge_count:
        assert out.out_degrees().min() >= k
        assert out.in_degrees().min() >= 1


@settings(max_examples=60, deadline=None)
@given(edges=edge_lists, k=st.integers(1, 4))
def test_filter_idempotent(edges, k):
    once = filter_network(ingest_edges(edges), k)
    twice = filter_network(once, k)
    assert once.follower_ids == twice.follower_ids
    assert once.elite_ids == twice.elite_ids
    assert set(once.edge_pairs()) == set(twice.edge_pairs())


@settings(max_examples=40, deadline=None)
@given(edges=edge_lists)
def test_min_one_keeps_everything_with_edges(edges):
    net = ingest_edges(edges)
    out = filter_network(net, 1)
    assert out.follower_ids == net.follower_ids
    assert out.edge_count == net.edge_count


def test_min_followers_requires_counts():
    net = ingest_edges([("u1", "m1")])
    with pytest.raises(ValueError):
        filter_network(net, 1, 25)
    with pytest.raises(KeyError):
        filter_network(net, 1, 25, {})


def test_degree_summary_complete_2x2():
    net = ingest_edges([("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")])
    assert degree_summary(net) == {"mean_elite_in_degree": 2.0, "mean_follower_out_degree": 2.0}


def test_degree_summary_recount(rng):
    A = rng.random((20, 5)) < 0.4
    A[:, 0] = True
    edges = [(f"u{i}", f"m{j}") for i, j in zip(*np.nonzero(A))]
    net = ingest_edges(edges)
    s = degree_summary(net)
    assert s["mean_elite_in_degree"] == pytest.approx(A.sum(axis=0).mean())
    assert s["mean_follower_out_degree"] == pytest.approx(A.sum(axis=1).mean())
    ins = {f"m{j}": A[:, j].sum() for j in range(5)}
    assert dict(zip(net.elite_ids, net.in_degrees().tolist())) == ins


def test_degree_summary_empty():
    with pytest.raises(ValueError):
        degree_summary(ingest_edges([]))


def test_adjacency_shape_and_sum(rng):
    net = ingest_edges([("a", "x"), ("b", "x"), ("b", "y")])
    A = net.adjacency().toarray()
    assert A.shape == (2, 2)
    assert A.sum() == net.edge_count


def test_network_rejects_duplicates():
    with pytest.raises(ValueError):
        BipartiteNetwork(("a",), ("x",), np.array([0, 0]), np.array([0, 0]))


@pytest.mark.parametrize("posts,days,expected", [(0, 10, 0.0), (100, 50, 2.0), (3650, 1000, 3.65)])
def test_activity(posts, days, expected):
    start = dt.date(2020, 1, 1)
    rec = compute_activity(posts, start, start + dt.timedelta(days=days), 5, 7)
    assert rec.mean_tweets_per_day == expected


def test_activity_truncates_partial_days():
    rec = compute_activity(10, "2020-01-01T23:00:00", "2020-01-03T01:00:00", 0, 0)
    assert rec.mean_tweets_per_day == 5.0


@pytest.mark.parametrize("end", ["2020-01-01", "2019-12-31"])
def test_activity_nonpositive_span(end):
    with pytest.raises(ValueError):
        compute_activity(1, "2020-01-01", end, 0, 0)


def test_entity_record_rules():
    EntityRecord("p1", "elite", "Jane Doe", "RE")
    EntityRecord("p2", "follower")
    with pytest.raises(ValueError):
        EntityRecord("p3", "elite")
    with pytest.raises(ValueError):
        EntityRecord("p4", "follower", name="x")


def test_pseudo_ids_bijective_and_seeded(tmp_path):
    raw = [f"user{i}" for i in range(5000)]
    a = PseudoIdMap(7)
    ids = a.assign(raw)
    assert len(set(ids)) == len(raw)
    assert a.check_bijection()
    assert all(len(p) == 32 and int(p, 16) >= 0 for p in ids)
    assert PseudoIdMap(7).assign(raw) == ids
    assert PseudoIdMap(8).assign(raw[:10]) != ids[:10]
    assert a["user3"] == ids[3]
    a.write_sidecar(tmp_path / "ids.csv")
    assert PseudoIdMap.read_sidecar(tmp_path / "ids.csv") == dict(zip(raw, ids))
