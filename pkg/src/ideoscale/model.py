"""Follower/elite bipartite network, ingestion, filtering and activity metrics."""

from __future__ import annotations

import csv
import datetime as dt
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp


class ParseError(ValueError):
    """Malformed input record; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class BipartiteNetwork:
    """Binary follower -> elite adjacency.

    ``rows[k], cols[k]`` is the k-th edge (follower index, elite index). Edges
    are unique and kept sorted by (row, col) so equal networks compare equal.
    """

    follower_ids: tuple[str, ...]
    elite_ids: tuple[str, ...]
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        if rows.shape != cols.shape or rows.ndim != 1:
            raise ValueError("rows and cols must be 1-D of equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= self.n_followers
                          or cols.min() < 0 or cols.max() >= self.n_elites):
            raise ValueError("edge index out of bounds")
        if len(set(self.follower_ids)) != self.n_followers or len(set(self.elite_ids)) != self.n_elites:
            raise ValueError("entity ids must be unique")
        key = rows * max(self.n_elites, 1) + cols
        if key.size > 1 and not np.all(key[1:] > key[:-1]):
            order = np.argsort(key, kind="stable")
            key = key[order]
            if np.any(key[1:] == key[:-1]):
                raise ValueError("duplicate edges")
            rows, cols = rows[order], cols[order]
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @property
    def edge_count(self) -> int:
        return int(self.rows.shape[0])

    @property
    def n_followers(self) -> int:
        return len(self.follower_ids)

    @property
    def n_elites(self) -> int:
        return len(self.elite_ids)

    @property
    def edges(self) -> set[tuple[int, int]]:
        return set(zip(self.rows.tolist(), self.cols.tolist()))

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.rows, minlength=self.n_followers)

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.cols, minlength=self.n_elites)

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.edge_count, dtype=np.float64)
        return sp.csr_matrix(
            (data, (self.rows, self.cols)), shape=(self.n_followers, self.n_elites)
        )

    def edge_pairs(self) -> Iterable[tuple[str, str]]:
        for r, c in zip(self.rows.tolist(), self.cols.tolist()):
            yield self.follower_ids[r], self.elite_ids[c]


def _build(follower_ids, elite_ids, rows, cols) -> BipartiteNetwork:
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if rows.size:
        key = rows * max(len(elite_ids), 1) + cols
        key, first = np.unique(key, return_index=True)
        rows, cols = rows[first], cols[first]
    return BipartiteNetwork(tuple(follower_ids), tuple(elite_ids), rows, cols)


def ingest_edges(records: Iterable[Sequence[str]]) -> BipartiteNetwork:
    """Build an unfiltered network from ``(follower_id, elite_id)`` pairs.

    Indices are assigned in first-seen order; duplicate edges collapse.
    Raises :class:`ParseError` with the 1-based record number on bad records.
    """
    followers: dict[str, int] = {}
    elites: dict[str, int] = {}
    rows: list[int] = []
    cols: list[int] = []
    for lineno, rec in enumerate(records, start=1):
        if len(rec) != 2:
            raise ParseError(f"expected 2 fields, got {len(rec)}", lineno)
        f, e = rec
        if not isinstance(f, str) or not isinstance(e, str) or not f.strip() or not e.strip():
            raise ParseError("ids must be nonempty strings", lineno)
        f, e = f.strip(), e.strip()
        rows.append(followers.setdefault(f, len(followers)))
        cols.append(elites.setdefault(e, len(elites)))
    return _build(list(followers), list(elites), rows, cols)


def read_edges_csv(path) -> BipartiteNetwork:
    """Read a ``follower_id,elite_id`` CSV with header; line numbers refer to the file."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return ingest_edges([])
        if [h.strip() for h in header] != ["follower_id", "elite_id"]:
            raise ParseError(f"unexpected header {header!r}", 1)

        def records():
            for rec in reader:
                if not rec:
                    continue
                yield rec

        try:
            return ingest_edges(records())
        except ParseError as exc:
            # record numbers are 1-based after the header
            raise ParseError(str(exc).split(": ", 1)[1], reader.line_num) from None


def filter_network(
    net: BipartiteNetwork,
    min_elites_followed: int = 3,
    min_account_followers: int | None = None,
    account_followers: Mapping[str, int] | None = None,
) -> BipartiteNetwork:
    """Drop weakly attached followers, then elites left without followers.

    A single pass is enough: removing elites of in-degree 0 never lowers a
    surviving follower's out-degree. ``account_followers`` maps follower ids to
    their platform follower counts and is required when
    ``min_account_followers`` is set.
    """
    if min_elites_followed < 1:
        raise ValueError("min_elites_followed must be >= 1")
    keep = net.out_degrees() >= min_elites_followed
    if min_account_followers is not None:
        if account_followers is None:
            raise ValueError("min_account_followers requires account_followers")
        missing = [f for f in net.follower_ids if f not in account_followers]
        if missing:
            raise KeyError(f"no follower count for {len(missing)} followers, e.g. {missing[0]!r}")
        counts = np.array([account_followers[f] for f in net.follower_ids], dtype=np.int64)
        keep &= counts >= min_account_followers

    edge_keep = keep[net.rows]
    rows, cols = net.rows[edge_keep], net.cols[edge_keep]
    elite_keep = np.bincount(cols, minlength=net.n_elites) > 0

    f_new = np.cumsum(keep) - 1
    e_new = np.cumsum(elite_keep) - 1
    followers = [f for f, k in zip(net.follower_ids, keep) if k]
    elites = [e for e, k in zip(net.elite_ids, elite_keep) if k]
    return BipartiteNetwork(tuple(followers), tuple(elites), f_new[rows], e_new[cols])


def degree_summary(net: BipartiteNetwork) -> dict[str, float]:
    if net.n_followers == 0 or net.n_elites == 0:
        raise ValueError("degree summary of an empty network")
    return {
        "mean_elite_in_degree": net.edge_count / net.n_elites,
        "mean_follower_out_degree": net.edge_count / net.n_followers,
    }


@dataclass(frozen=True)
class EntityRecord:
    pseudo_id: str
    kind: str
    name: str | None = None
    party: str | None = None

    def __post_init__(self):
        if self.kind not in ("follower", "elite"):
            raise ValueError(f"unknown entity kind {self.kind!r}")
        if self.kind == "elite" and (self.name is None or self.party is None):
            raise ValueError("elites need a name and a party")
        if self.kind == "follower" and (self.name is not None or self.party is not None):
            raise ValueError("followers carry neither name nor party")


@dataclass(frozen=True)
class ActivityRecord:
    pseudo_id: str
    mean_tweets_per_day: float
    followers: int
    followees: int


def _as_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    return dt.datetime.fromisoformat(str(value).strip().replace("Z", "+00:00")).date()


def compute_activity(
    total_posts: int,
    created_at,
    collected_at,
    followers: int,
    followees: int,
    pseudo_id: str = "",
) -> ActivityRecord:
    """Mean posts per day over whole calendar days between creation and collection."""
    days = (_as_date(collected_at) - _as_date(created_at)).days
    if days <= 0:
        raise ValueError(f"nonpositive elapsed days ({days})")
    if total_posts < 0 or followers < 0 or followees < 0:
        raise ValueError("counts must be nonnegative")
    return ActivityRecord(pseudo_id, total_posts / days, int(followers), int(followees))


class PseudoIdMap:
    """Seeded bijection from raw ids to random 128-bit hex pseudo ids."""

    def __init__(self, seed: int):
        self._rng = random.Random(seed)
        self._forward: dict[str, str] = {}
        self._used: set[str] = set()

    def __len__(self):
        return len(self._forward)

    def __contains__(self, raw_id):
        return raw_id in self._forward

    def __getitem__(self, raw_id: str) -> str:
        pid = self._forward.get(raw_id)
        if pid is None:
            pid = f"{self._rng.getrandbits(128):032x}"
            while pid in self._used:
                pid = f"{self._rng.getrandbits(128):032x}"
            self._used.add(pid)
            self._forward[raw_id] = pid
        return pid

    def assign(self, raw_ids: Iterable[str]) -> list[str]:
        return [self[r] for r in raw_ids]

    def items(self):
        return self._forward.items()

    def check_bijection(self) -> bool:
        return len(set(self._forward.values())) == len(self._forward)

    def write_sidecar(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["raw_id", "pseudo_id"])
            w.writerows(self._forward.items())

    @classmethod
    def read_sidecar(cls, path) -> dict[str, str]:
        with open(path, newline="", encoding="utf-8") as fh:
            return {row["raw_id"]: row["pseudo_id"] for row in csv.DictReader(fh)}
