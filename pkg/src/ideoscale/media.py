"""Media domain positions from (user, domain) sharing records."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence
from urllib.parse import urlsplit

import numpy as np
import pandas as pd

from .stats import dip_test

log = logging.getLogger(__name__)


def normalize_domain(value: str) -> str:
    """Lowercase hostname without scheme, credentials, port or path."""
    value = value.strip()
    if "//" not in value:
        value = "//" + value
    host = urlsplit(value).hostname or ""
    return host.rstrip(".").lower()


@dataclass(frozen=True)
class ShareRecord:
    pseudo_id: str
    domain: str
    tweet_count: int = 1

    def __post_init__(self):
        if self.tweet_count < 1:
            raise ValueError("tweet_count must be >= 1")
        object.__setattr__(self, "domain", normalize_domain(self.domain))


@dataclass
class DomainProfile:
    domain: str
    user_count: int
    tweet_count: int
    media_category: str | None = None
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)
    quantile: dict[str, int] = field(default_factory=dict)
    dip: dict[str, float] = field(default_factory=dict)
    pval: dict[str, float] = field(default_factory=dict)


def shares_frame(records: Iterable[ShareRecord] | pd.DataFrame) -> pd.DataFrame:
    if isinstance(records, pd.DataFrame):
        df = records[["pseudo_id", "domain", "tweet_count"]].copy()
        df["domain"] = df["domain"].map(normalize_domain)
        df["tweet_count"] = df["tweet_count"].astype(np.int64)
        if (df["tweet_count"] < 1).any():
            raise ValueError("tweet_count must be >= 1")
        return df
    rows = [(r.pseudo_id, r.domain, r.tweet_count) for r in records]
    return pd.DataFrame(rows, columns=["pseudo_id", "domain", "tweet_count"])


def aggregate_shares(
    records,
    positions: pd.DataFrame,
    min_users: int = 100,
    dimensions: Sequence[str] | None = None,
    n_boot: int = 2000,
    seed: int = 0,
    threads: int = 1,
) -> list[DomainProfile]:
    """Per-domain statistics of the positions of users who shared it.

    A user counts once per domain however many posts they made. Standard
    deviations are population (ddof=0). Records from users absent from
    ``positions`` are dropped (logged). Result is ordered by decreasing
    ``user_count`` then domain name; quintiles are filled in.
    """
    df = shares_frame(records)
    dims = list(dimensions) if dimensions is not None else list(positions.columns)
    known = df["pseudo_id"].isin(positions.index)
    dropped = int((~known).sum())
    if dropped:
        log.info("dropped %d share records from %d unpositioned users",
                 dropped, df.loc[~known, "pseudo_id"].nunique())
    df = df[known]

    tweets = df.groupby("domain", sort=True)["tweet_count"].sum()
    users = df.drop_duplicates(["domain", "pseudo_id"]).groupby("domain", sort=True)["pseudo_id"].apply(list)
    pos = positions[dims]

    profiles = []
    for domain, members in users.items():
        if len(members) < min_users:
            continue
        prof = DomainProfile(domain=domain, user_count=len(members), tweet_count=int(tweets[domain]))
        block = pos.loc[members].to_numpy(dtype=np.float64)
        for j, dim in enumerate(dims):
            col = block[:, j]
            col = col[np.isfinite(col)]
            prof.mean[dim] = float(col.mean())
            prof.std[dim] = float(col.std(ddof=0))
            if col.size >= 2:
                res = dip_test(col, n_boot=n_boot, seed=seed, threads=threads)
                prof.dip[dim], prof.pval[dim] = res.dip, res.p_value
            else:
                prof.dip[dim], prof.pval[dim] = np.nan, np.nan
        profiles.append(prof)
    profiles.sort(key=lambda p: (-p.user_count, p.domain))
    for dim in dims:
        assign_quintiles(profiles, dim)
    return profiles


def quintile_indices(values: Sequence[float]) -> np.ndarray:
    """1..5 bucket per value by 20% rank breakpoints; tied values share the lower index."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    # number of strictly smaller values = lowest 0-based rank among ties
    low_rank = np.searchsorted(np.sort(v), v, side="left")
    return 1 + (5 * low_rank) // n


def assign_quintiles(profiles: list[DomainProfile], dimension: str) -> list[DomainProfile]:
    if not profiles:
        return profiles
    idx = quintile_indices([p.mean[dimension] for p in profiles])
    for p, q in zip(profiles, idx):
        p.quantile[dimension] = int(q)
    return profiles


def attach_categories(profiles: list[DomainProfile], categories: Mapping[str, str]) -> list[DomainProfile]:
    norm = {normalize_domain(d): c for d, c in categories.items()}
    for p in profiles:
        p.media_category = norm.get(p.domain)
    return profiles


@dataclass
class CategorySummary:
    category: str
    count: int
    mean: float
    std: float
    values: np.ndarray


def category_distributions(
    profiles: Sequence[DomainProfile], categories: Mapping[str, str], dimension: str
) -> dict[str, CategorySummary]:
    """Distribution of domain means per media category, for categorized domains only."""
    norm = {normalize_domain(d): c for d, c in categories.items()}
    groups: dict[str, list[float]] = {}
    for p in profiles:
        cat = norm.get(p.domain)
        if cat:
            groups.setdefault(cat, []).append(p.mean[dimension])
    if not groups:
        raise ValueError("no categorized domain among the profiles")
    out = {}
    for cat in sorted(groups):
        vals = np.asarray(groups[cat])
        out[cat] = CategorySummary(cat, int(vals.size), float(vals.mean()), float(vals.std(ddof=0)), vals)
    return out


def profiles_frame(profiles: Sequence[DomainProfile], dimensions: Sequence[str]) -> pd.DataFrame:
    """Domains table: identifiers, counts, then mean/std/quantile/dip/pval per dimension."""
    rows = []
    for p in profiles:
        row = {
            "domain": p.domain,
            "media_category": p.media_category,
            "user_count": p.user_count,
            "tweet_count": p.tweet_count,
        }
        for stat in ("mean", "std", "quantile", "dip", "pval"):
            for dim in dimensions:
                row[f"{dim}_{stat}"] = getattr(p, stat).get(dim)
        rows.append(row)
    columns = ["domain", "media_category", "user_count", "tweet_count"] + [
        f"{dim}_{stat}" for stat in ("mean", "std", "quantile", "dip", "pval") for dim in dimensions
    ]
    return pd.DataFrame(rows, columns=columns)
