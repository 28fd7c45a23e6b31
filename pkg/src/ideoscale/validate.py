"""Validation battery: label sanitation, bin concentration, separation, cross-wave consistency."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .calibrate import column_name, outlier_fraction
from .stats import balanced_logistic_fit, classification_metrics, clopper_pearson, pearson

log = logging.getLogger(__name__)

OPPOSITE_PAIRS = [
    ("left", "right"),
    ("populist", "elite"),
    ("eurosceptic", "pro_european"),
    ("liberal_immigration", "restrictive_immigration"),
    ("cosmopolitan", "nationalist"),
    ("pro_environment", "climate_denialist"),
    ("economic_focus", "pro_environment"),
    ("liberal", "conservative"),
]

SHARED_DIMENSIONS = ["lrecon", "eu_position", "galtan", "antielite_salience"]


@dataclass
class LabelTable:
    """Per-user labels: 1.0 present, 0.0 absent, NaN unknown. Indexed by pseudo_id."""

    frame: pd.DataFrame
    source: str = "llm"
    discarded: dict[str, tuple[int, float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.source not in ("human", "llm"):
            raise ValueError(f"unknown label source {self.source!r}")
        vals = self.frame.to_numpy(dtype=np.float64)
        ok = np.isnan(vals) | (vals == 1.0) | (vals == 0.0)
        if not ok.all():
            raise ValueError("label values must be 1, 0 or missing")
        if self.source == "human" and np.any(vals == 0.0):
            raise ValueError("human labels carry only 1 (identified) or missing")

    @property
    def labels(self) -> list[str]:
        return list(self.frame.columns)


def read_labels_csv(path, source: str) -> LabelTable:
    df = pd.read_csv(path, dtype={"pseudo_id": str})
    if "pseudo_id" not in df.columns:
        raise ValueError(f"{path}: missing pseudo_id column")
    df = df.set_index("pseudo_id").astype(np.float64)
    return LabelTable(df, source)


def sanitize_labels(raw: LabelTable, opposite_pairs: Sequence[tuple[str, str]] = OPPOSITE_PAIRS) -> LabelTable:
    """Turn contradictory opposite labels (1 on both) into unknowns on both.

    ``discarded`` maps ``"a/b"`` to (count, percentage of users holding either
    label before sanitation). Pairs naming absent labels are skipped.
    """
    df = raw.frame.copy()
    discarded = {}
    for a, b in opposite_pairs:
        if a not in raw.frame.columns or b not in raw.frame.columns:
            continue
        both = (raw.frame[a] == 1.0) & (raw.frame[b] == 1.0)
        either = (raw.frame[a] == 1.0) | (raw.frame[b] == 1.0)
        count = int(both.sum())
        df.loc[both, [a, b]] = np.nan
        pct = 100.0 * count / int(either.sum()) if either.any() else 0.0
        discarded[f"{a}/{b}"] = (count, pct)
    return LabelTable(df, raw.source, discarded)


BIN_EDGES = np.arange(11, dtype=np.float64)


def bin_concentration(positions: pd.Series, labels: LabelTable, label: str, alpha: float = 0.05) -> pd.DataFrame:
    """Fraction of users holding ``label`` in each unit bin [0,1), ..., [9,10].

    The denominator is every positioned user in the bin; positions outside
    [0, 10] are left out. Empty bins have NaN fraction and interval.
    """
    pos = positions.dropna()
    pos = pos[(pos >= 0) & (pos <= 10)]
    has = labels.frame[label].reindex(pos.index) == 1.0
    bins = np.minimum(np.floor(pos.to_numpy()).astype(int), 9)
    rows = []
    for b in range(10):
        in_bin = bins == b
        n_total = int(in_bin.sum())
        n_lab = int(has.to_numpy()[in_bin].sum())
        if n_total:
            lo, hi = clopper_pearson(n_lab, n_total, alpha)
            frac = n_lab / n_total
        else:
            lo = hi = frac = np.nan
        rows.append({"bin_lo": float(b), "bin_hi": float(b + 1), "n_total": n_total,
                     "n_labeled": n_lab, "fraction": frac, "ci_lo": lo, "ci_hi": hi,
                     "empty": n_total == 0})
    return pd.DataFrame(rows)


@dataclass(frozen=True)
class PlanRow:
    dimension: str
    wave: str
    annotator: str
    label_a: str
    label_b: str

    @property
    def column(self) -> str:
        return column_name(self.dimension, self.wave)


def default_plan() -> list[PlanRow]:
    text = resources.files("ideoscale.data").joinpath("validation_plan.csv").read_text(encoding="utf-8")
    return [PlanRow(**r) for r in csv.DictReader(text.splitlines())]


def read_plan_csv(path) -> list[PlanRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        plan = [PlanRow(**{k: v.strip() for k, v in r.items()}) for r in csv.DictReader(fh)]
    for row in plan:
        if row.label_a == row.label_b:
            raise ValueError(f"plan row {row}: identical labels")
    return plan


def separation_report(plan: Sequence[PlanRow], positions: pd.DataFrame, labels: Mapping[str, LabelTable]) -> pd.DataFrame:
    """Balanced logistic fit and goodness-of-fit metrics per plan row, sorted by decreasing AUC.

    Class A (label 0) holds ``label_a``, class B (label 1) ``label_b``. Users
    holding both are excluded. Metrics are training-set metrics.
    """
    rows = []
    for pr in plan:
        table = labels.get(pr.annotator)
        if table is None or pr.label_a not in table.frame or pr.label_b not in table.frame:
            log.warning("skipping %s: labels unavailable", pr)
            continue
        if pr.column not in positions.columns:
            raise KeyError(f"positions lack column {pr.column}")
        fa = table.frame[pr.label_a] == 1.0
        fb = table.frame[pr.label_b] == 1.0
        ids_a = fa.index[fa & ~fb]
        ids_b = fb.index[fb & ~fa]
        col = positions[pr.column]
        xa = col.reindex(ids_a).dropna()
        xb = col.reindex(ids_b).dropna()
        if xa.empty or xb.empty:
            log.warning("skipping %s: empty class", pr)
            continue
        x = np.concatenate([xa.to_numpy(), xb.to_numpy()])
        y = np.concatenate([np.zeros(xa.size), np.ones(xb.size)])
        fit = balanced_logistic_fit(x, y)
        m = classification_metrics(fit, x, y)
        rows.append({
            "dimension": pr.dimension, "wave": pr.wave, "annotator": pr.annotator,
            "label_a": pr.label_a, "label_b": pr.label_b, "n_a": m.n_a, "n_b": m.n_b,
            "roc_auc": m.roc_auc, "f1_avg": m.f1_avg,
            "f1_a": m.f1_a_as_success, "precision_a": m.precision, "recall_a": m.recall,
            "f1_b": m.f1_b_as_success, "precision_b": m.precision_b, "recall_b": m.recall_b,
            "weight": fit.weight, "intercept": fit.intercept, "cutoff": fit.cutoff,
            "converged": fit.converged,
        })
    df = pd.DataFrame(rows)
    if not df.empty:
        df = df.sort_values("roc_auc", ascending=False, kind="mergesort").reset_index(drop=True)
    return df


def cross_wave_report(
    followers: pd.DataFrame,
    elites: pd.DataFrame,
    elite_party: Mapping[str, str] | None = None,
    dimensions: Sequence[str] = SHARED_DIMENSIONS,
    waves: tuple[str, str] = ("2019", "2023"),
) -> pd.DataFrame:
    """Pearson r between the two waves' columns for followers, elites and party centroids."""
    rows = []
    for dim in dimensions:
        c1, c2 = column_name(dim, waves[0]), column_name(dim, waves[1])
        for frame in (followers, elites):
            if c1 not in frame.columns or c2 not in frame.columns:
                raise KeyError(f"missing column {c1} or {c2}")
        f = followers[[c1, c2]].dropna()
        e = elites[[c1, c2]].dropna()
        row = {"dimension": dim, "column_a": c1, "column_b": c2,
               "r_followers": pearson(f[c1], f[c2]), "r_elites": pearson(e[c1], e[c2]),
               "r_parties": np.nan}
        if elite_party:
            party = pd.Series(elite_party).reindex(e.index)
            cent = e.groupby(party).mean()
            if len(cent) >= 2:
                try:
                    row["r_parties"] = pearson(cent[c1], cent[c2])
                except ValueError:
                    pass
        rows.append(row)
    return pd.DataFrame(rows)


def cross_wave_points(followers: pd.DataFrame, elites: pd.DataFrame, dimensions=SHARED_DIMENSIONS,
                      waves=("2019", "2023")) -> pd.DataFrame:
    """Long-format scatter data (kind, pseudo_id, dimension, x, y) for y=x comparison plots."""
    parts = []
    for kind, frame in (("follower", followers), ("elite", elites)):
        for dim in dimensions:
            c1, c2 = column_name(dim, waves[0]), column_name(dim, waves[1])
            sub = frame[[c1, c2]].dropna()
            parts.append(pd.DataFrame({"kind": kind, "pseudo_id": sub.index, "dimension": dim,
                                       "x": sub[c1].to_numpy(), "y": sub[c2].to_numpy()}))
    return pd.concat(parts, ignore_index=True)


def dimension_summary(positions: pd.DataFrame, columns: Sequence[str] | None = None, ddof: int = 0) -> pd.DataFrame:
    """Mean, standard deviation and percentage of outliers per position column."""
    columns = list(columns) if columns is not None else list(positions.columns)
    rows = []
    for col in columns:
        v = positions[col].to_numpy(dtype=np.float64)
        v = v[np.isfinite(v)]
        rows.append({"column": col, "mean": float(v.mean()), "std": float(v.std(ddof=ddof)),
                     "pct_outliers": outlier_fraction(positions, col)})
    return pd.DataFrame(rows)
