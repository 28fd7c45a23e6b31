"""Affine maps from the latent CA space onto survey (expert-scored) dimensions."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .ca import LatentEmbedding
from .stats import pearson


@dataclass(frozen=True)
class Dimension:
    name: str
    wave: str
    description: str = ""
    native_scale_max: int = 10

    @property
    def column(self) -> str:
        return column_name(self.name, self.wave)


def column_name(dimension: str, wave: str) -> str:
    """``lrecon`` + ``2023`` -> ``lrecon_23``."""
    return f"{dimension}_{str(wave)[-2:]}"


def default_dimensions() -> list[Dimension]:
    """The sixteen dimension/wave pairs positions are released on, in table order."""
    text = resources.files("ideoscale.data").joinpath("dimensions.csv").read_text(encoding="utf-8")
    return [
        Dimension(r["dimension"], r["wave"], r["description"], int(r["native_scale_max"]))
        for r in csv.DictReader(text.splitlines())
    ]


def rescale_seven_point(x: float) -> float:
    """Map a 1..7 score linearly onto 0..10."""
    if not 1.0 <= x <= 7.0:
        raise ValueError(f"{x} outside the 1..7 scale")
    return (x - 1.0) * 10.0 / 6.0


@dataclass
class SurveyReference:
    """Party scores of one survey wave, all on the 0..10 scale."""

    wave: str
    dimensions: list[Dimension]
    party_scores: dict[str, dict[str, float]]

    @property
    def parties(self) -> list[str]:
        return sorted(self.party_scores)

    def scores(self, dimension: str) -> dict[str, float]:
        return {p: s[dimension] for p, s in self.party_scores.items() if dimension in s}

    def validate(self) -> None:
        for party, scores in self.party_scores.items():
            for dim in self.dimensions:
                if dim.name not in scores:
                    raise ValueError(f"wave {self.wave}: party {party!r} has no score on {dim.name!r}")
                v = scores[dim.name]
                if not 0.0 <= v <= 10.0:
                    raise ValueError(f"wave {self.wave}: {party}/{dim.name} score {v} outside [0, 10]")


def read_survey_csv(path, aliases: Mapping[str, str] | None = None) -> dict[str, SurveyReference]:
    """Read ``party,dimension,wave,score,native_scale_max`` rows, one reference per wave.

    Scores on a 7-point native scale are rescaled to 0..10. ``aliases`` renames
    survey party labels onto the labels used for elites (e.g. ``LREM -> RE``).
    """
    aliases = dict(aliases or {})
    waves: dict[str, SurveyReference] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = {"party", "dimension", "wave", "score", "native_scale_max"}
        if reader.fieldnames is None or not expected <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(expected)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                score = float(row["score"])
                scale = int(float(row["native_scale_max"]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if scale == 7:
                score = rescale_seven_point(score)
            elif scale != 10:
                raise ValueError(f"{path}:{lineno}: unsupported native scale {scale}")
            wave = row["wave"].strip()
            party = aliases.get(row["party"].strip(), row["party"].strip())
            name = row["dimension"].strip()
            ref = waves.setdefault(wave, SurveyReference(wave, [], {}))
            if all(d.name != name for d in ref.dimensions):
                ref.dimensions.append(Dimension(name, wave, native_scale_max=scale))
            ref.party_scores.setdefault(party, {})[name] = score
    for ref in waves.values():
        ref.validate()
    return waves


@dataclass
class AffineCalibration:
    wave: str
    dimension: str
    weights: np.ndarray
    intercept: float
    parties: list[str]
    alpha: float
    fidelity: dict[str, float] = field(default_factory=dict)

    @property
    def latent_dims_used(self) -> int:
        return int(self.weights.shape[0])

    @property
    def column(self) -> str:
        return column_name(self.dimension, self.wave)

    def apply(self, coords: np.ndarray) -> np.ndarray:
        coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
        k = self.latent_dims_used
        if coords.shape[1] < k:
            raise ValueError(f"{self.column}: needs {k} latent dimensions, got {coords.shape[1]}")
        return coords[:, :k] @ self.weights + self.intercept

    def to_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = [float(w) for w in self.weights]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AffineCalibration":
        d = dict(d)
        d["weights"] = np.asarray(d["weights"], dtype=np.float64)
        return cls(**d)


def fit_affine_map(
    party_latent: Mapping[str, np.ndarray],
    party_scores: Mapping[str, float],
    alpha: float = 1.0,
    dimension: str = "",
    wave: str = "",
) -> AffineCalibration:
    """Ridge fit of survey scores on the first P-1 latent dimensions of P parties.

    The intercept is not penalized: features and target are centered over the
    matched parties, ``(Xc'Xc + alpha I) w = Xc'yc`` is solved through the
    SVD of ``Xc``, and the
    intercept is ``mean(y) - mean(X) @ w``. Parties present on only one side
    are ignored.
    """
    parties = sorted(set(party_latent) & set(party_scores))
    P = len(parties)
    if P < 3:
        raise ValueError(f"need at least 3 matched parties, got {P}")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    k = P - 1
    X = np.array([np.asarray(party_latent[p], dtype=np.float64) for p in parties])
    if X.shape[1] < k:
        raise ValueError(f"{P} parties need {k} latent dimensions, only {X.shape[1]} available")
    X = X[:, :k]
    y = np.array([float(party_scores[p]) for p in parties])

    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    if alpha > 0:
        # SVD form of the ridge solution; forming Xc'Xc would square the condition number
        U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
        w = Vt.T @ (s / (s * s + alpha) * (U.T @ yc))
    else:
        w = np.linalg.lstsq(Xc, yc, rcond=None)[0]
    b = float(y_mean - x_mean @ w)

    fitted = X @ w + b
    fid = {"mean_abs_diff": float(np.mean(np.abs(fitted - y)))}
    try:
        fid["pearson"] = pearson(fitted, y)
    except ValueError:
        fid["pearson"] = math.nan
    return AffineCalibration(wave=str(wave), dimension=dimension, weights=w, intercept=b,
                             parties=parties, alpha=float(alpha), fidelity=fid)


def fit_all(
    party_latent: Mapping[str, np.ndarray],
    surveys: Mapping[str, SurveyReference],
    dimensions: Sequence[Dimension],
    alpha: float = 1.0,
    party_sizes: Mapping[str, int] | None = None,
) -> list[AffineCalibration]:
    """One calibration per dimension/wave pair of the manifest.

    Every party that has elites and appears in a wave must be scored on each
    requested dimension of that wave, otherwise ``ValueError`` is raised.
    When ``party_sizes`` is given, a member-weighted fidelity Pearson is added.
    """
    out = []
    for dim in dimensions:
        ref = surveys.get(str(dim.wave))
        if ref is None:
            raise ValueError(f"no survey data for wave {dim.wave}")
        matched = [p for p in ref.parties if p in party_latent]
        scores = ref.scores(dim.name)
        missing = [p for p in matched if p not in scores]
        if not scores:
            raise ValueError(f"wave {dim.wave} has no scores on {dim.name!r}")
        if missing:
            raise ValueError(f"wave {dim.wave}: fitted party {missing[0]!r} has no score on {dim.name!r}")
        cal = fit_affine_map(party_latent, scores, alpha=alpha, dimension=dim.name, wave=str(dim.wave))
        if party_sizes:
            cal.fidelity["pearson_weighted"] = _weighted_pearson(cal, party_latent, scores, party_sizes)
        out.append(cal)
    return out


def _weighted_pearson(cal, party_latent, scores, sizes) -> float:
    fitted = np.array([cal.apply(party_latent[p])[0] for p in cal.parties])
    y = np.array([scores[p] for p in cal.parties])
    w = np.array([float(sizes.get(p, 0)) for p in cal.parties])
    if w.sum() <= 0:
        return math.nan
    w = w / w.sum()
    fm, ym = w @ fitted, w @ y
    cov = w @ ((fitted - fm) * (y - ym))
    var = (w @ (fitted - fm) ** 2) * (w @ (y - ym) ** 2)
    return float(cov / math.sqrt(var)) if var > 0 else math.nan


def calibration_summary(calibs: Iterable[AffineCalibration]) -> dict[str, float]:
    calibs = list(calibs)
    return {
        "mean_pearson": float(np.nanmean([c.fidelity["pearson"] for c in calibs])),
        "mean_abs_diff": float(np.mean([c.fidelity["mean_abs_diff"] for c in calibs])),
    }


def save_calibrations(calibs: Sequence[AffineCalibration], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([c.to_dict() for c in calibs], fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_calibrations(path) -> list[AffineCalibration]:
    with open(path, encoding="utf-8") as fh:
        return [AffineCalibration.from_dict(d) for d in json.load(fh)]


def apply_calibration(embedding: LatentEmbedding, calibs: Sequence[AffineCalibration]) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Survey-space positions of followers and elites, one column per calibration."""
    need = max((c.latent_dims_used for c in calibs), default=0)
    if embedding.k_dims < need:
        raise ValueError(f"embedding has {embedding.k_dims} dimensions, calibrations need {need}")
    cols = [c.column for c in calibs]
    fol = np.column_stack([c.apply(embedding.follower_coords) for c in calibs]) if calibs else np.empty((len(embedding.follower_ids), 0))
    eli = np.column_stack([c.apply(embedding.elite_coords) for c in calibs]) if calibs else np.empty((len(embedding.elite_ids), 0))
    followers = pd.DataFrame(fol, index=pd.Index(embedding.follower_ids, name="pseudo_id"), columns=cols)
    elites = pd.DataFrame(eli, index=pd.Index(embedding.elite_ids, name="pseudo_id"), columns=cols)
    return followers, elites


def outlier_fraction(positions: pd.DataFrame, column: str) -> float:
    """Percentage of entities positioned below 0 or above 10."""
    if column not in positions.columns:
        raise KeyError(column)
    v = positions[column].to_numpy(dtype=np.float64)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0.0
    return 100.0 * float(np.count_nonzero((v < 0) | (v > 10))) / v.size
