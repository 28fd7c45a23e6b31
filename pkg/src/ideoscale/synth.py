"""Synthetic networks drawn from the logistic homophily model, with known ground truth.

Edge probability between follower i and elite j:

    P(A_ij = 1) = expit(alpha_i + beta_j - gamma * ||phi_i - phi_j||^2)

The ground-truth "survey" space is an affine image of the latent space, so a
correct pipeline (CA -> party centroids -> ridge maps) should recover it up to
the calibration error.
"""

from __future__ import annotations

import configparser
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np
import pandas as pd
from scipy.special import expit

from .ca import CaConfig, correspondence_analysis, party_centroids
from .calibrate import fit_affine_map
from .model import BipartiteNetwork, filter_network
from .stats import pearson

_ROW_CHUNK = 1024


@dataclass(frozen=True)
class SyntheticModelParams:
    n_followers: int = 2000
    n_elites: int = 100
    d: int = 2
    gamma: float = 2.0
    alpha_mean: float = -1.0
    alpha_std: float = 0.5
    beta_mean: float = 0.0
    beta_std: float = 0.5
    party_count: int = 6
    party_radius: float = 1.0
    party_centers: tuple[tuple[float, ...], ...] | None = None
    within_party_std: float = 0.15
    follower_std: float = 0.45
    popularity_median: float = 40.0
    popularity_sigma: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if self.n_followers < 1 or self.n_elites < 1 or self.d < 1:
            raise ValueError("sizes must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.party_count < 3:
            raise ValueError("at least 3 parties are needed for calibration")
        if self.party_centers is not None:
            c = np.asarray(self.party_centers, dtype=float)
            if c.shape != (self.party_count, self.d):
                raise ValueError(f"party_centers must have shape ({self.party_count}, {self.d})")

    def centers(self) -> np.ndarray:
        if self.party_centers is not None:
            return np.asarray(self.party_centers, dtype=np.float64)
        P, d, rad = self.party_count, self.d, self.party_radius
        if d == 1:
            return np.linspace(-rad, rad, P)[:, None]
        ang = 2 * np.pi * np.arange(P) / P
        c = np.zeros((P, d))
        c[:, 0] = rad * np.cos(ang)
        c[:, 1] = rad * np.sin(ang)
        if d > 2:
            # spread the remaining axes deterministically so parties stay in general position
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, 7]))
            c[:, 2:] = rng.normal(scale=rad, size=(P, d - 2))
        return c

    @classmethod
    def from_config(cls, path_or_text, section: str = "synth") -> "SyntheticModelParams":
        cp = configparser.ConfigParser()
        if "\n" in str(path_or_text) or "[" in str(path_or_text):
            cp.read_string(str(path_or_text))
        else:
            with open(path_or_text, encoding="utf-8") as fh:
                cp.read_file(fh)
        if not cp.has_section(section):
            return cls()
        return cls.from_mapping(dict(cp.items(section)))

    @classmethod
    def from_mapping(cls, values: dict) -> "SyntheticModelParams":
        kw = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in values.items():
            if key not in types:
                continue
            if key == "party_centers":
                pts = [tuple(float(v) for v in p.split(",")) for p in str(raw).split(";") if p.strip()]
                kw[key] = tuple(pts) if pts else None
            elif "int" in str(types[key]):
                kw[key] = int(raw)
            else:
                kw[key] = float(raw)
        return cls(**kw)


@dataclass
class GroundTruth:
    follower_ids: list[str]
    elite_ids: list[str]
    follower_latent: np.ndarray
    elite_latent: np.ndarray
    follower_alpha: np.ndarray
    elite_beta: np.ndarray
    elite_party: dict[str, str]
    follower_popularity: dict[str, int]
    survey_matrix: np.ndarray
    survey_offset: np.ndarray
    party_scores: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def survey_dims(self) -> list[str]:
        return [f"dim{k + 1}" for k in range(self.survey_matrix.shape[0])]

    def to_survey(self, latent: np.ndarray) -> np.ndarray:
        return latent @ self.survey_matrix.T + self.survey_offset

    def follower_survey_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.to_survey(self.follower_latent), index=self.follower_ids, columns=self.survey_dims)


def edge_probabilities(alpha: np.ndarray, beta: np.ndarray, gamma: float,
                       phi_f: np.ndarray, phi_e: np.ndarray) -> np.ndarray:
    d2 = ((phi_f[:, None, :] - phi_e[None, :, :]) ** 2).sum(axis=2)
    return expit(alpha[:, None] + beta[None, :] - gamma * d2)


def _survey_map(rng, centroids: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    while True:
        Q = rng.normal(size=(d, d))
        if np.linalg.cond(Q) < 10:
            break
    raw = centroids @ Q.T
    lo, hi = raw.min(axis=0), raw.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    # party scores land in [1, 9]; followers may fall outside [0, 10]
    scale = 8.0 / span
    return Q * scale[:, None], 1.0 - lo * scale


def generate_network(params: SyntheticModelParams) -> tuple[BipartiteNetwork, GroundTruth]:
    """Draw one network and its ground truth; identical seeds give identical output."""
    ss = np.random.SeedSequence(params.seed)
    s_latent, s_edges, s_map = ss.spawn(3)
    rng = np.random.default_rng(s_latent)
    N, M, d, P = params.n_followers, params.n_elites, params.d, params.party_count
    centers = params.centers()

    elite_party_idx = np.arange(M) % P
    elite_latent = centers[elite_party_idx] + rng.normal(scale=params.within_party_std, size=(M, d))
    follower_party_idx = rng.integers(0, P, size=N)
    follower_latent = centers[follower_party_idx] + rng.normal(scale=params.follower_std, size=(N, d))
    alpha = rng.normal(params.alpha_mean, params.alpha_std, size=N)
    beta = rng.normal(params.beta_mean, params.beta_std, size=M)
    popularity = np.floor(rng.lognormal(np.log(params.popularity_median), params.popularity_sigma, size=N)).astype(np.int64)

    rows, cols = [], []
    chunk_seeds = s_edges.spawn((N + _ROW_CHUNK - 1) // _ROW_CHUNK)
    for c, start in enumerate(range(0, N, _ROW_CHUNK)):
        stop = min(start + _ROW_CHUNK, N)
        prob = edge_probabilities(alpha[start:stop], beta, params.gamma, follower_latent[start:stop], elite_latent)
        hit = np.random.default_rng(chunk_seeds[c]).random(prob.shape) < prob
        r, col = np.nonzero(hit)
        rows.append(r + start)
        cols.append(col)
    rows = np.concatenate(rows) if rows else np.zeros(0, np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, np.int64)

    width_f = len(str(N))
    width_e = len(str(M))
    follower_ids = [f"u{i:0{width_f}d}" for i in range(N)]
    elite_ids = [f"m{j:0{width_e}d}" for j in range(M)]
    parties = [f"P{k + 1}" for k in range(P)]
    elite_party = {elite_ids[j]: parties[elite_party_idx[j]] for j in range(M)}

    centroids = np.array([elite_latent[elite_party_idx == k].mean(axis=0) for k in range(P)])
    W, b = _survey_map(np.random.default_rng(s_map), centroids, d)
    truth = GroundTruth(
        follower_ids=follower_ids,
        elite_ids=elite_ids,
        follower_latent=follower_latent,
        elite_latent=elite_latent,
        follower_alpha=alpha,
        elite_beta=beta,
        elite_party=elite_party,
        follower_popularity=dict(zip(follower_ids, popularity.tolist())),
        survey_matrix=W,
        survey_offset=b,
        party_scores={parties[k]: centroids[k] @ W.T + b for k in range(P)},
    )
    net = BipartiteNetwork(tuple(follower_ids), tuple(elite_ids), rows.astype(np.int64), cols.astype(np.int64))
    return net, truth


def survey_scores(truth: GroundTruth) -> dict[str, dict[str, float]]:
    """dimension -> party -> score, as a calibration target."""
    return {dim: {p: float(s[k]) for p, s in truth.party_scores.items()} for k, dim in enumerate(truth.survey_dims)}


def recover_positions(net: BipartiteNetwork, truth: GroundTruth, min_elites_followed: int = 3,
                      min_account_followers: int | None = None, alpha: float = 1.0,
                      ca_config: CaConfig | None = None):
    """Filter -> CA -> party centroids -> ridge -> apply; returns (positions frame, calibrations)."""
    filtered = filter_network(net, min_elites_followed, min_account_followers,
                              truth.follower_popularity if min_account_followers is not None else None)
    if filtered.n_followers == 0 or filtered.n_elites < 2:
        raise ValueError("degenerate instance: nothing left after filtering")
    P = len(truth.party_scores)
    cfg = ca_config or CaConfig()
    k = min(max(cfg.k_dims, P - 1), min(filtered.n_followers, filtered.n_elites) - 1)
    emb = correspondence_analysis(filtered, replace(cfg, k_dims=k))
    party_of = {e: truth.elite_party[e] for e in emb.elite_ids}
    cents = party_centroids(emb, party_of)
    calibs = [fit_affine_map(cents, scores, alpha=alpha, dimension=dim, wave="synthetic")
              for dim, scores in survey_scores(truth).items()]
    pos = np.column_stack([c.apply(emb.follower_coords) for c in calibs])
    frame = pd.DataFrame(pos, index=list(emb.follower_ids), columns=truth.survey_dims)
    return frame, calibs


def recovery_benchmark(params: SyntheticModelParams, min_elites_followed: int = 3, alpha: float = 1.0,
                       ca_config: CaConfig | None = None) -> dict:
    """Run the pipeline on one synthetic draw and score it against the ground truth."""
    t0 = time.perf_counter()
    net, truth = generate_network(params)
    frame, calibs = recover_positions(net, truth, min_elites_followed, alpha=alpha, ca_config=ca_config)
    true = truth.follower_survey_frame().loc[frame.index]
    report = {
        "seed": params.seed,
        "n_followers_kept": int(frame.shape[0]),
        "edges": net.edge_count,
        "pearson": {dim: pearson(frame[dim].to_numpy(), true[dim].to_numpy()) for dim in truth.survey_dims},
        "party_pearson": {c.dimension: c.fidelity["pearson"] for c in calibs},
        "party_mean_abs_diff": {c.dimension: c.fidelity["mean_abs_diff"] for c in calibs},
    }
    report["runtime_s"] = time.perf_counter() - t0
    return report


def generate_shares(truth: GroundTruth, n_domains: int = 30, seed: int = 0, rate: float = 0.25,
                    spread: float = 1.0) -> tuple[pd.DataFrame, dict[str, np.ndarray]]:
    """Synthetic (user, domain, tweet_count) records; users favour domains close to them."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    P = len(truth.party_scores)
    d = truth.follower_latent.shape[1]
    anchors = truth.elite_latent[rng.integers(0, len(truth.elite_ids), size=n_domains)]
    domain_latent = anchors + rng.normal(scale=0.3, size=(n_domains, d))
    d2 = ((truth.follower_latent[:, None, :] - domain_latent[None]) ** 2).sum(axis=2)
    prob = rate * np.exp(-d2 / (2 * spread ** 2))
    share = rng.random(prob.shape) < prob
    i, j = np.nonzero(share)
    counts = 1 + rng.poisson(2.0, size=i.size)
    names = [f"news{k:02d}.example" for k in range(n_domains)]
    df = pd.DataFrame({"pseudo_id": np.asarray(truth.follower_ids)[i], "domain": np.asarray(names)[j],
                       "tweet_count": counts})
    _ = P
    return df, dict(zip(names, domain_latent))


def generate_labels(truth: GroundTruth, seed: int = 0, rate: float = 0.15, source: str = "llm") -> pd.DataFrame:
    """Self-description labels ``low_dimK``/``high_dimK`` drawn from true survey positions.

    A follower is labeled low (high) with probability ``rate`` times a logistic
    ramp of its true position; LLM-style tables also carry explicit zeros.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 13]))
    surv = truth.to_survey(truth.follower_latent)
    cols = {}
    for k, dim in enumerate(truth.survey_dims):
        x = surv[:, k]
        p_low = rate * expit(-(x - 5.0) * 1.5)
        p_high = rate * expit((x - 5.0) * 1.5)
        low = rng.random(x.size) < p_low
        high = rng.random(x.size) < p_high
        for name, hit in ((f"low_{dim}", low), (f"high_{dim}", high)):
            if source == "llm":
                v = np.where(hit, 1.0, np.where(rng.random(x.size) < 0.5, 0.0, np.nan))
            else:
                v = np.where(hit, 1.0, np.nan)
            cols[name] = v
    df = pd.DataFrame(cols, index=pd.Index(truth.follower_ids, name="pseudo_id"))
    return df[df.notna().any(axis=1)]
