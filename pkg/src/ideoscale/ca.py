"""Correspondence analysis of the follower/elite adjacency.

The standardized residual operator

    S = D_r^{-1/2} (P - r c^T) D_c^{-1/2},   P = A / n

is applied as a scaled sparse product minus a rank-one term, so the
(followers x elites) dense matrix is never built. The trivial CA solution
(``sqrt(r)``, ``sqrt(c)``, singular value 1) lies in the null space of ``S``
and therefore never competes for a Lanczos direction.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .io import atomic_write_bytes
from .lanczos import ConvergenceError, truncated_svd
from .model import BipartiteNetwork
from .stats import pearson

__all__ = [
    "CaConfig",
    "ConvergenceError",
    "LatentEmbedding",
    "correspondence_analysis",
    "dense_residual_matrix",
    "embedding_stability",
    "load_embedding",
    "orient_signs",
    "party_centroids",
    "save_embedding",
]


@dataclass(frozen=True)
class CaConfig:
    k_dims: int = 12
    solver_tolerance: float = 1e-10
    max_iterations: int = 1000
    seed: int = 0

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class LatentEmbedding:
    follower_ids: tuple[str, ...]
    elite_ids: tuple[str, ...]
    follower_coords: np.ndarray
    elite_coords: np.ndarray
    singular_values: np.ndarray
    coordinate_kind: str = "principal"
    config_digest: str = ""

    @property
    def k_dims(self) -> int:
        return int(self.singular_values.shape[0])

    def elite_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.elite_coords, index=list(self.elite_ids))


def _masses(net: BipartiteNetwork):
    n = net.edge_count
    r = net.out_degrees() / n
    c = net.in_degrees() / n
    return r, c


def orient_signs(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip each dimension so the largest-magnitude elite entry is positive."""
    u = u.copy()
    v = v.copy()
    idx = np.argmax(np.abs(v), axis=0)
    flip = v[idx, np.arange(v.shape[1])] < 0
    u[:, flip] *= -1
    v[:, flip] *= -1
    return u, v


def correspondence_analysis(net: BipartiteNetwork, cfg: CaConfig | None = None) -> LatentEmbedding:
    """Top ``cfg.k_dims`` CA dimensions in principal coordinates (symmetric map)."""
    cfg = cfg or CaConfig()
    N, M = net.n_followers, net.n_elites
    if net.edge_count == 0:
        raise ValueError("empty network")
    r, c = _masses(net)
    if np.any(r <= 0) or np.any(c <= 0):
        raise ValueError("every follower and elite needs at least one edge; filter the network first")
    if not 1 <= cfg.k_dims <= min(N, M) - 1:
        raise ValueError(f"k_dims={cfg.k_dims} outside [1, {min(N, M) - 1}]")

    A = net.adjacency()
    n = float(net.edge_count)
    inv_sr = 1.0 / np.sqrt(r)
    inv_sc = 1.0 / np.sqrt(c)
    sr = np.sqrt(r)
    sc = np.sqrt(c)
    At = A.T.tocsr()

    def matvec(x):
        return inv_sr * (A @ (inv_sc * x)) / n - sr * (sc @ x)

    def rmatvec(y):
        return inv_sc * (At @ (inv_sr * y)) / n - sc * (sr @ y)

    res = truncated_svd(
        matvec, rmatvec, (N, M), cfg.k_dims,
        tol=cfg.solver_tolerance, max_iterations=cfg.max_iterations, seed=cfg.seed,
    )
    s = res.s
    rank_floor = max(N, M) * np.finfo(float).eps * max(s[0], 1.0) * 10
    if s[-1] <= rank_floor:
        raise ValueError(
            f"k_dims={cfg.k_dims} exceeds the numerical rank of the residual operator "
            f"(singular value {s[-1]:.3e})"
        )
    u, v = orient_signs(res.u, res.vt.T)
    return LatentEmbedding(
        follower_ids=net.follower_ids,
        elite_ids=net.elite_ids,
        follower_coords=inv_sr[:, None] * u * s,
        elite_coords=inv_sc[:, None] * v * s,
        singular_values=s,
        coordinate_kind="principal",
        config_digest=cfg.digest(),
    )


def dense_residual_matrix(net: BipartiteNetwork) -> np.ndarray:
    """Explicit standardized residual matrix; for small test instances only."""
    P = net.adjacency().toarray() / net.edge_count
    r = P.sum(axis=1)
    c = P.sum(axis=0)
    return (P - np.outer(r, c)) / np.sqrt(np.outer(r, c))


def party_centroids(embedding: LatentEmbedding, elite_party: Mapping[str, str]) -> dict[str, np.ndarray]:
    """Mean elite coordinates per party, keyed in sorted party order."""
    index = {e: i for i, e in enumerate(embedding.elite_ids)}
    unknown = [e for e in elite_party if e not in index]
    if unknown:
        raise KeyError(f"unknown elite id {unknown[0]!r}")
    unlabeled = [e for e in embedding.elite_ids if e not in elite_party]
    if unlabeled:
        raise KeyError(f"elite {unlabeled[0]!r} has no party label")
    members: dict[str, list[int]] = {}
    for e, party in elite_party.items():
        members.setdefault(party, []).append(index[e])
    return {p: embedding.elite_coords[sorted(members[p])].mean(axis=0) for p in sorted(members)}


def embedding_stability(first: pd.DataFrame, second: pd.DataFrame) -> dict[str, float]:
    """Per-column Pearson correlation between two position tables of the same entities.

    Both frames are indexed by entity id with identical column sets. The
    result maps each column to its correlation and ``"mean"`` to their average.
    """
    if set(first.index) != set(second.index) or len(first.index) != len(second.index):
        raise ValueError("position tables cover different entities")
    if list(first.columns) != list(second.columns):
        raise ValueError("position tables cover different dimensions")
    second = second.loc[first.index]
    out = {col: pearson(first[col].to_numpy(), second[col].to_numpy()) for col in first.columns}
    out["mean"] = float(np.mean(list(out.values())))
    return out


# Binary cache layout (all little-endian):
#   magic b"IDSCAEMB" | version u8 | kind u8 (0 principal, 1 standard) | pad u16
#   N u64 | M u64 | K u32 | digest_len u32 | digest bytes (ascii)
#   singular values K*f8 | follower coords N*K*f8 (row-major) | elite coords M*K*f8
#   then N+M ids, each as u32 byte length + utf-8 bytes (followers first)
_MAGIC = b"IDSCAEMB"
_VERSION = 1
_KINDS = ("principal", "standard")


def save_embedding(emb: LatentEmbedding, path) -> None:
    N, M, K = len(emb.follower_ids), len(emb.elite_ids), emb.k_dims
    digest = emb.config_digest.encode("ascii")
    parts = [
        _MAGIC,
        struct.pack("<BBH", _VERSION, _KINDS.index(emb.coordinate_kind), 0),
        struct.pack("<QQII", N, M, K, len(digest)),
        digest,
        np.ascontiguousarray(emb.singular_values, dtype="<f8").tobytes(),
        np.ascontiguousarray(emb.follower_coords, dtype="<f8").tobytes(),
        np.ascontiguousarray(emb.elite_coords, dtype="<f8").tobytes(),
    ]
    for ident in (*emb.follower_ids, *emb.elite_ids):
        raw = ident.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    atomic_write_bytes(path, b"".join(parts))


def load_embedding(path) -> LatentEmbedding:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != _MAGIC:
        raise ValueError(f"{path}: not an embedding cache")
    version, kind, _ = struct.unpack_from("<BBH", blob, 8)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported cache version {version}")
    N, M, K, dlen = struct.unpack_from("<QQII", blob, 12)
    pos = 36
    digest = blob[pos:pos + dlen].decode("ascii")
    pos += dlen

    def take(count):
        nonlocal pos
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=pos).astype(np.float64)
        pos += 8 * count
        return arr

    s = take(K)
    fc = take(N * K).reshape(N, K)
    ec = take(M * K).reshape(M, K)
    ids = []
    for _ in range(N + M):
        (length,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        ids.append(blob[pos:pos + length].decode("utf-8"))
        pos += length
    return LatentEmbedding(tuple(ids[:N]), tuple(ids[N:]), fc, ec, s, _KINDS[kind], digest)


def coordinates_frame(ids: Sequence[str], coords: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame(coords, index=list(ids), columns=[f"dim{i + 1}" for i in range(coords.shape[1])])
