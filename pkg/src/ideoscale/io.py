"""File formats of the released tables, atomic writes and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

FLOAT_DECIMALS = 3
ACTIVITY_DECIMALS = 5

MPS_ACTIVITY_COLUMNS = ["pseudo_id", "name", "party", "mean_tweets_per_day", "followers", "followees"]
FOLLOWERS_ACTIVITY_COLUMNS = ["pseudo_id", "mean_tweets_per_day", "followers", "followees"]
DOMAIN_STATS = ("mean", "std", "quantile", "dip", "pval")


def format_float(x, decimals: int = FLOAT_DECIMALS) -> str:
    """Fixed-point text with half-away-from-zero rounding; non-finite values give ``""``.

    Rounding acts on the shortest decimal representation of ``x``, so
    ``0.0005`` becomes ``0.001`` even though its binary value is slightly
    below the tie.
    """
    if decimals not in (3, 5):
        raise ValueError("decimals must be 3 or 5")
    if x is None:
        return ""
    x = float(x)
    if not math.isfinite(x):
        return ""
    r = repr(x)
    frac = r.partition(".")[2]
    if "e" in r or (len(frac) == decimals + 1 and frac[-1] == "5"):
        q = Decimal(r).quantize(Decimal(1).scaleb(-decimals), rounding=ROUND_HALF_UP)
        s = format(q, "f")
    else:
        s = f"{x:.{decimals}f}"
    if s.startswith("-") and not s.strip("-0."):
        s = s[1:]
    return s


def format_int(x) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return ""
    return str(int(x))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temporary sibling file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _cell(value, kind: str) -> str:
    if kind == "float3":
        return format_float(value, 3)
    if kind == "float5":
        return format_float(value, 5)
    if kind == "int":
        return format_int(value)
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return str(value)


def render_csv(rows: Iterable[Sequence], columns: Sequence[str], kinds: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v, k) for v, k in zip(row, kinds)])
    return buf.getvalue()


def write_frame(path, frame: pd.DataFrame, kinds: Mapping[str, str] | None = None, index: str | None = None) -> None:
    """Write ``frame`` with per-column formatting (``float3``, ``float5``, ``int``, ``str``).

    Float columns default to 3 decimals; ``index`` names the index column, if kept.
    """
    kinds = dict(kinds or {})
    df = frame.reset_index() if index else frame
    if index:
        df = df.rename(columns={df.columns[0]: index})
    cols = list(df.columns)
    ks = []
    for c in cols:
        if c in kinds:
            ks.append(kinds[c])
        elif pd.api.types.is_bool_dtype(df[c]):
            ks.append("str")
        elif pd.api.types.is_integer_dtype(df[c]):
            ks.append("int")
        elif pd.api.types.is_float_dtype(df[c]):
            ks.append("float3")
        else:
            ks.append("str")
    atomic_write_text(path, render_csv(df.itertuples(index=False, name=None), cols, ks))


def read_table(path) -> pd.DataFrame:
    """Read one of our CSV outputs; ids stay strings and empty cells become NaN."""
    return pd.read_csv(path, dtype={"pseudo_id": str, "name": str, "party": str, "domain": str,
                                    "media_category": str}, keep_default_na=False,
                       na_values=[""])


def write_mps_positions(path, elites: pd.DataFrame, meta: pd.DataFrame, columns: Sequence[str]) -> None:
    """``pseudo_id,name,party`` then one position column per dimension/wave pair."""
    df = pd.DataFrame(index=elites.index)
    df["name"] = meta.reindex(elites.index)["name"]
    df["party"] = meta.reindex(elites.index)["party"]
    for c in columns:
        df[c] = elites[c]
    write_frame(path, df, {c: "float3" for c in columns}, index="pseudo_id")


def write_followers_positions(path, followers: pd.DataFrame, columns: Sequence[str]) -> None:
    write_frame(path, followers[list(columns)], {c: "float3" for c in columns}, index="pseudo_id")


def write_activity(path, frame: pd.DataFrame, elites: bool) -> None:
    """Activity tables; counts are written as 3-decimal floats like the released files."""
    cols = MPS_ACTIVITY_COLUMNS if elites else FOLLOWERS_ACTIVITY_COLUMNS
    kinds = {"mean_tweets_per_day": "float5", "followers": "float3", "followees": "float3"}
    write_frame(path, frame.reset_index()[cols] if "pseudo_id" not in frame.columns else frame[cols], kinds)


def domains_columns(columns: Sequence[str]) -> list[str]:
    return ["domain", "media_category", "user_count", "tweet_count"] + [
        f"{c}_{stat}" for stat in DOMAIN_STATS for c in columns
    ]


def write_domains(path, frame: pd.DataFrame, columns: Sequence[str]) -> None:
    kinds = {"user_count": "int", "tweet_count": "int", "domain": "str", "media_category": "str"}
    for c in columns:
        for stat in DOMAIN_STATS:
            kinds[f"{c}_{stat}"] = "int" if stat == "quantile" else "float3"
    write_frame(path, frame[domains_columns(columns)], kinds)


def config_digest(config: Mapping) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def write_manifest(path, stage: str, config: Mapping, seed: int, inputs: Mapping[str, str | os.PathLike],
                   outputs: Mapping[str, str | os.PathLike]) -> dict:
    """Run record: config hash, seed and sha256 of every input and output (no timestamps)."""
    manifest = {
        "stage": stage,
        "seed": int(seed),
        "config_sha256": config_digest(config),
        "inputs": {k: {"path": Path(v).name, "sha256": sha256_file(v)} for k, v in sorted(inputs.items())},
        "outputs": {k: {"path": Path(v).name, "sha256": sha256_file(v)} for k, v in sorted(outputs.items())},
    }
    write_json(path, manifest)
    return manifest


def finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None
