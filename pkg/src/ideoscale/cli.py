"""Command-line pipeline: ingest -> embed -> calibrate -> positions -> media -> validate.

Each stage reads its inputs from the config (or from earlier stages' outputs
in ``--out``), writes its artifacts atomically and leaves a
``manifest_<stage>.json`` with the config hash, the seed and file digests.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime as dt
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import io as fio
from .ca import CaConfig, correspondence_analysis, load_embedding, party_centroids, save_embedding
from .calibrate import (
    Dimension,
    apply_calibration,
    default_dimensions,
    fit_all,
    load_calibrations,
    read_survey_csv,
    save_calibrations,
)
from .lanczos import ConvergenceError
from .media import aggregate_shares, attach_categories, category_distributions, profiles_frame
from .model import ParseError, PseudoIdMap, compute_activity, degree_summary, filter_network, read_edges_csv
from .stats import pearson
from .synth import SyntheticModelParams, generate_labels, generate_network, generate_shares
from .validate import (
    SHARED_DIMENSIONS,
    LabelTable,
    PlanRow,
    bin_concentration,
    cross_wave_points,
    cross_wave_report,
    default_plan,
    dimension_summary,
    read_labels_csv,
    read_plan_csv,
    sanitize_labels,
    separation_report,
)

log = logging.getLogger("ideoscale")

PATH_KEYS = ("edges", "elites", "survey", "aliases", "activity", "shares", "categories",
             "labels_human", "labels_llm", "plan", "data")


class StageError(Exception):
    """Failed precondition of a pipeline stage."""


@dataclass
class PipelineConfig:
    out: Path = Path("out")
    seed: int = 0
    threads: int = 1
    paths: dict[str, Path] = field(default_factory=dict)
    min_elites_followed: int = 3
    min_account_followers: int | None = None
    ca: CaConfig = field(default_factory=CaConfig)
    alpha: float = 1.0
    dimensions: str = "default"
    min_users: int = 100
    n_boot: int = 2000
    waves: tuple[str, str] = ("2019", "2023")
    shared_dimensions: tuple[str, ...] = tuple(SHARED_DIMENSIONS)
    table1_population: str = "followers"
    synth: dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["out"] = None  # output location does not change results
        d["threads"] = None  # nor does parallelism
        d["paths"] = {k: Path(v).name for k, v in sorted(self.paths.items())}
        return d

    def path(self, key: str, default: str | None = None) -> Path:
        if key in self.paths:
            return self.paths[key]
        if default is not None:
            return self.out / default
        raise StageError(f"no input configured for {key!r} (set [paths] {key} in the config)")

    def manifest(self, stage: str) -> list[Dimension]:
        if self.dimensions == "default":
            return default_dimensions()
        if self.dimensions == "survey":
            return _survey_dimensions(self.path("survey"))
        raise StageError(f"unknown dimension manifest {self.dimensions!r}")


def _survey_dimensions(path: Path) -> list[Dimension]:
    seen = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["dimension"].strip(), row["wave"].strip())
            if key not in seen:
                seen.append(key)
    return [Dimension(name, wave) for name, wave in seen]


def load_config(path: str | None, overrides: list[str] | None = None) -> tuple[configparser.ConfigParser, Path]:
    cp = configparser.ConfigParser()
    base = Path.cwd()
    if path:
        p = Path(path)
        if not p.exists():
            raise StageError(f"config file {path} not found")
        with open(p, encoding="utf-8") as fh:
            cp.read_file(fh)
        base = p.resolve().parent
    for item in overrides or []:
        key, _, value = item.partition("=")
        section, _, option = key.partition(".")
        if not option:
            raise StageError(f"--set expects section.key=value, got {item!r}")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, option, value)
    return cp, base


def build_config(args) -> PipelineConfig:
    cp, base = load_config(args.config, args.set)
    get = lambda s, k, fb=None: cp.get(s, k, fallback=fb) if cp.has_section(s) else fb  # noqa: E731
    cfg = PipelineConfig()
    if cp.has_section("paths"):
        for k, v in cp.items("paths"):
            if v.strip():
                cfg.paths[k] = (base / v.strip()).resolve() if not Path(v.strip()).is_absolute() else Path(v.strip())
    cfg.seed = int(get("run", "seed", 0))
    cfg.threads = int(get("run", "threads", 1))
    cfg.out = Path(get("run", "out", "out"))
    cfg.min_elites_followed = int(get("model", "min_elites_followed", 3))
    mf = get("model", "min_account_followers", "")
    cfg.min_account_followers = int(mf) if mf not in (None, "") else None
    cfg.ca = CaConfig(
        k_dims=int(get("ca", "k_dims", 12)),
        solver_tolerance=float(get("ca", "solver_tolerance", 1e-10)),
        max_iterations=int(get("ca", "max_iterations", 1000)),
    )
    cfg.alpha = float(get("calibrate", "alpha", 1.0))
    cfg.dimensions = get("calibrate", "dimensions", "default").strip()
    cfg.min_users = int(get("media", "min_users", 100))
    cfg.n_boot = int(get("media", "n_boot", 2000))
    waves = get("validate", "waves", "2019,2023")
    cfg.waves = tuple(w.strip() for w in waves.split(","))[:2]
    shared = get("validate", "shared_dimensions", ",".join(SHARED_DIMENSIONS))
    cfg.shared_dimensions = tuple(s.strip() for s in shared.split(",") if s.strip())
    cfg.table1_population = get("validate", "table1_population", "followers").strip()
    if cp.has_section("synth"):
        cfg.synth = dict(cp.items("synth"))

    # command-line flags win over the config file
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = Path(args.out)
    if args.threads is not None:
        cfg.threads = args.threads
    if args.min_mps is not None:
        cfg.min_elites_followed = args.min_mps
    if args.min_followers is not None:
        cfg.min_account_followers = args.min_followers
    if getattr(args, "data", None):
        cfg.paths["data"] = Path(args.data)
    cfg.ca = replace(cfg.ca, seed=cfg.seed)
    return cfg


def _require(path: Path, what: str) -> Path:
    if not Path(path).exists():
        raise StageError(f"missing {what}: {path}")
    return Path(path)


def _read_elites(path: Path) -> pd.DataFrame:
    df = pd.read_csv(_require(path, "elite metadata"), dtype=str, keep_default_na=False)
    for col in ("id", "name", "party"):
        if col not in df.columns:
            raise StageError(f"{path}: elite metadata needs columns id,name,party")
    if df["id"].duplicated().any():
        raise StageError(f"{path}: duplicate elite id {df['id'][df['id'].duplicated()].iloc[0]!r}")
    return df.set_index("id")


def _read_activity(path: Path) -> pd.DataFrame:
    df = pd.read_csv(_require(path, "activity table"), dtype={"id": str})
    need = {"id", "total_posts", "created_at", "collected_at", "followers", "followees"}
    if not need <= set(df.columns):
        raise StageError(f"{path}: activity table needs columns {sorted(need)}")
    return df.set_index("id")


# ---------------------------------------------------------------- stages


def cmd_ingest(cfg: PipelineConfig) -> dict:
    edges_path = _require(cfg.path("edges"), "edge list")
    elites_path = cfg.path("elites")
    meta = _read_elites(elites_path)
    raw = read_edges_csv(edges_path)
    unknown = [e for e in raw.elite_ids if e not in meta.index]
    if unknown:
        raise StageError(f"elite {unknown[0]!r} is absent from the elite metadata")

    activity = None
    inputs = {"edges": edges_path, "elites": elites_path}
    if "activity" in cfg.paths:
        activity = _read_activity(cfg.paths["activity"])
        inputs["activity"] = cfg.paths["activity"]
    counts = None
    if cfg.min_account_followers is not None:
        if activity is None:
            raise StageError("--min-followers needs an activity table with follower counts")
        counts = activity["followers"].astype(np.int64).to_dict()
    net = filter_network(raw, cfg.min_elites_followed, cfg.min_account_followers, counts)
    if net.edge_count == 0:
        raise StageError("no edges left after filtering")

    pids = PseudoIdMap(cfg.seed)
    pids.assign(meta.index)
    pids.assign(net.follower_ids)
    if not pids.check_bijection():
        raise StageError("pseudo id collision")
    out = cfg.out
    (out / "private").mkdir(parents=True, exist_ok=True)
    fio.atomic_write_bytes(out / "private" / "pseudo_ids.csv", _sidecar_bytes(pids))

    fol = [pids[f] for f in net.follower_ids]
    eli = [pids[e] for e in net.elite_ids]
    fio.atomic_write_text(out / "network.csv", fio.render_csv(
        ((fol[r], eli[c]) for r, c in zip(net.rows.tolist(), net.cols.tolist())),
        ["follower_id", "elite_id"], ["str", "str"]))
    elites = pd.DataFrame({"pseudo_id": [pids[e] for e in meta.index], "name": meta["name"].to_numpy(),
                           "party": meta["party"].to_numpy()})
    fio.write_frame(out / "elites.csv", elites)
    outputs = {"network": out / "network.csv", "elites": out / "elites.csv"}

    if activity is not None:
        outputs.update(_write_activity_tables(cfg, activity, meta, net, pids))

    summary = {
        "followers_before": raw.n_followers, "elites_before": raw.n_elites, "edges_before": raw.edge_count,
        "followers": net.n_followers, "elites": net.n_elites, "edges": net.edge_count,
        **degree_summary(net),
    }
    fio.write_json(out / "ingest_summary.json", summary)
    outputs["summary"] = out / "ingest_summary.json"
    fio.write_manifest(out / "manifest_ingest.json", "ingest", cfg.as_dict(), cfg.seed, inputs, outputs)
    return summary


def _sidecar_bytes(pids: PseudoIdMap) -> bytes:
    return fio.render_csv(pids.items(), ["raw_id", "pseudo_id"], ["str", "str"]).encode("utf-8")


def _activity_rows(activity: pd.DataFrame, ids, pids: PseudoIdMap):
    for raw_id in ids:
        if raw_id not in activity.index:
            continue
        a = activity.loc[raw_id]
        rec = compute_activity(int(a["total_posts"]), a["created_at"], a["collected_at"],
                               int(a["followers"]), int(a["followees"]), pids[raw_id])
        yield rec


def _write_activity_tables(cfg, activity, meta, net, pids) -> dict:
    mps = [(r.pseudo_id, meta.at[raw, "name"], meta.at[raw, "party"], r.mean_tweets_per_day, r.followers, r.followees)
           for raw, r in zip([i for i in meta.index if i in activity.index],
                             _activity_rows(activity, meta.index, pids))]
    fol = [(r.pseudo_id, r.mean_tweets_per_day, r.followers, r.followees)
           for r in _activity_rows(activity, net.follower_ids, pids)]
    kinds_m = ["str", "str", "str", "float5", "float3", "float3"]
    kinds_f = ["str", "float5", "float3", "float3"]
    fio.atomic_write_text(cfg.out / "mps_activity.csv", fio.render_csv(mps, fio.MPS_ACTIVITY_COLUMNS, kinds_m))
    fio.atomic_write_text(cfg.out / "followers_activity.csv",
                          fio.render_csv(fol, fio.FOLLOWERS_ACTIVITY_COLUMNS, kinds_f))
    return {"mps_activity": cfg.out / "mps_activity.csv", "followers_activity": cfg.out / "followers_activity.csv"}


def cmd_embed(cfg: PipelineConfig) -> dict:
    net_path = _require(cfg.out / "network.csv", "network (run ingest first)")
    net = read_edges_csv(net_path)
    k = min(cfg.ca.k_dims, min(net.n_followers, net.n_elites) - 1)
    if k < 1:
        raise StageError("network too small to embed")
    if k < cfg.ca.k_dims:
        log.warning("k_dims lowered from %d to %d by the network size", cfg.ca.k_dims, k)
    emb = correspondence_analysis(net, replace(cfg.ca, k_dims=k))
    save_embedding(emb, cfg.out / "embedding.bin")
    fio.write_frame(cfg.out / "singular_values.csv",
                    pd.DataFrame({"dimension": np.arange(1, k + 1), "singular_value": emb.singular_values}),
                    {"singular_value": "float5"})
    fio.write_manifest(cfg.out / "manifest_embed.json", "embed", cfg.as_dict(), cfg.seed,
                       {"network": net_path},
                       {"embedding": cfg.out / "embedding.bin", "singular_values": cfg.out / "singular_values.csv"})
    return {"k_dims": k, "singular_values": emb.singular_values.tolist()}


def _elite_party(cfg) -> dict[str, str]:
    el = pd.read_csv(_require(cfg.out / "elites.csv", "elites table (run ingest first)"), dtype=str,
                     keep_default_na=False)
    return dict(zip(el["pseudo_id"], el["party"]))


def _aliases(cfg) -> dict[str, str]:
    if "aliases" not in cfg.paths:
        return {}
    with open(_require(cfg.paths["aliases"], "party alias table"), newline="", encoding="utf-8") as fh:
        return {r["survey_party"]: r["party"] for r in csv.DictReader(fh)}


def cmd_calibrate(cfg: PipelineConfig) -> dict:
    emb_path = _require(cfg.out / "embedding.bin", "embedding (run embed first)")
    survey_path = _require(cfg.path("survey"), "survey reference")
    emb = load_embedding(emb_path)
    party_of = _elite_party(cfg)
    party_of = {e: party_of[e] for e in emb.elite_ids}
    cents = party_centroids(emb, party_of)
    sizes = pd.Series(party_of).value_counts().to_dict()
    surveys = read_survey_csv(survey_path, _aliases(cfg))
    dims = cfg.manifest("calibrate")
    calibs = fit_all(cents, surveys, dims, alpha=cfg.alpha, party_sizes=sizes)
    save_calibrations(calibs, cfg.out / "calibrations.json")
    rows = [(c.wave, c.dimension, c.column, len(c.parties), c.latent_dims_used, c.fidelity["pearson"],
             c.fidelity.get("pearson_weighted"), c.fidelity["mean_abs_diff"]) for c in calibs]
    fio.atomic_write_text(cfg.out / "calibration_fidelity.csv", fio.render_csv(
        rows, ["wave", "dimension", "column", "parties", "latent_dims_used", "pearson", "pearson_weighted",
               "mean_abs_diff"], ["str", "str", "str", "int", "int", "float3", "float3", "float3"]))
    summary = {"mean_pearson": float(np.nanmean([r[5] for r in rows])),
               "mean_abs_diff": float(np.mean([r[7] for r in rows]))}
    fio.write_manifest(cfg.out / "manifest_calibrate.json", "calibrate", cfg.as_dict(), cfg.seed,
                       {"embedding": emb_path, "survey": survey_path},
                       {"calibrations": cfg.out / "calibrations.json",
                        "fidelity": cfg.out / "calibration_fidelity.csv"})
    return summary


def cmd_positions(cfg: PipelineConfig) -> dict:
    emb_path = _require(cfg.out / "embedding.bin", "embedding (run embed first)")
    cal_path = _require(cfg.out / "calibrations.json", "calibrations (run calibrate first)")
    emb = load_embedding(emb_path)
    calibs = load_calibrations(cal_path)
    followers, elites = apply_calibration(emb, calibs)
    columns = [c.column for c in calibs]
    meta = pd.read_csv(_require(cfg.out / "elites.csv", "elites table"), dtype=str,
                       keep_default_na=False).set_index("pseudo_id")
    fio.write_mps_positions(cfg.out / "mps_positions.csv", elites, meta, columns)
    fio.write_followers_positions(cfg.out / "followers_positions.csv", followers, columns)
    fio.write_manifest(cfg.out / "manifest_positions.json", "positions", cfg.as_dict(), cfg.seed,
                       {"embedding": emb_path, "calibrations": cal_path},
                       {"mps_positions": cfg.out / "mps_positions.csv",
                        "followers_positions": cfg.out / "followers_positions.csv"})
    return {"followers": len(followers), "elites": len(elites), "columns": columns}


def _position_columns(frame: pd.DataFrame) -> list[str]:
    return [c for c in frame.columns if c not in ("pseudo_id", "name", "party")]


def cmd_media(cfg: PipelineConfig) -> dict:
    shares_path = _require(cfg.path("shares"), "shares table")
    pos_path = _require(cfg.path("followers_positions", "followers_positions.csv"), "follower positions")
    positions = fio.read_table(pos_path).set_index("pseudo_id")
    columns = _position_columns(positions)
    shares = pd.read_csv(shares_path, dtype={"pseudo_id": str, "domain": str})
    profiles = aggregate_shares(shares, positions, min_users=cfg.min_users, dimensions=columns,
                                n_boot=cfg.n_boot, seed=cfg.seed, threads=cfg.threads)
    inputs = {"shares": shares_path, "followers_positions": pos_path}
    outputs = {}
    if "categories" in cfg.paths:
        cats_df = pd.read_csv(_require(cfg.paths["categories"], "category table"), dtype=str)
        cats = dict(zip(cats_df["domain"], cats_df["media_category"]))
        attach_categories(profiles, cats)
        inputs["categories"] = cfg.paths["categories"]
        rows = []
        for col in columns:
            try:
                dist = category_distributions(profiles, cats, col)
            except ValueError:
                break
            rows += [(col, s.category, s.count, s.mean, s.std) for s in dist.values()]
        if rows:
            fio.atomic_write_text(cfg.out / "media_categories.csv", fio.render_csv(
                rows, ["column", "media_category", "count", "mean", "std"],
                ["str", "str", "int", "float3", "float3"]))
            outputs["categories"] = cfg.out / "media_categories.csv"
    fio.write_domains(cfg.out / "domains_positions.csv", profiles_frame(profiles, columns), columns)
    outputs["domains"] = cfg.out / "domains_positions.csv"
    fio.write_manifest(cfg.out / "manifest_media.json", "media", cfg.as_dict(), cfg.seed, inputs, outputs)
    return {"domains": len(profiles)}


def _label_tables(cfg, data_dir: Path | None) -> tuple[dict[str, LabelTable], dict]:
    tables, inputs = {}, {}
    for source, key, released in (("human", "labels_human", "followers_human_annotations.csv"),
                                  ("llm", "labels_llm", "followers_llm_annotations.csv")):
        path = cfg.paths.get(key) or (data_dir / released if data_dir else None)
        if path is None or not Path(path).exists():
            continue
        table = read_labels_csv(path, source)
        if source == "llm":
            table = sanitize_labels(table)
        tables[source] = table
        inputs[key] = path
    return tables, inputs


def cmd_validate(cfg: PipelineConfig) -> dict:
    data_dir = cfg.paths.get("data")
    src = data_dir if data_dir else cfg.out
    f_path = _require(Path(src) / "followers_positions.csv", "follower positions")
    m_path = _require(Path(src) / "mps_positions.csv", "MP positions")
    followers = fio.read_table(f_path).set_index("pseudo_id")
    mps = fio.read_table(m_path).set_index("pseudo_id")
    columns = _position_columns(followers)
    inputs = {"followers_positions": f_path, "mps_positions": m_path}
    outputs = {}

    pop = followers[columns] if cfg.table1_population == "followers" else pd.concat(
        [followers[columns], mps[columns]])
    t1 = dimension_summary(pop, columns)
    fio.write_frame(cfg.out / "table1.csv", t1)
    outputs["table1"] = cfg.out / "table1.csv"

    labels, lab_inputs = _label_tables(cfg, Path(data_dir) if data_dir else None)
    inputs.update(lab_inputs)
    plan = read_plan_csv(cfg.paths["plan"]) if "plan" in cfg.paths else default_plan()
    if "plan" in cfg.paths:
        inputs["plan"] = cfg.paths["plan"]
    plan = [p for p in plan if p.column in followers.columns]
    result = {"table1": t1}
    if labels:
        sep = separation_report(plan, followers, labels)
        fio.write_frame(cfg.out / "separation.csv", sep, {"n_a": "int", "n_b": "int"})
        outputs["separation"] = cfg.out / "separation.csv"
        result["separation"] = sep
        fio.atomic_write_text(cfg.out / "bins.csv", _bins_csv(plan, followers, labels))
        outputs["bins"] = cfg.out / "bins.csv"
        disc = [(src_, pair, n, pct) for src_, t in sorted(labels.items()) for pair, (n, pct) in t.discarded.items()]
        fio.atomic_write_text(cfg.out / "label_discards.csv", fio.render_csv(
            disc, ["annotator", "pair", "discarded", "percent"], ["str", "str", "int", "float3"]))
        outputs["label_discards"] = cfg.out / "label_discards.csv"

    shared = [d for d in cfg.shared_dimensions
              if all(f"{d}_{w[-2:]}" in followers.columns for w in cfg.waves)]
    if shared and len(cfg.waves) == 2:
        party = mps["party"].to_dict() if "party" in mps.columns else None
        cw = cross_wave_report(followers, mps, party, shared, cfg.waves)
        fio.write_frame(cfg.out / "cross_wave.csv", cw)
        fio.write_frame(cfg.out / "cross_wave_points.csv", cross_wave_points(followers, mps, shared, cfg.waves))
        outputs["cross_wave"] = cfg.out / "cross_wave.csv"
        outputs["cross_wave_points"] = cfg.out / "cross_wave_points.csv"
        result["cross_wave"] = cw
    fio.write_manifest(cfg.out / "manifest_validate.json", "validate", cfg.as_dict(), cfg.seed, inputs, outputs)
    return result


def _bins_csv(plan: list[PlanRow], positions: pd.DataFrame, labels: dict[str, LabelTable]) -> str:
    rows = []
    seen = set()
    for pr in plan:
        table = labels.get(pr.annotator)
        if table is None:
            continue
        for lab in (pr.label_a, pr.label_b):
            key = (pr.column, pr.annotator, lab)
            if lab not in table.frame.columns or key in seen:
                continue
            seen.add(key)
            b = bin_concentration(positions[pr.column], table, lab)
            for r in b.itertuples(index=False):
                rows.append((pr.column, pr.annotator, lab, r.bin_lo, r.bin_hi, r.n_total, r.n_labeled,
                             r.fraction, r.ci_lo, r.ci_hi, "true" if r.empty else "false"))
    return fio.render_csv(rows, ["column", "annotator", "label", "bin_lo", "bin_hi", "n_total", "n_labeled",
                                 "fraction", "ci_lo", "ci_hi", "empty"],
                          ["str", "str", "str", "float3", "float3", "int", "int", "float3", "float3", "float3",
                           "str"])


def cmd_report(cfg: PipelineConfig) -> str:
    lines = [f"output directory: {cfg.out}"]
    for stage in ("ingest", "embed", "calibrate", "positions", "media", "validate", "synth"):
        mpath = cfg.out / f"manifest_{stage}.json"
        if not mpath.exists():
            continue
        m = json.loads(mpath.read_text(encoding="utf-8"))
        lines.append(f"[{stage}] seed={m['seed']} config={m['config_sha256'][:12]} "
                     f"outputs={', '.join(v['path'] for v in m['outputs'].values())}")
    s = cfg.out / "ingest_summary.json"
    if s.exists():
        d = json.loads(s.read_text(encoding="utf-8"))
        lines.append(f"network: {d['followers']} followers, {d['elites']} elites, {d['edges']} edges "
                     f"(mean in-degree {d['mean_elite_in_degree']:.1f}, out-degree {d['mean_follower_out_degree']:.2f})")
    for name in ("calibration_fidelity.csv", "table1.csv", "separation.csv", "cross_wave.csv", "recovery.csv"):
        p = cfg.out / name
        if p.exists():
            lines.append(f"--- {name}")
            lines.append(p.read_text(encoding="utf-8").rstrip())
    text = "\n".join(lines) + "\n"
    fio.atomic_write_text(cfg.out / "report.txt", text)
    return text


# ---------------------------------------------------------------- synthetic run


def synth_params(cfg: PipelineConfig) -> SyntheticModelParams:
    p = SyntheticModelParams.from_mapping(cfg.synth)
    return replace(p, seed=cfg.seed)


def write_synthetic_inputs(cfg: PipelineConfig, params: SyntheticModelParams):
    """Generate a network and every side input the pipeline consumes."""
    net, truth = generate_network(params)
    rng = np.random.default_rng(np.random.SeedSequence([params.seed, 17]))
    d = truth.survey_matrix.shape[0]
    inp = cfg.out / "inputs"
    paths = {k: inp / f"{k}.csv" for k in ("edges", "elites", "survey", "activity", "shares", "categories",
                                          "labels_llm", "labels_human", "plan")}
    fio.atomic_write_text(paths["edges"], fio.render_csv(net.edge_pairs(), ["follower_id", "elite_id"],
                                                         ["str", "str"]))
    fio.atomic_write_text(paths["elites"], fio.render_csv(
        ((e, f"Elite {e}", truth.elite_party[e]) for e in truth.elite_ids), ["id", "name", "party"],
        ["str"] * 3))

    rows = []
    for wave, noise in (("2019", 0.15), ("2023", 0.0)):
        for party, scores in sorted(truth.party_scores.items()):
            for k in range(d):
                v = float(np.clip(scores[k] + (rng.normal(0, noise) if noise else 0.0), 0, 10))
                rows.append((party, truth.survey_dims[k], wave, v, 10))
    fio.atomic_write_text(paths["survey"], fio.render_csv(
        rows, ["party", "dimension", "wave", "score", "native_scale_max"], ["str", "str", "str", "float5", "int"]))

    collected = dt.date(2023, 6, 1)
    ids = list(truth.follower_ids) + list(truth.elite_ids)
    created = [collected - dt.timedelta(days=int(x)) for x in rng.integers(30, 5000, size=len(ids))]
    posts = rng.poisson(1500, size=len(ids))
    followers = [truth.follower_popularity[i] for i in truth.follower_ids] + \
        rng.integers(1000, 100000, size=len(truth.elite_ids)).tolist()
    followees = rng.poisson(300, size=len(ids))
    fio.atomic_write_text(paths["activity"], fio.render_csv(
        zip(ids, posts, [c.isoformat() for c in created], [collected.isoformat()] * len(ids), followers, followees),
        ["id", "total_posts", "created_at", "collected_at", "followers", "followees"],
        ["str", "int", "str", "str", "int", "int"]))

    shares, domain_latent = generate_shares(truth, n_domains=int(cfg.synth.get("n_domains", 30)), seed=params.seed)
    fio.atomic_write_text(paths["shares"], fio.render_csv(
        shares.itertuples(index=False, name=None), ["pseudo_id", "domain", "tweet_count"], ["str", "str", "int"]))
    fio.atomic_write_text(paths["categories"], fio.render_csv(
        ((dom, "Bloc A" if lat[0] < 0 else "Bloc B") for dom, lat in sorted(domain_latent.items())),
        ["domain", "media_category"], ["str", "str"]))

    plan = []
    for source in ("llm", "human"):
        lab = generate_labels(truth, seed=params.seed + (0 if source == "llm" else 1), source=source)
        fio.write_frame(paths[f"labels_{source}"], lab, {c: "float3" for c in lab.columns}, index="pseudo_id")
        for dim in truth.survey_dims:
            for wave in ("2019", "2023"):
                plan.append((dim, wave, source, f"low_{dim}", f"high_{dim}"))
    fio.atomic_write_text(paths["plan"], fio.render_csv(
        plan, ["dimension", "wave", "annotator", "label_a", "label_b"], ["str"] * 5))
    return paths, truth


def _translate_ids(cfg, frame: pd.DataFrame) -> pd.DataFrame:
    """Swap raw follower ids in ``frame`` for pseudo ids using the private sidecar."""
    mapping = PseudoIdMap.read_sidecar(cfg.out / "private" / "pseudo_ids.csv")
    frame = frame.copy()
    frame["pseudo_id"] = frame["pseudo_id"].map(mapping)
    return frame.dropna(subset=["pseudo_id"])


def cmd_synth(cfg: PipelineConfig) -> dict:
    t0 = time.perf_counter()
    params = synth_params(cfg)
    paths, truth = write_synthetic_inputs(cfg, params)
    cfg = replace(cfg, paths={**cfg.paths, **{k: v for k, v in paths.items()
                                              if k not in ("shares", "labels_llm", "labels_human")}},
                  dimensions="survey", shared_dimensions=tuple(truth.survey_dims),
                  waves=("2019", "2023"), min_users=int(cfg.synth.get("min_users", 20)),
                  n_boot=int(cfg.synth.get("n_boot", 200)))
    # shares and labels carry raw ids; publish them under pseudo ids like the real inputs
    cmd_ingest(cfg)
    for key in ("shares", "labels_llm", "labels_human"):
        df = pd.read_csv(paths[key], dtype={"pseudo_id": str})
        pub = cfg.out / "inputs" / f"{key}_pseudo.csv"
        kinds = {c: "float3" for c in df.columns if c.startswith(("low_", "high_"))}
        fio.write_frame(pub, _translate_ids(cfg, df), kinds)
        cfg.paths[key] = pub
    cmd_embed(cfg)
    cmd_calibrate(cfg)
    cmd_positions(cfg)
    cmd_media(cfg)
    cmd_validate(cfg)

    pos = fio.read_table(cfg.out / "followers_positions.csv").set_index("pseudo_id")
    back = {p: r for r, p in PseudoIdMap.read_sidecar(cfg.out / "private" / "pseudo_ids.csv").items()}
    raw_index = [back[p] for p in pos.index]
    true = truth.follower_survey_frame().loc[raw_index]
    rows = []
    for col in pos.columns:
        dim = col.rsplit("_", 1)[0]
        rows.append((col, dim, len(pos), pearson(pos[col].to_numpy(), true[dim].to_numpy())))
    fio.atomic_write_text(cfg.out / "recovery.csv", fio.render_csv(
        rows, ["column", "true_dimension", "followers", "pearson"], ["str", "str", "int", "float5"]))
    summary = "\n".join(f"{c}: Pearson {format(r, '.5f')} over {n} followers" for c, _, n, r in rows) + "\n"
    fio.atomic_write_text(cfg.out / "recovery_summary.txt", summary)
    fio.write_manifest(cfg.out / "manifest_synth.json", "synth", cfg.as_dict(), cfg.seed, paths,
                       {"recovery": cfg.out / "recovery.csv", "summary": cfg.out / "recovery_summary.txt"})
    # runtime goes to stderr only so artifacts stay byte-identical
    log.info("synthetic pipeline finished in %.2f s", time.perf_counter() - t0)
    return {"recovery": rows}


# ---------------------------------------------------------------- entry point

COMMANDS = {
    "ingest": cmd_ingest,
    "embed": cmd_embed,
    "calibrate": cmd_calibrate,
    "positions": cmd_positions,
    "media": cmd_media,
    "validate": cmd_validate,
    "synth": cmd_synth,
    "report": cmd_report,
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with sections run, paths, model, ca, calibrate, media, "
                                         "validate, synth")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config entry (repeatable)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--threads", type=int)
    common.add_argument("--min-mps", type=int, dest="min_mps",
                        help="minimum number of elites a follower must follow (default 3)")
    common.add_argument("--min-followers", type=int, dest="min_followers",
                        help="drop followers whose own follower count is below this")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="ideoscale", parents=[common],
                                     description="Ideological positions from follower networks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=f"run the {name} stage")
        if name == "validate":
            sp.add_argument("--data", help="directory with released position and annotation tables")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = build_config(args)
        result = COMMANDS[args.command](cfg)
    except (StageError, ParseError, ConvergenceError, ValueError, KeyError, OSError) as exc:
        diag = {"command": args.command, "error": type(exc).__name__, "message": str(exc).strip("'\"")}
        line = getattr(exc, "line", None)
        if line is not None:
            diag["line"] = line
        print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return 2
    if args.command == "report":
        sys.stdout.write(result)
    elif isinstance(result, dict):
        printable = {k: v for k, v in result.items() if not isinstance(v, pd.DataFrame)}
        if printable:
            print(json.dumps(printable, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
