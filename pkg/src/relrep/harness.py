"""Run orchestration: config resolution, single runs, multi-seed sweeps, reports.

A run config is one JSON document; command-line flags override fields.  Seeded
runs share loaded tables and stores read-only and never share mutable state,
so a sweep may execute them in worker processes without changing any output.
"""

from __future__ import annotations

import concurrent.futures
import copy
import hashlib
import json
import os
import time
from pathlib import Path

from . import __version__
from .corpus import Dataset, encode_labels, load_dataset, parse_semeval, save_dataset, split_train_dev
from .errors import InputError
from .metrics import RunSetReport, aggregate, confusion, summarize_runs
from .net import (AdamConfig, CnnConfig, TrainConfig, gradcheck, predict_dataset,
                  save_checkpoint, toy_linear_check, train, write_history)
from .net.train import build_frozen_cache
from .representations import (CharChannel, ContextualChannel, PositionChannel,
                              PosTagChannel, RepresentationStack, StaticChannel,
                              load_static_text, read_ctx_store, read_pos_sidecar)
from .synth import make_gradcheck_setup

CONFIG_DEFAULTS = {
    "train": None,
    "test": None,
    "pos_sidecar": None,
    "dev_fraction": 0.1,
    "dev_seed": 1,
    "label_policy": "collapse",
    "stacks": [],
    "cnn": {},
    "adam": {},
    "train_cfg": {},
    "seeds": list(range(1, 11)),
    "out": "runs",
    "workers": None,
}


def load_config(path, overrides: dict | None = None) -> dict:
    """Read the JSON config, fill defaults, apply CLI overrides, validate."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    unknown = set(raw) - set(CONFIG_DEFAULTS)
    if unknown:
        raise InputError(f"unknown config fields: {sorted(unknown)}")
    resolved = copy.deepcopy(CONFIG_DEFAULTS)
    resolved.update(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            resolved[key] = value
    base = Path(path).parent
    for key in ("train", "test", "pos_sidecar"):
        if resolved[key] is not None:
            resolved[key] = str((base / resolved[key]))
    for spec in resolved["stacks"]:
        for channel in spec.get("channels", []):
            if "path" in channel:
                channel["path"] = str(base / channel["path"])
    _validate_config(resolved)
    return resolved


def _validate_config(cfg: dict) -> None:
    if cfg["train"] is None or cfg["test"] is None:
        raise InputError("config needs 'train' and 'test' dataset paths")
    if not cfg["stacks"]:
        raise InputError("config needs at least one stack")
    seeds = cfg["seeds"]
    if not seeds or len(set(seeds)) != len(seeds):
        raise InputError("seeds must be non-empty and unique")
    names = [s.get("name") for s in cfg["stacks"]]
    if None in names or len(set(names)) != len(names):
        raise InputError("every stack needs a unique name")
    for key in ("train", "test", "pos_sidecar"):
        if cfg[key] is not None and not os.path.exists(cfg[key]):
            raise InputError(f"{key} file not found: {cfg[key]}")
    for spec in cfg["stacks"]:
        if not spec.get("channels"):
            raise InputError(f"stack {spec['name']!r} has no channels")
        for channel in spec["channels"]:
            kind = channel.get("kind")
            if kind not in ("static", "contextual", "position", "pos_tags", "chars"):
                raise InputError(f"stack {spec['name']!r}: unknown channel kind {kind!r}")
            if kind in ("static", "contextual"):
                path = channel.get("path")
                if not path:
                    raise InputError(f"stack {spec['name']!r}: {kind} channel needs a path")
                if not os.path.exists(path):
                    raise InputError(f"stack {spec['name']!r}: missing file {path}")
            if kind == "pos_tags" and not cfg["pos_sidecar"]:
                raise InputError("a pos_tags channel needs the pos_sidecar config field")


def config_digest(cfg: dict) -> str:
    """sha256 over the semantic config content (execution knobs excluded)."""
    semantic = {k: v for k, v in cfg.items() if k not in ("out", "workers")}
    blob = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class _Resources:
    """Lazy, shared, read-only loads of tables / stores / sidecars."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self._static: dict[tuple, object] = {}
        self._ctx: dict[str, object] = {}
        self._pos = None

    def static(self, path: str, oov_seed: int):
        key = (path, oov_seed)
        if key not in self._static:
            self._static[key] = load_static_text(path, oov_seed)
        return self._static[key]

    def ctx(self, path: str):
        if path not in self._ctx:
            self._ctx[path] = read_ctx_store(path)
        return self._ctx[path]

    def pos_tags(self):
        if self._pos is None:
            self._pos = read_pos_sidecar(self.cfg["pos_sidecar"])
        return self._pos


def build_stack(spec: dict, resources: _Resources) -> RepresentationStack:
    channels = []
    for i, channel in enumerate(spec["channels"]):
        kind = channel["kind"]
        name = channel.get("name", f"{kind}{i}")
        if kind == "static":
            table = resources.static(channel["path"], channel.get("oov_seed", 0))
            channels.append(StaticChannel(table, name))
        elif kind == "contextual":
            channels.append(ContextualChannel(resources.ctx(channel["path"]), name))
        elif kind == "position":
            channels.append(PositionChannel(channel.get("max_dist", 30),
                                            channel.get("dim", 5), name))
        elif kind == "pos_tags":
            channels.append(PosTagChannel(resources.pos_tags(), name=name))
        elif kind == "chars":
            channels.append(CharChannel(channel.get("char_dim", 16),
                                        channel.get("conv_width", 3),
                                        channel.get("out_dim", 16), name=name))
    return RepresentationStack(channels)


def _load_datasets(cfg: dict):
    policy = cfg["label_policy"]
    full_train = load_dataset(cfg["train"], "train", policy)
    test = load_dataset(cfg["test"], "test", policy)
    train_ds, dev_ds = split_train_dev(full_train, cfg["dev_fraction"], cfg["dev_seed"])
    return train_ds, dev_ds, test


def run_single(cfg: dict, stack_name: str, seed: int, out_dir) -> dict:
    """One seeded training run; writes checkpoint, history, and metrics JSON."""
    spec = next((s for s in cfg["stacks"] if s["name"] == stack_name), None)
    if spec is None:
        raise InputError(f"no stack named {stack_name!r} in config")
    resources = _Resources(cfg)
    stack = build_stack(spec, resources)
    train_ds, dev_ds, test_ds = _load_datasets(cfg)

    cnn = CnnConfig(num_classes=len(train_ds.labels), input_dim=stack.total_dim,
                    **cfg["cnn"])
    adam = AdamConfig(**cfg["adam"])
    tc = TrainConfig(seed=seed, **cfg["train_cfg"])

    # Validate test-side aux data before any epoch runs (fail fast).
    test_golds = encode_labels(test_ds, train_ds.labels)
    test_frozen = build_frozen_cache(test_ds, stack, cnn.sentence_len)

    store, history = train(train_ds, dev_ds, stack, cnn, adam, tc)

    preds = predict_dataset(test_ds, store.params, cnn, stack, test_frozen)
    cm = confusion(preds, test_golds, len(train_ds.labels))
    report = aggregate(cm, train_ds.labels)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = bytes.fromhex(config_digest(cfg))
    save_checkpoint(out_dir / "checkpoint.rrm1", store, digest)
    write_history(out_dir / "history.csv", history)
    p, r, f1 = report.macro
    metrics = {
        "stack": stack_name,
        "seed": seed,
        "P": p,
        "R": r,
        "F1": f1,
        "micro": list(report.micro),
        "per_class": [list(t) for t in report.per_class],
        "epochs": history[-1][0],
    }
    with open(out_dir / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return metrics


def _bench_worker(args):
    cfg, stack_name, seed, out_dir = args
    started = time.monotonic()
    metrics = run_single(cfg, stack_name, seed, out_dir)
    return stack_name, seed, metrics, time.monotonic() - started


def run_bench(cfg: dict) -> dict:
    """Every stack x seed; aggregates reports; returns the bench manifest."""
    out_root = Path(cfg["out"])
    out_root.mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, spec["name"], seed, out_root / spec["name"] / f"seed{seed}")
            for spec in cfg["stacks"] for seed in cfg["seeds"]]

    workers = cfg["workers"] or min(len(jobs), os.cpu_count() or 1)
    results = {}
    failures = []
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            for job, future in [(j, pool.submit(_bench_worker, j)) for j in jobs]:
                try:
                    name, seed, metrics, wall = future.result()
                    results[(name, seed)] = (metrics, wall)
                except Exception as exc:
                    failures.append((job[1], job[2], str(exc)))
    else:
        for job in jobs:
            try:
                name, seed, metrics, wall = _bench_worker(job)
                results[(name, seed)] = (metrics, wall)
            except Exception as exc:
                failures.append((job[1], job[2], str(exc)))

    manifest = {
        "artifact_version": __version__,
        "config_digest": config_digest(cfg),
        "stacks": {},
        "failures": [{"stack": n, "seed": s, "error": e} for n, s, e in failures],
    }
    reports = []
    for spec in cfg["stacks"]:
        name = spec["name"]
        per_seed = [(seed, tuple(results[(name, seed)][0][k] for k in ("P", "R", "F1")))
                    for seed in cfg["seeds"] if (name, seed) in results]
        runs = {
            str(seed): {
                "metrics": str(out_root / name / f"seed{seed}" / "metrics.json"),
                "wall_clock": results[(name, seed)][1],
            }
            for seed in cfg["seeds"] if (name, seed) in results
        }
        manifest["stacks"][name] = {"runs": runs, "complete": len(per_seed) == len(cfg["seeds"])}
        if per_seed:
            reports.append(summarize_runs(per_seed, name))

    write_reports(out_root, reports)
    with open(out_root / "bench_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    if failures:
        raise InputError(
            "bench aborted: "
            + "; ".join(f"{n}/seed{s}: {e}" for n, s, e in failures)
            + " (partial results kept in the manifest)")
    return manifest


def write_reports(out_root, reports: list[RunSetReport]) -> None:
    out_root = Path(out_root)
    with open(out_root / "report.csv", "w", encoding="utf-8") as fh:
        fh.write("stack,P_min,R_min,F1_min\n")
        for rep in reports:
            fh.write(f"{rep.stack},{rep.minima[0]!r},{rep.minima[1]!r},{rep.minima[2]!r}\n")
    with open(out_root / "boxplot.csv", "w", encoding="utf-8") as fh:
        fh.write("stack,min,whisker_low,q1,median,q3,whisker_high,max,outliers\n")
        for rep in reports:
            b = rep.boxplot
            outliers = ";".join(repr(v) for v in b.outliers)
            fh.write(f"{rep.stack},{b.min!r},{b.whisker_low!r},{b.q1!r},{b.median!r},"
                     f"{b.q3!r},{b.whisker_high!r},{b.max!r},{outliers}\n")
    payload = {
        rep.stack: {
            "per_seed": {str(seed): list(triple) for seed, triple in rep.per_seed},
            "min": list(rep.minima),
            "mean": list(rep.means),
            "max": list(rep.maxima),
            "boxplot": {
                "min": rep.boxplot.min, "q1": rep.boxplot.q1,
                "median": rep.boxplot.median, "q3": rep.boxplot.q3,
                "max": rep.boxplot.max, "whisker_low": rep.boxplot.whisker_low,
                "whisker_high": rep.boxplot.whisker_high,
                "outliers": rep.boxplot.outliers,
            },
        }
        for rep in reports
    }
    with open(out_root / "report.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def regenerate_reports(out_dir) -> list[RunSetReport]:
    """Rebuild report files from the per-run metrics.json files on disk."""
    out_root = Path(out_dir)
    manifest_file = out_root / "bench_manifest.json"
    if not manifest_file.exists():
        raise InputError(f"no bench manifest under {out_dir}")
    with open(manifest_file, encoding="utf-8") as fh:
        manifest = json.load(fh)
    reports = []
    for name, entry in sorted(manifest["stacks"].items()):
        per_seed = []
        for seed_str, run in sorted(entry["runs"].items(), key=lambda kv: int(kv[0])):
            with open(run["metrics"], encoding="utf-8") as fh:
                m = json.load(fh)
            per_seed.append((int(seed_str), (m["P"], m["R"], m["F1"])))
        if per_seed:
            reports.append(summarize_runs(per_seed, name))
    write_reports(out_root, reports)
    return reports


def run_prep(corpus_path, out_path, direction_policy: str = "collapse") -> Dataset:
    with open(corpus_path, encoding="utf-8") as fh:
        raw = fh.read()
    dataset = parse_semeval(raw, direction_policy=direction_policy)
    save_dataset(dataset, out_path)
    return dataset


def run_gradcheck(seed: int = 7, h: float | None = None, tolerance: float = 1e-4,
                  toy_linear: bool = False) -> tuple[float, bool]:
    if toy_linear:
        err = toy_linear_check(seed, h if h is not None else 1e-2)
    else:
        config, stack, batch = make_gradcheck_setup(seed)
        err = gradcheck(config, stack, batch, seed, h=h if h is not None else 1e-5)
    return err, err < tolerance
