"""Experiment runner: sequences, budgets, repetitions, result tables.

Results are delimited text, one row per successful evaluation. Per-row
wall-clock goes to a separate timing file so the results table itself is
byte-identical across reruns of the same (config, seed). Runs are
resumable: a killed run keeps completed (optimizer, repetition) groups
and recomputes only the unfinished ones.
"""

from __future__ import annotations

import csv
import hashlib
import json
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import benchmarks
from .baselines import RandomSearchOptimizer, SharedNNOptimizer, SingleTaskNNOptimizer
from .engine import LBOConfig, LBOOptimizer, SnapshotStore, snapshot
from .external import EvaluationError, ExternalBlackBox
from .space import Categorical, Continuous, Integer, SearchSpace

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "load_config",
    "seed_for",
    "run",
    "aggregate",
    "normalize",
    "report",
    "load_table",
]

RESULT_FIELDS = ["optimizer", "sequence", "task", "rep", "eval_index", "y", "best"]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    benchmark: dict
    optimizers: list
    budget: int = 200
    init: int = 5
    repetitions: int = 10
    seed: int = 0
    outdir: str = "results"

    def __post_init__(self):
        if self.budget < self.init:
            raise ConfigError("budget must be >= initial design size")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not self.optimizers:
            raise ConfigError("need at least one optimizer")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    known = {"benchmark", "optimizers", "budget", "init", "repetitions", "seed", "outdir"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    try:
        return ExperimentConfig(**raw)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def space_from_decl(decl) -> SearchSpace:
    dims = []
    for d in decl:
        kind = d.get("type")
        if kind == "continuous":
            dims.append(Continuous(d["name"], d["lo"], d["hi"]))
        elif kind == "integer":
            dims.append(Integer(d["name"], d["lo"], d["hi"]))
        elif kind == "categorical":
            dims.append(Categorical(d["name"], tuple(d["labels"])))
        else:
            raise ConfigError(f"unknown dimension type {kind!r}")
    return SearchSpace(dims)


def seed_for(master: int, *labels) -> np.random.Generator:
    """Counter-based seed splitting: streams keyed by stable label hashes.

    Adding optimizers or repetitions never perturbs other streams.
    """
    words = [int(master) & 0xFFFFFFFF]
    for lab in labels:
        h = hashlib.sha256(str(lab).encode()).digest()
        words.append(int.from_bytes(h[:4], "little"))
    return np.random.default_rng(np.random.SeedSequence(words))


def _make_benchmark(config: ExperimentConfig):
    """Returns (space, task functions, sequence label, closer)."""
    b = config.benchmark
    kind = b.get("type")
    if kind == "branin_sequence":
        spec = benchmarks.SequenceSpec(
            sigma=float(b.get("sigma", 0.01)),
            n_functions=int(b.get("n_functions", 5)),
            seed=int(b.get("seed", config.seed)),
        )
        fns = benchmarks.perturbed_sequence(spec)
        return benchmarks.branin_space(), fns, f"branin_sigma_{spec.sigma}", None
    if kind == "branin":
        return benchmarks.branin_space(), [lambda p: benchmarks.branin(*p)], "branin", None
    if kind == "external":
        space = space_from_decl(b["space"])
        box = ExternalBlackBox(b["command"], space, timeout=float(b.get("timeout", 60.0)))
        n_tasks = int(b.get("n_tasks", 1))
        return space, [box] * n_tasks, "external", box.close
    raise ConfigError(f"unknown benchmark type {b.get('type')!r}")


def _make_optimizer(spec: dict, space: SearchSpace, rng, store_root=None):
    kind = spec.get("kind")
    sense = spec.get("sense", "min")
    name = spec.get("name")
    if kind == "random":
        opt = RandomSearchOptimizer(space, sense=sense, rng=rng)
    elif kind == "single_task_nn":
        opt = SingleTaskNNOptimizer(
            space, width=int(spec.get("width", 50)), sense=sense, rng=rng,
            fit_steps=int(spec.get("fit_steps", 300)),
            update_steps=int(spec.get("update_steps", 30)),
            n_candidates=int(spec.get("n_candidates", 10_000)))
    elif kind == "shared_nn":
        opt = SharedNNOptimizer(
            space, width=int(spec.get("width", 50)), sense=sense, rng=rng,
            fit_steps=int(spec.get("fit_steps", 300)),
            update_steps=int(spec.get("update_steps", 30)),
            n_candidates=int(spec.get("n_candidates", 10_000)))
    elif kind == "lbo":
        cfg_fields = {f for f in LBOConfig.__dataclass_fields__}
        cfg = LBOConfig(**{k: v for k, v in spec.items() if k in cfg_fields})
        store = SnapshotStore(store_root) if store_root else None
        opt = LBOOptimizer(space, cfg, sense=sense, rng=rng, store=store)
    else:
        raise ConfigError(f"unknown optimizer kind {kind!r}")
    if name:
        opt.name = name
    return opt


def optimizer_name(spec: dict) -> str:
    if spec.get("name"):
        return spec["name"]
    kind = spec.get("kind", "?")
    if kind == "shared_nn":
        return f"shared_nn_{int(spec.get('width', 50))}"
    return kind


def run(config: ExperimentConfig):
    """Execute the experiment; returns (rows, timing_rows)."""
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    results_path = outdir / "results.csv"
    timing_path = outdir / "timing.csv"

    existing = load_table(results_path) if results_path.exists() else []
    existing_timing = load_table(timing_path) if timing_path.exists() else []

    space, fns, seq_label, closer = _make_benchmark(config)
    n_tasks = len(fns)
    per_group = config.budget * n_tasks

    # completed (optimizer, rep) groups survive a resume
    groups: dict[tuple, list] = {}
    for r in existing:
        groups.setdefault((r["optimizer"], int(r["rep"])), []).append(r)
    done = {k for k, v in groups.items() if len(v) == per_group}

    rows = [r for k in sorted(done) for r in groups[k]]
    timing_rows = [r for r in existing_timing
                   if (r["optimizer"], int(r["rep"])) in done]

    try:
        for rep in range(config.repetitions):
            # identical initial designs for every optimizer in this repetition
            designs = [
                space.sample_uniform(config.init, seed_for(config.seed, "init", rep, t))
                for t in range(n_tasks)
            ]
            for spec in config.optimizers:
                name = optimizer_name(spec)
                if (name, rep) in done:
                    continue
                store_root = None
                if spec.get("kind") == "lbo":
                    store_root = outdir / "stores" / f"{name}_rep{rep}"
                    if store_root.exists():
                        shutil.rmtree(store_root)
                rng = seed_for(config.seed, "opt", name, rep)
                opt = _make_optimizer(spec, space, rng, store_root)
                new_rows, new_timing = _run_group(
                    opt, name, fns, designs, config, seq_label, rep, outdir)
                rows.extend(new_rows)
                timing_rows.extend(new_timing)
                _write_table(results_path, RESULT_FIELDS, sorted_rows(rows))
                _write_table(timing_path,
                             ["optimizer", "sequence", "task", "rep", "eval_index", "seconds"],
                             timing_rows)
    finally:
        if closer:
            closer()

    rows = sorted_rows(rows)
    _write_table(results_path, RESULT_FIELDS, rows)
    return rows, timing_rows


def _run_group(opt, name, fns, designs, config, seq_label, rep, outdir):
    rows, timing = [], []
    models, archives = [], []
    for t, f in enumerate(fns, start=1):
        opt.start_task(t)
        best = np.inf if opt.sense == "min" else -np.inf
        better = min if opt.sense == "min" else max
        evals = 0
        Xs, ys = [], []
        for p in designs[t - 1]:
            t0 = time.perf_counter()
            y = f(p)
            opt.tell(p, y)
            best = better(best, y)
            evals += 1
            rows.append(_row(name, seq_label, t, rep, evals, y, best))
            timing.append({"optimizer": name, "sequence": seq_label, "task": t,
                           "rep": rep, "eval_index": evals,
                           "seconds": time.perf_counter() - t0})
            Xs.append(opt.space.encode(p))
            ys.append(y)
        while evals < config.budget:
            t0 = time.perf_counter()
            y = None
            for _ in range(20):
                p = opt.ask()
                try:
                    y = f(p)
                    break
                except EvaluationError:
                    continue
            if y is None:
                raise RuntimeError(f"evaluator kept failing for optimizer {name}, task {t}")
            opt.tell(p, y)
            best = better(best, y)
            evals += 1
            rows.append(_row(name, seq_label, t, rep, evals, y, best))
            timing.append({"optimizer": name, "sequence": seq_label, "task": t,
                           "rep": rep, "eval_index": evals,
                           "seconds": time.perf_counter() - t0})
            Xs.append(opt.space.encode(p))
            ys.append(y)
        if isinstance(opt, LBOOptimizer) and opt.model is not None:
            models.append(opt.model)
            yi = np.asarray(ys, dtype=float)
            archives.append((np.asarray(Xs), -yi if opt.sense == "min" else yi))
    if isinstance(opt, LBOOptimizer):
        if opt.model is not None:
            snapshot(opt.model, opt.store)
        _write_lbo_diagnostics(opt, models, archives, rep, outdir, name)
    return rows, timing


def _write_lbo_diagnostics(opt, models, archives, rep, outdir, name):
    M = opt.config.M
    counts = []
    gm = opt.store.gate_matrix(M)
    for i in range(1, gm.shape[0] + 1):
        counts.append({"optimizer": name, "rep": rep, "task": i,
                       "mtilde": int(np.sum(gm[:i].any(axis=0)))})
    path = Path(outdir) / "active_counts.csv"
    old = load_table(path) if path.exists() else []
    old = [r for r in old if not (r["optimizer"] == name and int(r["rep"]) == rep)]
    _write_table(path, ["optimizer", "rep", "task", "mtilde"], old + counts)
    if models:
        H = benchmarks.correlation_heatmap(models, archives)
        np.savetxt(Path(outdir) / f"heatmap_{name}_rep{rep}.csv", H, delimiter=",")


def _row(name, seq, task, rep, idx, y, best):
    return {"optimizer": name, "sequence": seq, "task": task, "rep": rep,
            "eval_index": idx, "y": repr(float(y)), "best": repr(float(best))}


def sorted_rows(rows):
    return sorted(rows, key=lambda r: (r["optimizer"], int(r["rep"]),
                                       int(r["task"]), int(r["eval_index"])))


def _write_table(path, fields, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in fields})


def load_table(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def aggregate(rows, tasks=None):
    """Per-optimizer running-best curves: mean/median and interquartile band.

    `tasks` restricts to a task subset (e.g. [1,2,3]). Aggregation is
    over (repetition, task) pairs at each evaluation index.
    """
    out = {}
    names = sorted({r["optimizer"] for r in rows})
    for name in names:
        sel = [r for r in rows if r["optimizer"] == name
               and (tasks is None or int(r["task"]) in set(tasks))]
        by_idx: dict[int, list] = {}
        for r in sel:
            by_idx.setdefault(int(r["eval_index"]), []).append(float(r["best"]))
        idx = sorted(by_idx)
        out[name] = {
            "eval_index": idx,
            "mean": [float(np.mean(by_idx[i])) for i in idx],
            "median": [float(np.median(by_idx[i])) for i in idx],
            "q25": [float(np.percentile(by_idx[i], 25)) for i in idx],
            "q75": [float(np.percentile(by_idx[i], 75)) for i in idx],
        }
    return out


def normalize(rows, reference="random", tasks=None):
    """(mean_alg - mean_ref) / mean_ref on the aggregated running-best curves."""
    agg = aggregate(rows, tasks=tasks)
    if reference not in agg:
        raise ValueError(f"reference optimizer {reference!r} not in table")
    ref = np.asarray(agg[reference]["mean"])
    out = {}
    for name, cur in agg.items():
        m = np.asarray(cur["mean"])
        n = min(len(m), len(ref))
        with np.errstate(divide="ignore", invalid="ignore"):
            out[name] = {"eval_index": cur["eval_index"][:n],
                         "normalized": list((m[:n] - ref[:n]) / ref[:n])}
    return out


def report(rows, outdir, timing_rows=None, task_subsets=((1, 2, 3), (3, 4, 5)),
           render=False):
    """Write the results table plus aggregated/normalized curve files."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = sorted_rows(rows)
    _write_table(outdir / "results.csv", RESULT_FIELDS, rows)

    def write_curves(agg, suffix):
        for name, cur in agg.items():
            with open(outdir / f"curves_{name}{suffix}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["eval_index", "mean", "median", "q25", "q75"])
                for i, j in enumerate(cur["eval_index"]):
                    w.writerow([j, cur["mean"][i], cur["median"][i],
                                cur["q25"][i], cur["q75"][i]])

    write_curves(aggregate(rows), "")
    present_tasks = {int(r["task"]) for r in rows}
    for subset in task_subsets:
        subset = tuple(t for t in subset if t in present_tasks)
        if subset:
            write_curves(aggregate(rows, tasks=subset),
                         "_tasks" + "-".join(map(str, subset)))
    names = {r["optimizer"] for r in rows}
    if "random" in names:
        norm = normalize(rows)
        with open(outdir / "normalized.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["optimizer", "eval_index", "normalized"])
            for name, cur in norm.items():
                for j, v in zip(cur["eval_index"], cur["normalized"]):
                    w.writerow([name, j, v])

    if timing_rows:
        cum: dict[tuple, float] = {}
        out_rows = []
        for r in timing_rows:
            key = (r["optimizer"], int(r["rep"]))
            cum[key] = cum.get(key, 0.0) + float(r["seconds"])
            out_rows.append({"optimizer": r["optimizer"], "rep": r["rep"],
                             "task": r["task"], "eval_index": r["eval_index"],
                             "cum_seconds": cum[key]})
        _write_table(outdir / "cumulative_time.csv",
                     ["optimizer", "rep", "task", "eval_index", "cum_seconds"], out_rows)

    if render and rows:
        _render_curves(rows, outdir)


def _render_curves(rows, outdir):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    agg = aggregate(rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, cur in agg.items():
        ax.plot(cur["eval_index"], cur["mean"], label=name)
        ax.fill_between(cur["eval_index"], cur["q25"], cur["q75"], alpha=0.2)
    ax.set_xlabel("evaluation")
    ax.set_ylabel("running best")
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(outdir) / "curves.svg")
    plt.close(fig)
