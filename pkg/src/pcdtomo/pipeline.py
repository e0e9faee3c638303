"""End-to-end experiment: simulate, infer trees, prune, reconcile, fuse, score."""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from .consistency import TreeCollection, intrinsic_adjust
from .evalmetric import ZeroDenominator, logical_weights, lossy_restriction, tm_metrics
from .fusion import fuse_network
from .inference import PathSeries, loss_metric, reconstruct_tree
from .netgraph import PartialNetworkGraph, logical_subgraph
from .pruning import (prune_by_budget, prune_by_factor, prune_tree, pruning_candidates,
                      select_pruning_factor)
from .simulate import SimConfig, generate_measurements, random_network, substream

log = logging.getLogger(__name__)

AXES = ("num_windows", "lossy_fraction", "delta")


@dataclass(frozen=True)
class ExperimentConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    axis: str = "num_windows"
    values: tuple = (50, 100, 200, 400, 800)
    repetitions: int = 50
    lossy_fraction: float = 1.0
    positivity: str = "naive"
    tau: float | None = None
    delta_max: float = 0.05
    delta: float | None = None  # fixed pruning factor; None selects one per tree/graph
    tree_pruning: str = "factor"  # factor | budget | none
    fused_pruning: str = "factor"  # factor | none
    truth_weight: str = "variance"
    restrict_lossy: bool = False
    exact: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        vals = list(self.values)
        if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.positivity not in ("naive", "barrier"):
            raise ValueError("positivity must be 'naive' or 'barrier'")
        if self.tree_pruning not in ("factor", "budget", "none"):
            raise ValueError("tree_pruning must be 'factor', 'budget' or 'none'")
        if self.fused_pruning not in ("factor", "none"):
            raise ValueError("fused_pruning must be 'factor' or 'none'")


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib

    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return config_from_dict(raw)


def config_from_dict(raw: Mapping[str, Any]) -> ExperimentConfig:
    raw = dict(raw)
    sim = dict(raw.pop("sim", {}))
    for key in ("loss_set", "routing_range"):
        if key in sim:
            sim[key] = tuple(sim[key])
    exp = dict(raw.pop("experiment", {}))
    exp.update(raw)
    if "values" in exp:
        exp["values"] = tuple(exp["values"])
    return ExperimentConfig(sim=SimConfig(**sim), **exp)


def run_seed(base: int, rep: int) -> int:
    """Seed of one repetition; shared by every sweep point so points see the same networks."""
    return int(np.random.SeedSequence([int(base), int(rep)]).generate_state(1)[0])


def _exact_weights(graph: PartialNetworkGraph, seed: int) -> dict[str, float]:
    rng = substream(seed, "exact-weights")
    return {e: float(rng.uniform(0.1, 1.0)) for e in graph.edge_ids}


def infer_trees(graph: PartialNetworkGraph, series_of: Callable[[str, str], list[PathSeries]]) -> TreeCollection:
    src, rcv = {}, {}
    for b in graph.boundary:
        for orient, box in (("source", src), ("receiver", rcv)):
            ss = [PathSeries(s.root, s.leaf, s.orientation, loss_metric(s.values), s.t_a)
                  for s in series_of(b, orient)]
            box[b] = reconstruct_tree(b, orient, ss).tree
    return TreeCollection(tuple(graph.boundary), src, rcv)


def prune_trees(trees: TreeCollection, delta_max: float, delta: float | None,
                positivity: str | None) -> tuple[TreeCollection, list[float]]:
    """Factor pruning of every tree; returns the pruned trees and the factors used."""
    deltas = []
    out = trees
    for t in trees.trees():
        if len(t.edges) < 2:
            continue
        d = select_pruning_factor(t, delta_max) if delta is None else delta
        deltas.append(d)
        cand = pruning_candidates(t, d)
        if cand:
            new, _ = prune_tree(t, cand, positivity)
            out = out.replace(new)
    return out, deltas


def run_once(cfg: ExperimentConfig, sim: SimConfig, lossy_fraction: float) -> dict:
    """One repetition; returns a flat report row."""
    row: dict[str, Any] = {"seed": sim.seed, "num_windows": sim.num_windows,
                           "lossy_fraction": lossy_fraction, "status": "ok", "error": ""}
    t0 = time.perf_counter()
    graph, truth = random_network(sim)
    if cfg.exact:
        base = _exact_weights(graph, sim.seed)
        graph = graph.with_weights(base)
        lossy = graph.edge_ids
        trees = TreeCollection.from_graph(graph)
        t1 = t2 = time.perf_counter()
    else:
        ms = generate_measurements(graph, sim, lossy_fraction)
        base = ms.true_weights(cfg.truth_weight)
        lossy = ms.lossy
        t1 = time.perf_counter()
        trees = infer_trees(graph, ms.series)
        t2 = time.perf_counter()
    truth = truth.with_weights(logical_weights(truth, base))

    deltas: list[float] = []
    mode = "none" if cfg.exact else cfg.tree_pruning
    if mode == "factor":
        trees, deltas = prune_trees(trees, cfg.delta_max, cfg.delta, cfg.positivity)
    t3 = time.perf_counter()
    adj = intrinsic_adjust(trees, positivity=cfg.positivity)
    bound = adj.bound
    if mode == "budget":
        # lightest edges whose squared weights fit in the error bound; path weights are kept
        trees, _ = prune_by_budget(adj.adjusted, adj.bound, cfg.positivity)
        adj = intrinsic_adjust(trees, positivity=cfg.positivity)
    t4 = time.perf_counter()
    fused = fuse_network(adj.adjusted, cfg.tau)
    t5 = time.perf_counter()
    d_fused, prune_res, final = 0.0, 0.0, fused
    if not cfg.exact and cfg.fused_pruning == "factor":
        d_fused = select_pruning_factor(fused, cfg.delta_max) if cfg.delta is None else cfg.delta
        pr = prune_by_factor(fused, d_fused, cfg.positivity)
        final, prune_res = pr.graph, pr.residual
    inferred = logical_subgraph(final)
    restrict = lossy_restriction(lossy) if cfg.restrict_lossy else None
    try:
        tm1, tm2 = tm_metrics(truth, inferred, restrict=restrict)
    except ZeroDenominator:
        tm1 = tm2 = math.nan
    t6 = time.perf_counter()
    row.update({
        "tm1": tm1, "tm2": tm2,
        "delta_trees": float(np.mean(deltas)) if deltas else 0.0,
        "delta_fused": d_fused,
        "intrinsic_residual": adj.residual, "intrinsic_bound": bound,
        "adjustment_norm": adj.adjustment_norm, "prune_residual": prune_res,
        "true_edges": len(truth.edges), "inferred_edges": len(inferred.edges),
        "inferred_vertices": len(inferred.vertices),
        "t_sim": t1 - t0, "t_infer": t2 - t1, "t_prune": t3 - t2,
        "t_adjust": t4 - t3, "t_fuse": t5 - t4, "t_eval": t6 - t5,
    })
    return row


def _point_config(cfg: ExperimentConfig, value, rep: int) -> tuple[ExperimentConfig, SimConfig, float]:
    sim = cfg.sim.with_(seed=run_seed(cfg.sim.seed, rep))
    frac = cfg.lossy_fraction
    c = cfg
    if cfg.axis == "num_windows":
        sim = sim.with_(num_windows=int(value))
    elif cfg.axis == "lossy_fraction":
        frac = float(value)
    else:
        c = replace(cfg, delta=float(value))
    return c, sim, frac


def _job(args) -> dict:
    cfg, point, value, rep = args
    c, sim, frac = _point_config(cfg, value, rep)
    try:
        row = run_once(c, sim, frac)
    except Exception as exc:  # a failed run is recorded, the sweep goes on
        log.warning("run %s=%s rep %d failed: %s", cfg.axis, value, rep, exc)
        row = {"seed": sim.seed, "num_windows": sim.num_windows, "lossy_fraction": frac,
               "status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    row.update({"axis": cfg.axis, "point": point, "value": value, "rep": rep})
    return row


ROW_FIELDS = ["axis", "point", "value", "rep", "seed", "status", "num_windows", "lossy_fraction",
              "tm1", "tm2", "delta_trees", "delta_fused", "intrinsic_residual", "intrinsic_bound",
              "adjustment_norm", "prune_residual", "true_edges", "inferred_edges", "inferred_vertices",
              "t_sim", "t_infer", "t_prune", "t_adjust", "t_fuse", "t_eval", "error"]
SUMMARY_FIELDS = ["axis", "value", "runs", "failed", "tm1_mean", "tm1_std", "tm2_mean", "tm2_std",
                  "gap_mean", "delta_trees_mean", "delta_fused_mean"]


@dataclass
class Report:
    rows: list[dict]
    summary: list[dict]

    def column(self, name: str, value=None) -> np.ndarray:
        return np.array([r.get(name, math.nan) for r in self.rows
                         if r["status"] == "ok" and (value is None or r["value"] == value)], dtype=float)


def summarize(rows: list[dict]) -> list[dict]:
    out = []
    for value in sorted({r["value"] for r in rows}):
        sel = [r for r in rows if r["value"] == value]
        ok = [r for r in sel if r["status"] == "ok"]

        def stat(key, fn):
            xs = np.array([r[key] for r in ok], dtype=float)
            xs = xs[~np.isnan(xs)]
            return float(fn(xs)) if xs.size else math.nan

        gaps = np.array([abs(r["tm1"] - r["tm2"]) for r in ok], dtype=float)
        gaps = gaps[~np.isnan(gaps)]
        out.append({
            "axis": sel[0]["axis"], "value": value, "runs": len(sel), "failed": len(sel) - len(ok),
            "tm1_mean": stat("tm1", np.mean), "tm1_std": stat("tm1", np.std),
            "tm2_mean": stat("tm2", np.mean), "tm2_std": stat("tm2", np.std),
            "gap_mean": float(gaps.mean()) if gaps.size else math.nan,
            "delta_trees_mean": stat("delta_trees", np.mean),
            "delta_fused_mean": stat("delta_fused", np.mean),
        })
    return out


def write_csv(rows: list[dict], fields: list[str], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in fields})


def run_pipeline(cfg: ExperimentConfig, jobs: int = 1, out: str | Path | None = None) -> Report:
    """Run every (sweep point, repetition); write ``runs.csv`` and ``summary.csv`` if ``out`` is set."""
    tasks = [(cfg, i, v, r) for i, v in enumerate(cfg.values) for r in range(cfg.repetitions)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_job, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_job(t) for t in tasks]
    rows.sort(key=lambda r: (r["point"], r["rep"]))
    report = Report(rows, summarize(rows))
    out = out if out is not None else cfg.out
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        write_csv(rows, ROW_FIELDS, d / "runs.csv")
        write_csv(report.summary, SUMMARY_FIELDS, d / "summary.csv")
        cfg_dump = asdict(cfg)
        (d / "config.txt").write_text(repr(cfg_dump) + "\n")
    return report
