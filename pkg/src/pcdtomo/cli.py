"""Command-line entry point: ``python -m pcdtomo <command>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .consistency import TreeCollection, intrinsic_adjust
from .evalmetric import tm_metrics
from .netgraph import load_graph
from .pipeline import load_config, run_pipeline
from .pruning import prune_by_factor, select_pruning_factor
from .selftest import run_selftest


def _dump(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, sim=cfg.sim.with_(seed=args.seed))
    out = args.out or cfg.out
    report = run_pipeline(cfg, jobs=args.jobs, out=out)
    for s in report.summary:
        print(f"{s['axis']}={s['value']}: runs {s['runs']} failed {s['failed']} "
              f"TM1 {s['tm1_mean']:.4f} TM2 {s['tm2_mean']:.4f}")
    if out:
        print(f"wrote {Path(out) / 'runs.csv'} and {Path(out) / 'summary.csv'}")
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def cmd_metric(args) -> int:
    truth = load_graph(args.true)
    inferred = load_graph(args.inferred)
    tm1, tm2 = tm_metrics(truth, inferred)
    _dump({"tm1": tm1, "tm2": tm2})
    return 0


def cmd_adjust(args) -> int:
    trees = TreeCollection.from_dict(json.loads(Path(args.trees).read_text()))
    res = intrinsic_adjust(trees, positivity=args.positivity)
    out = res.to_dict()
    out["trees"] = res.adjusted.to_dict()
    _dump(out)
    return 0


def cmd_prune(args) -> int:
    g = load_graph(args.graph)
    delta = args.delta if args.delta is not None else select_pruning_factor(g, args.delta_max)
    res = prune_by_factor(g, delta, args.positivity)
    out = {"delta": delta, **res.to_dict()}
    _dump(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pcdtomo", description="Consistent network topology inference from path measurements.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a simulation sweep from a TOML config")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("selftest", help="check against hand-derived answers")
    s.set_defaults(func=cmd_selftest)

    m = sub.add_parser("metric", help="topological mismatch of an inferred graph")
    m.add_argument("--true", required=True, help="reference graph (JSON)")
    m.add_argument("--inferred", required=True, help="inferred graph (JSON)")
    m.set_defaults(func=cmd_metric)

    a = sub.add_parser("adjust", help="make a tree collection intrinsically consistent")
    a.add_argument("--trees", required=True)
    a.add_argument("--positivity", choices=["naive", "barrier"])
    a.set_defaults(func=cmd_adjust)

    q = sub.add_parser("prune", help="prune light edges and redistribute their weight")
    q.add_argument("--graph", required=True)
    q.add_argument("--delta", type=float, help="pruning factor; selected automatically if omitted")
    q.add_argument("--delta-max", type=float, default=0.2)
    q.add_argument("--positivity", choices=["naive", "barrier"])
    q.set_defaults(func=cmd_prune)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
