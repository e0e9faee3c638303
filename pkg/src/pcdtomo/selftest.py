"""Quick checks against hand-derived answers; used by ``pcdtomo selftest``."""

from __future__ import annotations

import time
from typing import Callable

import numpy as np

from . import golden
from .consistency import intrinsic_adjust, signed_incidence
from .linsolve import InconsistentSystem, qr_row_reduce, smallest_eigenvalue
from .pruning import budget_selection, redistribute_after_prune, select_pruning_factor

Check = tuple[str, bool, str]


def _crossing() -> Check:
    t = time.perf_counter()
    res = redistribute_after_prune(golden.crossing_graph(), golden.CROSSING_PRUNE)
    dt = time.perf_counter() - t
    err = max(abs(w - 10.75) for w in res.weights.values())
    try:
        qr_row_reduce(golden.CROSSING_MATRIX, golden.CROSSING_TARGETS)
        flagged = False
    except InconsistentSystem:
        flagged = True
    ok = err <= 1e-9 and flagged
    return "crossing-prune", ok, f"max |w - 10.75| = {err:.2e}, inconsistent flagged: {flagged}, {dt * 1e3:.2f} ms"


def _star() -> Check:
    base = golden.star_trees(0.0)
    A = signed_incidence(base)
    a_ok = np.array_equal(A, golden.STAR_SIGNED)
    G = A @ A.T
    inv_err = float(np.abs(np.linalg.inv(G) - golden.STAR_GRAM_INV).max())
    corr_err = 0.0
    for eps in (0.1, 1.0):
        res = intrinsic_adjust(golden.star_trees(eps))
        corr_err = max(corr_err, float(np.abs(res.weights - (1 + eps * golden.STAR_CORRECTION)).max()))
    lam = smallest_eigenvalue(G)
    z = golden.STAR_EIGVEC
    vec_err = float(np.linalg.norm(G @ z - 2 * z))
    ok = a_ok and inv_err <= 1e-9 and corr_err <= 1e-9 and abs(lam - 2) <= 1e-9 and vec_err <= 1e-9
    return "three-star", ok, (f"matrix equal: {a_ok}, inverse err {inv_err:.1e}, weights err {corr_err:.1e}, "
                             f"lambda_min {lam:.12f}")


def _factor() -> Check:
    d1 = select_pruning_factor({"a": 1.0, "b": 1.0, "c": 1.0})
    d2 = select_pruning_factor({"a": 0.01, "b": 0.02, "c": 1.0, "d": 1.1}, 0.2)
    ok = d1 == 0.0 and abs(d2 - 0.02 / 1.1) <= 1e-12
    return "pruning-factor", ok, f"{d1}, {d2:.5f}"


def _budget() -> Check:
    sel = budget_selection({"x": 1.0, "y": 2.0, "z": 3.0}, 5.0)
    one = budget_selection({"p": 1.0, "q": 1.0}, 1.5)
    ok = sel == ["x", "y"] and one == ["p"]
    return "budget", ok, f"{sel}, {one}"


def _round_trip(seeds: int = 3) -> Check:
    from .pipeline import ExperimentConfig, run_once, run_seed

    cfg = ExperimentConfig(exact=True, repetitions=1)
    bad = []
    for rep in range(seeds):
        sim = cfg.sim.with_(seed=run_seed(0, rep))
        row = run_once(cfg, sim, 1.0)
        if row["tm2"] != 0.0:
            bad.append(rep)
    return "noiseless-round-trip", not bad, f"{seeds - len(bad)}/{seeds} exact"


CHECKS: list[Callable[[], Check]] = [_crossing, _star, _factor, _budget, _round_trip]


def run_selftest() -> list[Check]:
    out = []
    for fn in CHECKS:
        try:
            out.append(fn())
        except Exception as exc:  # report, keep going
            out.append((fn.__name__.lstrip("_"), False, f"{type(exc).__name__}: {exc}"))
    return out
