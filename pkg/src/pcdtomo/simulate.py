"""Random networks and model-based unicast loss measurements.

Networks: a random regular graph with random directed routing weights;
every ordered pair of boundary vertices is routed along its shortest path
through interior vertices only.  Measurements: each lossy edge alternates
between a lossless and a lossy state with Poisson dwell times (in windows),
and each ordered pair sends a fixed number of packets per window.

Randomness comes from numpy's PCG64 generator.  Every edge and every pair
draws from its own substream keyed by ``(seed, crc32(id))``, so adding or
removing an edge leaves the other traces untouched.
"""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field, replace
from typing import Sequence

import networkx as nx
import numpy as np

from .inference import PathSeries
from .netgraph import PartialNetworkGraph, build_partial_graph, logical_subgraph

log = logging.getLogger(__name__)

LOSSLESS, LOSSY = 0, 1


class Disconnected(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    m: int = 40
    d: int = 4
    n: int = 6
    gamma_s: float = 10.0  # mean lossless dwell, in windows
    gamma_l: float = 10.0  # mean lossy dwell, in windows
    loss_set: tuple[float, ...] = (0.05, 0.10)
    packets_per_window: int = 1000
    num_windows: int = 400
    seed: int = 0
    symmetric: bool = False
    routing_range: tuple[float, float] = (1.0, 10.0)
    max_retries: int = 100

    def __post_init__(self):
        if not 0 < self.d < self.m:
            raise ValueError("need 0 < d < m")
        if not 2 <= self.n <= self.m:
            raise ValueError("need 2 <= n <= m")
        if (self.m * self.d) % 2:
            raise ValueError("m * d must be even for a regular graph")
        if not all(0 < p < 1 for p in self.loss_set) or not self.loss_set:
            raise ValueError("loss probabilities must lie in (0, 1)")
        if self.gamma_s <= 0 or self.gamma_l <= 0:
            raise ValueError("dwell parameters must be positive")
        if self.packets_per_window < 1 or self.num_windows < 1:
            raise ValueError("packets_per_window and num_windows must be positive")

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)


def substream(seed: int, *key) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``; strings are hashed with crc32."""
    words = [int(seed) & 0xFFFFFFFF]
    for k in key:
        words.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) & 0xFFFFFFFF)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def _vname(i: int, m: int) -> str:
    return f"v{i:0{len(str(m - 1))}d}"


def _try_network(cfg: SimConfig, attempt: int) -> PartialNetworkGraph | None:
    rng = substream(cfg.seed, "topology", attempt)
    und = nx.random_regular_graph(cfg.d, cfg.m, seed=int(rng.integers(2 ** 31)))
    if not nx.is_connected(und):
        return None
    lo, hi = cfg.routing_range
    dg = nx.DiGraph()
    for x, y in sorted(und.edges()):
        a, b = _vname(x, cfg.m), _vname(y, cfg.m)
        w1 = float(rng.uniform(lo, hi))
        w2 = w1 if cfg.symmetric else float(rng.uniform(lo, hi))
        dg.add_edge(a, b, weight=w1)
        dg.add_edge(b, a, weight=w2)
    boundary = sorted(_vname(int(i), cfg.m) for i in rng.choice(cfg.m, size=cfg.n, replace=False))
    bset = set(boundary)
    interior = [v for v in dg.nodes if v not in bset]
    paths = {}
    for u in boundary:
        for v in boundary:
            if u == v:
                continue
            # boundary vertices never relay traffic between other boundary vertices
            sub = dg.subgraph(interior + [u, v])
            try:
                vs = nx.dijkstra_path(sub, u, v, weight="weight")
            except nx.NetworkXNoPath:
                return None
            paths[(u, v)] = tuple(f"{vs[i]}>{vs[i + 1]}" for i in range(len(vs) - 1))
    used = sorted({e for seq in paths.values() for e in seq})
    edges = {e: tuple(e.split(">")) for e in used}
    verts = sorted({x for t in edges.values() for x in t} | bset)
    return build_partial_graph(verts, edges, {e: 0.0 for e in used}, boundary, paths)


def random_network(cfg: SimConfig) -> tuple[PartialNetworkGraph, PartialNetworkGraph]:
    """Partial network graph of the routed paths and its logical subgraph.

    Only edges lying on some path are kept; the routing weights are used to
    pick the paths and then dropped (all edge weights are 0).
    """
    for attempt in range(cfg.max_retries):
        g = _try_network(cfg, attempt)
        if g is not None:
            return g, logical_subgraph(g)
    raise Disconnected(f"no connected instance in {cfg.max_retries} attempts")


@dataclass
class EdgeStateTrace:
    edge: str
    runs: list[tuple[int, int]]  # (state, duration in windows)
    p_lossy: float

    @property
    def states(self) -> np.ndarray:
        return np.concatenate([np.full(k, s, dtype=int) for s, k in self.runs])

    @property
    def drop(self) -> np.ndarray:
        return np.where(self.states == LOSSY, self.p_lossy, 0.0)


def edge_trace(edge: str, cfg: SimConfig, lossy: bool) -> EdgeStateTrace:
    N = cfg.num_windows
    if not lossy:
        return EdgeStateTrace(edge, [(LOSSLESS, N)], 0.0)
    rng = substream(cfg.seed, "edge", edge)
    p = float(rng.choice(np.asarray(cfg.loss_set)))
    state = int(rng.integers(2))
    runs, total = [], 0
    while total < N:
        k = max(1, int(rng.poisson(cfg.gamma_l if state == LOSSY else cfg.gamma_s)))
        k = min(k, N - total)
        runs.append((state, k))
        total += k
        state = 1 - state
    return EdgeStateTrace(edge, runs, p)


@dataclass
class MeasurementSet:
    graph: PartialNetworkGraph
    fractions: dict[tuple[str, str], np.ndarray]
    traces: dict[str, EdgeStateTrace]
    lossy: list[str]
    t_a: float = 1.0
    meta: dict = field(default_factory=dict)

    def series(self, root: str, orientation: str) -> list[PathSeries]:
        out = []
        for (u, v), x in sorted(self.fractions.items()):
            if orientation == "source" and u == root:
                out.append(PathSeries(root, v, "source", x, self.t_a))
            elif orientation == "receiver" and v == root:
                out.append(PathSeries(root, u, "receiver", x, self.t_a))
        return out

    def all_series(self) -> list[PathSeries]:
        return [s for b in self.graph.boundary for o in ("source", "receiver") for s in self.series(b, o)]

    def true_weights(self, kind: str = "variance") -> dict[str, float]:
        """Per-edge ground truth: variance of ``-log(1 - p_e(k))`` over windows, or mean loss rate."""
        out = {}
        for e, tr in self.traces.items():
            p = tr.drop
            if kind == "variance":
                out[e] = float(np.var(-np.log1p(-p), ddof=1)) if p.size > 1 else 0.0
            elif kind == "mean_loss":
                out[e] = float(p.mean())
            else:
                raise ValueError(f"unknown weight kind {kind!r}")
        return out


def generate_measurements(graph: PartialNetworkGraph, cfg: SimConfig,
                          lossy_fraction: float = 1.0) -> MeasurementSet:
    """Received-packet fractions for every path and window.

    Given the edge states, the packets of one window on one path survive
    independently with probability ``prod(1 - p_e)``, so the received count
    is drawn as a single binomial; this has exactly the distribution of
    per-packet, per-edge Bernoulli transits.
    """
    if not 0.0 <= lossy_fraction <= 1.0:
        raise ValueError("lossy_fraction must lie in [0, 1]")
    edges = graph.edge_ids
    k = int(np.floor(lossy_fraction * len(edges) + 1e-9))
    pick = substream(cfg.seed, "lossy-set", int(round(lossy_fraction * 1e6)))
    lossy = sorted(pick.choice(edges, size=k, replace=False).tolist()) if k else []
    lset = set(lossy)
    traces = {e: edge_trace(e, cfg, e in lset) for e in edges}
    keep = {e: 1.0 - traces[e].drop for e in edges}
    fractions = {}
    for pair, seq in sorted(graph.paths.items()):
        surv = np.ones(cfg.num_windows)
        for e in seq:
            surv = surv * keep[e]
        rng = substream(cfg.seed, "pair", f"{pair[0]}>{pair[1]}")
        cnt = rng.binomial(cfg.packets_per_window, surv)
        fractions[pair] = cnt / cfg.packets_per_window
    return MeasurementSet(graph, fractions, traces, lossy,
                          meta={"lossy_fraction": lossy_fraction, "seed": cfg.seed})


def two_state_variance(p: float, gamma_s: float, gamma_l: float) -> float:
    """Stationary per-window variance of a drop rate that is ``p`` in the lossy state and 0 otherwise."""
    q = gamma_l / (gamma_l + gamma_s)
    return p * p * q * (1 - q)


def routes_symmetric(graph: PartialNetworkGraph) -> bool:
    """True if every path is the reverse of its opposite path."""
    for (u, v), seq in graph.paths.items():
        back = graph.paths.get((v, u))
        if back is None:
            return False
        if [graph.edges[e] for e in seq] != [tuple(reversed(graph.edges[e])) for e in reversed(back)]:
            return False
    return True


def sweep_configs(base: SimConfig, axis: str, values: Sequence) -> list[SimConfig]:
    return [base.with_(**{axis: v}) for v in values]
