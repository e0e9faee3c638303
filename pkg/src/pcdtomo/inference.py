"""Tree reconstruction from per-path measurement series.

For paths that share a root, the covariance of their per-window metrics
estimates the weight of the shared part of the two paths.  Repeatedly
joining the pair of clusters with the largest shared weight yields a binary
tree whose root-to-meet depths reproduce those estimates.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .netgraph import Tree

log = logging.getLogger(__name__)

HEADER = ["root", "leaf", "orientation", "t_a"]


class SeriesError(ValueError):
    pass


class LengthMismatch(SeriesError):
    pass


class TooShort(SeriesError):
    pass


@dataclass
class PathSeries:
    root: str
    leaf: str
    orientation: str
    values: np.ndarray
    t_a: float = 1.0

    def __post_init__(self):
        if self.orientation not in ("source", "receiver"):
            raise ValueError(f"orientation must be 'source' or 'receiver', got {self.orientation!r}")
        self.values = np.asarray(self.values, dtype=float).ravel()

    @property
    def pair(self) -> tuple[str, str]:
        return (self.root, self.leaf) if self.orientation == "source" else (self.leaf, self.root)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HEADER)
            w.writerow([self.root, self.leaf, self.orientation, repr(self.t_a)])
            for x in self.values:
                w.writerow([repr(float(x))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "PathSeries":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != HEADER:
            raise SeriesError(f"{path}: expected header {','.join(HEADER)}")
        root, leaf, orient, t_a = rows[1]
        vals = [float(r[0]) for r in rows[2:] if r]
        return cls(root, leaf, orient, np.array(vals), float(t_a))


def loss_metric(fraction, floor: float = 1e-6) -> np.ndarray:
    """-log of the received fraction, which is additive along a path."""
    return -np.log(np.clip(np.asarray(fraction, dtype=float), floor, 1.0))


def _check_pair(s1: PathSeries, s2: PathSeries) -> None:
    if s1.root != s2.root or s1.orientation != s2.orientation:
        raise SeriesError("series do not share a root")
    if s1.values.size != s2.values.size:
        raise LengthMismatch(f"series lengths differ: {s1.values.size} vs {s2.values.size}")
    if s1.values.size < 2:
        raise TooShort("need at least two windows")


def pairwise_shared_metric(s1: PathSeries, s2: PathSeries) -> float:
    """Unbiased sample covariance of two same-root series."""
    _check_pair(s1, s2)
    x, y = s1.values, s2.values
    return float(np.dot(x - x.mean(), y - y.mean()) / (x.size - 1))


@dataclass
class InferredTree:
    tree: Tree
    shared: dict[tuple[str, str], float]  # raw pairwise estimate for each leaf pair
    merges: list[tuple[str, str, float]] = field(default_factory=list)
    degenerate: bool = False

    @property
    def root(self) -> str:
        return self.tree.root


def _label(members: Sequence[str]) -> str:
    return "{" + ",".join(members) + "}"


def reconstruct_tree(root: str, orientation: str, series: Sequence[PathSeries],
                     coeffs: tuple[float, float] = (0.5, 0.5),
                     prefix: str | None = None) -> InferredTree:
    """Agglomerative reconstruction of the source or receiver tree at ``root``.

    The pair of clusters with the largest covariance becomes siblings under
    a new vertex; their series are replaced by the convex combination given
    by ``coeffs``.  The edge above a cluster weighs its merge estimate minus
    that of its parent (a leaf uses its own variance, the root counts as 0),
    clipped at zero.  Ties pick the lexicographically smallest pair.
    """
    if not series:
        raise SeriesError("no series")
    for s in series:
        if s.root != root or s.orientation != orientation:
            raise SeriesError(f"series {s.pair} does not belong to the {orientation} tree of {root!r}")
    n = series[0].values.size
    for s in series:
        if s.values.size != n:
            raise LengthMismatch("series lengths differ")
    if n < 2:
        raise TooShort("need at least two windows")
    leaves = [s.leaf for s in series]
    if len(set(leaves)) != len(leaves):
        raise SeriesError("repeated leaf")
    prefix = prefix if prefix is not None else f"{orientation[0]}{root}"
    a, b = coeffs

    shared = {}
    for i in range(len(series)):
        for j in range(i + 1, len(series)):
            p = tuple(sorted((leaves[i], leaves[j])))
            shared[p] = pairwise_shared_metric(series[i], series[j])

    # cluster key: sorted member tuple
    clusters: dict[tuple[str, ...], np.ndarray] = {(s.leaf,): s.values for s in series}
    level: dict[tuple[str, ...], float] = {(s.leaf,): float(np.var(s.values, ddof=1)) for s in series}
    children: dict[tuple[str, ...], tuple] = {}
    merges = []
    while len(clusters) > 1:
        keys = sorted(clusters)
        best, best_val = None, -np.inf
        cent = {k: clusters[k] - clusters[k].mean() for k in keys}
        for i, ki in enumerate(keys):
            for kj in keys[i + 1:]:
                val = float(cent[ki] @ cent[kj] / (n - 1))
                if best is None or val > best_val + 1e-15 * max(1.0, abs(best_val)):
                    best, best_val = (ki, kj), val
        ki, kj = best
        new = tuple(sorted(ki + kj))
        clusters[new] = a * clusters.pop(ki) + b * clusters.pop(kj)
        level[new] = best_val
        children[new] = (ki, kj)
        merges.append((_label(ki), _label(kj), best_val))
    top = next(iter(clusters))
    degenerate = len(series) > 1 and all(m[2] <= 0 for m in merges)
    if degenerate:
        log.info("all shared estimates at %s/%s are non-positive; returning a star", orientation, root)

    names: dict[tuple[str, ...], str] = {}
    counter = iter(range(10 ** 9))

    def name(k):
        if len(k) == 1:
            return k[0]
        if k not in names:
            names[k] = f"{prefix}.{next(counter)}"
        return names[k]

    edges: dict[str, tuple[str, str]] = {}
    weights: dict[str, float] = {}

    def add_edge(parent: str, child: str, w: float):
        eid = f"{prefix}:{parent}>{child}" if orientation == "source" else f"{prefix}:{child}>{parent}"
        edges[eid] = (parent, child) if orientation == "source" else (child, parent)
        weights[eid] = max(0.0, w)
        return eid

    up: dict[str, str] = {}  # vertex -> edge towards the root
    if degenerate:
        hub = f"{prefix}.0"
        up[hub] = add_edge(root, hub, 0.0)
        for s in series:
            up[s.leaf] = add_edge(hub, s.leaf, level[(s.leaf,)])
    else:
        stack = [(top, root, 0.0)]
        while stack:
            k, parent, plevel = stack.pop()
            v = name(k)
            up[v] = add_edge(parent, v, level[k] - plevel)
            for c in children.get(k, ()):
                stack.append((c, v, level[k]))

    parent_of = {}
    for eid, (t, h) in edges.items():
        child = h if orientation == "source" else t
        parent_of[child] = eid
    paths = {}
    for leaf in leaves:
        seq = []
        v = leaf
        while v != root:
            e = parent_of[v]
            seq.append(e)
            t, h = edges[e]
            v = t if orientation == "source" else h
        paths[leaf] = tuple(reversed(seq)) if orientation == "source" else tuple(seq)
    tree = Tree(root, orientation, edges, weights, paths)
    return InferredTree(tree, shared, merges, degenerate)


def write_series(series: Iterable[PathSeries], directory: str | Path) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for s in series:
        p = d / f"{s.orientation}_{s.root}_{s.leaf}.csv"
        s.to_csv(p)
        out.append(p)
    return out


def read_series(directory: str | Path) -> list[PathSeries]:
    return [PathSeries.from_csv(p) for p in sorted(Path(directory).glob("*.csv"))]
