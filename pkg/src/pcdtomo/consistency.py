"""Least-squares restoration of path-weight consistency.

Extrinsic: edge weights of one graph are moved as little as possible (in
the l2 sense) so that its path weights hit given targets.  Intrinsic: the
weights of a family of source and receiver trees are moved as little as
possible so that every ordered boundary pair has the same path weight in
the source tree of its origin and the receiver tree of its destination.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg

from .linsolve import (Infeasible, LinAlgError, QpProblem, QpOptions, moore_penrose,
                       nonneg_feasibility_residual, solve_qp_barrier)
from .netgraph import Pair, PartialNetworkGraph, Tree, extract_trees, path_weight

log = logging.getLogger(__name__)

Column = tuple[str, str]  # (tree name, tree-local edge id)


class SingularSystem(LinAlgError):
    pass


@dataclass(frozen=True)
class TreeCollection:
    """One source and one receiver tree per boundary vertex.

    Trees never share edges or interior vertices, even when their local
    vertex ids coincide; a tree edge is addressed by ``(tree name, edge id)``.
    """

    boundary: tuple[str, ...]
    source: dict[str, Tree]
    receiver: dict[str, Tree]

    def __post_init__(self):
        for b in self.boundary:
            if b not in self.source or b not in self.receiver:
                raise ValueError(f"boundary vertex {b!r} lacks a source or receiver tree")
            for t, kind in ((self.source[b], "source"), (self.receiver[b], "receiver")):
                if t.root != b or t.orientation != kind:
                    raise ValueError(f"tree registered as {kind} tree of {b!r} is {t.name}")
                stray = set(t.leaves) - set(self.boundary)
                if stray or b in t.leaves:
                    raise ValueError(f"{t.name} has leaves outside the boundary: {sorted(stray | ({b} & set(t.leaves)))}")

    @classmethod
    def from_graph(cls, graph: PartialNetworkGraph) -> "TreeCollection":
        src, rcv = {}, {}
        for b in graph.boundary:
            src[b], rcv[b] = extract_trees(graph, b)
        return cls(tuple(graph.boundary), src, rcv)

    def trees(self) -> list[Tree]:
        """Receiver trees first, then source trees, roots in boundary order."""
        return [self.receiver[b] for b in self.boundary] + [self.source[b] for b in self.boundary]

    def columns(self) -> list[Column]:
        return [(t.name, e) for t in self.trees() for e in t.edge_ids]

    def pairs(self) -> list[Pair]:
        """Ordered pairs carried by both the origin's source tree and the destination's receiver tree."""
        out = []
        for v in self.boundary:
            for u in self.boundary:
                if u != v and u in self.source[v].leaf_paths and v in self.receiver[u].leaf_paths:
                    out.append((v, u))
        return out

    def weight_vector(self) -> np.ndarray:
        return np.array([t.weights[e] for t in self.trees() for e in t.edge_ids], dtype=float)

    def with_vector(self, w) -> "TreeCollection":
        w = np.asarray(w, dtype=float)
        cols = self.columns()
        if w.shape != (len(cols),):
            raise ValueError(f"expected {len(cols)} weights, got shape {w.shape}")
        per_tree: dict[str, dict[str, float]] = {}
        for (name, e), x in zip(cols, w):
            per_tree.setdefault(name, {})[e] = float(x)
        src = {b: self.source[b].with_weights(per_tree.get(self.source[b].name, {})) for b in self.boundary}
        rcv = {b: self.receiver[b].with_weights(per_tree.get(self.receiver[b].name, {})) for b in self.boundary}
        return TreeCollection(self.boundary, src, rcv)

    def replace(self, tree: Tree) -> "TreeCollection":
        src, rcv = dict(self.source), dict(self.receiver)
        (src if tree.orientation == "source" else rcv)[tree.root] = tree
        return TreeCollection(self.boundary, src, rcv)

    def to_dict(self) -> dict:
        return {"boundary": list(self.boundary), "trees": [t.to_dict() for t in self.trees()]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "TreeCollection":
        src, rcv = {}, {}
        for td in d["trees"]:
            t = Tree.from_dict(td)
            (src if t.orientation == "source" else rcv)[t.root] = t
        return cls(tuple(str(b) for b in d["boundary"]), src, rcv)


@dataclass
class ConsistencyResult:
    weights: np.ndarray
    labels: list
    original: np.ndarray
    residual: float
    adjustment_norm: float
    bound: float | None = None
    negatives: list = field(default_factory=list)
    adjusted: object = None  # the reweighted graph or tree collection

    def to_dict(self) -> dict:
        def key(lbl):
            return lbl if isinstance(lbl, str) else "/".join(lbl)
        return {
            "weights": {key(l): float(w) for l, w in zip(self.labels, self.weights)},
            "residual": self.residual,
            "adjustment_norm": self.adjustment_norm,
            "bound": self.bound,
            "negatives": [key(l) for l in self.negatives],
        }


def incidence_matrix(graph: PartialNetworkGraph) -> tuple[np.ndarray, list[Pair], list[str]]:
    """0/1 matrix of edges (columns) over paths (rows)."""
    pairs = graph.pairs
    cols = graph.edge_ids
    idx = {e: j for j, e in enumerate(cols)}
    A = np.zeros((len(pairs), len(cols)))
    for i, p in enumerate(pairs):
        for e in graph.paths[p]:
            A[i, idx[e]] = 1.0
    return A, pairs, cols


def fill_targets(graph: PartialNetworkGraph, targets: Mapping[Pair, float]) -> dict[Pair, float]:
    """Extend targets to every path, keeping the current weight where none is given."""
    out = {}
    for p in graph.pairs:
        z = targets.get(p)
        if z is None:
            z = path_weight(graph, p)
        elif z < 0:
            raise ValueError(f"target for {p[0]}>{p[1]} is negative")
        out[p] = float(z)
    unknown = set(targets) - set(out)
    if unknown:
        raise ValueError(f"targets for pairs without a path: {sorted(unknown)}")
    return out


def extrinsic_adjust(graph: PartialNetworkGraph, targets: Mapping[Pair, float]) -> ConsistencyResult:
    """Closest edge weights whose path weights match the targets in least squares."""
    A, pairs, cols = incidence_matrix(graph)
    full = fill_targets(graph, targets)
    z = np.array([full[p] for p in pairs])
    w = np.array([graph.weights[e] for e in cols])
    w_new = w + moore_penrose(A) @ (z - A @ w)
    res = float(np.linalg.norm(A @ w_new - z))
    return ConsistencyResult(
        weights=w_new, labels=cols, original=w, residual=res,
        adjustment_norm=float(np.linalg.norm(w_new - w)),
        negatives=[c for c, x in zip(cols, w_new) if x < 0],
        adjusted=graph.with_weights(dict(zip(cols, w_new))),
    )


def signed_incidence(trees: TreeCollection) -> np.ndarray:
    """+1 on receiver-tree edges and -1 on source-tree edges of each ordered pair."""
    col = {c: j for j, c in enumerate(trees.columns())}
    pairs = trees.pairs()
    A = np.zeros((len(pairs), len(col)))
    for i, (v, u) in enumerate(pairs):
        rt, st = trees.receiver[u], trees.source[v]
        for e in rt.leaf_paths[v]:
            A[i, col[(rt.name, e)]] += 1.0
        for e in st.leaf_paths[u]:
            A[i, col[(st.name, e)]] -= 1.0
    return A


def asymmetry_vector(trees: TreeCollection) -> np.ndarray:
    """Receiver-tree minus source-tree path weight for every ordered pair."""
    return signed_incidence(trees) @ trees.weight_vector()


def intrinsic_adjust(trees: TreeCollection, positivity: str | None = None) -> ConsistencyResult:
    """Closest intrinsically consistent tree weights.

    The signed incidence matrix always has full row rank, so
    ``W - A^T (A A^T)^-1 A W`` is computed through a Cholesky factorization.
    The returned ``bound`` is ``||A W||^2 / 2``, which caps the squared
    adjustment.  ``positivity`` ("naive" or "barrier") additionally removes
    negative weights; ``negatives`` lists the columns that were negative
    before that pass.
    """
    A = signed_incidence(trees)
    w = trees.weight_vector()
    labels = trees.columns()
    asym = A @ w
    if A.shape[0] == 0:
        w_new = w.copy()
    else:
        try:
            cf = scipy.linalg.cho_factor(A @ A.T)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem("A A^T is singular: the trees are malformed") from exc
        w_new = w - A.T @ scipy.linalg.cho_solve(cf, asym)
    bound = float(asym @ asym) / 2.0
    adj = float(np.sum((w_new - w) ** 2))
    assert adj <= bound * (1 + 1e-9) + 1e-12, (adj, bound)
    negatives = [c for c, x in zip(labels, w_new) if x < 0]
    if positivity and negatives:
        w_new = enforce_positivity(A, w, np.zeros(A.shape[0]), method=positivity)
    return ConsistencyResult(
        weights=w_new, labels=labels, original=w,
        residual=float(np.linalg.norm(A @ w_new)),
        adjustment_norm=float(np.linalg.norm(w_new - w)),
        bound=bound, negatives=negatives, adjusted=trees.with_vector(w_new),
    )


def _naive_positive(A, w, target, max_iter):
    n = w.size
    free = np.ones(n, dtype=bool)
    x = np.zeros(n)
    for _ in range(max(1, max_iter)):
        Af = A[:, free]
        x = np.zeros(n)
        x[free] = w[free] + moore_penrose(Af) @ (target - Af @ w[free]) if Af.size else w[free]
        neg = free & (x < 0)
        if not neg.any():
            break
        free &= ~neg
    return np.where(free, np.maximum(x, 0.0), 0.0)


def enforce_positivity(A, w, target, method: str = "naive",
                       opts: QpOptions | None = None) -> np.ndarray:
    """Non-negative weights close to ``w`` that keep ``A x = target`` where possible.

    ``naive`` fixes negative entries at zero and re-solves the least-squares
    problem on the remaining columns until nothing is negative.  ``barrier``
    solves ``min ||x - w||^2`` s.t. ``A x = target``, ``x >= 0`` with the
    interior-point method; an inconsistent target is first projected onto
    the range of ``A``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    w = np.asarray(w, dtype=float).ravel()
    target = np.asarray(target, dtype=float).ravel()
    if method == "naive":
        return _naive_positive(A, w, target, w.size)
    if method != "barrier":
        raise ValueError(f"unknown positivity method {method!r}")
    n = w.size
    Apinv = moore_penrose(A)
    proj = A @ (Apinv @ target)
    if np.linalg.norm(proj - target) > 1e-9 * max(1.0, float(np.linalg.norm(target))):
        log.info("target outside range(A); projecting before the barrier solve")
    infeas = nonneg_feasibility_residual(A, proj)
    if infeas > 1e-9 * max(1.0, float(np.linalg.norm(proj))):
        raise Infeasible(f"no non-negative weights reproduce the targets (residual {infeas:.3g})",
                         residual=infeas)
    if opts is None:
        # with rho = sqrt(n) the gap shrinks by n / (n + sqrt(n)) per step
        opts = QpOptions(max_iter=max(200, int(np.ceil(40 * np.sqrt(n)))))
    x = solve_qp_barrier(QpProblem(2.0 * np.eye(n), -2.0 * w, A, proj), opts)
    return _polish(A, w, proj, np.maximum(x, 0.0))


def _polish(A, w, target, x):
    # the barrier iterate stops just inside the orthant; re-solve exactly on
    # its apparent support and keep that point if it is at least as good
    scale = max(1.0, float(np.abs(x).max()))
    free = x > 1e-6 * scale
    y = np.zeros_like(x)
    Af = A[:, free]
    y[free] = w[free] + moore_penrose(Af) @ (target - Af @ w[free])
    ok = (y.min() >= 0 and np.linalg.norm(A @ y - target) <= np.linalg.norm(A @ x - target) + 1e-12
          and np.sum((y - w) ** 2) <= np.sum((x - w) ** 2))
    return y if ok else x
