"""Edge pruning by contraction with path-weight-preserving redistribution.

Pruning an edge contracts it (its endpoints become one vertex) and hands its
weight to the surviving edges so that every path keeps its total weight as
closely as possible in the least-squares sense.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from .consistency import TreeCollection, enforce_positivity, incidence_matrix
from .linsolve import moore_penrose
from .netgraph import (GraphError, PartialNetworkGraph, Tree, build_partial_graph,
                       _tree_from_paths)

log = logging.getLogger(__name__)


class PruneError(GraphError):
    pass


class PathVanishes(PruneError):
    pass


class NoEdges(PruneError):
    pass


@dataclass
class PruneResult:
    graph: PartialNetworkGraph
    weights: dict[str, float]
    residual: float
    pruned: list[tuple[str, float]]
    vertex_map: dict[str, str] = field(default_factory=dict)
    negatives: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"pruned": [{"id": e, "weight": w} for e, w in self.pruned],
                "residual": self.residual, "negatives": list(self.negatives),
                "graph": self.graph.to_dict()}


def _vertex_map(graph: PartialNetworkGraph, prune_set: Iterable[str]) -> dict[str, str]:
    parent = {v: v for v in graph.vertices}
    bset = set(graph.boundary)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in prune_set:
        a, b = (find(x) for x in graph.edges[e])
        if a == b:
            continue
        if a in bset and b in bset:
            raise PruneError(f"pruning {e!r} would identify boundary vertices {a!r} and {b!r}")
        # boundary status wins, otherwise the smaller id survives
        keep, drop = (a, b) if (a in bset or (b not in bset and a < b)) else (b, a)
        parent[drop] = keep
    return {v: find(v) for v in graph.vertices}


def contract_edges(graph: PartialNetworkGraph, prune_set: Iterable[str]) -> tuple[PartialNetworkGraph, dict[str, str]]:
    """Contract the given edges; surviving edges keep their ids and weights.

    Raises :class:`PathVanishes` if some path loses all its edges, and a
    :class:`GraphError` if the result is not a valid partial graph (a loop,
    a path revisiting a vertex, or a boundary vertex inside a path).
    """
    prune = set(prune_set)
    unknown = prune - set(graph.edges)
    if unknown:
        raise PruneError(f"unknown edges {sorted(unknown)}")
    if not prune:
        return graph, {v: v for v in graph.vertices}
    paths = {}
    for pair, seq in graph.paths.items():
        kept = tuple(e for e in seq if e not in prune)
        if not kept:
            raise PathVanishes(f"pruning removes every edge of path {pair[0]}>{pair[1]}")
        paths[pair] = kept
    vmap = _vertex_map(graph, sorted(prune))
    edges = {e: (vmap[t], vmap[h]) for e, (t, h) in graph.edges.items() if e not in prune}
    verts = sorted(set(vmap.values()))
    weights = {e: graph.weights[e] for e in edges}
    g = build_partial_graph(verts, edges, weights, graph.boundary, paths,
                            check_consistency=False, allow_negative=True)
    return PartialNetworkGraph(g.vertices, g.edges, g.weights, g.boundary, g.paths,
                               dict(graph.attrs)), vmap


def can_contract(graph: PartialNetworkGraph, prune_set: Iterable[str]) -> bool:
    try:
        contract_edges(graph, prune_set)
    except GraphError:
        return False
    return True


def redistribute_after_prune(graph: PartialNetworkGraph, prune_set: Iterable[str],
                             positivity: str | None = None) -> PruneResult:
    """Contract ``prune_set`` and redistribute weight onto the survivors.

    The survivors get ``W_E~ + A~' (A W - A~ W_E~)``; the residual of the
    path-weight equations is reported and vanishes whenever they have an
    exact solution.  ``positivity`` selects how negative survivors are
    handled ("naive" or "barrier"); ``None`` leaves them.
    """
    prune = sorted(set(prune_set))
    A, pairs, cols = incidence_matrix(graph)
    w = np.array([graph.weights[e] for e in cols])
    target = A @ w
    small, vmap = contract_edges(graph, prune)
    At, pairs_t, cols_t = incidence_matrix(small)
    assert pairs_t == pairs
    w_keep = np.array([graph.weights[e] for e in cols_t])
    w_new = w_keep + moore_penrose(At) @ (target - At @ w_keep)
    negatives = [e for e, x in zip(cols_t, w_new) if x < 0]
    if positivity and negatives:
        w_new = enforce_positivity(At, w_keep, target, method=positivity)
    new = dict(zip(cols_t, (float(x) for x in w_new)))
    return PruneResult(
        graph=small.with_weights(new), weights=new,
        residual=float(np.linalg.norm(At @ w_new - target)),
        pruned=[(e, graph.weights[e]) for e in prune], vertex_map=vmap, negatives=negatives,
    )


def lemma_condition(graph: PartialNetworkGraph, e: str) -> bool:
    """The weight criterion alone: ``e`` is strictly lightest out of an interior
    tail or strictly lightest into an interior head."""
    t, h = graph.edges[e]
    w = graph.weights[e]
    bset = set(graph.boundary)
    if t not in bset:
        if all(w < graph.weights[f] for f, (tt, _) in graph.edges.items() if tt == t and f != e):
            return True
    if h not in bset:
        if all(w < graph.weights[f] for f, (_, hh) in graph.edges.items() if hh == h and f != e):
            return True
    return False


def is_safe_prune(graph: PartialNetworkGraph, e: str) -> bool:
    """True if contracting ``e`` provably keeps every path weight.

    Besides the weight criterion the contraction itself must be admissible;
    merging an interior tail into a boundary head, for instance, would place
    that boundary vertex inside other paths.
    """
    return lemma_condition(graph, e) and can_contract(graph, [e])


def _edge_weights(obj) -> dict[str, float]:
    if isinstance(obj, (PartialNetworkGraph, Tree)):
        return dict(obj.weights)
    return {str(k): float(v) for k, v in dict(obj).items()}


def discontinuities(obj, delta_max: float = 0.2) -> list[float]:
    """Jump points of the pruned-edge count as a function of the factor, up to ``delta_max``."""
    w = _edge_weights(obj)
    if not w:
        raise NoEdges("no edges to prune")
    wmax = max(w.values())
    if wmax <= 0:
        return []
    return sorted({x / wmax for x in w.values() if x / wmax <= delta_max})


def select_pruning_factor(obj, delta_max: float = 0.2) -> float:
    """Factor at the start of the widest gap between consecutive jump points.

    ``delta_max`` closes the last gap.  Ties go to the smaller factor;
    with no jump point at or below ``delta_max`` nothing is pruned (0).
    """
    if not 0 < delta_max <= 1:
        raise ValueError("delta_max must lie in (0, 1]")
    pts = discontinuities(obj, delta_max)
    if not pts:
        return 0.0
    gaps = np.diff(pts + [delta_max])
    # gaps equal up to rounding count as ties
    k = int(np.flatnonzero(gaps >= gaps.max() - 1e-12 * delta_max)[0])
    return float(pts[k])


def pruning_candidates(obj, delta: float) -> list[str]:
    """Edges with ``w / w_max <= delta``, lightest first."""
    w = _edge_weights(obj)
    if not w:
        raise NoEdges("no edges to prune")
    wmax = max(w.values())
    if wmax <= 0 or delta <= 0:
        return []
    return sorted((e for e, x in w.items() if x / wmax <= delta), key=lambda e: (w[e], e))


def admissible_subset(graph: PartialNetworkGraph, ordered: Iterable[str]) -> list[str]:
    """Greedy prefix-respecting subset whose joint contraction stays valid."""
    chosen: list[str] = []
    for e in ordered:
        if can_contract(graph, chosen + [e]):
            chosen.append(e)
        else:
            log.debug("skipping %s: contraction not admissible", e)
    return chosen


def prune_by_factor(graph: PartialNetworkGraph, delta: float,
                    positivity: str | None = None,
                    protect: Iterable[str] = ()) -> PruneResult:
    keep = set(protect)
    cand = [e for e in pruning_candidates(graph, delta) if e not in keep]
    return redistribute_after_prune(graph, admissible_subset(graph, cand), positivity)


def budget_selection(weights: dict[str, float], budget: float) -> list[str]:
    """Longest lightest-first prefix whose squared weights sum to at most ``budget``."""
    if budget < 0:
        raise ValueError("budget must be non-negative")
    out, acc = [], 0.0
    for e in sorted(weights, key=lambda e: (weights[e], e)):
        acc += weights[e] ** 2
        if acc > budget:
            break
        out.append(e)
    return out


TreesOrGraph = Union[PartialNetworkGraph, Tree, TreeCollection]


def tree_from_graph(graph: PartialNetworkGraph, root: str, orientation: str) -> Tree:
    return _tree_from_paths(graph, root, orientation)


def prune_tree(tree: Tree, prune_set: Iterable[str], positivity: str | None = None) -> tuple[Tree, PruneResult]:
    g = tree.to_graph()
    res = redistribute_after_prune(g, admissible_subset(g, sorted(prune_set, key=lambda e: (tree.weights[e], e))),
                                   positivity)
    return tree_from_graph(res.graph, tree.root, tree.orientation), res


def prune_by_budget(obj: TreesOrGraph, budget: float, positivity: str | None = None):
    """Prune the lightest edges whose squared weights fit in ``budget``.

    For a tree collection the selection runs over all tree edges jointly and
    each tree is then pruned separately; the pruned collection is returned
    together with the per-tree results.
    """
    if isinstance(obj, PartialNetworkGraph):
        sel = budget_selection(dict(obj.weights), budget)
        return redistribute_after_prune(obj, admissible_subset(obj, sel), positivity)
    if isinstance(obj, Tree):
        return prune_tree(obj, budget_selection(dict(obj.weights), budget), positivity)
    flat = {f"{t.name}\x00{e}": t.weights[e] for t in obj.trees() for e in t.edge_ids}
    per_tree: dict[str, list[str]] = {}
    for key in budget_selection(flat, budget):
        name, e = key.split("\x00")
        per_tree.setdefault(name, []).append(e)
    out = obj
    results = {}
    for t in obj.trees():
        if t.name in per_tree:
            new, res = prune_tree(t, per_tree[t.name], positivity)
            out = out.replace(new)
            results[t.name] = res
    return out, results
