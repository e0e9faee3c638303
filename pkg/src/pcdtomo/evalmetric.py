"""Path-intersection comparison of two partial network graphs.

Two edges are equivalent when exactly the same boundary-to-boundary paths
use them.  A graph is scored against a reference by looking up, for each
equivalence class of the reference, the edges of the other graph carried
by the same set of paths.
"""

from __future__ import annotations

from typing import Callable, Mapping, Union

from .netgraph import GraphError, Pair, PartialNetworkGraph

Signature = frozenset  # of Pair
SetWeight = Union[None, Mapping[str, float], Callable[[frozenset], float]]


class BoundaryMismatch(GraphError):
    pass


class ZeroDenominator(ZeroDivisionError):
    pass


def edge_signature(graph: PartialNetworkGraph, e: str) -> Signature:
    return frozenset(p for p, seq in graph.paths.items() if e in seq)


def equivalence_classes(graph: PartialNetworkGraph) -> dict[Signature, frozenset[str]]:
    """Edges grouped by signature; edges on no path are left out."""
    out: dict[Signature, set[str]] = {}
    for e, sig in graph.edge_paths().items():
        if sig:
            out.setdefault(sig, set()).add(e)
    return {s: frozenset(v) for s, v in out.items()}


def _check_boundary(g1: PartialNetworkGraph, g2: PartialNetworkGraph) -> None:
    if set(g1.boundary) != set(g2.boundary):
        raise BoundaryMismatch(f"boundaries differ: {sorted(g1.boundary)} vs {sorted(g2.boundary)}")


def matching_edge_set(signature: Signature, other: PartialNetworkGraph,
                      reference: PartialNetworkGraph | None = None) -> frozenset[str]:
    """Edges of ``other`` lying on every path of ``signature`` and on no other path."""
    if reference is not None:
        _check_boundary(reference, other)
    if not signature:
        return frozenset()
    inside = None
    for p in signature:
        seq = set(other.paths.get(p, ()))
        inside = seq if inside is None else inside & seq
        if not inside:
            return frozenset()
    outside = set()
    for p, seq in other.paths.items():
        if p not in signature:
            outside.update(seq)
    return frozenset(inside - outside)


def _set_weight(graph: PartialNetworkGraph, w: SetWeight) -> Callable[[frozenset], float]:
    if callable(w):
        return w
    table = graph.weights if w is None else w
    return lambda s: float(sum(table[e] for e in sorted(s)))


def q_metric(g: PartialNetworkGraph, w: SetWeight, g2: PartialNetworkGraph, w2: SetWeight,
             restrict: Callable[[frozenset], bool] | None = None) -> float:
    """Weighted mismatch of ``g2`` against the reference ``g``.

    Sum over the reference's equivalence classes of ``|W(class) - W2(match)|``
    divided by the sum of ``W(class)``.  ``w`` and ``w2`` are edge-weight
    tables (summed over a set, empty set 0) or functions of an edge set;
    ``None`` uses each graph's own weights.  ``restrict`` keeps only classes
    for which it returns true.
    """
    _check_boundary(g, g2)
    W = _set_weight(g, w)
    W2 = _set_weight(g2, w2)
    num = den = 0.0
    for sig, cls in sorted(equivalence_classes(g).items(), key=lambda kv: sorted(kv[1])):
        if restrict is not None and not restrict(cls):
            continue
        wc = W(cls)
        num += abs(wc - W2(matching_edge_set(sig, g2)))
        den += wc
    if den <= 0:
        raise ZeroDenominator("reference classes carry no weight")
    return num / den


def unmatched_fraction(g: PartialNetworkGraph, g2: PartialNetworkGraph,
                       weight: Callable[[frozenset], float],
                       restrict: Callable[[frozenset], bool] | None = None) -> float:
    """Share of class weight whose match in ``g2`` is empty."""
    _check_boundary(g, g2)
    num = den = 0.0
    for sig, cls in equivalence_classes(g).items():
        if restrict is not None and not restrict(cls):
            continue
        wc = weight(cls)
        den += wc
        if not matching_edge_set(sig, g2):
            num += wc
    if den <= 0:
        raise ZeroDenominator("reference classes carry no weight")
    return num / den


def tm_metrics(g: PartialNetworkGraph, g2: PartialNetworkGraph, weights: SetWeight = None,
               restrict: Callable[[frozenset], bool] | None = None) -> tuple[float, float]:
    """Topological mismatch of ``g2`` against ``g``: weighted and by count.

    A class with a nonempty match counts as exact; an unmatched class costs
    its weight (first value) or 1 (second value).
    """
    W = _set_weight(g, weights)
    tm1 = unmatched_fraction(g, g2, W, restrict)
    tm2 = unmatched_fraction(g, g2, lambda s: 1.0, restrict)
    return tm1, tm2


def lossy_restriction(lossy_edges) -> Callable[[frozenset], bool]:
    """Keep classes containing a logical edge built from at least one lossy edge."""
    lossy = set(lossy_edges)
    return lambda cls: any(part in lossy for e in cls for part in e.split("+"))


def logical_weights(logical: PartialNetworkGraph, base: Mapping[str, float]) -> dict[str, float]:
    """Weights of logical edges as sums of their underlying edges' weights."""
    return {e: float(sum(base[x] for x in e.split("+"))) for e in logical.edges}
