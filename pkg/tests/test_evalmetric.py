import pytest
from hypothesis import given, settings, strategies as st

from gen import weighted_network
from pcdtomo import golden
from pcdtomo.evalmetric import (BoundaryMismatch, ZeroDenominator, edge_signature, equivalence_classes,
                                logical_weights, lossy_restriction, matching_edge_set, q_metric, tm_metrics)
from pcdtomo.netgraph import PartialNetworkGraph, build_partial_graph, logical_subgraph
from pcdtomo.pruning import contract_edges, prune_by_factor


def two_pairs(w_ab=1.0, w_cd=1.0, with_cd=True):
    """Paths a>b and c>d through private interior vertices."""
    edges = {"e1": ("a", "x"), "e2": ("x", "b")}
    paths = {("a", "b"): ("e1", "e2")}
    if with_cd:
        edges.update({"f1": ("c", "y"), "f2": ("y", "d")})
        paths[("c", "d")] = ("f1", "f2")
    ws = {"e1": w_ab / 2, "e2": w_ab / 2, "f1": w_cd / 2, "f2": w_cd / 2}
    ws = {e: ws[e] for e in edges}
    verts = sorted({v for t in edges.values() for v in t} | set("abcd"))
    return build_partial_graph(verts, edges, ws, "abcd", paths)


def relabel(g: PartialNetworkGraph, prefix: str) -> PartialNetworkGraph:
    m = {v: (v if v in g.boundary else prefix + v) for v in g.vertices}
    edges = {e: (m[t], m[h]) for e, (t, h) in g.edges.items()}
    return build_partial_graph([m[v] for v in g.vertices], edges, g.weights, g.boundary, g.paths,
                               check_consistency=False)


def test_self_match_is_own_class():
    g = golden.crossing_graph()
    classes = equivalence_classes(g)
    for sig, cls in classes.items():
        assert matching_edge_set(sig, g, g) == cls
    assert edge_signature(g, "w1") == {("b1", "b3"), ("b1", "b4")}


def test_chain_is_one_class():
    g = two_pairs()
    assert set(equivalence_classes(g).values()) == {frozenset({"e1", "e2"}), frozenset({"f1", "f2"})}


def test_missing_branch_gives_empty():
    g = two_pairs()
    assert matching_edge_set(edge_signature(g, "f1"), two_pairs(with_cd=False), g) == frozenset()


def test_crossing_against_contracted():
    g = golden.crossing_graph()
    small, _ = contract_edges(g, golden.CROSSING_PRUNE)
    assert matching_edge_set(edge_signature(g, "w1"), small) == {"w1"}
    assert matching_edge_set(edge_signature(g, "s13"), small) == frozenset()
    tm1, tm2 = tm_metrics(g, small)
    assert tm2 == pytest.approx(0.5)
    assert tm1 == pytest.approx(6 / 46)


def test_identity_scores_zero():
    g = golden.crossing_graph()
    assert q_metric(g, None, g, None) == 0.0
    assert tm_metrics(g, g) == (0.0, 0.0)


def test_q_one_class_of_two_in_ten():
    from test_netgraph import star_graph
    ws = {"ah": 2.0, "ha": 1.6, "bh": 1.6, "hb": 1.6, "ch": 1.6, "hc": 1.6}
    g = star_graph().with_weights(ws)
    g2 = g.with_weights({**ws, "ah": 0.0})
    assert q_metric(g, None, g2, None) == pytest.approx(0.2)


def test_everything_unmatched():
    from test_netgraph import star_graph
    star = star_graph()
    edges = {f"{u}{v}": (u, v) for u in "abc" for v in "abc" if u != v}
    direct = build_partial_graph("abc", edges, {e: 1.0 for e in edges}, "abc",
                                 {(u, v): (f"{u}{v}",) for u in "abc" for v in "abc" if u != v})
    assert tm_metrics(star, direct) == (1.0, 1.0)


def test_half_unmatched():
    assert tm_metrics(two_pairs(), two_pairs(with_cd=False)) == (0.5, 0.5)


def test_heavy_unmatched_class():
    tm1, tm2 = tm_metrics(two_pairs(w_ab=1.0, w_cd=3.0), two_pairs(with_cd=False))
    assert tm1 == pytest.approx(0.75) and tm2 == 0.5 and tm1 > tm2


def test_errors():
    with pytest.raises(BoundaryMismatch):
        tm_metrics(golden.crossing_graph(), two_pairs())
    zero = two_pairs(0.0, 0.0)
    with pytest.raises(ZeroDenominator):
        q_metric(zero, None, zero, None)


def test_restriction_and_logical_weights():
    g = two_pairs(1.0, 3.0)
    lg = logical_subgraph(g)
    w = logical_weights(lg, g.weights)
    assert sorted(w.values()) == [1.0, 3.0]
    keep = lossy_restriction(["f2"])
    tm1, tm2 = tm_metrics(lg.with_weights(w), two_pairs(with_cd=False), restrict=keep)
    assert (tm1, tm2) == (1.0, 1.0)
    assert tm_metrics(lg.with_weights(w), two_pairs(with_cd=False), restrict=lossy_restriction(["e1"])) == (0.0, 0.0)


def test_callable_weights():
    g = two_pairs()
    assert q_metric(g, lambda s: 1.0, g, lambda s: 2.0 if s else 0.0) == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_self_distance_zero(seed):
    g = weighted_network(seed)
    assert q_metric(g, None, g, None) == 0.0
    assert tm_metrics(g, g) == (0.0, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.5))
def test_bounds_and_relabeling(seed, delta):
    g = weighted_network(seed)
    other = prune_by_factor(g, delta).graph
    tm1, tm2 = tm_metrics(g, other)
    assert 0 <= tm1 <= 1 and 0 <= tm2 <= 1
    assert q_metric(g, None, other, None) >= 0
    assert tm_metrics(g, relabel(other, "z_")) == (tm1, tm2)
    assert q_metric(relabel(g, "q_"), None, other, None) == pytest.approx(q_metric(g, None, other, None))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100.0))
def test_tm2_scale_invariant(seed, k):
    g = weighted_network(seed)
    other = prune_by_factor(g, 0.3).graph
    scaled = g.with_weights({e: k * w for e, w in g.weights.items()})
    assert tm_metrics(scaled, other)[1] == tm_metrics(g, other)[1]
