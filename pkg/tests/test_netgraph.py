import json

import pytest
from hypothesis import given, settings, strategies as st

from gen import weighted_network
from pcdtomo import golden
from pcdtomo.netgraph import (BoundaryInterior, DuplicatePath, NegativeWeight, NotATree, PathInconsistency,
                              UnknownPath, build_partial_graph, extract_trees, graph_from_dict,
                              load_graph, logical_subgraph, path_weight, save_graph)


def star_graph(w=1.0):
    edges = {}
    for x in "abc":
        edges[f"{x}h"] = (x, "h")
        edges[f"h{x}"] = ("h", x)
    paths = {(u, v): (f"{u}h", f"h{v}") for u in "abc" for v in "abc" if u != v}
    return build_partial_graph(["a", "b", "c", "h"], edges, {e: w for e in edges}, ["a", "b", "c"], paths)


def test_star_is_valid():
    g = star_graph()
    assert g.interior == ["h"]
    assert len(g.paths) == 6


def test_duplicate_path_rejected():
    g = star_graph()
    items = list(g.paths.items()) + [(("a", "b"), ("ah", "hb"))]
    with pytest.raises(DuplicatePath):
        build_partial_graph(g.vertices, g.edges, g.weights, g.boundary, items)


def test_crossing_graph_valid():
    g = golden.crossing_graph()
    assert path_weight(g, ("b1", "b3")) == 22.0
    assert path_weight(g, ("b1", "b4")) == 21.0


def test_boundary_interior_rejected():
    edges = {"e1": ("a", "b"), "e2": ("b", "c")}
    with pytest.raises(BoundaryInterior):
        build_partial_graph("abc", edges, {"e1": 1, "e2": 1}, ["a", "b", "c"], {("a", "c"): ("e1", "e2")})


def test_negative_weight_rejected():
    with pytest.raises(NegativeWeight):
        build_partial_graph("ab", {"e": ("a", "b")}, {"e": -1.0}, ["a", "b"], {("a", "b"): ("e",)})


def test_path_inconsistency_rejected():
    # a and b both reach y, but by different routes between x and y
    edges = {"ax": ("a", "x"), "bx": ("b", "x"), "xy": ("x", "y"), "xz": ("x", "z"), "zy": ("z", "y"),
             "yc": ("y", "c"), "yd": ("y", "d")}
    paths = {("a", "c"): ("ax", "xy", "yc"), ("b", "d"): ("bx", "xz", "zy", "yd")}
    with pytest.raises(PathInconsistency):
        build_partial_graph("abcdxyz", edges, {e: 1 for e in edges}, "abcd", paths)


def test_path_weight_examples():
    assert path_weight(star_graph(), ("a", "b")) == 2.0
    g = golden.crossing_graph()
    from pcdtomo.pruning import redistribute_after_prune
    pr = redistribute_after_prune(g, golden.CROSSING_PRUNE)
    assert path_weight(pr.graph, ("b1", "b3")) == pytest.approx(21.5, abs=1e-12)
    z = build_partial_graph("ab", {"e": ("a", "b")}, {"e": 0.0}, "ab", {("a", "b"): ("e",)})
    assert path_weight(z, ("a", "b")) == 0.0
    with pytest.raises(UnknownPath):
        path_weight(z, ("b", "a"))


def test_extract_star_source_tree():
    s, r = extract_trees(star_graph(), "a")
    assert set(s.edges) == {"ah", "hb", "hc"}
    assert set(r.edges) == {"bh", "ch", "ha"}
    assert s.leaf_paths["b"] == ("ah", "hb")


def test_diverge_and_rejoin_is_not_a_tree():
    # paths a>c and a>d split at a and meet again at y: y has two parents
    edges = {"ax": ("a", "x"), "az": ("a", "z"), "xy": ("x", "y"), "zy": ("z", "y"),
             "yc": ("y", "c"), "yd": ("y", "d")}
    paths = {("a", "c"): ("ax", "xy", "yc"), ("a", "d"): ("az", "zy", "yd")}
    g = build_partial_graph("acdxyz", edges, {e: 1 for e in edges}, "acd", paths, check_consistency=False)
    with pytest.raises(NotATree):
        extract_trees(g, "a")


def test_logical_chain_collapses():
    edges = {"e1": ("a", "x"), "e2": ("x", "y"), "e3": ("y", "b")}
    g = build_partial_graph("abxy", edges, {"e1": 1, "e2": 2, "e3": 3}, "ab", {("a", "b"): ("e1", "e2", "e3")})
    lg = logical_subgraph(g)
    assert list(lg.edges) == ["e1+e2+e3"]
    assert lg.weights["e1+e2+e3"] == 6


def test_logical_star_unchanged():
    g = star_graph()
    lg = logical_subgraph(g)
    assert set(lg.edges) == set(g.edges)


def test_json_round_trip(tmp_path):
    g = golden.crossing_graph()
    p = tmp_path / "g.json"
    save_graph(g, p)
    d = json.loads(p.read_text())
    assert set(d) == {"vertices", "edges", "boundary", "paths"}
    assert load_graph(p) == g


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_logical_subgraph_keeps_path_weights(seed):
    g = weighted_network(seed)
    lg = logical_subgraph(g)
    for p in g.paths:
        assert path_weight(lg, p) == pytest.approx(path_weight(g, p), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_trees_reproduce_paths(seed):
    g = weighted_network(seed)
    for b in g.boundary:
        s, r = extract_trees(g, b)
        for leaf, seq in s.leaf_paths.items():
            assert g.paths[(b, leaf)] == seq
        for leaf, seq in r.leaf_paths.items():
            assert g.paths[(leaf, b)] == seq


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_build_round_trip(seed):
    g = weighted_network(seed)
    again = build_partial_graph(g.vertices, g.edges, g.weights, g.boundary, g.paths)
    assert again == g
    assert graph_from_dict(g.to_dict()) == g
