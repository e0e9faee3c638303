"""Small hand-checkable instances with known answers.

Used by the self-test command, the demos and the test-suite.
"""

from __future__ import annotations

import numpy as np

from .consistency import TreeCollection
from .netgraph import PartialNetworkGraph, Tree, build_partial_graph


def crossing_graph(long_weight: float = 10.0) -> PartialNetworkGraph:
    """Two sources, two receivers, four short cross edges.

    Path weights are b1>b3 = 22, b2>b3 = 21, b1>b4 = 21, b2>b4 = 22 when the
    long edges weigh 10.  Contracting the four cross edges leaves a system
    with no exact solution.
    """
    L = long_weight
    edges = [("w1", "b1", "x1"), ("w2", "b2", "x2"), ("w3", "y3", "b3"), ("w4", "y4", "b4"),
             ("s13", "x1", "y3"), ("s14", "x1", "y4"), ("s23", "x2", "y3"), ("s24", "x2", "y4")]
    weights = {"w1": L, "w2": L, "w3": L, "w4": L, "s13": 2.0, "s14": 1.0, "s23": 1.0, "s24": 2.0}
    paths = {("b1", "b3"): ("w1", "s13", "w3"), ("b1", "b4"): ("w1", "s14", "w4"),
             ("b2", "b3"): ("w2", "s23", "w3"), ("b2", "b4"): ("w2", "s24", "w4")}
    return build_partial_graph(["b1", "b2", "b3", "b4", "x1", "x2", "y3", "y4"], edges, weights,
                               ["b1", "b2", "b3", "b4"], paths)


CROSSING_PRUNE = ("s13", "s14", "s23", "s24")
CROSSING_MATRIX = np.array([[1, 0, 1, 0], [0, 1, 1, 0], [1, 0, 0, 1], [0, 1, 0, 1]], dtype=float)
CROSSING_TARGETS = np.array([22.0, 21.0, 21.0, 22.0])


def star_tree(root: str, orientation: str, others=("a", "b", "c"), hub: str = "h") -> Tree:
    """Tree of the three-leaf star with local labels 1 (hub edge), 2 and 3 (leaf edges)."""
    leaves = [x for x in others if x != root]
    if orientation == "source":
        edges = {"1": (root, hub), "2": (hub, leaves[0]), "3": (hub, leaves[1])}
        paths = {leaves[0]: ("1", "2"), leaves[1]: ("1", "3")}
    else:
        edges = {"1": (hub, root), "2": (leaves[0], hub), "3": (leaves[1], hub)}
        paths = {leaves[0]: ("2", "1"), leaves[1]: ("3", "1")}
    return Tree(root, orientation, edges, {e: 1.0 for e in edges}, paths)


def star_trees(eps: float = 0.0) -> TreeCollection:
    """Six unit-weight star trees; the hub edge of the receiver tree at ``a`` gets ``1 + eps``."""
    bnd = ("a", "b", "c")
    src = {b: star_tree(b, "source") for b in bnd}
    rcv = {b: star_tree(b, "receiver") for b in bnd}
    rcv["a"] = rcv["a"].with_weights({"1": 1.0 + eps})
    return TreeCollection(bnd, src, rcv)


STAR_SIGNED = np.array([
    [0, 0, 0, 1, 1, 0, 0, 0, 0, -1, -1, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 1, 0, -1, 0, -1, 0, 0, 0, 0, 0, 0],
    [1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, -1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, -1, 0, -1, 0, 0, 0],
    [1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, -1, 0],
    [0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 0, -1],
], dtype=float)

STAR_GRAM_INV = np.array([
    [26, -7, -1, 2, 2, -7],
    [-7, 26, 2, -7, -1, 2],
    [-1, 2, 26, -7, -7, 2],
    [2, -7, -7, 26, 2, -1],
    [2, -1, -7, 2, 26, -7],
    [-7, 2, 2, -1, -7, 26],
], dtype=float) / 90.0

STAR_CORRECTION = np.array([52, -19, -19, 4, -1, 5, 4, -1, 5, 2, 1, 1, 14, 19, -5, 14, 19, -5],
                           dtype=float) / 90.0

STAR_EIGVEC = np.array([1, -1, -1, 1, 1, -1], dtype=float)
