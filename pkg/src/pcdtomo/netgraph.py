"""Partial network graphs, boundary-to-boundary paths and their trees.

A partial network graph is a directed weighted graph together with an
ordered set of boundary vertices and at most one directed path per ordered
boundary pair.  Edge weights are an additive, non-negative performance
metric, so the weight of a path is the sum of its edge weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

Pair = tuple[str, str]


class GraphError(ValueError):
    """Base class for malformed partial network graphs."""


class DuplicatePath(GraphError):
    pass


class BoundaryInterior(GraphError):
    pass


class PathInconsistency(GraphError):
    pass


class NegativeWeight(GraphError):
    pass


class InvalidPath(GraphError):
    """A path whose edges do not chain head-to-tail from its source to its receiver."""


class UnknownPath(KeyError):
    pass


class NotATree(GraphError):
    pass


@dataclass(frozen=True)
class PartialNetworkGraph:
    """Directed graph, boundary set and path set.

    The constructor stores its inputs as given; use :func:`build_partial_graph`
    to validate the standing assumptions on the path set.
    """

    vertices: tuple[str, ...]
    edges: dict[str, tuple[str, str]]
    weights: dict[str, float]
    boundary: tuple[str, ...]
    paths: dict[Pair, tuple[str, ...]]
    attrs: dict = field(default_factory=dict, compare=False)

    @property
    def edge_ids(self) -> list[str]:
        return sorted(self.edges)

    @property
    def pairs(self) -> list[Pair]:
        """Ordered pairs with a path, in boundary order."""
        rank = {b: i for i, b in enumerate(self.boundary)}
        return sorted(self.paths, key=lambda p: (rank[p[0]], rank[p[1]]))

    @property
    def interior(self) -> list[str]:
        bset = set(self.boundary)
        return sorted(v for v in self.vertices if v not in bset)

    def path_vertices(self, pair: Pair) -> list[str]:
        seq = self.paths[pair]
        if not seq:
            return [pair[0]]
        return [self.edges[seq[0]][0]] + [self.edges[e][1] for e in seq]

    def edge_paths(self) -> dict[str, frozenset[Pair]]:
        """Map every edge to the set of pairs whose path traverses it."""
        out: dict[str, set[Pair]] = {e: set() for e in self.edges}
        for pair, seq in self.paths.items():
            for e in seq:
                out[e].add(pair)
        return {e: frozenset(s) for e, s in out.items()}

    def with_weights(self, weights: Mapping[str, float]) -> "PartialNetworkGraph":
        new = dict(self.weights)
        new.update({e: float(w) for e, w in weights.items()})
        return PartialNetworkGraph(self.vertices, dict(self.edges), new, self.boundary,
                                   dict(self.paths), dict(self.attrs))

    def to_dict(self) -> dict:
        out = {
            "vertices": list(self.vertices),
            "edges": [{"id": e, "tail": self.edges[e][0], "head": self.edges[e][1],
                       "weight": self.weights[e]} for e in self.edge_ids],
            "boundary": list(self.boundary),
            "paths": {f"{u}>{v}": list(self.paths[(u, v)]) for u, v in self.pairs},
        }
        if self.attrs:
            out.update(self.attrs)
        return out


@dataclass(frozen=True)
class Tree:
    """Source or receiver tree rooted at a boundary vertex.

    ``leaf_paths[leaf]`` is the edge sequence in travel direction: root to
    leaf for a source tree, leaf to root for a receiver tree.
    """

    root: str
    orientation: str
    edges: dict[str, tuple[str, str]]
    weights: dict[str, float]
    leaf_paths: dict[str, tuple[str, ...]]

    def __post_init__(self):
        if self.orientation not in ("source", "receiver"):
            raise ValueError(f"orientation must be 'source' or 'receiver', got {self.orientation!r}")

    @property
    def name(self) -> str:
        return f"{'S' if self.orientation == 'source' else 'R'}:{self.root}"

    @property
    def leaves(self) -> list[str]:
        return sorted(self.leaf_paths)

    @property
    def edge_ids(self) -> list[str]:
        return sorted(self.edges)

    @property
    def vertices(self) -> list[str]:
        vs = {self.root}
        for t, h in self.edges.values():
            vs.update((t, h))
        return sorted(vs)

    def pair(self, leaf: str) -> Pair:
        return (self.root, leaf) if self.orientation == "source" else (leaf, self.root)

    def path_weight(self, leaf: str) -> float:
        return float(sum(self.weights[e] for e in self.leaf_paths[leaf]))

    def root_path(self, leaf: str) -> tuple[str, ...]:
        """Edges of the leaf's path ordered outward from the root."""
        seq = self.leaf_paths[leaf]
        return seq if self.orientation == "source" else tuple(reversed(seq))

    def depth(self) -> dict[str, float]:
        """Cumulative weight from the root to each vertex."""
        out = {self.root: 0.0}
        for leaf in self.leaves:
            d = 0.0
            for e in self.root_path(leaf):
                t, h = self.edges[e]
                d += self.weights[e]
                out[h if self.orientation == "source" else t] = d
        return out

    def with_weights(self, weights: Mapping[str, float]) -> "Tree":
        new = dict(self.weights)
        new.update({e: float(w) for e, w in weights.items()})
        return Tree(self.root, self.orientation, dict(self.edges), new, dict(self.leaf_paths))

    def to_graph(self) -> PartialNetworkGraph:
        """View the tree as a partial network graph (root first in the boundary)."""
        paths = {self.pair(leaf): seq for leaf, seq in self.leaf_paths.items()}
        return PartialNetworkGraph(tuple(self.vertices), dict(self.edges), dict(self.weights),
                                   (self.root, *self.leaves), paths)

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "orientation": self.orientation,
            "edges": [{"id": e, "tail": self.edges[e][0], "head": self.edges[e][1],
                       "weight": self.weights[e]} for e in self.edge_ids],
            "paths": {leaf: list(self.leaf_paths[leaf]) for leaf in self.leaves},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Tree":
        edges = {str(e["id"]): (str(e["tail"]), str(e["head"])) for e in d["edges"]}
        weights = {str(e["id"]): float(e["weight"]) for e in d["edges"]}
        paths = {str(k): tuple(str(x) for x in v) for k, v in d["paths"].items()}
        return cls(str(d["root"]), str(d["orientation"]), edges, weights, paths)


def _check_chain(pair: Pair, seq: tuple[str, ...], edges: Mapping[str, tuple[str, str]]) -> list[str]:
    u, v = pair
    if not seq:
        raise InvalidPath(f"path {u}>{v} has no edges")
    for e in seq:
        if e not in edges:
            raise InvalidPath(f"path {u}>{v} uses unknown edge {e!r}")
    verts = [edges[seq[0]][0]]
    for e in seq:
        t, h = edges[e]
        if t != verts[-1]:
            raise InvalidPath(f"path {u}>{v} breaks at edge {e!r}: expected tail {verts[-1]!r}, got {t!r}")
        verts.append(h)
    if verts[0] != u or verts[-1] != v:
        raise InvalidPath(f"path {u}>{v} runs from {verts[0]!r} to {verts[-1]!r}")
    if len(set(verts)) != len(verts):
        raise InvalidPath(f"path {u}>{v} revisits a vertex")
    return verts


def _check_consistency(paths: Mapping[Pair, tuple[str, ...]], verts: Mapping[Pair, list[str]]):
    seen: dict[tuple[str, str], tuple[tuple[str, ...], Pair]] = {}
    for pair, seq in paths.items():
        vs = verts[pair]
        for i in range(len(vs)):
            for j in range(i + 1, len(vs)):
                key = (vs[i], vs[j])
                sub = seq[i:j]
                prev = seen.get(key)
                if prev is None:
                    seen[key] = (sub, pair)
                elif prev[0] != sub:
                    raise PathInconsistency(
                        f"paths {prev[1][0]}>{prev[1][1]} and {pair[0]}>{pair[1]} "
                        f"connect {key[0]} to {key[1]} differently")


def build_partial_graph(vertices: Iterable[str], edges, weights: Mapping[str, float] | None,
                        boundary: Iterable[str], paths, check_consistency: bool = True,
                        allow_negative: bool = False) -> PartialNetworkGraph:
    """Validate raw components and assemble a :class:`PartialNetworkGraph`.

    ``edges`` is a mapping ``id -> (tail, head)`` or an iterable of
    ``(id, tail, head)``; ``paths`` is a mapping ``(u, v) -> edge ids`` or an
    iterable of ``((u, v), edge ids)`` items, so duplicates can be detected.
    ``check_consistency=False`` skips the pairwise subpath comparison, which
    contracted graphs do not always satisfy.
    """
    vertices = tuple(str(v) for v in vertices)
    vset = set(vertices)
    if isinstance(edges, Mapping):
        edge_map = {str(k): (str(t), str(h)) for k, (t, h) in edges.items()}
    else:
        edge_map = {}
        for eid, t, h in edges:
            if str(eid) in edge_map:
                raise GraphError(f"duplicate edge id {eid!r}")
            edge_map[str(eid)] = (str(t), str(h))
    for eid, (t, h) in edge_map.items():
        if t not in vset or h not in vset:
            raise GraphError(f"edge {eid!r} references an unknown vertex")
        if t == h:
            raise GraphError(f"edge {eid!r} is a self-loop")
    weights = {e: float((weights or {}).get(e, 0.0)) for e in edge_map}
    for e, w in weights.items():
        if not (w >= 0.0 or (allow_negative and w == w)):
            raise NegativeWeight(f"edge {e!r} has weight {w}")
    boundary = tuple(str(b) for b in boundary)
    if len(set(boundary)) != len(boundary):
        raise GraphError("boundary vertices repeated")
    for b in boundary:
        if b not in vset:
            raise GraphError(f"boundary vertex {b!r} is not a vertex")
    bset = set(boundary)

    items = paths.items() if isinstance(paths, Mapping) else paths
    path_map: dict[Pair, tuple[str, ...]] = {}
    for (u, v), seq in items:
        pair = (str(u), str(v))
        if pair in path_map:
            raise DuplicatePath(f"second path for pair {u}>{v}")
        if pair[0] not in bset or pair[1] not in bset or pair[0] == pair[1]:
            raise GraphError(f"path {u}>{v} must join two distinct boundary vertices")
        path_map[pair] = tuple(str(e) for e in seq)

    verts = {}
    for pair, seq in path_map.items():
        vs = _check_chain(pair, seq, edge_map)
        for x in vs[1:-1]:
            if x in bset:
                raise BoundaryInterior(f"boundary vertex {x!r} is interior to path {pair[0]}>{pair[1]}")
        verts[pair] = vs
    if check_consistency:
        _check_consistency(path_map, verts)
    return PartialNetworkGraph(vertices, edge_map, weights, boundary, path_map)


def path_weight(graph: PartialNetworkGraph, pair: Pair) -> float:
    pair = tuple(pair)
    if pair not in graph.paths:
        raise UnknownPath(f"no path {pair[0]}>{pair[1]}")
    return float(sum(graph.weights[e] for e in graph.paths[pair]))


def _tree_from_paths(graph: PartialNetworkGraph, root: str, orientation: str) -> Tree:
    if orientation == "source":
        own = {v: graph.paths[(u, v)] for (u, v) in graph.paths if u == root}
    else:
        own = {u: graph.paths[(u, v)] for (u, v) in graph.paths if v == root}
    used = sorted({e for seq in own.values() for e in seq})
    edges = {e: graph.edges[e] for e in used}
    # arborescence check: each non-root vertex has exactly one tree edge towards the root
    side = 1 if orientation == "source" else 0
    parent_edge: dict[str, str] = {}
    for e, te in edges.items():
        x = te[side]
        if x == root:
            raise NotATree(f"{orientation} tree of {root!r}: edge {e!r} points back into the root")
        if x in parent_edge:
            raise NotATree(f"{orientation} tree of {root!r}: vertex {x!r} reached by edges "
                           f"{parent_edge[x]!r} and {e!r}")
        parent_edge[x] = e
    return Tree(root, orientation, edges, {e: graph.weights[e] for e in used}, dict(own))


def extract_trees(graph: PartialNetworkGraph, b: str) -> tuple[Tree, Tree]:
    """Source and receiver trees of boundary vertex ``b``."""
    if b not in graph.boundary:
        raise GraphError(f"{b!r} is not a boundary vertex")
    return _tree_from_paths(graph, b, "source"), _tree_from_paths(graph, b, "receiver")


def logical_subgraph(graph: PartialNetworkGraph) -> PartialNetworkGraph:
    """Contract unbranched chains so that only boundary vertices and branch points remain.

    A logical edge is named by joining the ids of the underlying edges with
    ``+`` and carries their summed weight.
    """
    on_path = {e for seq in graph.paths.values() for e in seq}
    indeg: dict[str, int] = {}
    outdeg: dict[str, int] = {}
    for e in on_path:
        t, h = graph.edges[e]
        outdeg[t] = outdeg.get(t, 0) + 1
        indeg[h] = indeg.get(h, 0) + 1
    bset = set(graph.boundary)
    logical = set(bset)
    for v in set(indeg) | set(outdeg):
        if v not in bset and (indeg.get(v, 0) != 1 or outdeg.get(v, 0) != 1):
            logical.add(v)

    new_edges: dict[str, tuple[str, str]] = {}
    new_weights: dict[str, float] = {}
    new_paths: dict[Pair, tuple[str, ...]] = {}
    for pair, seq in graph.paths.items():
        out: list[str] = []
        chunk: list[str] = []
        for e in seq:
            chunk.append(e)
            if graph.edges[e][1] in logical:
                eid = "+".join(chunk)
                if eid not in new_edges:
                    new_edges[eid] = (graph.edges[chunk[0]][0], graph.edges[e][1])
                    new_weights[eid] = float(sum(graph.weights[x] for x in chunk))
                out.append(eid)
                chunk = []
        new_paths[pair] = tuple(out)
    verts = tuple(v for v in graph.vertices if v in logical)
    return PartialNetworkGraph(verts, new_edges, new_weights, graph.boundary, new_paths,
                               dict(graph.attrs))


def graph_from_dict(d: Mapping, validate: bool = True) -> PartialNetworkGraph:
    edges = [(str(e["id"]), str(e["tail"]), str(e["head"])) for e in d["edges"]]
    weights = {str(e["id"]): float(e.get("weight", 0.0)) for e in d["edges"]}
    paths = []
    for key, seq in d["paths"].items():
        u, v = key.split(">")
        paths.append(((u, v), [str(x) for x in seq]))
    extra = {k: v for k, v in d.items() if k not in ("vertices", "edges", "boundary", "paths")}
    if validate:
        g = build_partial_graph(d["vertices"], edges, weights, d["boundary"], paths)
        return PartialNetworkGraph(g.vertices, g.edges, g.weights, g.boundary, g.paths, extra)
    return PartialNetworkGraph(tuple(map(str, d["vertices"])), {e: (t, h) for e, t, h in edges},
                               weights, tuple(map(str, d["boundary"])),
                               {tuple(k): tuple(s) for k, s in paths}, extra)


def load_graph(path: str | Path, validate: bool = True) -> PartialNetworkGraph:
    return graph_from_dict(json.loads(Path(path).read_text()), validate=validate)


def save_graph(graph: PartialNetworkGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph.to_dict(), indent=2))
