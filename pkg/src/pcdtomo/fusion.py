"""Merge consistent source and receiver trees into one network graph.

Every ordered boundary pair ``(u, v)`` defines a chain of length equal to
its (common) path weight.  Vertices of the source tree at ``u`` are placed
on the chain at their depth below ``u``; vertices of the receiver tree at
``v`` at the chain length minus their depth below ``v``.  Points are then
identified:

* a tree vertex is one point wherever it appears (its provenance);
* points of opposite trees on one chain within ``tau`` of each other merge;
* a point on the common prefix of two chains out of ``u`` (or the common
  suffix of two chains into ``v``) is the same point on both chains, which
  may add points to chains whose own trees do not branch there.

Identified points become vertices and consecutive points along each chain
become edges.  Edge weights are the mean gap over the chains using the
edge, refitted in least squares so that chain weights are reproduced.
Point identity uses only the tree structure, never vertex names shared
between trees.
"""

from __future__ import annotations

import logging
from collections import defaultdict, deque
from dataclasses import dataclass

import numpy as np

from .consistency import TreeCollection, asymmetry_vector, extrinsic_adjust
from .netgraph import GraphError, Pair, PartialNetworkGraph, Tree, build_partial_graph

log = logging.getLogger(__name__)


class NotConsistent(GraphError):
    pass


class NegativeGap(GraphError):
    pass


def _meet_depth(tree: Tree, a: str, b: str) -> float:
    pa, pb = tree.root_path(a), tree.root_path(b)
    d = 0.0
    for x, y in zip(pa, pb):
        if x != y:
            break
        d += tree.weights[x]
    return d


def compute_pcd(trees: TreeCollection) -> dict[tuple[Pair, Pair], float]:
    """Shared weight of every two paths with a common root, keyed both ways round."""
    out = {}
    for t in trees.trees():
        leaves = t.leaves
        for i, a in enumerate(leaves):
            for b in leaves[i + 1:]:
                w = _meet_depth(t, a, b)
                pa, pb = t.pair(a), t.pair(b)
                out[(pa, pb)] = w
                out[(pb, pa)] = w
    return out


@dataclass
class _Site:
    chain: Pair
    pos: float
    elem: tuple[str, str] | None  # (tree name or "B", vertex); None for a propagated point


class _Classes:
    def __init__(self):
        self.parent: list[int] = []
        self.sites: list[list[int]] = []  # members, valid at roots

    def add(self) -> int:
        i = len(self.parent)
        self.parent.append(i)
        self.sites.append([])
        return i

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i


def _tree_positions(tree: Tree, leaf: str, length: float, tol: float) -> list[tuple[str, float]]:
    """Interior vertices of a leaf path with their positions along the chain."""
    seq = tree.root_path(leaf)
    out, d = [], 0.0
    for e in seq[:-1]:
        w = tree.weights[e]
        if w < -tol:
            raise NegativeGap(f"{tree.name}: edge {e!r} has negative weight {w:.3g}")
        d += w
        t, h = tree.edges[e]
        x = h if tree.orientation == "source" else t
        out.append((x, d if tree.orientation == "source" else length - d))
    return out


def default_tau(trees: TreeCollection) -> float:
    """Ten times the residual asymmetry, floored at a relative 1e-9."""
    w = trees.weight_vector()
    scale = float(np.abs(w).max()) if w.size else 1.0
    res = float(np.linalg.norm(asymmetry_vector(trees))) if w.size else 0.0
    return max(10.0 * res, 1e-9 * max(scale, 1e-12))


def fuse_network(trees: TreeCollection, tau: float | None = None,
                 identify_segments: bool = True) -> PartialNetworkGraph:
    """Fused partial network graph; ``attrs["provenance"]`` lists each vertex's tree points.

    With ``identify_segments`` two gaps of equal length (within ``tau``) on
    different chains are taken to be the same edge and their end points
    are identified.  Paths sharing neither origin nor destination can only
    be stitched together this way; it relies on edge weights being
    distinct, and has no effect when ``tau`` is far below the spacing of
    weights.
    """
    if tau is None:
        tau = default_tau(trees)
    pairs = trees.pairs()
    length: dict[Pair, float] = {}
    for u, v in pairs:
        ws = trees.source[u].path_weight(v)
        wr = trees.receiver[v].path_weight(u)
        if abs(ws - wr) > tau:
            raise NotConsistent(f"pair {u}>{v}: source tree gives {ws:.6g}, receiver tree {wr:.6g}")
        length[(u, v)] = 0.5 * (ws + wr)

    sites: list[_Site] = []
    cls = _Classes()
    site_cls: list[int] = []
    elem_cls: dict[tuple[str, str], int] = {}
    on_chain: dict[Pair, list[int]] = defaultdict(list)

    def new_site(chain, pos, elem, k=None):
        sid = len(sites)
        sites.append(_Site(chain, pos, elem))
        if k is None:
            k = elem_cls.get(elem) if elem is not None else None
            if k is None:
                k = cls.add()
                if elem is not None:
                    elem_cls[elem] = k
        k = cls.find(k)
        site_cls.append(k)
        cls.sites[k].append(sid)
        on_chain[chain].append(sid)
        return sid

    for (u, v) in pairs:
        L = length[(u, v)]
        new_site((u, v), 0.0, ("B", u))
        new_site((u, v), L, ("B", v))
        st, rt = trees.source[u], trees.receiver[v]
        for x, p in _tree_positions(st, v, L, tau):
            new_site((u, v), p, (st.name, x))
        for x, p in _tree_positions(rt, u, L, tau):
            new_site((u, v), p, (rt.name, x))

    def members(k):
        return cls.sites[cls.find(k)]

    def can_union(a: int, b: int) -> bool:
        a, b = cls.find(a), cls.find(b)
        if a == b:
            return True
        pos_a: dict[Pair, list[float]] = defaultdict(list)
        trees_a: dict[str, str] = {}
        for s in members(a):
            pos_a[sites[s].chain].append(sites[s].pos)
            if sites[s].elem is not None:
                trees_a[sites[s].elem[0]] = sites[s].elem[1]
        trees_b: dict[str, str] = {}
        for s in members(b):
            st = sites[s]
            for q in pos_a.get(st.chain, ()):
                if abs(q - st.pos) > tau:
                    return False
            if st.elem is not None:
                t, x = st.elem
                trees_b[t] = x
                if t in trees_a and trees_a[t] != x:
                    return False  # two vertices of one tree, or two boundary vertices
        # a boundary vertex may only sit at the ends of its own chains
        for bnd, other in ((trees_a.get("B"), b), (trees_b.get("B"), a)):
            if bnd is None:
                continue
            for s in members(other):
                (u, v), p = sites[s].chain, sites[s].pos
                if not ((u == bnd and abs(p) <= tau) or (v == bnd and abs(p - length[(u, v)]) <= tau)):
                    return False
        return True

    def union(a: int, b: int) -> bool:
        a, b = cls.find(a), cls.find(b)
        if a == b:
            return True
        if not can_union(a, b):
            return False
        if len(cls.sites[a]) < len(cls.sites[b]):
            a, b = b, a
        cls.parent[b] = a
        cls.sites[a].extend(cls.sites[b])
        cls.sites[b] = []
        return True

    # opposite-tree points that coincide within tau
    for chain, sids in on_chain.items():
        srt = sorted(sids, key=lambda s: sites[s].pos)
        for i, s in enumerate(srt):
            for t in srt[i + 1:]:
                if sites[t].pos - sites[s].pos > tau:
                    break
                es, et = sites[s].elem, sites[t].elem
                if es and et and es[0] != et[0] and "B" not in (es[0], et[0]):
                    union(site_cls[s], site_cls[t])

    # shared prefixes / suffixes
    src_chains: dict[str, list[Pair]] = defaultdict(list)
    dst_chains: dict[str, list[Pair]] = defaultdict(list)
    for (u, v) in pairs:
        src_chains[u].append((u, v))
        dst_chains[v].append((u, v))

    def class_has_chain(k, chain):
        return any(sites[s].chain == chain for s in members(k))

    def place(k, chain, pos, queue):
        k = cls.find(k)
        if class_has_chain(k, chain):
            return
        near = [s for s in on_chain[chain] if abs(sites[s].pos - pos) <= tau]
        near.sort(key=lambda s: abs(sites[s].pos - pos))
        for s in near:
            if union(k, site_cls[s]):
                queue.append(s)
                return
        bnd = next((sites[s].elem[1] for s in members(k)
                    if sites[s].elem is not None and sites[s].elem[0] == "B"), None)
        if bnd is not None:
            return  # a boundary vertex is never added inside a chain
        queue.append(new_site(chain, pos, None, k))

    def propagate():
        queue = deque(s for s in range(len(sites)) if sites[s].elem is None or sites[s].elem[0] != "B")
        seen_moves = set()
        while queue:
            s = queue.popleft()
            st = sites[s]
            k = cls.find(site_cls[s])
            u, v = st.chain
            for c in src_chains[u]:
                if c == st.chain:
                    continue
                if st.pos <= _meet_depth(trees.source[u], v, c[1]) + tau and (k, c) not in seen_moves:
                    seen_moves.add((k, c))
                    place(k, c, st.pos, queue)
            q = length[st.chain] - st.pos
            for c in dst_chains[v]:
                if c == st.chain:
                    continue
                if q <= _meet_depth(trees.receiver[v], u, c[0]) + tau and (k, c) not in seen_moves:
                    seen_moves.add((k, c))
                    place(k, c, length[c] - q, queue)

    def segments():
        segs = []
        for chain, sids in on_chain.items():
            pos: dict[int, list[float]] = defaultdict(list)
            for s in sids:
                pos[cls.find(site_cls[s])].append(sites[s].pos)
            order = sorted(pos, key=lambda k: float(np.mean(pos[k])))
            for a, b in zip(order, order[1:]):
                gap = float(np.mean(pos[b]) - np.mean(pos[a]))
                if gap > tau:
                    segs.append((gap, a, b))
        return sorted(set(segs))

    def match_segments() -> bool:
        # two chains crossing the same edge see a gap of the same length
        segs = segments()
        merged = False
        for i, (g1, a, b) in enumerate(segs):
            for g2, c, d in segs[i + 1:]:
                if g2 - g1 > tau:
                    break
                a, b, c, d = (cls.find(x) for x in (a, b, c, d))
                if (a, b) == (c, d) or a == d or b == c:
                    continue
                if can_union(a, c) and can_union(b, d):
                    union(a, c)
                    if not union(b, d):
                        log.debug("segment match only partly applied")
                    merged = True
        return merged

    propagate()
    if identify_segments:
        for _ in range(len(pairs) + 1):
            if not match_segments():
                break
            propagate()

    return _assemble(trees, pairs, length, sites, cls, site_cls, tau)


def _assemble(trees, pairs, length, sites, cls, site_cls, tau) -> PartialNetworkGraph:
    roots = sorted({cls.find(k) for k in site_cls})
    prov: dict[int, list[str]] = {}
    bname: dict[int, str] = {}
    for k in roots:
        tags = set()
        for s in cls.sites[k]:
            e = sites[s].elem
            if e is None:
                continue
            if e[0] == "B":
                bname[k] = e[1]
            tags.add(f"{e[0]}/{e[1]}" if e[0] != "B" else e[1])
        prov[k] = sorted(tags) or ["virtual"]
    interior = sorted((k for k in roots if k not in bname), key=lambda k: (prov[k], k))
    name = dict(bname)
    width = len(str(max(len(interior) - 1, 0)))
    for i, k in enumerate(interior):
        name[k] = f"f{i:0{width}d}"

    gaps: dict[tuple[str, str], list[float]] = defaultdict(list)
    paths: dict[Pair, tuple[str, ...]] = {}
    for chain in pairs:
        pos: dict[int, list[float]] = defaultdict(list)
        for s, st in enumerate(sites):
            if st.chain == chain:
                pos[cls.find(site_cls[s])].append(st.pos)
        ordered = sorted(pos, key=lambda k: (float(np.mean(pos[k])), name[k] != chain[0], name[k]))
        u, v = chain
        # endpoints pinned
        ordered = [k for k in ordered if name[k] not in (u, v)]
        ku = next(k for k in pos if name[k] == u)
        kv = next(k for k in pos if name[k] == v)
        seq = [ku] + ordered + [kv]
        where = {k: float(np.mean(pos[k])) for k in seq}
        where[ku], where[kv] = 0.0, length[chain]
        eids = []
        for a, b in zip(seq, seq[1:]):
            g = where[b] - where[a]
            if g < -tau:
                raise NegativeGap(f"chain {u}>{v}: points out of order by {g:.3g}")
            key = (name[a], name[b])
            gaps[key].append(max(g, 0.0))
            eids.append(f"{name[a]}>{name[b]}")
        paths[chain] = tuple(eids)

    edges = {f"{a}>{b}": (a, b) for (a, b) in gaps}
    weights = {f"{a}>{b}": float(np.mean(g)) for (a, b), g in gaps.items()}
    verts = sorted(set(name.values()))
    g = build_partial_graph(verts, edges, weights, trees.boundary, paths, check_consistency=False)
    fit = extrinsic_adjust(g, {p: length[p] for p in pairs})
    if fit.residual > max(tau, 1e-9) * max(1.0, len(pairs)):
        log.info("fused chain lengths reproduced only up to %.3g", fit.residual)
    out = fit.adjusted
    attrs = {"provenance": {name[k]: prov[k] for k in roots}, "tau": tau, "fit_residual": fit.residual}
    return PartialNetworkGraph(out.vertices, out.edges, out.weights, out.boundary, out.paths, attrs)
