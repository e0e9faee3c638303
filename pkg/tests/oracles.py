"""Independent reference computations used by the tests."""

from __future__ import annotations

import itertools

import numpy as np


def brute_force_qp(H, c, B, b, tol=1e-9):
    """Exhaustive active-set solution of min 1/2 x'Hx + c'x, Bx = b, x >= 0.

    Every zero pattern is tried; the equality-constrained subproblem on the
    free coordinates is solved through its KKT system with lstsq.
    """
    H = np.asarray(H, float)
    c = np.asarray(c, float)
    B = np.asarray(B, float).reshape(-1, c.size)
    b = np.asarray(b, float)
    n = c.size
    m = B.shape[0]
    best = None
    for k in range(n + 1):
        for free in itertools.combinations(range(n), k):
            free = list(free)
            x = np.zeros(n)
            if free:
                Hf = H[np.ix_(free, free)]
                Bf = B[:, free]
                K = np.block([[Hf, Bf.T], [Bf, np.zeros((m, m))]])
                rhs = np.concatenate([-c[free], b])
                sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
                x[free] = sol[:k]
            if np.any(x < -tol):
                continue
            if m and np.linalg.norm(B @ x - b) > 1e-7 * (1 + np.linalg.norm(b)):
                continue
            f = 0.5 * x @ H @ x + c @ x
            if best is None or f < best[0] - 1e-12:
                best = (f, np.maximum(x, 0.0))
    return best


def lemma_construction(graph, e):
    """Weights that zero ``e`` while keeping every path weight.

    If ``e`` is strictly the lightest edge out of an interior tail, its
    weight is subtracted from every edge out of the tail and added to every
    edge into it; otherwise the same is done around the head.  Returns
    ``None`` when neither applies.
    """
    t, h = graph.edges[e]
    d = graph.weights[e]
    new = dict(graph.weights)
    out_t = [x for x, (a, _) in graph.edges.items() if a == t]
    in_h = [x for x, (_, b) in graph.edges.items() if b == h]
    if t not in graph.boundary and all(graph.weights[x] > d for x in out_t if x != e):
        for x in out_t:
            new[x] -= d
        for x, (_, b) in graph.edges.items():
            if b == t:
                new[x] += d
        return new
    if h not in graph.boundary and all(graph.weights[x] > d for x in in_h if x != e):
        for x in in_h:
            new[x] -= d
        for x, (a, _) in graph.edges.items():
            if a == h:
                new[x] += d
        return new
    return None
