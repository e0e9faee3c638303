"""Pruning light edges without losing path weight.

Two sources, two receivers and four short cross edges.  Removing the cross
edges leaves four path equations in four long-edge weights that have no
exact solution, so the redistribution lands on the least-squares answer.
Then a chain where pruning is lossless.
"""

from pcdtomo import golden
from pcdtomo.netgraph import build_partial_graph, path_weight
from pcdtomo.pruning import is_safe_prune, redistribute_after_prune, select_pruning_factor

g = golden.crossing_graph()
print("path weights before:", {f"{u}>{v}": path_weight(g, (u, v)) for u, v in g.pairs})

res = redistribute_after_prune(g, golden.CROSSING_PRUNE)
print("long edges after pruning the cross edges:", res.weights)
print("path weights after:", {f"{u}>{v}": round(path_weight(res.graph, (u, v)), 6) for u, v in g.pairs})
print(f"unavoidable residual: {res.residual:.4f}")

# b1 -> c -> c2 -> b2 with a light middle edge: the chain keeps its length
edges = {"bc": ("b1", "c"), "cc": ("c", "c2"), "cb": ("c2", "b2")}
chain = build_partial_graph(["b1", "b2", "c", "c2"], edges, {"bc": 3.0, "cc": 0.5, "cb": 2.0},
                            ["b1", "b2"], {("b1", "b2"): ("bc", "cc", "cb")})
print("\nchain middle edge provably safe to drop:", is_safe_prune(chain, "cc"))
out = redistribute_after_prune(chain, ["cc"])
print("chain after pruning:", out.weights, "residual", out.residual)

# the factor heuristic looks for the widest gap in relative edge weight
w = {"a": 0.01, "b": 0.02, "c": 1.0, "d": 1.1}
print(f"\nselected pruning factor for {w}: {select_pruning_factor(w, 0.2):.5f}")
