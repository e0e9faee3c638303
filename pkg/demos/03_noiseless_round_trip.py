"""Trees of a known network fuse back into that network.

Random 40-vertex network with six boundary vertices and distinct edge
weights.  Its twelve source and receiver trees are fused and the result is
compared with the network's logical subgraph.  Edge counts can differ:
edges used by exactly the same set of paths cannot be told apart from
end-to-end data, and the score compares those classes, not single edges.
"""

import numpy as np

from pcdtomo.consistency import TreeCollection
from pcdtomo.evalmetric import tm_metrics
from pcdtomo.fusion import fuse_network
from pcdtomo.netgraph import logical_subgraph
from pcdtomo.simulate import SimConfig, random_network

for symmetric in (False, True):
    for seed in range(3):
        g, truth = random_network(SimConfig(seed=seed, symmetric=symmetric))
        rng = np.random.default_rng(seed)
        g = g.with_weights({e: float(rng.uniform(0.1, 1.0)) for e in g.edge_ids})
        truth = truth.with_weights({e: sum(g.weights[x] for x in e.split("+")) for e in truth.edges})
        fused = logical_subgraph(fuse_network(TreeCollection.from_graph(g)))
        tm1, tm2 = tm_metrics(truth, fused)
        print(f"{'symmetric ' if symmetric else 'asymmetric'} seed {seed}: "
              f"{len(truth.edges)} true logical edges, {len(fused.edges)} fused, TM1 {tm1:.3f} TM2 {tm2:.3f}")
