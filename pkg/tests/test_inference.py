import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcdtomo.inference import (LengthMismatch, PathSeries, SeriesError, TooShort, loss_metric,
                               pairwise_shared_metric, read_series, reconstruct_tree, write_series)


def src(leaf, values, root="r"):
    return PathSeries(root, leaf, "source", values)


def tree_series(rng, n, edge_sd):
    """Leaf series summing independent edge components of a fixed 4-leaf tree.

    Tree: r -> A -> {B, C}; B -> {l1, l2}; C -> {l3, l4}.
    """
    comp = {e: rng.normal(0, sd, n) for e, sd in edge_sd.items()}
    route = {"l1": ("A", "B", "l1"), "l2": ("A", "B", "l2"), "l3": ("A", "C", "l3"), "l4": ("A", "C", "l4")}
    return [src(leaf, sum(comp[e] for e in route[leaf])) for leaf in route]


def parent(tree, v):
    return next(t for t, h in tree.edges.values() if h == v)


def test_identical_series_give_variance():
    x = np.array([0.1, 0.4, 0.2, 0.9])
    assert pairwise_shared_metric(src("a", x), src("b", x)) == pytest.approx(np.var(x, ddof=1))


def test_pair_errors():
    with pytest.raises(LengthMismatch):
        pairwise_shared_metric(src("a", [1, 2, 3]), src("b", [1, 2]))
    with pytest.raises(TooShort):
        pairwise_shared_metric(src("a", [1.0]), src("b", [2.0]))
    with pytest.raises(SeriesError):
        pairwise_shared_metric(src("a", [1, 2]), src("b", [1, 2], root="q"))


def test_independent_series_covariance_shrinks():
    n, hits = 400, 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(0, 1, n), rng.normal(0, 1, n)
        hits += abs(pairwise_shared_metric(src("a", x), src("b", y))) <= 3 / np.sqrt(n)
    assert hits >= 97


def test_shared_on_off_edge():
    # both paths cross one two-state edge; private parts are independent noise
    from pcdtomo.simulate import SimConfig, edge_trace, two_state_variance
    cfg = SimConfig(num_windows=40_000, loss_set=(0.05,), seed=11)
    shared = -np.log1p(-edge_trace("e", cfg, True).drop)
    rng = np.random.default_rng(3)
    x = shared + rng.normal(0, 0.01, shared.size)
    y = shared + rng.normal(0, 0.01, shared.size)
    est = pairwise_shared_metric(src("a", x), src("b", y))
    v = two_state_variance(-np.log(0.95), 10, 10)
    prod = (x - x.mean()) * (y - y.mean())
    batches = prod.reshape(50, -1).mean(axis=1)
    stderr = batches.std(ddof=1) / np.sqrt(50)
    assert abs(est - v) <= 3 * stderr


def test_two_leaves():
    rng = np.random.default_rng(0)
    s = rng.normal(size=50)
    a, b = src("a", s + rng.normal(size=50)), src("b", s + rng.normal(size=50))
    inf = reconstruct_tree("r", "source", [a, b])
    t = inf.tree
    assert len(t.vertices) == 4
    hub = parent(t, "a")
    assert parent(t, "b") == hub and parent(t, hub) == "r"
    assert t.depth()[hub] == pytest.approx(max(0.0, pairwise_shared_metric(a, b)))


def test_recovers_four_leaf_topology():
    sd = {"A": 1.0, "B": 0.8, "C": 0.6, "l1": 0.3, "l2": 0.4, "l3": 0.5, "l4": 0.35}
    for seed in range(10):
        t = reconstruct_tree("r", "source", tree_series(np.random.default_rng(seed), 10_000, sd)).tree
        assert parent(t, "l1") == parent(t, "l2") != parent(t, "l3") == parent(t, "l4")
        assert parent(t, parent(t, "l1")) == parent(t, parent(t, "l3"))


def test_tie_picks_smallest_pair():
    x = np.array([0.0, 1.0, 0.0, 1.0])
    inf = reconstruct_tree("r", "source", [src(k, x) for k in "cab"])
    assert inf.merges[0][:2] == ("{a}", "{b}")


def test_receiver_orientation():
    rng = np.random.default_rng(2)
    base = rng.normal(size=100)
    ss = [PathSeries("r", k, "receiver", base + rng.normal(size=100)) for k in "ab"]
    t = reconstruct_tree("r", "receiver", ss).tree
    for leaf, seq in t.leaf_paths.items():
        assert t.edges[seq[0]][0] == leaf and t.edges[seq[-1]][1] == "r"


def test_degenerate_gives_star():
    x = np.array([1.0, -1.0, 1.0, -1.0])
    inf = reconstruct_tree("r", "source", [src("a", x), src("b", -x)])
    assert inf.degenerate
    hub = parent(inf.tree, "a")
    assert inf.tree.depth()[hub] == 0.0


def test_wrong_root_rejected():
    with pytest.raises(SeriesError):
        reconstruct_tree("r", "source", [src("a", [1, 2], root="q")])
    with pytest.raises(SeriesError):
        reconstruct_tree("r", "source", [])


def test_loss_metric():
    assert loss_metric([1.0, 0.5]) == pytest.approx([0.0, np.log(2)])
    assert np.isfinite(loss_metric([0.0])).all()


def test_csv_round_trip(tmp_path):
    s = PathSeries("b1", "b2", "receiver", [0.9, 0.95, 1.0], t_a=2.5)
    write_series([s], tmp_path)
    (back,) = read_series(tmp_path)
    assert (back.root, back.leaf, back.orientation, back.t_a) == ("b1", "b2", "receiver", 2.5)
    assert back.values.tolist() == s.values.tolist()
    assert (tmp_path / "receiver_b1_b2.csv").read_text().startswith("root,leaf,orientation,t_a")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.randoms())
def test_permutation_invariant(seed, k, shuffler):
    rng = np.random.default_rng(seed)
    common = rng.normal(size=30)
    series = [src(f"x{i}", common * rng.uniform(0, 1) + rng.normal(size=30)) for i in range(k)]
    shuffled = list(series)
    shuffler.shuffle(shuffled)
    t1 = reconstruct_tree("r", "source", series).tree
    t2 = reconstruct_tree("r", "source", shuffled).tree
    assert t1.edges == t2.edges and t1.weights == t2.weights


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_tree_is_binary_and_first_merge_exact(seed, k):
    rng = np.random.default_rng(seed)
    common = rng.normal(size=40)
    series = [src(f"x{i}", common * rng.uniform(0.5, 1) + rng.normal(size=40)) for i in range(k)]
    inf = reconstruct_tree("r", "source", series)
    t = inf.tree
    kids = {}
    for tail, head in t.edges.values():
        kids.setdefault(tail, []).append(head)
    assert len(kids["r"]) == 1
    assert all(len(c) == 2 for v, c in kids.items() if v != "r")
    assert sorted(t.leaves) == sorted(s.leaf for s in series)
    # the first merged pair meets at exactly its own estimate, unless clipped
    a, b, val = inf.merges[0]
    pair = (("r", a.strip("{}")), ("r", b.strip("{}")))
    if not inf.degenerate and all(m[2] >= 0 for m in inf.merges) and \
            all(x[2] >= y[2] for x, y in zip(inf.merges, inf.merges[1:])):
        assert compute_pcd_tree(t)[pair] == pytest.approx(val, abs=1e-12)


def compute_pcd_tree(t):
    """Root-to-meet weight of every leaf pair of one tree."""
    out = {}
    leaves = t.leaves
    for i, x in enumerate(leaves):
        for y in leaves[i + 1:]:
            common = [e for e, f in zip(t.root_path(x), t.root_path(y)) if e == f]
            d = sum(t.weights[e] for e in common)
            out[(t.pair(x), t.pair(y))] = out[(t.pair(y), t.pair(x))] = d
    return out


def test_pcd_matches_estimates_on_tree_data():
    sd = {"A": 1.0, "B": 0.8, "C": 0.6, "l1": 0.3, "l2": 0.4, "l3": 0.5, "l4": 0.35}
    inf = reconstruct_tree("r", "source", tree_series(np.random.default_rng(1), 20_000, sd))
    pcd = compute_pcd_tree(inf.tree)
    for (a, b), est in inf.shared.items():
        assert pcd[(("r", a), ("r", b))] == pytest.approx(est, abs=0.05)
