"""One noisy run, stage by stage, then a small window sweep.

Loss is simulated with the two-state model, trees are clustered from the
covariance of -log(received fraction), pruned, made consistent, fused,
pruned again and scored.  More averaging windows mean less noise in the
covariances and fewer spurious edges.
"""

from pcdtomo.pipeline import ExperimentConfig, run_once, run_pipeline, run_seed

cfg = ExperimentConfig(repetitions=5, values=(50, 200, 800))
sim = cfg.sim.with_(seed=run_seed(0, 0), num_windows=400)
row = run_once(cfg, sim, 1.0)
print("single run at 400 windows")
for k in ("true_edges", "inferred_edges", "delta_trees", "delta_fused", "intrinsic_bound",
          "adjustment_norm", "tm1", "tm2"):
    print(f"  {k:16s} {row[k]:.4g}" if isinstance(row[k], float) else f"  {k:16s} {row[k]}")
print("  seconds per stage:", {k: round(v, 3) for k, v in row.items() if k.startswith("t_")})

print("\nwindow sweep, 5 repetitions per point")
for s in run_pipeline(cfg).summary:
    print(f"  {s['value']:4d} windows: TM1 {s['tm1_mean']:.3f} +- {s['tm1_std']:.3f}, "
          f"TM2 {s['tm2_mean']:.3f} +- {s['tm2_std']:.3f}")
