"""Monte Carlo check of the three-curve crossing formula.

Each run evolves three drivers until the first pair meets.  Time steps
grow with the spread of the drivers, which lets nearly every run resolve.
At k=1 the estimate tracks 1 - x.  At k=2 it runs a few points below the
two-block ratio: with tau > 0 that ratio is not a martingale of the
scalar-drift SDE, and the runs follow the SDE's own exit law instead
(0.616 at x=0.3).
"""
from multisle.experiments import ExperimentConfig, mc_triple_crossing

for k, x in ((1, 0.3), (2, 0.3), (2, 0.6)):
    cfg = ExperimentConfig(k=k, positions=(0.0, x, 1.0), samples=400, seed=11,
                           horizon=1e4, dt_scale=True)
    est = mc_triple_crossing(cfg)
    lo, hi = est.interval
    print(f"k={k} x={x}  P[C1] ~ {est.estimate:.3f} [{lo:.3f}, {hi:.3f}]  "
          f"two-block {est.reference:.4f}  z={est.z_score:+.2f}  unresolved {est.unresolved}")
