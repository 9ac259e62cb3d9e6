"""Exact crossing probabilities for three curves.

Prints P[C1](x), the chance that the two left seeds pair up, for a few
levels.  At k=1 this is the straight line 1 - x; as k grows the curve
flattens toward 1/2.
"""
import numpy as np

from multisle import crossing_probability, model_params

levels = (1, 2, 4, 8, 16)
xs = np.linspace(0.1, 0.9, 9)

print("x     " + "".join(f"  k={k:<6d}" for k in levels))
for x in xs:
    print(f"{x:.2f}  " + "".join(f"  {crossing_probability(k, x)[0]:.6f}" for k in levels))

print()
for k in levels:
    p = model_params(k)
    print(f"k={k:2d}  kappa={float(p.kappa):.4f}  c={float(p.central_charge):.4f}")
