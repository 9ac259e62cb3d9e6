"""Draw the curves of one triple run and save them as CSV.

Curves are recovered from the drivers by running the Loewner flow
backward from each tip.  The output has one row per (driver, time) point.
"""
import sys

from multisle import PartitionFunction, extract_traces, simulate
from multisle.dynamics import hcap_coefficient

hist = simulate(PartitionFunction.triple(2), [0.0, 0.4, 1.0], dt=1e-3, horizon=2.0, seed=21)
print("status:", hist.status, " topology:", hist.topology().label())
for t, (a, b) in hist.events:
    print(f"  drivers {a + 1} and {b + 1} met at t={t:.4f}")

t_end = hist.events[0][0] if hist.events else hist.times[-1]
print(f"hcap at t={t_end:.4f}: {hcap_coefficient(hist, t_end):.8f} (expect {2 * t_end:.8f})")

traces = extract_traces(hist, stride=20)
out = sys.argv[1] if len(sys.argv) > 1 else "traces.csv"
traces.write_csv(out)
for alpha, pts in sorted(traces.points.items()):
    print(f"driver {alpha + 1}: {len(pts)} points, tip {pts[-1]:.4f}")
print("wrote", out)
