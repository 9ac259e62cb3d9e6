"""Two curves from the boundary: do they close into an arch?

The driver gap is a Bessel process, so the two-driver simulation and a
plain 1-d Bessel walk should agree.  Channel 0 (identity) closes often,
channel 2 (spin-1) almost never does.
"""
from multisle.experiments import ExperimentConfig, bessel_oracle, mc_double_arch, z_between

for k, channel in ((1, 0), (2, 0), (2, 2)):
    cfg = ExperimentConfig(k=k, positions=(0.0, 1.0), kind="double", channel=channel,
                           horizon=20.0, samples=300, seed=4)
    sle, bes = mc_double_arch(cfg), bessel_oracle(cfg)
    print(f"k={k} channel={channel}  d_eff={sle.extra['d_eff']:.3f}  "
          f"drivers {sle.estimate:.3f}  bessel {bes.estimate:.3f}  z={z_between(sle, bes):+.2f}")
