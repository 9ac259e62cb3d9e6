import math

import numpy as np
import pytest

from multisle import experiments
from multisle.algebra import ArchTopology
from multisle.experiments import (
    BatchResult,
    ExperimentConfig,
    McEstimate,
    NonPlanarOutcome,
    bessel_oracle,
    mc_double_arch,
    mc_triple_crossing,
    run_batch,
    topology_census,
    wilson_interval,
    z_between,
)
from oracles import bessel_hit_probability, sde_exit_probability


def test_wilson_interval_bounds():
    for s, n in [(0, 10), (10, 10), (3, 7), (500, 1000)]:
        lo, hi = wilson_interval(s, n)
        assert 0 <= lo <= s / n <= hi <= 1


def test_estimate_fields():
    e = McEstimate(70, 100, seed=1, digest="x", reference=0.7)
    assert e.estimate == 0.7
    assert e.stderr == pytest.approx(math.sqrt(0.21 / 100))
    assert e.z_score == 0.0
    rec = e.record()
    assert rec["ci_low"] < 0.7 < rec["ci_high"] and rec["z"] == 0.0


def test_config_validation_and_digest():
    cfg = ExperimentConfig(k=2, positions=(0, 0.3, 1))
    assert cfg.digest() == ExperimentConfig(k=2, positions=(0, 0.3, 1)).digest()
    assert cfg.digest() != cfg.with_(seed=1).digest()
    assert cfg.delta == pytest.approx(1e-4)
    for bad in [dict(positions=(0, 0)), dict(dt=0), dict(rates=(0.5, 0.5, 0.5)), dict(kind="nope")]:
        with pytest.raises(ValueError):
            ExperimentConfig(**{"k": 2, "positions": (0, 0.3, 1), **bad})
    with pytest.raises(ValueError):
        ExperimentConfig(k=1, positions=(0, 1), kind="double", channel=2)
    with pytest.raises(ValueError):
        ExperimentConfig(k=2, positions=(0, 1, 2), kind="factorized")


def test_worker_count_does_not_change_results():
    cfg = ExperimentConfig(k=2, positions=(0, 0.3, 1), samples=24, seed=3, horizon=1e3, dt_scale=True)
    a, b = run_batch(cfg, workers=1), run_batch(cfg, workers=3)
    for f in BatchResult.__dataclass_fields__:
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))


def test_identical_config_identical_estimate():
    cfg = ExperimentConfig(k=1, positions=(0, 0.3, 1), samples=40, seed=5, horizon=1e3, dt_scale=True)
    assert mc_triple_crossing(cfg) == mc_triple_crossing(cfg)


def test_census_recurrent_pair():
    cfg = ExperimentConfig(k=1, positions=(0, 1), kind="double", horizon=1e8, samples=40, seed=1, dt_scale=True)
    assert topology_census(cfg) == {ArchTopology(2, ((1, 2),)): 40}


def test_census_factorized_mostly_rays():
    cfg = ExperimentConfig(k=3, positions=(0, 1, 2), kind="factorized", horizon=50, samples=100, seed=1)
    census = topology_census(cfg)
    assert census.most_common(1)[0][0] == ArchTopology(3, ())
    assert all(t.is_planar() for t in census)


def test_census_rejects_crossing_arches(monkeypatch):
    fake = BatchResult(
        status=np.zeros(1, int), n_events=np.array([2]), pairs=np.array([[[0, 2], [1, 3], [-1, -1]]]),
        times=np.zeros((1, 3)), end_time=np.zeros(1), steps=np.zeros(1, int),
    )
    monkeypatch.setattr(experiments, "run_batch", lambda *a, **k: fake)
    cfg = ExperimentConfig(k=4, positions=(0, 1, 2, 3), kind="factorized", samples=1)
    with pytest.raises(NonPlanarOutcome):
        topology_census(cfg)


def test_double_runs_need_two_drivers():
    with pytest.raises(ValueError):
        mc_double_arch(ExperimentConfig(k=2, positions=(0, 0.5, 1)))
    with pytest.raises(ValueError):
        mc_triple_crossing(ExperimentConfig(k=2, positions=(0, 1), kind="double"))


def test_bessel_oracle_matches_exact_law():
    cfg = ExperimentConfig(k=2, positions=(0, 1), kind="double", horizon=10, samples=4000, seed=2)
    est = bessel_oracle(cfg)
    exact = bessel_hit_probability(1.5, 1.0, 3.2 * 10)
    assert abs(est.estimate - exact) < 3 * math.sqrt(exact * (1 - exact) / est.n) + 0.01


@pytest.mark.slow
def test_double_arch_matches_bessel_oracle():
    cfg = ExperimentConfig(k=2, positions=(0, 1), kind="double", horizon=10, samples=600, seed=6)
    assert abs(z_between(mc_double_arch(cfg), bessel_oracle(cfg))) < 3


@pytest.mark.slow
def test_census_level_one_triple():
    x = 0.3
    cfg = ExperimentConfig(k=1, positions=(0, x, 1), samples=600, seed=12, horizon=1e4, dt_scale=True)
    census = topology_census(cfg)
    n = sum(census.values())
    p = census[ArchTopology(3, ((1, 2),))] / n
    assert abs(p - (1 - x)) < 3 * math.sqrt(x * (1 - x) / n)


def test_exit_oracle_reduces_to_line_at_level_one():
    for x in (0.2, 0.5):
        assert sde_exit_probability(1, x) == pytest.approx(1 - x, abs=1e-4)


@pytest.mark.slow
def test_triple_runs_follow_their_own_exit_law():
    # at k=2 the simulated SDE exits through 0 with the scale-function probability,
    # which sits clearly below the two-block ratio at x=0.15
    cfg = ExperimentConfig(k=2, positions=(0, 0.15, 1), samples=3000, seed=41, horizon=1e4, dt_scale=True)
    est = mc_triple_crossing(cfg)
    exact = sde_exit_probability(2, 0.15)
    assert abs(est.estimate - exact) < 3 * est.stderr
    assert est.reference - est.estimate > 4 * est.sigma_ref()


@pytest.mark.slow
def test_rates_shift_the_exit_law():
    cfg = ExperimentConfig(k=2, positions=(0, 0.3, 1), samples=2000, seed=42, horizon=1e4,
                           dt_scale=True, rates=(0.5, 0.25, 0.25))
    est = mc_triple_crossing(cfg)
    assert abs(est.estimate - sde_exit_probability(2, 0.3, (0.5, 0.25, 0.25))) < 3 * est.stderr
