"""Seeded Monte Carlo campaigns against the exact formulas.

Only driver positions are integrated here: two tips meet exactly when their
drivers do, so no conformal map is needed to classify a run.  Sample ``i``
of master seed ``s`` always sees the same noise, so results do not depend
on the number of workers.
"""
from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .algebra import ArchTopology, enumerate_arch_topologies
from .dynamics import _bessel_batch, _run_batch, bessel_reduction
from .partition import PartitionFunction, crossing_probability
from .rng import split_seed

__all__ = [
    "ExperimentConfig",
    "McEstimate",
    "BatchResult",
    "NonPlanarOutcome",
    "run_batch",
    "mc_double_arch",
    "bessel_oracle",
    "mc_triple_crossing",
    "topology_census",
    "z_between",
    "wilson_interval",
]

# key offset for the independent Bessel oracle stream
ORACLE_SEED_SALT = 0x5EED_B355E1


class NonPlanarOutcome(RuntimeError):
    """A run produced crossing arches, which SLE traces cannot do."""


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class ExperimentConfig:
    k: int
    positions: tuple
    kind: str = "triple"  # "double", "triple" or "factorized"
    channel: int = 0
    block: str = "sum"
    dt: float = 1e-3
    horizon: float = 50.0
    samples: int = 1000
    delta_collide: float | None = None
    rates: tuple | None = None
    seed: int = 0
    dt_scale: bool = False

    def __post_init__(self):
        pos = tuple(float(v) for v in self.positions)
        object.__setattr__(self, "positions", pos)
        if self.k < 1:
            raise ValueError("level must be positive")
        if len(pos) < 2 or any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("need at least two strictly increasing positions")
        if self.kind not in ("double", "triple", "factorized"):
            raise ValueError(f"unknown partition kind {self.kind!r}")
        if self.dt <= 0 or self.horizon <= 0 or self.samples <= 0:
            raise ValueError("dt, horizon and samples must be positive")
        if self.delta_collide is not None and self.delta_collide <= 0:
            raise ValueError("delta_collide must be positive")
        if self.rates is not None:
            r = tuple(float(v) for v in self.rates)
            if len(r) != len(pos) or min(r) <= 0 or not math.isclose(sum(r), 1.0):
                raise ValueError("rates must be positive, one per driver, summing to 1")
            object.__setattr__(self, "rates", r)
        self.partition_function().check_size(len(pos))

    @property
    def m(self) -> int:
        return len(self.positions)

    @property
    def delta(self) -> float:
        if self.delta_collide is not None:
            return self.delta_collide
        return 1e-4 * (self.positions[-1] - self.positions[0])

    @property
    def rate_array(self) -> np.ndarray:
        if self.rates is None:
            return np.full(self.m, 1.0 / self.m)
        return np.array(self.rates)

    def partition_function(self) -> PartitionFunction:
        if self.kind == "double":
            return PartitionFunction.double(self.k, self.channel)
        if self.kind == "triple":
            return PartitionFunction.triple(self.k, self.block)
        return PartitionFunction.factorized(self.k)

    def effective(self) -> dict:
        d = asdict(self)
        d["delta_collide"] = self.delta
        d["rates"] = list(self.rate_array)
        d["positions"] = list(self.positions)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.effective(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_(self, **changes) -> "ExperimentConfig":
        d = asdict(self)
        d.update(changes)
        return ExperimentConfig(**d)


@dataclass(frozen=True)
class McEstimate:
    successes: int
    n: int
    seed: int
    digest: str
    reference: float | None = None
    unresolved: int = 0
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def estimate(self) -> float:
        return self.successes / self.n if self.n else float("nan")

    @property
    def stderr(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1 - p) / self.n) if self.n else float("nan")

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.successes, self.n)

    @property
    def unresolved_fraction(self) -> float:
        total = self.n + self.unresolved
        return self.unresolved / total if total else 0.0

    def sigma_ref(self) -> float:
        """Standard error under the reference value (falls back to the sample one)."""
        if self.n == 0:
            return float("nan")
        p = self.reference if self.reference is not None else self.estimate
        return math.sqrt(p * (1 - p) / self.n)

    @property
    def z_score(self) -> float | None:
        if self.reference is None or self.n == 0:
            return None
        s = self.sigma_ref()
        diff = self.estimate - self.reference
        return diff / s if s > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))

    def record(self) -> dict:
        lo, hi = self.interval
        return {
            "label": self.label,
            "digest": self.digest,
            "seed": self.seed,
            "n": self.n,
            "successes": self.successes,
            "unresolved": self.unresolved,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "ci_low": lo,
            "ci_high": hi,
            "reference": self.reference,
            "z": self.z_score,
            **self.extra,
        }


def z_between(a: McEstimate, b: McEstimate) -> float:
    """z-score of the difference of two independent estimates."""
    p = (a.successes + b.successes) / (a.n + b.n)
    s = math.sqrt(p * (1 - p) * (1 / a.n + 1 / b.n))
    d = a.estimate - b.estimate
    return d / s if s > 0 else 0.0


# ---------------------------------------------------------------------------
# batch execution
# ---------------------------------------------------------------------------


@dataclass
class BatchResult:
    status: np.ndarray
    n_events: np.ndarray
    pairs: np.ndarray
    times: np.ndarray
    end_time: np.ndarray
    steps: np.ndarray

    def topology(self, i: int, m: int) -> ArchTopology:
        n = int(self.n_events[i])
        return ArchTopology(m, tuple((int(a) + 1, int(b) + 1) for a, b in self.pairs[i, :n]))


def _chunk(args):
    cfg, start, count, stop_on_first = args
    pf = cfg.partition_function()
    kind, params = pf.kernel_args()
    model = pf.model
    k0, k1 = (np.uint64(w) for w in split_seed(cfg.seed))
    return _run_batch(
        kind, params, np.array(cfg.positions), cfg.rate_array, float(model.kappa),
        float(model.tau), cfg.dt, cfg.horizon, cfg.delta, 1.0, k0, k1,
        start, count, stop_on_first, cfg.dt_scale,
    )


def _split(n: int, workers: int) -> list[tuple[int, int]]:
    pieces = max(1, min(n, 4 * workers))
    bounds = np.linspace(0, n, pieces + 1).astype(int)
    return [(int(a), int(b - a)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_batch(cfg: ExperimentConfig, workers: int = 1, stop_on_first: bool = True) -> BatchResult:
    """Run samples 0..N-1 of ``cfg``; output is independent of ``workers``."""
    if workers < 1:
        raise ValueError("workers must be positive")
    jobs = [(cfg, s, c, stop_on_first) for s, c in _split(cfg.samples, workers)]
    if workers == 1:
        parts = [_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, jobs))
    return BatchResult(*(np.concatenate([p[i] for p in parts]) for i in range(6)))


# ---------------------------------------------------------------------------
# campaigns
# ---------------------------------------------------------------------------


def mc_double_arch(cfg: ExperimentConfig, workers: int = 1) -> McEstimate:
    """Fraction of two-driver runs whose drivers meet before the horizon."""
    if cfg.kind != "double" or cfg.m != 2:
        raise ValueError("double-arch runs need kind='double' and two drivers")
    res = run_batch(cfg, workers)
    if np.any(res.status != 0):
        raise ArithmeticError("partition function lost positivity during a run")
    hits = int(np.count_nonzero(res.n_events > 0))
    red = bessel_reduction(cfg.k, cfg.channel)
    return McEstimate(
        hits, cfg.samples, cfg.seed, cfg.digest(),
        label=f"double k={cfg.k} channel={cfg.channel}",
        extra={"d_eff": red.d_eff, "mean_steps": float(res.steps.mean())},
    )


def bessel_oracle(cfg: ExperimentConfig) -> McEstimate:
    """Hitting fraction of the reduced one-dimensional Bessel process.

    Uses the same dt (mapped to s = kappa t), threshold and halving rule as
    the driver runs, but an independent noise stream.
    """
    red = bessel_reduction(cfg.k, cfg.channel)
    a = cfg.rate_array
    speed = red.kappa * float(a.sum())
    y0 = cfg.positions[1] - cfg.positions[0]
    k0, k1 = (np.uint64(w) for w in split_seed((cfg.seed ^ ORACLE_SEED_SALT) % 2**64))
    hit, _ = _bessel_batch(red.d_eff, y0, speed * cfg.horizon, speed * cfg.dt, cfg.delta,
                           k0, k1, 0, cfg.samples)
    return McEstimate(
        int(hit.sum()), cfg.samples, cfg.seed, cfg.digest(),
        label=f"bessel d_eff={red.d_eff:.6g}", extra={"d_eff": red.d_eff},
    )


def mc_triple_crossing(cfg: ExperimentConfig, workers: int = 1) -> McEstimate:
    """P[C1]: the first two drivers pair up and the third escapes.

    Runs without any arch by the horizon are reported as ``unresolved`` and
    left out of the estimate.
    """
    if cfg.kind != "triple" or cfg.m != 3:
        raise ValueError("crossing runs need kind='triple' and three drivers")
    res = run_batch(cfg, workers)
    if np.any(res.status != 0):
        raise ArithmeticError("partition function lost positivity during a run")
    done = res.n_events > 0
    c1 = done & (res.pairs[:, 0, 0] == 0) & (res.pairs[:, 0, 1] == 1)
    p1, _ = crossing_probability(cfg.k, _cross_ratio(cfg.positions))
    return McEstimate(
        int(c1.sum()), int(done.sum()), cfg.seed, cfg.digest(), reference=p1,
        unresolved=int((~done).sum()), label=f"triple k={cfg.k} x={_cross_ratio(cfg.positions):.6g}",
        extra={"mean_steps": float(res.steps.mean())},
    )


def _cross_ratio(pos) -> float:
    x1, x2, x3 = pos
    return (x2 - x1) / (x3 - x1)


def topology_census(cfg: ExperimentConfig, workers: int = 1) -> Counter:
    """Frequencies of the arch topologies reached by the horizon."""
    res = run_batch(cfg, workers, stop_on_first=False)
    if np.any(res.status != 0):
        raise ArithmeticError("partition function lost positivity during a run")
    allowed = {t for n in range(cfg.m // 2 + 1) for t in enumerate_arch_topologies(cfg.m, n)}
    census = Counter()
    for i in range(cfg.samples):
        top = res.topology(i, cfg.m)
        if not top.is_planar() or top not in allowed:
            raise NonPlanarOutcome(f"sample {i} produced {top.label()}")
        census[top] += 1
    return census
