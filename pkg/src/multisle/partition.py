"""Boundary partition functions of the su(2)_k multiple SLE.

Three families are covered:

* ``FACTORIZED`` -- the no-arch correlator prod_{i<j} (x_j - x_i)^{1/(2(k+2))},
  defined for m <= k;
* ``DOUBLE`` -- the two-point function |x_1 - x_2|^Delta in the channel
  h_3 = 0 (Delta = -3/(2(k+2))) or h_3 = h_{2 Lambda} (Delta = 1/(2(k+2)));
* ``TRIPLE`` -- three seeds plus a spin-1/2 field at infinity, built from the
  conformal blocks Z_C1, Z_C2 of the cross-ratio x = (x_2 - x_1)/(x_3 - x_1):
  Z = (x_3 - x_1)^{-2 h_Lambda} Z_block(x).

The point at infinity is stripped with the usual x^{2h} normalisation.  Driver
indices are 0-based throughout.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .algebra import ModelParams, model_params
from .special import _connection_coefficients, _hyp2f1, ConvergenceError

__all__ = [
    "Kind",
    "Block",
    "PartitionFunction",
    "cross_ratio",
    "factorized_z",
    "double_z",
    "triple_blocks",
    "triple_block_derivatives",
    "crossing_probability",
    "log_derivative",
    "log_slope",
    "endpoint_exponent",
    "expected_exponents",
    "KZReport",
    "kz_residual",
    "constituent_parameters",
]

_TOL = 1e-15

# kernel codes shared with multisle.dynamics
KIND_FREE = 0
KIND_PAIRWISE = 1
KIND_TRIPLE = 2


class Kind(enum.Enum):
    FACTORIZED = "factorized"
    DOUBLE = "double"
    TRIPLE = "triple"


class Block(enum.Enum):
    C1 = "C1"
    C2 = "C2"
    SUM = "sum"


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _block_terms(k, x):
    """Z_C1, Z_C2 and their x-derivatives at cross-ratio x (NaN on failure)."""
    q = 1.0 / (k + 2.0)
    h = 0.75 * q
    e = 0.5 * q  # h_{2 Lambda} - 2 h_Lambda
    cm, cp = _connection_coefficients(k)
    r = (1.0 - cm) / cp
    y = 1.0 - x
    lx = math.log(x)
    ly = math.log(y)

    z1 = 0.0
    z2 = 0.0
    d1 = 0.0
    d2 = 0.0
    for i in range(4):
        if i == 0:  # F_1^(-)
            pref, p, a, b, c = 1.0, -2.0 * h, q, -q, k * q
        elif i == 1:  # F_1^(+)
            pref, p, a, b, c = r, e, q, 3.0 * q, (k + 4.0) * q
        elif i == 2:  # F_2^(-)
            pref, p, a, b, c = 1.0 / k, 1.0 - 2.0 * h, (k + 3.0) * q, (k + 1.0) * q, 2.0 * (k + 1.0) * q
        else:  # F_2^(+)
            pref, p, a, b, c = -2.0 * r, e, q, 3.0 * q, 2.0 * q
        f = _hyp2f1(a, b, c, x, _TOL)
        fd = a * b / c * _hyp2f1(a + 1.0, b + 1.0, c + 1.0, x, _TOL)
        w = pref * math.exp(p * lx + e * ly)
        val = w * f
        der = w * ((p / x - e / y) * f + fd)
        if i < 2:
            z1 += val
            d1 += der
        else:
            z2 += val
            d2 += der
    return z1, z2, d1, d2


@njit(cache=True)
def _log_grad(kind, params, x, active, out):
    """Fill out[i] with d/dx_i log Z for active drivers (x sorted among actives).

    params = [k, pairwise exponent, weight of Z_C1, weight of Z_C2].
    Returns False if the partition function is not positive.
    """
    m = x.shape[0]
    for i in range(m):
        out[i] = 0.0
    if kind == KIND_PAIRWISE:
        ex = params[1]
        for i in range(m):
            if not active[i]:
                continue
            s = 0.0
            for j in range(m):
                if j != i and active[j]:
                    s += 1.0 / (x[i] - x[j])
            out[i] = ex * s
        return True
    if kind == KIND_TRIPLE:
        idx = np.empty(3, np.int64)
        n = 0
        for i in range(m):
            if active[i]:
                if n == 3:
                    return False
                idx[n] = i
                n += 1
        if n < 3:
            return True  # fewer than three drivers left: no interaction
        k = params[0]
        h = 0.75 / (k + 2.0)
        x1, x2, x3 = x[idx[0]], x[idx[1]], x[idx[2]]
        span = x3 - x1
        u = (x2 - x1) / span
        z1, z2, d1, d2 = _block_terms(k, u)
        zb = params[2] * z1 + params[3] * z2
        if not zb > 0.0:
            return False
        g = (params[2] * d1 + params[3] * d2) / zb
        out[idx[0]] = 2.0 * h / span + g * (u - 1.0) / span
        out[idx[1]] = g / span
        out[idx[2]] = -2.0 * h / span - g * u / span
        return True
    return True


# ---------------------------------------------------------------------------
# python API
# ---------------------------------------------------------------------------


def _model(model) -> ModelParams:
    return model if isinstance(model, ModelParams) else model_params(model)


def _check_ordered(positions) -> np.ndarray:
    x = np.asarray(positions, dtype=float)
    if x.ndim != 1 or np.any(np.diff(x) <= 0):
        raise ValueError("positions must be strictly increasing")
    return x


def _check_x(x: float) -> float:
    x = float(x)
    if not 0.0 < x < 1.0:
        raise ValueError(f"cross-ratio must lie in (0, 1), got {x}")
    return x


def cross_ratio(x1: float, x2: float, x3: float) -> float:
    """Image of x2 under the Moebius map sending (x1, x3, inf) to (0, 1, inf)."""
    if not x1 < x2 < x3:
        raise ValueError("need x1 < x2 < x3")
    return (x2 - x1) / (x3 - x1)


def factorized_z(model, positions) -> float:
    model = _model(model)
    x = _check_ordered(positions)
    if len(x) > model.k:
        raise ValueError(f"no-arch correlator does not exist for m={len(x)} > k={model.k}")
    ex = 1.0 / (2 * (model.k + 2))
    d = x[None, :] - x[:, None]
    return float(np.prod(d[np.triu_indices(len(x), 1)] ** ex))


def double_z(model, channel: int, x1: float, x2: float) -> float:
    model = _model(model)
    if channel == 2 and model.k < 2:
        raise ValueError("the h_{2 Lambda} channel is fusion-forbidden at k = 1")
    if x1 == x2:
        raise ValueError("coincident positions")
    return abs(x1 - x2) ** float(model.delta(channel))


def triple_blocks(model, x: float) -> tuple[float, float]:
    """(Z_C1(x), Z_C2(x))."""
    model = _model(model)
    z1, z2, _, _ = _block_terms(float(model.k), _check_x(x))
    if math.isnan(z1) or math.isnan(z2):
        raise ConvergenceError(f"block evaluation failed at k={model.k}, x={x}")
    if not (z1 > 0 and z2 > 0):
        raise ArithmeticError(f"non-positive block at k={model.k}, x={x}: {z1}, {z2}")
    return float(z1), float(z2)


def triple_block_derivatives(model, x: float) -> tuple[float, float]:
    """(dZ_C1/dx, dZ_C2/dx) from the 2F1 derivative identity."""
    model = _model(model)
    _, _, d1, d2 = _block_terms(float(model.k), _check_x(x))
    return float(d1), float(d2)


def crossing_probability(model, x: float) -> tuple[float, float]:
    """(P[C1], P[C2]) = (Z_C1, Z_C2) / (Z_C1 + Z_C2)."""
    z1, z2 = triple_blocks(model, x)
    p1 = z1 / (z1 + z2)
    return p1, 1.0 - p1


@dataclass(frozen=True)
class PartitionFunction:
    """An evaluatable boundary correlator of the bcc fields.

    ``channel`` selects h_3 in {0, 2} for ``DOUBLE``; ``block`` selects Z_C1,
    Z_C2 or their sum for ``TRIPLE``.
    """

    kind: Kind
    model: ModelParams
    channel: int = 0
    block: Block = Block.SUM
    m: int = field(init=False)

    def __post_init__(self):
        m = {Kind.DOUBLE: 2, Kind.TRIPLE: 3}.get(self.kind)
        if self.kind is Kind.DOUBLE:
            if self.channel not in (0, 2):
                raise ValueError("channel must be 0 or 2")
            if self.channel == 2 and self.model.k < 2:
                raise ValueError("the h_{2 Lambda} channel is fusion-forbidden at k = 1")
        object.__setattr__(self, "m", m)

    @classmethod
    def factorized(cls, k: int | ModelParams) -> "PartitionFunction":
        return cls(Kind.FACTORIZED, _model(k))

    @classmethod
    def double(cls, k: int | ModelParams, channel: int = 0) -> "PartitionFunction":
        return cls(Kind.DOUBLE, _model(k), channel=channel)

    @classmethod
    def triple(cls, k: int | ModelParams, block: Block | str = Block.SUM) -> "PartitionFunction":
        return cls(Kind.TRIPLE, _model(k), block=Block(block))

    @property
    def block_weights(self) -> tuple[float, float]:
        return {Block.C1: (1.0, 0.0), Block.C2: (0.0, 1.0), Block.SUM: (1.0, 1.0)}[self.block]

    def exponent(self) -> float:
        """Pairwise exponent for the power-law kinds."""
        if self.kind is Kind.FACTORIZED:
            return 1.0 / (2 * (self.model.k + 2))
        if self.kind is Kind.DOUBLE:
            return float(self.model.delta(self.channel))
        raise TypeError("triple partition functions are not pairwise power laws")

    def check_size(self, m: int):
        if self.m is not None and m != self.m:
            raise ValueError(f"{self.kind.value} partition function needs {self.m} drivers, got {m}")
        if self.kind is Kind.FACTORIZED and m > self.model.k:
            raise ValueError(f"no-arch correlator does not exist for m={m} > k={self.model.k}")

    def kernel_args(self) -> tuple[int, np.ndarray]:
        """(kind code, parameter vector) understood by the dynamics kernels."""
        if self.kind is Kind.TRIPLE:
            w1, w2 = self.block_weights
            return KIND_TRIPLE, np.array([self.model.k, 0.0, w1, w2])
        return KIND_PAIRWISE, np.array([self.model.k, self.exponent(), 0.0, 0.0])

    def value(self, positions) -> float:
        x = _check_ordered(positions)
        self.check_size(len(x))
        if self.kind is Kind.FACTORIZED:
            return factorized_z(self.model, x)
        if self.kind is Kind.DOUBLE:
            return double_z(self.model, self.channel, x[0], x[1])
        z1, z2 = triple_blocks(self.model, cross_ratio(*x))
        w1, w2 = self.block_weights
        return float((x[2] - x[0]) ** (-2 * float(self.model.h_fund)) * (w1 * z1 + w2 * z2))

    def grad_log(self, positions) -> np.ndarray:
        """d/dx_i log Z for every driver."""
        x = _check_ordered(positions)
        self.check_size(len(x))
        code, params = self.kernel_args()
        out = np.empty(len(x))
        if not _log_grad(code, params, x, np.ones(len(x), np.bool_), out):
            raise ArithmeticError("partition function is not positive here")
        return out


def log_derivative(pf: PartitionFunction, alpha: int, positions) -> float:
    """d/dx_alpha log Z at the given ordered positions (alpha is 0-based)."""
    return float(pf.grad_log(positions)[alpha])


def log_slope(model, block: Block | str, x: float, end: int = 0) -> float:
    """d log Z_block / d log x (end=0) or d log Z_block / d log(1 - x) (end=1)."""
    model = _model(model)
    block = Block(block)
    z1, z2, d1, d2 = _block_terms(float(model.k), _check_x(x))
    w1, w2 = {Block.C1: (1, 0), Block.C2: (0, 1), Block.SUM: (1, 1)}[block]
    g = (w1 * d1 + w2 * d2) / (w1 * z1 + w2 * z2)
    return float(x * g) if end == 0 else float(-(1.0 - x) * g)


def endpoint_exponent(model, block: Block | str, end: int) -> float:
    """Leading exponent of Z_block at x -> 0 (end=0) or x -> 1 (end=1).

    The log-slope s(t) at distance t from the endpoint approaches the exponent
    like s0 + A t^gamma; Aitken's delta-squared on a geometric sequence of t
    removes the leading correction.
    """
    ts = [1e-4, 1e-6, 1e-8]
    s = [log_slope(model, block, t if end == 0 else 1.0 - t, end) for t in ts]
    den = s[2] - 2 * s[1] + s[0]
    if abs(den) < 1e-15:
        return s[2]
    return s[2] - (s[2] - s[1]) ** 2 / den


def expected_exponents(model, block: Block | str) -> tuple[float | None, float | None]:
    """Fusion exponents expected at the ends (x->0, x->1); None where h_{2 Lambda} is absent (k=1)."""
    model = _model(model)
    block = Block(block)
    ident = -2 * float(model.h_fund)
    adj = float(model.h_adj - 2 * model.h_fund) if model.k >= 2 else None
    if block is Block.C1:
        return ident, adj
    if block is Block.C2:
        return adj, ident
    raise ValueError("exponents are listed for the individual blocks")


def constituent_parameters(k: int) -> list[tuple[float, float, float]]:
    """The four (a, b, c) parameter sets of the 2F1's building Z_C1 and Z_C2."""
    q = 1.0 / (k + 2)
    return [
        (q, -q, k * q),
        (q, 3 * q, (k + 4) * q),
        ((k + 3) * q, (k + 1) * q, 2 * (k + 1) * q),
        (q, 3 * q, 2 * q),
    ]


def _hypergeometric_ode_residual(a, b, c, x, step):
    f = lambda t: _hyp2f1(a, b, c, t, _TOL)  # noqa: E731
    # five-point stencils
    f0 = f(x)
    fp, fm = f(x + step), f(x - step)
    fpp, fmm = f(x + 2 * step), f(x - 2 * step)
    d1 = (fmm - 8 * fm + 8 * fp - fpp) / (12 * step)
    d2 = (-fmm + 16 * fm - 30 * f0 + 16 * fp - fpp) / (12 * step**2)
    terms = (x * (1 - x) * d2, (c - (a + b + 1) * x) * d1, -a * b * f0)
    scale = max(abs(t) for t in terms)
    return abs(sum(terms)) / scale if scale else 0.0


@dataclass(frozen=True)
class KZReport:
    ode_residual: float
    exponent_errors: tuple[float, ...]

    @property
    def max(self) -> float:
        return max((self.ode_residual,) + self.exponent_errors)


def kz_residual(model, block: Block | str, x: float) -> KZReport:
    """Consistency of a block with the four-point KZ system.

    (i) every constituent 2F1 solves its hypergeometric ODE at x (central
    finite differences, relative residual); (ii) the extrapolated endpoint
    log-slopes reproduce the fusion exponents.  For the sum, (ii) covers both
    blocks.
    """
    model = _model(model)
    block = Block(block)
    x = _check_x(x)
    step = 0.01 * min(x, 1 - x)
    params = constituent_parameters(model.k)
    used = {Block.C1: params[:2], Block.C2: params[2:], Block.SUM: params}[block]
    ode = max(_hypergeometric_ode_residual(a, b, c, x, step) for a, b, c in used)
    errs = []
    for blk in ([block] if block is not Block.SUM else [Block.C1, Block.C2]):
        for end, expected in enumerate(expected_exponents(model, blk)):
            if expected is not None:
                errs.append(abs(endpoint_exponent(model, blk, end) - expected))
    return KZReport(ode_residual=ode, exponent_errors=tuple(errs))
