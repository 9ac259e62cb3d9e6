"""Gamma and Gauss hypergeometric functions on the real line.

The scalar kernels (``_gamma``, ``_rgamma``, ``_hyp2f1``) are numba-compiled
so the SDE kernels in :mod:`multisle.dynamics` can call them directly; the
public wrappers validate arguments and raise instead of returning NaN.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "HypergeometricSpec",
    "ConvergenceError",
    "gamma_fn",
    "rgamma",
    "hyp2f1",
    "hyp2f1_series",
    "gauss_2f1",
    "connection_coefficients",
]

MAX_TERMS = 10_000
DEFAULT_TOL = 1e-15

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)


class ConvergenceError(ArithmeticError):
    pass


@njit(cache=True)
def _is_nonpositive_int(x):
    return x <= 0.0 and x == math.floor(x)


@njit(cache=True)
def _gamma_pos(x):
    # valid for x >= 0.5
    x -= 1.0
    s = _LANCZOS[0]
    for i in range(1, 9):
        s += _LANCZOS[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * s


@njit(cache=True)
def _gamma(x):
    if _is_nonpositive_int(x):
        return math.nan
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * _gamma_pos(1.0 - x))
    if x == math.floor(x) and x <= 21.0:
        # exact factorials
        r = 1.0
        for i in range(2, int(x)):
            r *= i
        return r
    return _gamma_pos(x)


@njit(cache=True)
def _rgamma(x):
    if _is_nonpositive_int(x):
        return 0.0
    return 1.0 / _gamma(x)


@njit(cache=True)
def _series(a, b, c, x, tol):
    """Power series of 2F1 at x; returns (value, converged)."""
    if a > b:
        a, b = b, a
    s = 1.0
    term = 1.0
    small = 0
    for n in range(MAX_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * x
        s += term
        if term == 0.0:
            return s, True
        if abs(term) <= tol * abs(s):
            small += 1
            if small >= 2:
                return s, True
        else:
            small = 0
    return s, False


@njit(cache=True)
def _hyp2f1(a, b, c, x, tol):
    """2F1(a, b; c; x) for 0 <= x < 1; NaN on failure."""
    if a > b:  # exact symmetry in (a, b)
        a, b = b, a
    if _is_nonpositive_int(c) or x < 0.0 or x >= 1.0:
        return math.nan
    if x == 0.0:
        return 1.0
    if x <= 0.5:
        v, ok = _series(a, b, c, x, tol)
        return v if ok else math.nan
    s = c - a - b
    y = 1.0 - x
    if s == math.floor(s):
        # logarithmic connection case: Euler transform, still expanded at x
        v, ok = _series(c - a, c - b, c, x, tol)
        return y**s * v if ok else math.nan
    f1, ok1 = _series(a, b, 1.0 - s, y, tol)
    f2, ok2 = _series(c - a, c - b, 1.0 + s, y, tol)
    if not (ok1 and ok2):
        return math.nan
    gc = _gamma(c)
    a1 = gc * _gamma(s) * _rgamma(c - a) * _rgamma(c - b)
    a2 = gc * _gamma(-s) * _rgamma(a) * _rgamma(b)
    return a1 * f1 + a2 * y**s * f2


def gamma_fn(x: float) -> float:
    """Gamma function; Lanczos with reflection below 1/2."""
    x = float(x)
    if _is_nonpositive_int(x):
        raise ValueError(f"Gamma has a pole at {x}")
    return float(_gamma(x))


def rgamma(x: float) -> float:
    """1/Gamma(x), zero at the poles."""
    return float(_rgamma(float(x)))


def hyp2f1_series(a: float, b: float, c: float, x: float, tol: float = DEFAULT_TOL) -> float:
    """Plain power series at x, for any |x| < 1 (slow near 1)."""
    if _is_nonpositive_int(float(c)):
        raise ValueError("c must not be a non-positive integer")
    v, ok = _series(float(a), float(b), float(c), float(x), tol)
    if not ok:
        raise ConvergenceError(f"2F1 series did not converge in {MAX_TERMS} terms at x={x}")
    return float(v)


def hyp2f1(a: float, b: float, c: float, x: float, tol: float = DEFAULT_TOL) -> float:
    """Gauss hypergeometric function on [0, 1).

    Direct series for x <= 1/2; for x > 1/2 the connection formula to series
    in 1 - x, or the Euler transform when c - a - b is an integer.
    """
    a, b, c, x = float(a), float(b), float(c), float(x)
    if _is_nonpositive_int(c):
        raise ValueError("c must not be a non-positive integer")
    if not 0.0 <= x < 1.0:
        raise ValueError(f"argument must lie in [0, 1), got {x}")
    v = _hyp2f1(a, b, c, x, tol)
    if math.isnan(v):
        raise ConvergenceError(f"2F1({a}, {b}; {c}; {x}) did not converge")
    return float(v)


@dataclass(frozen=True)
class HypergeometricSpec:
    a: float
    b: float
    c: float
    x: float
    tol: float = 1e-14

    def __post_init__(self):
        if _is_nonpositive_int(float(self.c)):
            raise ValueError("c must not be a non-positive integer")
        if not 0.0 <= self.x < 1.0:
            raise ValueError(f"argument must lie in [0, 1), got {self.x}")
        if self.tol < 1e-14:
            raise ValueError("tolerance below 1e-14 is not supported")


def gauss_2f1(spec: HypergeometricSpec) -> float:
    return hyp2f1(spec.a, spec.b, spec.c, spec.x, spec.tol)


@njit(cache=True)
def _connection_coefficients(k):
    q = 1.0 / (k + 2.0)
    c_minus = 2.0 * _gamma(2 * q) * _gamma(-2 * q) / (_gamma(q) * _gamma(-q))
    c_plus = -2.0 * _gamma(2 * q) ** 2 / (_gamma(3 * q) * _gamma(q))
    return c_minus, c_plus


def connection_coefficients(k: int) -> tuple[float, float]:
    """(c_minus, c_plus) fixing the relative weight of the s-channel blocks."""
    if k < 1:
        raise ValueError("level must be positive")
    cm, cp = _connection_coefficients(float(k))
    return float(cm), float(cp)
