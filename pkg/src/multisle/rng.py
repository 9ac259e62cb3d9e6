"""Counter-based normal variates (Philox4x32-10).

Every variate is a pure function of ``(seed, sample, draw)``, so a Monte
Carlo sample's noise does not depend on which worker runs it or in what
order.  ``draw`` is a per-sample counter that the caller advances.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

__all__ = ["philox4x32", "normal_pair", "normals", "split_seed"]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


@njit(cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten-round Philox on a 4 x 32-bit counter with a 2 x 32-bit key."""
    c0 = np.uint64(c0) & _MASK
    c1 = np.uint64(c1) & _MASK
    c2 = np.uint64(c2) & _MASK
    c3 = np.uint64(c3) & _MASK
    k0 = np.uint64(k0) & _MASK
    k1 = np.uint64(k1) & _MASK
    for r in range(10):
        if r > 0:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _S32, p0 & _MASK
        hi1, lo1 = p1 >> _S32, p1 & _MASK
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@njit(cache=True)
def _unit(hi, lo):
    # 53-bit uniform in (0, 1)
    v = ((hi >> np.uint64(5)) << np.uint64(26)) | (lo >> np.uint64(6))
    return (np.float64(v) + 0.5) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def normal_pair(k0, k1, sample, draw):
    """Two independent standard normals for counter (sample, draw)."""
    r0, r1, r2, r3 = philox4x32(
        np.uint64(sample) & _MASK,
        np.uint64(sample) >> _S32,
        np.uint64(draw) & _MASK,
        np.uint64(draw) >> _S32,
        k0,
        k1,
    )
    u1 = _unit(r0, r1)
    u2 = _unit(r2, r3)
    rad = math.sqrt(-2.0 * math.log(u1))
    return rad * math.cos(2.0 * math.pi * u2), rad * math.sin(2.0 * math.pi * u2)


@njit(cache=True)
def fill_normals(k0, k1, sample, draw, out):
    """Fill ``out`` with normals starting at counter ``draw``; returns the next counter."""
    n = out.shape[0]
    draw = np.uint64(draw)
    one = np.uint64(1)  # uint64 + int literal would promote to float64
    i = 0
    while i < n:
        z0, z1 = normal_pair(k0, k1, sample, draw)
        draw += one
        out[i] = z0
        if i + 1 < n:
            out[i + 1] = z1
        i += 2
    return draw


def split_seed(seed: int) -> tuple[int, int]:
    """Philox key words from a non-negative integer seed (< 2**64)."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must lie in [0, 2**64)")
    return seed & 0xFFFFFFFF, seed >> 32


def normals(seed: int, sample: int, n: int, draw: int = 0) -> np.ndarray:
    k0, k1 = split_seed(seed)
    out = np.empty(n)
    fill_normals(np.uint64(k0), np.uint64(k1), sample, draw, out)
    return out
