"""Independent reference computations used by the test suite.

Nothing here imports the package's numerics: blocks are rebuilt from the
2F1 definitions in mpmath, matchings are found by brute force, and Bessel
hitting probabilities come from the exact gamma law.
"""
from __future__ import annotations

import itertools

import mpmath as mp

mp.mp.dps = 40


def series_at_x(a, b, c, x, tol=mp.mpf("1e-35")):
    """Plain power series of 2F1 at x, summed in 40-digit arithmetic."""
    a, b, c, x = map(mp.mpf, (a, b, c, x))
    s = term = mp.mpf(1)
    n = 0
    while True:
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * x
        s += term
        n += 1
        if abs(term) < tol * abs(s) and n > 5:
            return s
        if n > 200_000:
            raise RuntimeError("series did not converge")


def series_at_one_minus_x(a, b, c, x):
    """2F1 via the connection formula to two series in 1 - x."""
    a, b, c, x = map(mp.mpf, (a, b, c, x))
    s = c - a - b
    y = 1 - x
    t1 = mp.gamma(c) * mp.gamma(s) / (mp.gamma(c - a) * mp.gamma(c - b))
    t2 = mp.gamma(c) * mp.gamma(-s) / (mp.gamma(a) * mp.gamma(b))
    return t1 * series_at_x(a, b, 1 - s, y) + t2 * y**s * series_at_x(c - a, c - b, 1 + s, y)


def coefficients(k):
    q = mp.mpf(1) / (k + 2)
    cm = 2 * mp.gamma(2 * q) * mp.gamma(-2 * q) / (mp.gamma(q) * mp.gamma(-q))
    cp = -2 * mp.gamma(2 * q) ** 2 / (mp.gamma(3 * q) * mp.gamma(q))
    return cm, cp


def blocks(k, x, method="x"):
    """(Z_C1, Z_C2) from the four hypergeometric constituents.

    method "x" sums every 2F1 at x, "1-x" uses the expansion at the other end.
    """
    f = series_at_x if method == "x" else series_at_one_minus_x
    k = mp.mpf(k)
    x = mp.mpf(x)
    q = 1 / (k + 2)
    h = 3 * q / 4
    e = q / 2
    cm, cp = coefficients(k)
    r = (1 - cm) / cp
    y = 1 - x
    f1m = x ** (-2 * h) * y**e * f(q, -q, k * q, x)
    f1p = x**e * y**e * f(q, 3 * q, (k + 4) * q, x)
    f2m = x ** (1 - 2 * h) * y**e / k * f((k + 3) * q, (k + 1) * q, 2 * (k + 1) * q, x)
    f2p = -2 * x**e * y**e * f(q, 3 * q, 2 * q, x)
    return f1m + r * f1p, f2m + r * f2p


def noncrossing_partial_matchings(m, n):
    """All planar arch systems with n arches on points 1..m, by brute force.

    A pairing is kept when no two arches interleave and no unpaired point
    sits under an arch.
    """
    out = []
    pts = range(1, m + 1)
    for chosen in itertools.combinations(pts, 2 * n):
        for perm in itertools.permutations(chosen):
            pairs = [tuple(sorted(perm[i : i + 2])) for i in range(0, 2 * n, 2)]
            key = tuple(sorted(pairs))
            rays = [p for p in pts if p not in chosen]
            ok = all(not (a < c < b < d or c < a < d < b) for (a, b), (c, d) in itertools.combinations(key, 2))
            ok = ok and all(not a < r < b for a, b in key for r in rays)
            if ok:
                out.append(key)
    return sorted(set(out))


def bessel_hit_probability(d, y0, s):
    """P[a Bessel process of dimension d < 2 from y0 hits 0 by time s].

    The hitting time is y0^2 / (2 G) with G ~ Gamma(1 - d/2).
    """
    nu = 1 - mp.mpf(d) / 2
    return float(mp.gammainc(nu, mp.mpf(y0) ** 2 / (2 * s), mp.inf, regularized=True))


def _block_sum_and_slope(k, v):
    """Z_C1 + Z_C2 and its x-derivative at x = 1/(1 + e^-v), via mpmath's hyp2f1."""
    k = mp.mpf(k)
    x = 1 / (1 + mp.exp(-v))
    y = 1 / (1 + mp.exp(v))
    q = 1 / (k + 2)
    h = 3 * q / 4
    e = q / 2
    cm, cp = coefficients(k)
    r = (1 - cm) / cp
    total = slope = mp.mpf(0)
    for pref, p, a, b, c in (
        (1, -2 * h, q, -q, k * q),
        (r, e, q, 3 * q, (k + 4) * q),
        (1 / k, 1 - 2 * h, (k + 3) * q, (k + 1) * q, 2 * (k + 1) * q),
        (-2 * r, e, q, 3 * q, 2 * q),
    ):
        f = mp.hyp2f1(a, b, c, x)
        df = a * b / c * mp.hyp2f1(a + 1, b + 1, c + 1, x)
        w = pref * x**p * y**e
        total += w * f
        slope += w * ((p / x - e / y) * f + df)
    return x, y, total, slope


def sde_exit_probability(k, x0, rates=(1, 1, 1), kappa=None, span=40, n=2001):
    """P[drivers 1 and 2 meet first] for the three-driver SDE, from its scale function.

    With seeds (0, x, 1) the drift is kappa a_i d_i log Z plus the Loewner
    pushes 2 a_j / (x_i - x_j), and Z = (x3 - x1)^(-2h) (Z_C1 + Z_C2)(x).
    By translation and scale invariance the cross-ratio is a one-dimensional
    diffusion up to a time change, with generator A f'' + B f'.  The exit
    probability through 0 is int_x^1 s' / int_0^1 s' with s' = exp(-int B/A).
    Integrals run on a uniform grid in logit(x).
    """
    mp.mp.dps = 25
    try:
        k = int(k)
        a = [mp.mpf(w) / sum(rates) for w in rates]
        if kappa is None:
            kappa = mp.mpf(4) if k == 1 else mp.mpf(4 * (k + 2)) / (k + 3)
        h = mp.mpf(3) / (4 * (k + 2))
        vs = [mp.mpf(-span) + 2 * mp.mpf(span) * i / (n - 1) for i in range(n)]
        ratio, jac = [], []
        for v in vs:
            x, y, z, dz = _block_sum_and_slope(k, v)
            g = dz / z
            pos = (0, x, 1)
            grad = (2 * h + g * (x - 1), g, -2 * h - g * x)
            d1 = (x - 1, mp.mpf(1), -x)
            d2 = (2 * (x - 1), mp.mpf(0), 2 * x)
            A = sum(kappa * a[i] / 2 * d1[i] ** 2 for i in range(3))
            B = mp.mpf(0)
            for i in range(3):
                push = sum(2 * a[j] / (pos[i] - pos[j]) for j in range(3) if j != i)
                B += kappa * a[i] / 2 * d2[i] + (kappa * a[i] * grad[i] + push) * d1[i]
            jac.append(x * y)
            ratio.append(B / A * x * y)  # per unit v
        dv = vs[1] - vs[0]
        log_s = [mp.mpf(0)]
        for i in range(1, n):
            log_s.append(log_s[-1] - (ratio[i] + ratio[i - 1]) / 2 * dv)
        w = [mp.exp(ls) * j for ls, j in zip(log_s, jac)]
        cum = [mp.mpf(0)]
        for i in range(1, n):
            cum.append(cum[-1] + (w[i] + w[i - 1]) / 2 * dv)
        v0 = mp.log(mp.mpf(x0) / (1 - mp.mpf(x0)))
        i = int(mp.floor((v0 - vs[0]) / dv))
        t = (v0 - vs[i]) / dv
        below = cum[i] + t * (cum[i + 1] - cum[i])
        return float((cum[-1] - below) / cum[-1])
    finally:
        mp.mp.dps = 40
