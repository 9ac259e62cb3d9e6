"""Time integration of the multiple SLE.

Drivers follow the Ito equations

    dx_a = sqrt(kappa) dxi_a + kappa dq_a d_a log Z + 2 sum_{b != a} dq_b / (x_a - x_b)
    dp^c_a = sqrt(tau) dtheta^c_a + dG^c_a

with dq_a = a_a dt and E[dxi_a dxi_b] = delta_ab dq_a.  The driver chain is
integrated by Euler-Maruyama with step halving near close encounters; the
Loewner flow dg = sum_a 2 dq_a / (g - x_a) is then integrated along the
recorded path (RK4 forward, exact slit maps backward for the traces).

Once two adjacent drivers come closer than ``delta_collide`` their tips are
taken to have met: the pair is logged as an arch, frozen, and the remaining
drivers continue with rates renormalised to sum to one.

The algebraic drift uses the scalar-channel reading of the generator term:
t^a_beta Z / Z is replaced by the highest-weight expectation of t^a in the
spin-1/2 multiplet, which is nonzero only for a = 3.  No geometric quantity
depends on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .algebra import ArchTopology, ModelParams, model_params
from .partition import KIND_FREE, PartitionFunction, _log_grad
from .rng import fill_normals, split_seed

__all__ = [
    "DriverState",
    "NoiseIncrement",
    "StepRejected",
    "HullAbsorption",
    "RunHistory",
    "TraceSet",
    "BesselReduction",
    "step_drivers",
    "detect_arches",
    "simulate",
    "evolve_loewner",
    "hcap_coefficient",
    "extract_traces",
    "bessel_reduction",
    "theta_field",
    "HW_T3",
]

# <hw| t^3 |hw> for spin 1/2 in the normalisation sum_a t^a t^a = 3/2
HW_T3 = 1.0 / math.sqrt(2.0)
# counter offset separating the algebraic noise stream from the geometric one
ALG_STREAM = np.uint64(1) << np.uint64(62)
# step halving trigger: min gap < GAP_FACTOR * sqrt(kappa * dt)
GAP_FACTOR = 10.0
MAX_HALVINGS = 40

STATUS_OK = 0
STATUS_CAPACITY = 1
STATUS_NONPOSITIVE = 2


class StepRejected(ArithmeticError):
    """Drivers crossed within one step without a collision being flagged."""


class HullAbsorption(ArithmeticError):
    """A point was swallowed by the hull before the requested time."""

    def __init__(self, time: float, driver: int):
        super().__init__(f"point absorbed near driver {driver} at t={time:.6g}")
        self.time = time
        self.driver = driver


# ---------------------------------------------------------------------------
# state objects
# ---------------------------------------------------------------------------


@dataclass
class DriverState:
    positions: np.ndarray
    rates: np.ndarray
    p: np.ndarray = None
    t: float = 0.0
    active: np.ndarray = None
    arches: list = field(default_factory=list)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).copy()
        m = len(self.positions)
        self.rates = np.asarray(self.rates, dtype=float).copy()
        if self.p is None:
            self.p = np.zeros((m, 3))
        if self.active is None:
            self.active = np.ones(m, dtype=bool)
        if self.rates.shape != (m,) or np.any(self.rates < 0):
            raise ValueError("need one nonnegative rate per driver")
        if not np.isclose(self.rates[self.active].sum(), 1.0):
            raise ValueError("rates of active drivers must sum to 1")

    @classmethod
    def initial(cls, positions, rates=None) -> "DriverState":
        m = len(positions)
        rates = np.full(m, 1.0 / m) if rates is None else rates
        return cls(positions, rates)

    @property
    def m(self) -> int:
        return len(self.positions)

    def topology(self) -> ArchTopology:
        """Arches formed so far; surviving drivers count as rays to infinity."""
        return ArchTopology(self.m, tuple((i + 1, j + 1) for _, (i, j) in self.arches))


@dataclass(frozen=True)
class NoiseIncrement:
    """Brownian increments for one step: dxi (m,) and dtheta (m, 3), variance a dt each."""

    dxi: np.ndarray
    dtheta: np.ndarray

    @classmethod
    def zero(cls, m: int) -> "NoiseIncrement":
        return cls(np.zeros(m), np.zeros((m, 3)))

    @classmethod
    def draw(cls, rates, dt: float, seed: int, sample: int = 0, draw: int = 0) -> "NoiseIncrement":
        rates = np.asarray(rates, dtype=float)
        m = len(rates)
        k0, k1 = (np.uint64(w) for w in split_seed(seed))
        z = np.empty(m)
        fill_normals(k0, k1, sample, draw, z)
        za = np.empty(3 * m)
        fill_normals(k0, k1, sample, ALG_STREAM + np.uint64(draw), za)
        scale = np.sqrt(rates * dt)
        return cls(scale * z, scale[:, None] * za.reshape(m, 3))


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _drift(kind, params, x, a, active, kappa, grad, mu):
    if not _log_grad(kind, params, x, active, grad):
        return False
    m = x.shape[0]
    for i in range(m):
        mu[i] = 0.0
        if not active[i]:
            continue
        s = kappa * a[i] * grad[i]
        for j in range(m):
            if j != i and active[j]:
                s += 2.0 * a[j] / (x[i] - x[j])
        mu[i] = s
    return True


@njit(cache=True)
def _alg_drift(x, a, active, tau, out):
    # dG^3_i / dt under the highest-weight scalar channel
    m = x.shape[0]
    for i in range(m):
        out[i] = 0.0
        if not active[i]:
            continue
        s = 0.0
        for j in range(m):
            if j != i and active[j]:
                s += HW_T3 / (x[j] - x[i])
        out[i] = tau * a[i] * s


@njit(cache=True)
def _min_gap(x, active):
    g = np.inf
    last = -1
    for i in range(x.shape[0]):
        if active[i]:
            if last >= 0 and x[i] - x[last] < g:
                g = x[i] - x[last]
            last = i
    return g


@njit(cache=True)
def _span(x, active):
    lo = np.inf
    hi = -np.inf
    for i in range(x.shape[0]):
        if active[i]:
            lo = min(lo, x[i])
            hi = max(hi, x[i])
    return hi - lo


@njit(cache=True)
def _run_path(
    kind, params, x0, rates0, kappa, tau, dt, horizon, delta, noise,
    k0, k1, sample, stop_on_first, stop_when_single, dt_scale, track_algebra,
    rec_t, rec_x, rec_a, rec_dp,
):
    """Integrate one path.  Returns (status, n_events, events, event_times, t, steps).

    Recording is enabled when rec_t has more than one slot; the step arrays
    must then hold at least len(rec_t) - 1 rows.
    """
    m = x0.shape[0]
    x = x0.copy()
    a = rates0.copy()
    active = np.ones(m, np.bool_)
    nmax = m // 2 + 1
    events = np.full((nmax, 2), -1, np.int64)
    ev_t = np.zeros(nmax)
    n_ev = 0
    grad = np.empty(m)
    mu = np.empty(m)
    z = np.empty(m)
    za = np.empty(3 * m)
    dg = np.empty(m)
    xn = np.empty(m)
    dp = np.zeros((m, 3))
    draw = np.uint64(0)
    adraw = ALG_STREAM
    record = rec_t.shape[0] > 1
    cap = rec_t.shape[0]
    span0 = _span(x, active) if m > 1 else 1.0
    h_min = dt * 2.0 ** (-MAX_HALVINGS)
    if record:
        rec_t[0] = 0.0
        rec_x[0, :] = x
    t = 0.0
    step = 0
    status = STATUS_OK
    while t < horizon:
        n_act = 0
        for i in range(m):
            if active[i]:
                n_act += 1
        if n_act < 2 and stop_when_single:
            break
        if record and step + 1 >= cap:
            status = STATUS_CAPACITY
            break
        h = dt
        if dt_scale and n_act >= 2:
            r = _span(x, active) / span0
            if r > 1.0:
                h = dt * r * r
        gap = _min_gap(x, active)
        while gap < GAP_FACTOR * math.sqrt(kappa * h) and h > h_min:
            h *= 0.5
        if t + h > horizon:
            h = horizon - t
        if not _drift(kind, params, x, a, active, kappa, grad, mu):
            status = STATUS_NONPOSITIVE
            break
        forced = -1
        while True:
            draw = np.uint64(fill_normals(k0, k1, sample, draw, z))
            for i in range(m):
                if active[i]:
                    xn[i] = x[i] + mu[i] * h + noise * math.sqrt(kappa * a[i] * h) * z[i]
                else:
                    xn[i] = x[i]
            crossed = -1
            last = -1
            for i in range(m):
                if active[i]:
                    if last >= 0 and xn[i] <= xn[last]:
                        crossed = last
                        break
                    last = i
            if crossed < 0:
                break
            if h > h_min:
                h *= 0.5
                continue
            forced = crossed
            break
        if track_algebra:
            adraw = np.uint64(fill_normals(k0, k1, sample, adraw, za))
            _alg_drift(x, a, active, tau, dg)
            for i in range(m):
                for c in range(3):
                    dp[i, c] = 0.0
                if active[i]:
                    sd = noise * math.sqrt(tau * a[i] * h)
                    for c in range(3):
                        dp[i, c] = sd * za[3 * i + c]
                    dp[i, 2] += dg[i] * h
        if record:
            rec_a[step, :] = a
            rec_dp[step, :, :] = dp
        for i in range(m):
            x[i] = xn[i]
        t += h
        step += 1
        if record:
            rec_t[step] = t
            rec_x[step, :] = x
        # arch detection between adjacent active drivers
        changed = False
        last = -1
        for i in range(m):
            if not active[i]:
                continue
            if last >= 0 and (x[i] - x[last] < delta or last == forced):
                events[n_ev, 0] = last
                events[n_ev, 1] = i
                ev_t[n_ev] = t
                n_ev += 1
                active[last] = False
                active[i] = False
                changed = True
                last = -1
                forced = -1
                continue
            last = i
        if changed:
            s = 0.0
            for i in range(m):
                if active[i]:
                    s += a[i]
            for i in range(m):
                a[i] = a[i] / s if (active[i] and s > 0) else 0.0
            if stop_on_first:
                break
    return status, n_ev, events, ev_t, t, step


@njit(cache=True)
def _run_batch(
    kind, params, x0, rates0, kappa, tau, dt, horizon, delta, noise,
    k0, k1, start, count, stop_on_first, dt_scale,
):
    m = x0.shape[0]
    nmax = m // 2 + 1
    n_events = np.zeros(count, np.int64)
    pairs = np.full((count, nmax, 2), -1, np.int64)
    times = np.zeros((count, nmax))
    end_t = np.zeros(count)
    steps = np.zeros(count, np.int64)
    status = np.zeros(count, np.int64)
    dummy_t = np.zeros(1)
    dummy_x = np.zeros((1, m))
    dummy_dp = np.zeros((1, m, 3))
    for s in range(count):
        st, n_ev, ev, evt, t, nstep = _run_path(
            kind, params, x0, rates0, kappa, tau, dt, horizon, delta, noise,
            k0, k1, start + s, stop_on_first, True, dt_scale, False,
            dummy_t, dummy_x, dummy_x, dummy_dp,
        )
        status[s] = st
        n_events[s] = n_ev
        pairs[s] = ev
        times[s] = evt
        end_t[s] = t
        steps[s] = nstep
    return status, n_events, pairs, times, end_t, steps


@njit(cache=True)
def _bessel_batch(dim, y0, s_end, ds, delta, k0, k1, start, count):
    """Hitting indicator and time of 0 (threshold delta) for a Bessel process."""
    hit = np.zeros(count, np.bool_)
    when = np.full(count, np.inf)
    z = np.empty(1)
    b = 0.5 * (dim - 1.0)
    h_min = ds * 2.0 ** (-MAX_HALVINGS)
    for s in range(count):
        y = y0
        t = 0.0
        draw = np.uint64(0)
        while t < s_end:
            h = ds
            while y < GAP_FACTOR * math.sqrt(h) and h > h_min:
                h *= 0.5
            if t + h > s_end:
                h = s_end - t
            draw = np.uint64(fill_normals(k0, k1, start + s, draw, z))
            y = y + b / y * h + math.sqrt(h) * z[0]
            t += h
            if y < delta:
                hit[s] = True
                when[s] = t
                break
    return hit, when


# ---------------------------------------------------------------------------
# single-step API
# ---------------------------------------------------------------------------


def _kernel_args(pf: PartitionFunction | None):
    if pf is None:
        return KIND_FREE, np.zeros(4)
    return pf.kernel_args()


def _model_of(pf: PartitionFunction | None, model: ModelParams | None) -> ModelParams:
    if pf is not None:
        return pf.model
    if model is None:
        raise ValueError("a model is needed when no partition function is given")
    return model


def step_drivers(
    state: DriverState,
    pf: PartitionFunction | None,
    dt: float,
    noise: NoiseIncrement,
    model: ModelParams | None = None,
) -> DriverState:
    """One Euler-Maruyama step of the driving processes and algebraic accumulators.

    ``pf=None`` means no interaction (a single SLE); then ``model`` supplies
    kappa and tau.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    model = _model_of(pf, model)
    kappa, tau = float(model.kappa), float(model.tau)
    x, a, act = state.positions, state.rates, state.active
    xa = x[act]
    if np.any(np.diff(xa) <= 0):
        raise ValueError("active positions must be strictly increasing")
    if pf is not None:
        pf.check_size(len(x))
    kind, params = _kernel_args(pf)
    grad, mu = np.empty(len(x)), np.empty(len(x))
    if not _drift(kind, params, x, a, act, kappa, grad, mu):
        raise ArithmeticError("partition function is not positive at this configuration")
    new_x = x + np.where(act, mu * dt + math.sqrt(kappa) * noise.dxi, 0.0)
    if np.any(np.diff(new_x[act]) <= 0):
        raise StepRejected("drivers crossed within one step; halve dt")
    dgv = np.empty(len(x))
    _alg_drift(x, a, act, tau, dgv)
    dp = np.where(act[:, None], math.sqrt(tau) * noise.dtheta, 0.0)
    dp[:, 2] += dgv * dt
    return replace(
        state,
        positions=new_x,
        p=state.p + dp,
        t=state.t + dt,
        active=act.copy(),
        arches=list(state.arches),
    )


def detect_arches(state: DriverState, delta_collide: float):
    """Close the first adjacent pair of active drivers nearer than ``delta_collide``.

    Returns ``(new_state, event)`` with event ``(t, (i, j))`` or ``None``.
    """
    if delta_collide <= 0:
        raise ValueError("delta_collide must be positive")
    idx = np.flatnonzero(state.active)
    for i, j in zip(idx[:-1], idx[1:]):
        if state.positions[j] - state.positions[i] < delta_collide:
            active = state.active.copy()
            active[[i, j]] = False
            rates = np.where(active, state.rates, 0.0)
            if rates.sum() > 0:
                rates = rates / rates.sum()
            event = (state.t, (int(i), int(j)))
            new = replace(state, active=active, rates=rates, arches=state.arches + [event])
            return new, event
    return state, None


# ---------------------------------------------------------------------------
# recorded runs
# ---------------------------------------------------------------------------


@dataclass
class RunHistory:
    """A recorded multiple-SLE realisation.

    ``rates[n]`` and ``dp[n]`` belong to the step from ``times[n]`` to
    ``times[n+1]``; inactive drivers carry rate 0 and stay frozen.
    """

    times: np.ndarray
    positions: np.ndarray
    rates: np.ndarray
    dp: np.ndarray
    events: list
    model: ModelParams
    seed: int
    sample: int
    status: int = STATUS_OK

    @property
    def m(self) -> int:
        return self.positions.shape[1]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def topology(self) -> ArchTopology:
        return ArchTopology(self.m, tuple((i + 1, j + 1) for _, (i, j) in self.events))

    def final_state(self) -> DriverState:
        active = np.ones(self.m, bool)
        for _, (i, j) in self.events:
            active[[i, j]] = False
        rates = self.rates[-1].copy() if len(self.rates) else np.full(self.m, 1 / self.m)
        rates = np.where(active, rates, 0.0)
        if rates.sum() > 0:
            rates /= rates.sum()
        return DriverState(
            self.positions[-1], rates, p=self.dp.sum(axis=0), t=self.t_end,
            active=active, arches=list(self.events),
        )


def simulate(
    pf: PartitionFunction | None,
    x0,
    *,
    dt: float,
    horizon: float,
    seed: int = 0,
    sample: int = 0,
    rates=None,
    delta_collide: float | None = None,
    model: ModelParams | int | None = None,
    noise: bool = True,
    stop_on_first: bool = False,
    dt_scale: bool = False,
    capacity: int | None = None,
) -> RunHistory:
    """Record one seeded realisation up to ``horizon``.

    Sample ``sample`` of master seed ``seed`` draws exactly the same noise as
    the corresponding sample of a Monte Carlo batch.
    """
    if isinstance(model, int):
        model = model_params(model)
    model = _model_of(pf, model)
    x0 = np.asarray(x0, dtype=float)
    m = len(x0)
    if m < 1 or np.any(np.diff(x0) <= 0):
        raise ValueError("initial positions must be strictly increasing")
    if pf is not None:
        pf.check_size(m)
    rates = np.full(m, 1.0 / m) if rates is None else np.asarray(rates, dtype=float)
    if not np.isclose(rates.sum(), 1.0) or np.any(rates <= 0):
        raise ValueError("rates must be positive and sum to 1")
    if dt <= 0 or horizon <= 0:
        raise ValueError("dt and horizon must be positive")
    if delta_collide is None:
        delta_collide = 1e-4 * (x0[-1] - x0[0]) if m > 1 else 1e-4
    kind, params = _kernel_args(pf)
    k0, k1 = (np.uint64(w) for w in split_seed(seed))
    cap = capacity or int(min(4 * horizon / dt + 1000, 5_000_000))
    while True:
        rec_t = np.zeros(cap)
        rec_x = np.zeros((cap, m))
        rec_a = np.zeros((cap, m))
        rec_dp = np.zeros((cap, m, 3))
        status, n_ev, ev, evt, t, steps = _run_path(
            kind, params, x0, rates, float(model.kappa), float(model.tau), dt, horizon,
            delta_collide, 1.0 if noise else 0.0, k0, k1, sample, stop_on_first, False,
            dt_scale, True, rec_t, rec_x, rec_a, rec_dp,
        )
        if status != STATUS_CAPACITY or capacity is not None:
            break
        cap *= 2
    events = [(float(evt[i]), (int(ev[i, 0]), int(ev[i, 1]))) for i in range(n_ev)]
    return RunHistory(
        times=rec_t[: steps + 1].copy(),
        positions=rec_x[: steps + 1].copy(),
        rates=rec_a[:steps].copy(),
        dp=rec_dp[:steps].copy(),
        events=events,
        model=model,
        seed=seed,
        sample=sample,
        status=int(status),
    )


# ---------------------------------------------------------------------------
# Loewner flow
# ---------------------------------------------------------------------------


@njit(cache=True)
def _loewner_rhs(d, z, x, a):
    s = 0j
    for i in range(x.shape[0]):
        if a[i] > 0.0:
            s += 2.0 * a[i] / (z + d - x[i])
    return s


@njit(cache=True)
def _evolve(times, xs, rates, z, t_end, eps_hull):
    """RK4 for d = g_t(z) - z along the recorded path.

    Returns (d, t, driver) with driver = -1 unless the point was absorbed.
    Drivers are interpolated linearly inside each step.
    """
    d = 0j
    m = xs.shape[1]
    xm = np.empty(m)
    for n in range(times.shape[0] - 1):
        t0 = times[n]
        if t0 >= t_end:
            break
        h = min(times[n + 1], t_end) - t0
        full = times[n + 1] - t0
        if h <= 0.0:
            continue
        frac = h / full
        a = rates[n]
        x0 = xs[n]
        x1 = xs[n] + frac * (xs[n + 1] - xs[n])
        for i in range(m):
            xm[i] = 0.5 * (x0[i] + x1[i])
        k1 = _loewner_rhs(d, z, x0, a)
        k2 = _loewner_rhs(d + 0.5 * h * k1, z, xm, a)
        k3 = _loewner_rhs(d + 0.5 * h * k2, z, xm, a)
        k4 = _loewner_rhs(d + h * k3, z, x1, a)
        d = d + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        g = z + d
        if not (g.imag > eps_hull):  # also catches NaN
            best = 0
            for i in range(m):
                if abs(g - x1[i]) < abs(g - x1[best]):
                    best = i
            return d, t0 + h, best
        for i in range(m):
            if a[i] > 0.0 and abs(g - x1[i]) < eps_hull:
                return d, t0 + h, i
    return d, min(t_end, times[-1]), -1


def evolve_loewner(history: RunHistory, z: complex, t_end: float | None = None,
                   eps_hull: float = 1e-6) -> complex:
    """g_t(z) at t_end (default: end of the run)."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("z must lie in the open upper half plane")
    t_end = history.t_end if t_end is None else float(t_end)
    d, t, drv = _evolve(history.times, history.positions, history.rates, z, t_end, eps_hull)
    if drv >= 0:
        raise HullAbsorption(float(t), int(drv))
    return z + complex(d)


def hcap_coefficient(history: RunHistory, t_end: float | None = None, radius: float = 1e7) -> float:
    """Coefficient of 1/z in g_t(z) - z, read off at z = i * radius."""
    z = 1j * radius
    t_end = history.t_end if t_end is None else float(t_end)
    d, _, _ = _evolve(history.times, history.positions, history.rates, z, t_end, -1.0)
    return float((z * d).real)


@njit(cache=True)
def _slit_inverse(w, x, q):
    # inverse of the constant-driver Loewner map over capacity increment q
    s = np.sqrt((w - x) ** 2 - 4.0 * q)
    if s.imag < 0.0 or (s.imag == 0.0 and s.real * (w - x).real < 0.0):
        s = -s
    return x + s


@njit(cache=True)
def _real_slit_inverse(u, x, q):
    # image of a boundary point u under the inverse slit map; it stays on the real line
    d2 = (u - x) ** 2 - 4.0 * q
    if d2 <= 0.0:
        return x
    return x + math.copysign(math.sqrt(d2), u - x)


@njit(cache=True)
def _tips(times, xs, rates, alpha, sample_steps, eps):
    """Trace tips gamma(t_s) ~ g_{t_s}^{-1}(x_alpha(t_s) + i eps), composing slit maps backwards.

    Inside each step the traced driver's slit is undone first (its tip sits
    at that driver), and the other drivers are carried through each inverse
    map before their own slits are undone.
    """
    out = np.empty(sample_steps.shape[0], np.complex128)
    m = xs.shape[1]
    order = np.empty(m, np.int64)
    order[0] = alpha
    c = 1
    for i in range(m):
        if i != alpha:
            order[c] = i
            c += 1
    drv = np.empty(m)
    for k in range(sample_steps.shape[0]):
        s = sample_steps[k]
        w = xs[s, alpha] + 1j * eps
        ok = True
        for n in range(s - 1, -1, -1):
            h = times[n + 1] - times[n]
            for i in range(m):
                drv[i] = xs[n + 1, i]
            for c in range(m):
                i = order[c]
                q = rates[n, i] * h
                if q <= 0.0:
                    continue
                w = _slit_inverse(w, drv[i], q)
                for c2 in range(c + 1, m):
                    j = order[c2]
                    drv[j] = _real_slit_inverse(drv[j], drv[i], q)
            if not (np.isfinite(w.real) and np.isfinite(w.imag)):
                ok = False
                break
        out[k] = w if ok else complex(np.nan, np.nan)
    return out


@dataclass
class TraceSet:
    """Tip polylines per driver (seed order); NaN entries mark dropped points."""

    times: dict
    points: dict
    eps: float

    def records(self):
        for alpha in sorted(self.points):
            for t, g in zip(self.times[alpha], self.points[alpha]):
                yield alpha, float(t), float(g.real), float(g.imag)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("driver,t,re,im\n")
            for alpha, t, re, im in self.records():
                fh.write(f"{alpha},{t:.12g},{re:.12g},{im:.12g}\n")


def extract_traces(history: RunHistory, eps: float = 1e-6, stride: int = 1) -> TraceSet:
    """Tips of every driver's trace at every ``stride``-th recorded step while it grows."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    times, points = {}, {}
    n = len(history.times)
    for alpha in range(history.m):
        grow = np.flatnonzero(history.rates[:, alpha] > 0) + 1
        last = grow[-1] if len(grow) else 0
        steps = np.arange(0, last + 1, stride)
        if len(steps) == 0 or steps[-1] != last:
            steps = np.append(steps, last)
        steps = steps[steps < n].astype(np.int64)
        pts = _tips(history.times, history.positions, history.rates, alpha, steps, eps)
        pts[0] = complex(history.positions[0, alpha], 0.0)
        times[alpha] = history.times[steps]
        points[alpha] = pts
    return TraceSet(times=times, points=points, eps=eps)


# ---------------------------------------------------------------------------
# Bessel reduction and algebraic field
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BesselReduction:
    """y = x_1 - x_2 in time s = kappa (a_1 + a_2) t solves dy = dB + (Delta + 2/kappa)/y ds."""

    delta: float
    kappa: float

    @property
    def drift_coefficient(self) -> float:
        return self.delta + 2.0 / self.kappa

    @property
    def d_eff(self) -> float:
        return 2.0 * self.delta + 4.0 / self.kappa + 1.0

    @property
    def recurrent(self) -> bool:
        return self.d_eff < 2.0


def bessel_reduction(model, channel: int) -> BesselReduction:
    model = model if isinstance(model, ModelParams) else model_params(model)
    if channel == 2 and model.k < 2:
        raise ValueError("the h_{2 Lambda} channel is fusion-forbidden at k = 1")
    return BesselReduction(float(model.delta(channel)), float(model.kappa))


def theta_field(history: RunHistory, z, t_end: float | None = None) -> np.ndarray:
    """theta^a_t(z) = int sum_alpha dp^a_alpha / (z - x_alpha), a = 1..3 (Ito sums).

    ``z`` is a point of the upper half plane, or an ``int`` driver index, in
    which case the driver's own term is dropped and z follows x_beta(t).
    """
    n = len(history.dp)
    if t_end is not None:
        n = int(np.searchsorted(history.times, t_end, side="right")) - 1
        n = max(0, min(n, len(history.dp)))
    x = history.positions[:n]
    dp = history.dp[:n]
    if isinstance(z, (int, np.integer)):
        beta = int(z)
        diff = x[:, [beta]] - x
        diff[:, beta] = np.inf
        w = np.where(np.isfinite(diff), 1.0 / diff, 0.0)
        return np.einsum("na,nac->c", w, dp).astype(complex)
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("z must lie in the open upper half plane")
    w = 1.0 / (z - x)
    return np.einsum("na,nac->c", w, dp)
