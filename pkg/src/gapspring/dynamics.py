"""Single-DOF oscillators: time integration, static equilibrium and forced-response sweeps.

Governing equation (``R`` the total restoring force)::

    m x'' + c x' + R(x) = F sin(2 pi f_e t)                   harmonic forcing
    m y'' + c y' + R(y) = m X_b (2 pi f_e)^2 sin(2 pi f_e t)   base excitation

where ``y = x - X_b sin(2 pi f_e t)`` is the displacement relative to the base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import DivergenceError, InvalidArgumentError, NoRootError
from .regress import ForceModel, PotentialForceModel
from .sigproc import fundamental
from .timeseries import TimeSeries


@dataclass(frozen=True)
class Cubic:
    p2: float


@dataclass(frozen=True)
class GapSpring:
    """One-sided spring ``p2 * max(0, x - L)``."""

    p2: float
    L: float


@dataclass(frozen=True, eq=False)
class Fitted:
    model: ForceModel


@dataclass(frozen=True, eq=False)
class FittedPotential:
    model: PotentialForceModel


@dataclass(frozen=True)
class Harmonic:
    F: float
    f_e: float = 0.0


@dataclass(frozen=True)
class BaseExcitation:
    X_b: float
    f_e: float = 0.0


Nonlinearity = Union[None, Cubic, GapSpring, Fitted, FittedPotential]
Forcing = Union[None, Harmonic, BaseExcitation]


@dataclass(frozen=True, eq=False)
class OscillatorModel:
    m: float = 1.0
    c: float = 0.0
    k: float = 1.0
    nonlinearity: Nonlinearity = None
    forcing: Forcing = None

    def __post_init__(self):
        if not (self.m > 0):
            raise InvalidArgumentError(f"mass must be positive, got {self.m}")
        if not (self.c >= 0):
            raise InvalidArgumentError(f"damping must be >= 0, got {self.c}")

    @classmethod
    def from_modal(cls, zeta, omega_n, m=1.0, nonlinearity=None, forcing=None):
        """Build from damping ratio and natural frequency (rad/s)."""
        if not (omega_n > 0) or not (zeta >= 0):
            raise InvalidArgumentError("need omega_n > 0 and zeta >= 0")
        return cls(m, 2.0 * zeta * omega_n * m, m * omega_n ** 2, nonlinearity, forcing)

    @property
    def omega_n(self) -> float:
        return math.sqrt(self.k / self.m)

    @property
    def f_n(self) -> float:
        """Linear natural frequency in Hz."""
        return self.omega_n / (2 * math.pi)

    @property
    def zeta(self) -> float:
        return self.c / (2.0 * math.sqrt(self.m * self.k))

    def with_forcing(self, forcing) -> "OscillatorModel":
        return replace(self, forcing=forcing)

    def unforced(self) -> "OscillatorModel":
        return replace(self, forcing=None)


def _nonlinear_force(model: OscillatorModel, fast: bool):
    """Vectorized ``x -> nonlinear part of R(x)``; ``fast`` uses the knot form of fitted models."""
    nl = model.nonlinearity
    if nl is None:
        return None
    if isinstance(nl, Cubic):
        p2 = nl.p2
        return lambda x: p2 * x * x * x
    if isinstance(nl, GapSpring):
        p2, L = nl.p2, nl.L
        return lambda x: p2 * np.maximum(0.0, x - L)
    if isinstance(nl, (Fitted, FittedPotential)):
        fm = nl.model
        fn = fm.piecewise_linear() if fast else (
            fm.restoring if isinstance(fm, PotentialForceModel) else fm)
        if fm.normalized_by_mass and model.m != 1.0:
            m = model.m
            return lambda x: m * fn(x)
        return fn
    raise InvalidArgumentError(f"unknown nonlinearity {nl!r}")


def restoring_force(model: OscillatorModel, x):
    """``k x`` plus the nonlinear spring force (mass-normalized fits are scaled by ``m``)."""
    x = np.asarray(x, dtype=float)
    nl = _nonlinear_force(model, fast=False)
    return model.k * x if nl is None else model.k * x + nl(x)


def potential_energy(model: OscillatorModel, x):
    """Energy stored in all springs at displacement ``x`` (zero at ``x = 0``)."""
    x = np.asarray(x, dtype=float)
    e = 0.5 * model.k * x * x
    nl = model.nonlinearity
    if isinstance(nl, Cubic):
        e = e + 0.25 * nl.p2 * x ** 4
    elif isinstance(nl, GapSpring):
        e = e + 0.5 * nl.p2 * (np.maximum(0.0, x - nl.L) ** 2 - max(0.0, -nl.L) ** 2)
    elif isinstance(nl, Fitted):
        scale = model.m if nl.model.normalized_by_mass else 1.0
        e = e + scale * nl.model.integral(x)
    elif isinstance(nl, FittedPotential):
        e = e + model.m * nl.model.potential(x)
    return e


def _acceleration(model: OscillatorModel, f_e=None):
    """Build ``accel(t, x, v)``; ``f_e`` may be an array to drive a batch of oscillators."""
    m, c, k = model.m, model.c, model.k
    nl = _nonlinear_force(model, fast=True)
    forcing = model.forcing
    if forcing is not None and f_e is None:
        f_e = forcing.f_e
    if isinstance(forcing, Harmonic):
        amp = forcing.F / m
    elif isinstance(forcing, BaseExcitation):
        amp = forcing.X_b * (2 * np.pi * np.asarray(f_e)) ** 2
    else:
        amp = None
    if amp is not None:
        w = 2 * np.pi * np.asarray(f_e, dtype=float)
    inv_m = 1.0 / m

    def accel(t, x, v):
        r = k * x if nl is None else k * x + nl(x)
        a = -(c * v + r) * inv_m
        if amp is not None:
            a = a + amp * np.sin(w * t)
        return a

    return accel


def _rk4(accel, x, v, dt, n_steps, t0=0.0, record_from=None, check_every=1):
    """Classical RK4 on ``(x, v)``; arrays broadcast across a batch.

    Returns the final state and, when ``record_from`` is given, the recorded
    displacement, velocity and acceleration for steps ``record_from..n_steps``.
    Non-finite states raise :class:`DivergenceError` unless ``check_every`` is 0.
    """
    x = np.array(x, dtype=float)
    v = np.array(v, dtype=float)
    dt = np.asarray(dt, dtype=float)
    half = 0.5 * dt
    sixth = dt / 6.0
    rec = None
    if record_from is not None:
        n_rec = n_steps - record_from + 1
        rec = [np.empty((n_rec,) + x.shape) for _ in range(3)]
    a = accel(t0, x, v)
    for n in range(n_steps):
        if rec is not None and n >= record_from:
            i = n - record_from
            rec[0][i], rec[1][i], rec[2][i] = x, v, a
        t = t0 + n * dt
        th = t + half
        k1x, k1v = v, a
        x2 = x + half * k1x
        v2 = v + half * k1v
        k2v = accel(th, x2, v2)
        x3 = x + half * v2
        v3 = v + half * k2v
        k3v = accel(th, x3, v3)
        x4 = x + dt * v3
        v4 = v + dt * k3v
        k4v = accel(t + dt, x4, v4)
        x = x + sixth * (k1x + 2.0 * v2 + 2.0 * v3 + v4)
        v = v + sixth * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        a = accel(t0 + (n + 1) * dt, x, v)
        if check_every and (n + 1) % check_every == 0 and not np.all(np.isfinite(a)):
            raise DivergenceError(float(np.max(t0 + (n + 1) * dt)))
    if rec is not None:
        i = n_steps - record_from
        rec[0][i], rec[1][i], rec[2][i] = x, v, a
    if check_every and not np.all(np.isfinite(a)):
        raise DivergenceError(float(np.max(t0 + n_steps * dt)))
    return x, v, rec


def integrate(model: OscillatorModel, x0: float, v0: float, dt: float, t_end: float,
              t0: float = 0.0):
    """Fixed-step RK4 trajectory from ``t0`` to ``t0 + t_end``.

    Returns displacement, velocity and acceleration series on one grid (the
    relative displacement ``y`` for base excitation).
    """
    if not (dt > 0 and t_end > 0):
        raise InvalidArgumentError(f"need dt > 0 and t_end > 0, got dt={dt}, t_end={t_end}")
    n_steps = int(round(t_end / dt))
    if n_steps < 1:
        raise InvalidArgumentError("t_end shorter than one step")
    accel = _acceleration(model)
    with np.errstate(over="ignore", invalid="ignore"):
        _, _, (xs, vs, acc) = _rk4(accel, x0, v0, dt, n_steps, t0=t0, record_from=0)
    return (TimeSeries(t0, dt, xs, "x", "m"),
            TimeSeries(t0, dt, vs, "v", "m/s"),
            TimeSeries(t0, dt, acc, "a", "m/s^2"))


def static_equilibrium(model: OscillatorModel, F: float, x_max: float = 1e6) -> float:
    """Root of ``R(x) = F`` closest to zero, by bracketing outward then bisection."""
    def resid(x):
        return float(restoring_force(model, x)) - F

    r0 = resid(0.0)
    if r0 == 0.0:
        return 0.0
    mags = np.geomspace(1e-9, x_max, 600)
    best = None
    for sign in (1.0, -1.0):
        prev_x, prev_r = 0.0, r0
        for mag in mags:
            x = sign * mag
            r = resid(x)
            if np.sign(r) != np.sign(prev_r):
                if best is None or abs(prev_x) < abs(best[0]):
                    best = (prev_x, x)
                break
            if best is not None and mag > abs(best[1]):
                break
            prev_x, prev_r = x, r
    if best is None:
        raise NoRootError(f"no equilibrium for F = {F} within |x| <= {x_max:g}")
    lo, hi = best
    r_lo = resid(lo)
    for _ in range(400):
        if abs(hi - lo) < 1e-12:
            break
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        r_mid = resid(mid)
        if r_mid == 0.0:
            return mid
        if np.sign(r_mid) == np.sign(r_lo):
            lo, r_lo = mid, r_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class SteadyState:
    """Steady-state measurement at one excitation frequency.

    ``amplitude`` is half the peak-to-peak state displacement over the measured
    cycles.  For base excitation ``tip_amplitude`` and ``phase_deg`` describe the
    absolute tip motion relative to the base.
    """

    f_e: float
    amplitude: float
    x_end: float
    v_end: float
    window: TimeSeries | None = None
    tip_amplitude: float = math.nan
    phase_deg: float = math.nan


def _forced(model):
    if not isinstance(model.forcing, (Harmonic, BaseExcitation)):
        raise InvalidArgumentError("steady-state analysis needs harmonic or base forcing")


def _steady_batch(model, freqs, x0, v0, transient_cycles, measure_cycles, steps_per_cycle,
                  keep_window=False):
    freqs = np.asarray(freqs, dtype=float)
    if np.any(freqs <= 0):
        raise InvalidArgumentError("excitation frequencies must be positive")
    if transient_cycles < 0 or measure_cycles < 1 or steps_per_cycle < 4:
        raise InvalidArgumentError("need transient_cycles >= 0, measure_cycles >= 1, "
                                   "steps_per_cycle >= 4")
    dt = 1.0 / (freqs * steps_per_cycle)
    n_total = (transient_cycles + measure_cycles) * steps_per_cycle
    start = transient_cycles * steps_per_cycle
    accel = _acceleration(model, freqs)
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), freqs.shape)
    v0 = np.broadcast_to(np.asarray(v0, dtype=float), freqs.shape)
    with np.errstate(over="ignore", invalid="ignore"):
        x, v, rec = _rk4(accel, x0, v0, dt, n_total, record_from=start, check_every=0)
    win = rec[0][:-1]  # the last sample repeats the first one of the window
    valid = np.all(np.isfinite(win), axis=0) & np.isfinite(x) & np.isfinite(v)
    amp = 0.5 * (win.max(axis=0) - win.min(axis=0))
    amp = np.where(valid, amp, np.nan)
    tip = np.full(freqs.shape, np.nan)
    phase = np.full(freqs.shape, np.nan)
    if isinstance(model.forcing, BaseExcitation):
        phase_t = np.arange(win.shape[0])[:, None] / steps_per_cycle  # time in periods
        base = model.forcing.X_b * np.sin(2 * np.pi * phase_t)
        absx = win + base
        tip = 0.5 * (absx.max(axis=0) - absx.min(axis=0))
        _, lag = fundamental(absx.T, phase_t[:, 0], 1.0)
        phase = np.where(valid, lag % 360.0, np.nan)
        tip = np.where(valid, tip, np.nan)
    windows = None
    if keep_window:
        windows = [TimeSeries(start * d, d, win[:, i], "x", "m") for i, d in enumerate(dt)]
    return amp, x, v, valid, tip, phase, windows


def steady_state_amplitude(model: OscillatorModel, f_e: float | None = None,
                           transient_cycles: int = 180, measure_cycles: int = 20,
                           x0: float = 0.0, v0: float = 0.0,
                           steps_per_cycle: int = 1000) -> SteadyState:
    """Integrate ``transient_cycles + measure_cycles`` periods and measure the last ones."""
    _forced(model)
    f_e = model.forcing.f_e if f_e is None else f_e
    if not (f_e > 0):
        raise InvalidArgumentError("excitation frequency must be positive")
    amp, x, v, valid, tip, phase, wins = _steady_batch(
        model, [f_e], x0, v0, transient_cycles, measure_cycles, steps_per_cycle, True)
    if not valid[0]:
        raise DivergenceError((transient_cycles + measure_cycles) / f_e,
                              f"steady-state integration diverged at f_e = {f_e:g} Hz")
    return SteadyState(f_e, float(amp[0]), float(x[0]), float(v[0]), wins[0],
                       float(tip[0]), float(phase[0]))


@dataclass(frozen=True, eq=False)
class SweepResult:
    frequencies: np.ndarray
    amplitudes: np.ndarray
    valid: np.ndarray
    direction: str
    f_n: float
    X_st: float
    transient_cycles: int
    measure_cycles: int
    tip_amplitudes: np.ndarray | None = None
    phase_deg: np.ndarray | None = None
    base_amplitude: float | None = None

    @property
    def f_over_fn(self) -> np.ndarray:
        return self.frequencies / self.f_n

    @property
    def amp_over_xst(self) -> np.ndarray:
        return self.amplitudes / self.X_st

    @property
    def transmissibility(self) -> np.ndarray | None:
        if self.tip_amplitudes is None:
            return None
        return self.tip_amplitudes / self.base_amplitude

    def peak(self, lo=None, hi=None):
        """``(frequency, amplitude)`` of the largest valid amplitude in ``[lo, hi]`` Hz."""
        sel = self.valid.copy()
        if lo is not None:
            sel &= self.frequencies >= lo
        if hi is not None:
            sel &= self.frequencies <= hi
        idx = np.flatnonzero(sel)
        i = idx[np.argmax(self.amplitudes[idx])]
        return float(self.frequencies[i]), float(self.amplitudes[i])


DIRECTIONS = ("up", "down", "cold-start")


def frequency_sweep(model: OscillatorModel, f_lo: float, f_hi: float, n_points: int,
                    direction: str = "cold-start", transient_cycles: int = 180,
                    measure_cycles: int = 20, steps_per_cycle: int = 1000,
                    x0: float = 0.0, v0: float = 0.0) -> SweepResult:
    """Steady-state amplitudes over ``n_points`` uniformly spaced frequencies.

    ``up``/``down`` seed each frequency with the final state of the previous one
    and run sequentially; ``cold-start`` starts every frequency from
    ``(x0, v0)`` and integrates all of them in lock-step.  Diverged points are
    flagged invalid.
    """
    _forced(model)
    if not (0 < f_lo < f_hi):
        raise InvalidArgumentError(f"need 0 < f_lo < f_hi, got {f_lo}, {f_hi}")
    if n_points < 2:
        raise InvalidArgumentError("n_points must be >= 2")
    if direction not in DIRECTIONS:
        raise InvalidArgumentError(f"direction must be one of {DIRECTIONS}")
    freqs = np.linspace(f_lo, f_hi, n_points)
    args = (transient_cycles, measure_cycles, steps_per_cycle)
    if direction == "cold-start":
        amp, _, _, valid, tip, phase, _ = _steady_batch(model, freqs, x0, v0, *args)
    else:
        order = np.arange(n_points) if direction == "up" else np.arange(n_points)[::-1]
        amp = np.full(n_points, np.nan)
        tip = np.full(n_points, np.nan)
        phase = np.full(n_points, np.nan)
        valid = np.zeros(n_points, dtype=bool)
        xs, vs = x0, v0
        for i in order:
            a, xe, ve, ok, tp, ph, _ = _steady_batch(model, freqs[i:i + 1], xs, vs, *args)
            amp[i], tip[i], phase[i], valid[i] = a[0], tp[0], ph[0], ok[0]
            xs, vs = (xe[0], ve[0]) if ok[0] else (x0, v0)
    base = None
    if isinstance(model.forcing, BaseExcitation):
        base = model.forcing.X_b
        x_st = base
    else:
        tip = phase = None
        x_st = static_equilibrium(model.unforced(), model.forcing.F)
    return SweepResult(freqs, amp, valid, direction, model.f_n, x_st,
                       transient_cycles, measure_cycles, tip, phase, base)


def duffing_backbone_analytic(m: float, p1: float, p2: float, amplitudes):
    """First-order perturbation backbone ``w^2 = p1/m + 3/4 (p2/m) X^2``; returns ``(X, w)`` in rad/s."""
    if not (p1 > 0 and m > 0):
        raise InvalidArgumentError("need p1 > 0 and m > 0")
    X = np.asarray(amplitudes, dtype=float)
    return X, np.sqrt(p1 / m + 0.75 * (p2 / m) * X * X)
