"""Signal processing for identification inputs and response analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import InvalidArgumentError
from .timeseries import TimeSeries


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Single-sided amplitude spectrum; a sinusoid of amplitude A on a bin reads A."""

    frequencies: np.ndarray
    magnitudes: np.ndarray
    df: float
    n_samples: int = 0
    window: str = "none"

    def magnitude_at(self, f: float) -> float:
        """Magnitude of the bin nearest to ``f``."""
        return float(self.magnitudes[int(round(f / self.df))])

    def peak_near(self, f: float, half_width: float) -> float:
        sel = np.abs(self.frequencies - f) <= half_width
        return float(self.magnitudes[sel].max())


@dataclass(frozen=True, eq=False)
class Envelope:
    """Piecewise-linear curve through extrema; clamps outside ``[times[0], times[-1]]``."""

    times: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        return np.interp(t, self.times, self.values)


@dataclass(frozen=True, eq=False)
class BackboneCurve:
    amplitudes: np.ndarray
    frequencies: np.ndarray
    source: str = ""


def central_difference(series: TimeSeries) -> TimeSeries:
    """Second-order derivative estimate on the same grid (one-sided at the ends)."""
    if len(series) < 3:
        raise InvalidArgumentError("central_difference needs at least 3 samples")
    d = np.gradient(series.values, series.dt, edge_order=2)
    units = f"{series.units}/s" if series.units else ""
    return series.with_values(d, label=f"d{series.label}/dt", units=units)


def low_pass(series: TimeSeries, cutoff: float, order: int = 2) -> TimeSeries:
    """Zero-phase Butterworth low-pass: one section run forward then backward."""
    nyquist = 0.5 / series.dt
    if not (0 < cutoff < nyquist):
        raise InvalidArgumentError(f"cutoff must lie in (0, {nyquist:g}) Hz, got {cutoff}")
    b, a = sps.butter(order, cutoff, fs=1.0 / series.dt)
    n = len(series)
    tau = 1.0 / (2 * math.pi * cutoff)
    padlen = max(3 * max(len(a), len(b)), math.ceil(3 * tau / series.dt))
    padlen = min(padlen, n - 1)
    y = sps.filtfilt(b, a, series.values, padtype="odd" if padlen > 0 else None,
                     padlen=padlen)
    return series.with_values(y)


def differentiate_response(x: TimeSeries, cutoff: float | None = None, edge_trim: int = 0):
    """Displacement, velocity and acceleration from a measured displacement record.

    Optionally low-pass filters ``x`` first, differentiates twice and drops
    ``edge_trim`` samples at both ends where filter and stencil transients live.
    """
    if cutoff is not None:
        x = low_pass(x, cutoff)
    v = central_difference(x)
    a = central_difference(v)
    if edge_trim:
        if 2 * edge_trim >= len(x):
            raise InvalidArgumentError(f"edge_trim {edge_trim} removes the whole record")
        x, v, a = (s.slice(edge_trim, len(s) - edge_trim) for s in (x, v, a))
    return (x.with_values(x.values, label="x"), v.with_values(v.values, label="v"),
            a.with_values(a.values, label="a"))


def _next_pow2(n):
    return 1 << (n - 1).bit_length()


def fft_spectrum(series: TimeSeries, window: str = "none", pad: bool = True) -> Spectrum:
    """Single-sided amplitude spectrum, zero-padded to a power of two when ``pad``.

    Amplitudes are divided by the window's coherent gain, so a sinusoid of
    amplitude A whose frequency falls on a bin has magnitude A.
    """
    x = series.values
    n = x.size
    if n < 2:
        raise InvalidArgumentError("fft_spectrum needs at least 2 samples")
    if window == "hann":
        w = np.hanning(n + 1)[:-1] if n > 2 else np.ones(n)
    elif window == "none":
        w = np.ones(n)
    else:
        raise InvalidArgumentError(f"unknown window {window!r}")
    nfft = _next_pow2(n) if pad else n
    X = np.fft.rfft(x * w, nfft)
    mags = np.abs(X) / (n * w.mean())
    mags[1:] *= 2.0
    if nfft % 2 == 0:
        mags[-1] *= 0.5
    df = 1.0 / (nfft * series.dt)
    return Spectrum(np.arange(mags.size) * df, mags, df, n, window)


def _strict_extrema(x):
    inner = x[1:-1]
    maxima = np.flatnonzero((inner > x[:-2]) & (inner > x[2:])) + 1
    minima = np.flatnonzero((inner < x[:-2]) & (inner < x[2:])) + 1
    return maxima, minima


def envelopes(series: TimeSeries):
    """Upper and lower envelopes through strict local maxima and minima."""
    x = series.values
    if x.size < 3:
        raise InvalidArgumentError("envelopes need at least 3 samples")
    imax, imin = _strict_extrema(x)
    if imax.size < 2 or imin.size < 2:
        raise InvalidArgumentError(
            f"envelopes need >= 2 local maxima and minima, found {imax.size} and {imin.size}")
    t = series.times
    return Envelope(t[imax], x[imax]), Envelope(t[imin], x[imin])


def backbone_from_free_response(series: TimeSeries) -> BackboneCurve:
    """Instantaneous (amplitude, frequency) pairs of a decaying free response.

    The instantaneous centre is the midpoint of the envelopes; frequency is the
    inverse of the time between consecutive upward crossings of the centre and
    amplitude is half the envelope gap at the middle of each such interval.
    """
    upper, lower = envelopes(series)
    t = series.times
    t_lo = max(upper.times[0], lower.times[0])
    t_hi = min(upper.times[-1], lower.times[-1])
    sel = (t >= t_lo) & (t <= t_hi)
    ts, xs = t[sel], series.values[sel]
    r = xs - 0.5 * (upper(ts) + lower(ts))
    up = np.flatnonzero((r[:-1] < 0) & (r[1:] >= 0))
    if up.size < 3:
        raise InvalidArgumentError(
            f"backbone extraction needs >= 3 upward centre crossings, found {up.size}")
    frac = -r[up] / (r[up + 1] - r[up])
    tc = ts[up] + frac * (ts[up + 1] - ts[up])
    period = np.diff(tc)
    mid = 0.5 * (tc[1:] + tc[:-1])
    amp = 0.5 * (upper(mid) - lower(mid))
    return BackboneCurve(amp, 1.0 / period, series.label)


def fundamental(values, t, f):
    """Amplitude and lag (degrees) of the ``f`` component: ``x ~ A sin(2 pi f t - lag)``.

    Works along the last axis; ``t`` must cover an integer number of periods.
    """
    w = 2 * math.pi * f * np.asarray(t)
    s = np.mean(values * np.sin(w), axis=-1)
    c = np.mean(values * np.cos(w), axis=-1)
    amp = 2.0 * np.hypot(s, c)
    lag = np.degrees(np.arctan2(-c, s))
    return amp, lag


def _whole_periods(series: TimeSeries, f):
    n_per = math.floor(len(series) * series.dt * f + 1e-9)
    if n_per < 1:
        raise InvalidArgumentError("analysis window is shorter than one excitation period")
    n_use = min(len(series), int(round(n_per / (f * series.dt))))
    return series.slice(len(series) - n_use, len(series))


def phase_shift(reference: TimeSeries, signal: TimeSeries, f_e: float) -> float:
    """Lag of ``signal`` behind ``reference`` at ``f_e`` in degrees, in ``[0, 360)``."""
    if not (f_e > 0):
        raise InvalidArgumentError("excitation frequency must be positive")
    if not reference.same_grid(signal):
        raise InvalidArgumentError("reference and signal must share one time grid")
    ref = _whole_periods(reference, f_e)
    sig = _whole_periods(signal, f_e)
    _, lag_ref = fundamental(ref.values, ref.times, f_e)
    _, lag_sig = fundamental(sig.values, sig.times, f_e)
    d = float((lag_sig - lag_ref) % 360.0)
    return 0.0 if d >= 360.0 else d


def transmissibility(tip_amplitude: float, base_amplitude: float) -> float:
    if not (base_amplitude > 0):
        raise InvalidArgumentError("base amplitude must be positive")
    return tip_amplitude / base_amplitude


def rmse(a: TimeSeries, b: TimeSeries) -> float:
    if not a.same_grid(b):
        raise InvalidArgumentError("rmse needs two series on the same grid")
    return float(np.sqrt(np.mean((a.values - b.values) ** 2)))


def split_fit_validate(x: TimeSeries, v: TimeSeries, a: TimeSeries, fit_fraction: float):
    """Split ``(x, v, a)`` into a time-contiguous fit prefix and validation suffix."""
    if not (0 < fit_fraction < 1):
        raise InvalidArgumentError(f"fit_fraction must lie in (0, 1), got {fit_fraction}")
    if not (x.same_grid(v) and x.same_grid(a)):
        raise InvalidArgumentError("x, v and a must share one time grid")
    n = len(x)
    k = int(round(fit_fraction * n))
    if not (0 < k < n):
        raise InvalidArgumentError(f"fit_fraction {fit_fraction} leaves an empty partition")
    fit = tuple(s.slice(0, k) for s in (x, v, a))
    val = tuple(s.slice(k, n) for s in (x, v, a))
    return fit, val
