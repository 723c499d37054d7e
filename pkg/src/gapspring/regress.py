"""Least-squares identification of hinge-spring networks.

Three fits share one minimum-norm solver:

* :func:`fit_direct` regresses sampled force values ``f(x)``.
* :func:`fit_indirect` regresses the linear-dynamics residual of measured
  ``x, v, a`` for a known damping ratio and natural frequency.
* :func:`fit_potential_constrained` does the same with the conservative
  ``[1, x, psi(x, g_i)]`` library so that the identified force has a potential.

Sign convention: a :class:`ForceModel` evaluates the force that is *added to the
linear restoring force* on the left-hand side of ``m x'' + c x' + k x + f(x) = 0``.
Mass-normalized models evaluate ``f(x) / m``.  A :class:`PotentialForceModel`
stores ``q1, q2, kappa`` of the potential
``V(x) = q1 x + q2 x^2 / 2 + sum_i kappa_i phi(x, g_i)`` and its :meth:`force`
returns ``-dV/dx``, the per-mass force on the right-hand side of
``x'' + 2 zeta w x' + w^2 x = f_t(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import (CONST_SPEC, LINEAR_SPEC, BasisSpec, GapGrid, LibraryMatrix,
                    build_library, eval_phi, psi)
from .errors import InvalidArgumentError
from .timeseries import TimeSeries

DEFAULT_RTOL = 1e-10

SIGN_CONVENTION = ("force model output f(x) enters as m*x'' + c*x' + k*x + f(x) = 0; "
                   "mass-normalized models return f(x)/m")
POTENTIAL_CONVENTION = ("potential model: V(x) = q1*x + q2*x^2/2 + sum kappa_i*phi(x, g_i); "
                        "force f_t(x) = -dV/dx enters as x'' + 2*zeta*wn*x' + wn^2*x = f_t(x)")


@dataclass(frozen=True)
class FitReport:
    residual_rms: float
    rank_used: int
    condition_estimate: float
    n_rows: int = 0
    n_columns: int = 0
    notes: tuple[str, ...] = ()

    @property
    def underdetermined(self) -> bool:
        return self.n_rows < self.n_columns

    def with_notes(self, *notes) -> "FitReport":
        return FitReport(self.residual_rms, self.rank_used, self.condition_estimate,
                         self.n_rows, self.n_columns, self.notes + tuple(notes))


class PiecewiseLinear:
    """Continuous piecewise-linear function: knots, knot values and end slopes.

    Every model in this module is piecewise linear in ``x``, so this gives an
    O(log K) evaluation used by the time integrator in place of an O(K) dot
    product.
    """

    def __init__(self, knots, values, slope_lo, slope_hi):
        self.knots = np.asarray(knots, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.slope_lo = float(slope_lo)
        self.slope_hi = float(slope_hi)
        self._lo = float(self.knots[0])
        self._hi = float(self.knots[-1])

    @classmethod
    def from_function(cls, fn, breakpoints):
        knots = np.unique(np.asarray(breakpoints, dtype=float))
        if knots.size == 0:
            knots = np.array([0.0])
        values = np.asarray(fn(knots), dtype=float)
        probe = np.array([knots[0] - 1.0, knots[-1] + 1.0])
        ends = np.asarray(fn(probe), dtype=float)
        return cls(knots, values, values[0] - ends[0], ends[1] - values[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = np.interp(x, self.knots, self.values)
        y = y + self.slope_lo * np.minimum(0.0, x - self._lo)
        return y + self.slope_hi * np.maximum(0.0, x - self._hi)


@dataclass(frozen=True, eq=False)
class ForceModel:
    """Coefficients bound to basis specs; evaluates ``kappa . basis(x)``."""

    specs: tuple[BasisSpec, ...]
    kappa: np.ndarray
    normalized_by_mass: bool = False
    fit_range: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        kappa = np.array(self.kappa, dtype=float).ravel()
        kappa.setflags(write=False)
        object.__setattr__(self, "kappa", kappa)
        if kappa.size != len(self.specs):
            raise InvalidArgumentError(
                f"{kappa.size} coefficients for {len(self.specs)} basis specs")
        if not np.all(np.isfinite(kappa)):
            raise InvalidArgumentError("model coefficients must be finite")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for spec, k in zip(self.specs, self.kappa):
            if k != 0.0:
                out = out + k * spec(x)
        return out

    def integral(self, x):
        """``int_0^x model(s) ds``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for spec, k in zip(self.specs, self.kappa):
            if k != 0.0:
                out = out + k * spec.integral(x)
        return out

    def breakpoints(self):
        return [b for s in self.specs for b in s.breakpoints()]

    def piecewise_linear(self) -> PiecewiseLinear:
        return PiecewiseLinear.from_function(self, self.breakpoints())

    def coefficients_by_gap(self):
        """``(kind, gap, coefficient)`` rows for gapped columns, in column order."""
        return [(s.kind, s.gap, float(k)) for s, k in zip(self.specs, self.kappa)
                if s.gap is not None]


@dataclass(frozen=True, eq=False)
class PotentialForceModel:
    """Conservative per-mass force built from a constant, a linear and psi terms."""

    q1: float
    q2: float
    kappa: np.ndarray
    gaps: np.ndarray
    fit_range: tuple[float, float] | None = None

    def __post_init__(self):
        kappa = np.array(self.kappa, dtype=float).ravel()
        gaps = np.array(self.gaps, dtype=float).ravel()
        if kappa.size != gaps.size:
            raise InvalidArgumentError(f"{kappa.size} coefficients for {gaps.size} gaps")
        if np.any(gaps < 0):
            raise InvalidArgumentError("psi gaps must be >= 0")
        if not (np.all(np.isfinite(kappa)) and np.isfinite(self.q1) and np.isfinite(self.q2)):
            raise InvalidArgumentError("model coefficients must be finite")
        kappa.setflags(write=False)
        gaps.setflags(write=False)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "gaps", gaps)
        object.__setattr__(self, "q1", float(self.q1))
        object.__setattr__(self, "q2", float(self.q2))

    normalized_by_mass = True

    @property
    def specs(self) -> tuple[BasisSpec, ...]:
        return (CONST_SPEC, LINEAR_SPEC) + tuple(psi(g) for g in self.gaps)

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([[self.q1, self.q2], self.kappa])

    def restoring(self, x):
        """``dV/dx``: the force on the left-hand side (``-force(x)``)."""
        return ForceModel(self.specs, self.coefficients, True)(x)

    def force(self, x):
        return -self.restoring(x)

    __call__ = force

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        v = self.q1 * x + 0.5 * self.q2 * x * x
        for g, k in zip(self.gaps, self.kappa):
            v = v + k * eval_phi(x, g)
        return v

    def breakpoints(self):
        return [b for s in self.specs for b in s.breakpoints()]

    def piecewise_linear(self) -> PiecewiseLinear:
        """Piecewise-linear form of :meth:`restoring`."""
        return PiecewiseLinear.from_function(self.restoring, self.breakpoints())


def _rms(r):
    return float(np.sqrt(np.mean(np.square(r)))) if r.size else 0.0


def solve_min_norm_ls(library, rhs, rtol: float = DEFAULT_RTOL):
    """Minimum-norm least-squares solution through a truncated SVD pseudo-inverse.

    Singular directions below ``rtol * s_max`` are discarded.  ``library`` may be
    a :class:`LibraryMatrix` or a plain 2-D array.
    """
    A = library.values if isinstance(library, LibraryMatrix) else np.asarray(library, float)
    b = np.asarray(rhs, dtype=float).ravel()
    if A.ndim != 2 or A.shape[0] < 1:
        raise InvalidArgumentError("library must be a 2-D matrix with at least one row")
    if A.shape[0] != b.size:
        raise InvalidArgumentError(f"library has {A.shape[0]} rows but rhs has {b.size} entries")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise InvalidArgumentError("library and rhs must be finite")
    n_rows, n_cols = A.shape
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        coef = np.zeros(n_cols)
        return coef, FitReport(_rms(b), 0, float("inf"), n_rows, n_cols)
    keep = s > rtol * s[0]
    rank = int(keep.sum())
    coef = Vt[:rank].T @ ((U[:, :rank].T @ b) / s[:rank])
    resid = A @ coef - b
    return coef, FitReport(_rms(resid), rank, float(s[0] / s[rank - 1]), n_rows, n_cols)


def _hard_threshold(A, b, coef, report, threshold, rtol):
    """Zero coefficients below ``threshold * max|coef|`` and refit the rest once."""
    if threshold <= 0 or not np.any(coef):
        return coef, report
    keep = np.abs(coef) >= threshold * np.abs(coef).max()
    sub, sub_report = solve_min_norm_ls(A[:, keep], b, rtol)
    out = np.zeros_like(coef)
    out[keep] = sub
    return out, FitReport(sub_report.residual_rms, sub_report.rank_used,
                          sub_report.condition_estimate, A.shape[0], A.shape[1],
                          (f"hard threshold {threshold:g} kept {int(keep.sum())} columns",))


def fit_direct(samples, forces, grid: GapGrid, rtol: float = DEFAULT_RTOL,
               threshold: float = 0.0):
    """Fit hinge spring constants to sampled force values ``f(x)``.

    ``samples`` must be strictly increasing.
    """
    x = np.asarray(samples, dtype=float).ravel()
    f = np.asarray(forces, dtype=float).ravel()
    if x.size == 0:
        raise InvalidArgumentError("no samples")
    if x.size != f.size:
        raise InvalidArgumentError(f"{x.size} samples but {f.size} force values")
    if np.any(np.diff(x) <= 0):
        raise InvalidArgumentError("samples must be sorted in strictly increasing order")
    lib = build_library(x, grid.specs())
    coef, report = solve_min_norm_ls(lib, f, rtol)
    coef, report = _hard_threshold(lib.values, f, coef, report, threshold, rtol)
    if report.underdetermined:
        report = report.with_notes(
            f"rank deficient: {x.size} samples for {len(lib.specs)} columns")
    model = ForceModel(lib.specs, coef, False, (float(x[0]), float(x[-1])))
    return model, report


def _linear_residual(x, v, a, zeta, omega_n):
    series = (x, v, a)
    arrays = [s.values if isinstance(s, TimeSeries) else np.asarray(s, float).ravel()
              for s in series]
    if isinstance(x, TimeSeries) and not all(
            isinstance(s, TimeSeries) and s.same_grid(x) for s in series):
        raise InvalidArgumentError("x, v and a must share one time grid")
    if not (arrays[0].size == arrays[1].size == arrays[2].size) or arrays[0].size < 1:
        raise InvalidArgumentError("x, v and a must have the same non-zero length")
    if not (zeta >= 0):
        raise InvalidArgumentError(f"damping ratio must be >= 0, got {zeta}")
    if not (omega_n > 0):
        raise InvalidArgumentError(f"natural frequency must be > 0, got {omega_n}")
    xs, vs, acc = arrays
    return xs, acc + 2.0 * zeta * omega_n * vs + omega_n ** 2 * xs


def fit_indirect(x, v, a, zeta: float, omega_n: float, grid: GapGrid,
                 rtol: float = DEFAULT_RTOL, threshold: float = 0.0):
    """Identify a mass-normalized hinge network from a measured response.

    The returned model approximates ``f(x)/m`` such that
    ``a + 2 zeta w v + w^2 x + model(x) = 0``; ``report.residual_rms`` is in
    acceleration units.
    """
    xs, a_lin = _linear_residual(x, v, a, zeta, omega_n)
    lib = build_library(xs, grid.specs())
    coef, report = solve_min_norm_ls(lib, -a_lin, rtol)
    coef, report = _hard_threshold(lib.values, -a_lin, coef, report, threshold, rtol)
    model = ForceModel(lib.specs, coef, True, (float(xs.min()), float(xs.max())))
    return model, report


def fit_potential_constrained(x, v, a, zeta: float, omega_n: float, psi_gaps,
                              include_linear: bool = True, rtol: float = DEFAULT_RTOL,
                              threshold: float = 0.0):
    """Identify a conservative force from ``[1, x, psi(x, g_1..g_M)]``.

    With ``include_linear=False`` the ``x`` column is left out and ``q2`` is 0.
    """
    xs, a_lin = _linear_residual(x, v, a, zeta, omega_n)
    gaps = np.asarray(psi_gaps, dtype=float).ravel()
    specs = [CONST_SPEC] + ([LINEAR_SPEC] if include_linear else []) + [psi(g) for g in gaps]
    lib = build_library(xs, specs)
    coef, report = solve_min_norm_ls(lib, -a_lin, rtol)
    coef, report = _hard_threshold(lib.values, -a_lin, coef, report, threshold, rtol)
    q2 = coef[1] if include_linear else 0.0
    kappa = coef[2:] if include_linear else coef[1:]
    model = PotentialForceModel(coef[0], q2, kappa, gaps, (float(xs.min()), float(xs.max())))
    report = report.with_notes("linear column " + ("included" if include_linear else "omitted"))
    return model, report


def eval_force(model, x):
    """Model force at ``x``: ``kappa . basis(x)`` or ``-dV/dx`` for potential models."""
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("x must be finite")
    if isinstance(model, PotentialForceModel):
        return model.force(x)
    return model(x)


def eval_potential(model: PotentialForceModel, x):
    return model.potential(x)
