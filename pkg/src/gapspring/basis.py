"""Hinge and potential basis functions and the regression library built from them.

A min-hinge ``min(0, x - g)`` and a max-hinge ``max(0, x - g)`` are the forces of
one-sided linear springs of unit stiffness that engage once the displacement
passes the gap ``g``.  ``psi`` combines a symmetric pair of such springs with a
linear spring so that it is the exact derivative of the piecewise quadratic
potential ``phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError

MIN_HINGE = "min"
MAX_HINGE = "max"
CONSTANT = "const"
LINEAR = "linear"
PSI = "psi"

KINDS = (MIN_HINGE, MAX_HINGE, CONSTANT, LINEAR, PSI)
_GAPPED = (MIN_HINGE, MAX_HINGE, PSI)


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise InvalidArgumentError("basis functions require finite arguments")


def _check_nonneg_gap(g):
    if np.any(np.asarray(g) < 0):
        raise InvalidArgumentError(f"psi/phi gaps must be >= 0, got {g}")


def eval_min_hinge(x, g):
    """``min(0, x - g)``; accepts scalars or arrays."""
    _check_finite(x, g)
    return np.minimum(0.0, np.subtract(x, g))


def eval_max_hinge(x, g):
    """``max(0, x - g)``; accepts scalars or arrays."""
    _check_finite(x, g)
    return np.maximum(0.0, np.subtract(x, g))


def eval_psi(x, g):
    """Force-like basis ``x + min(0, x + g) + max(0, x - g)`` for ``g >= 0``.

    Equals ``x`` for ``|x| <= g`` and ``2x -/+ g`` outside; odd in ``x``.
    """
    _check_finite(x, g)
    _check_nonneg_gap(g)
    x = np.asarray(x, dtype=float)
    return x + np.minimum(0.0, x + g) + np.maximum(0.0, x - g)


def eval_phi(x, g):
    """Piecewise quadratic potential whose derivative is :func:`eval_psi`."""
    _check_finite(x, g)
    _check_nonneg_gap(g)
    x = np.asarray(x, dtype=float)
    lo = np.minimum(0.0, x + g)
    hi = np.maximum(0.0, x - g)
    return 0.5 * x * x + 0.5 * lo * lo + 0.5 * hi * hi


@dataclass(frozen=True)
class BasisSpec:
    """One library column: ``kind`` is one of :data:`KINDS`; gapped kinds carry ``gap``."""

    kind: str
    gap: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown basis kind {self.kind!r}")
        if self.kind in _GAPPED:
            if self.gap is None or not math.isfinite(self.gap):
                raise InvalidArgumentError(f"{self.kind} basis needs a finite gap")
            object.__setattr__(self, "gap", float(self.gap))
            if self.kind == PSI and self.gap < 0:
                raise InvalidArgumentError(f"psi gap must be >= 0, got {self.gap}")
        elif self.gap is not None:
            raise InvalidArgumentError(f"{self.kind} basis takes no gap")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == MIN_HINGE:
            return eval_min_hinge(x, self.gap)
        if self.kind == MAX_HINGE:
            return eval_max_hinge(x, self.gap)
        if self.kind == PSI:
            return eval_psi(x, self.gap)
        _check_finite(x)
        if self.kind == CONSTANT:
            return np.ones_like(x)
        return x.copy()

    def integral(self, x):
        """Antiderivative that vanishes at ``x = 0`` (the spring's stored energy)."""
        x = np.asarray(x, dtype=float)
        if self.kind == MIN_HINGE:
            return 0.5 * eval_min_hinge(x, self.gap) ** 2 - 0.5 * min(0.0, -self.gap) ** 2
        if self.kind == MAX_HINGE:
            return 0.5 * eval_max_hinge(x, self.gap) ** 2 - 0.5 * max(0.0, -self.gap) ** 2
        if self.kind == PSI:
            return eval_phi(x, self.gap)
        _check_finite(x)
        return x.copy() if self.kind == CONSTANT else 0.5 * x * x

    def breakpoints(self) -> tuple[float, ...]:
        """Displacements where the slope of this basis function changes."""
        if self.kind in (MIN_HINGE, MAX_HINGE):
            return (self.gap,)
        if self.kind == PSI:
            return (-self.gap, self.gap) if self.gap > 0 else (0.0,)
        return ()

    def __str__(self):
        return self.kind if self.gap is None else f"{self.kind}({self.gap:g})"


def min_hinge(g):
    return BasisSpec(MIN_HINGE, g)


def max_hinge(g):
    return BasisSpec(MAX_HINGE, g)


def psi(g):
    return BasisSpec(PSI, g)


CONST_SPEC = BasisSpec(CONSTANT)
LINEAR_SPEC = BasisSpec(LINEAR)


@dataclass(frozen=True)
class GapGrid:
    """Gap values for the min-hinge and max-hinge columns over ``[x_lo, x_hi]``."""

    gaps_min: tuple[float, ...]
    gaps_max: tuple[float, ...]
    x_lo: float
    x_hi: float

    def __post_init__(self):
        object.__setattr__(self, "gaps_min", tuple(float(g) for g in self.gaps_min))
        object.__setattr__(self, "gaps_max", tuple(float(g) for g in self.gaps_max))
        if not (self.x_lo < self.x_hi):
            raise InvalidArgumentError(f"degenerate range [{self.x_lo}, {self.x_hi}]")
        if len(self.gaps_min) + len(self.gaps_max) < 1:
            raise InvalidArgumentError("a gap grid needs at least one gap")
        for name, gaps in (("gaps_min", self.gaps_min), ("gaps_max", self.gaps_max)):
            arr = np.asarray(gaps)
            if arr.size and (np.any(np.diff(arr) <= 0)):
                raise InvalidArgumentError(f"{name} must be strictly increasing")
            if arr.size and (arr[0] < self.x_lo or arr[-1] > self.x_hi):
                raise InvalidArgumentError(f"{name} must lie in [{self.x_lo}, {self.x_hi}]")

    @property
    def M(self):
        return len(self.gaps_min)

    @property
    def N(self):
        return len(self.gaps_max)

    def specs(self) -> list[BasisSpec]:
        """Min-hinge columns first, then max-hinge columns."""
        return [min_hinge(g) for g in self.gaps_min] + [max_hinge(g) for g in self.gaps_max]

    def spacing(self) -> float:
        """Largest distance between neighbouring gaps of either family."""
        steps = [np.diff(g).max() for g in (self.gaps_min, self.gaps_max) if len(g) > 1]
        return float(max(steps)) if steps else self.x_hi - self.x_lo


def _linspace(lo, hi, n):
    if n == 0:
        return ()
    if n == 1:
        return (0.5 * (lo + hi),)
    return tuple(np.linspace(lo, hi, n))


def uniform_gap_grid(x_lo: float, x_hi: float, M: int, N: int) -> GapGrid:
    """``M`` min-gaps and ``N`` max-gaps evenly spaced over ``[x_lo, x_hi]``, endpoints included."""
    if not (math.isfinite(x_lo) and math.isfinite(x_hi) and x_lo < x_hi):
        raise InvalidArgumentError(f"degenerate range [{x_lo}, {x_hi}]")
    if M < 0 or N < 0 or M + N < 1:
        raise InvalidArgumentError(f"need M, N >= 0 and M + N >= 1, got M={M}, N={N}")
    return GapGrid(_linspace(x_lo, x_hi, M), _linspace(x_lo, x_hi, N), x_lo, x_hi)


def uniform_points(lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` equally spaced values including both ends (e.g. a psi gap list)."""
    if not (lo < hi) or n < 1:
        raise InvalidArgumentError(f"need lo < hi and n >= 1, got [{lo}, {hi}], n={n}")
    return np.array(_linspace(lo, hi, n))


@dataclass(frozen=True, eq=False)
class LibraryMatrix:
    """Basis functions evaluated at sample displacements; one column per spec."""

    samples: np.ndarray
    specs: tuple[BasisSpec, ...]
    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape


def build_library(samples: Sequence[float], specs: Sequence[BasisSpec]) -> LibraryMatrix:
    """Evaluate each spec at each sample: ``values[i, j] = specs[j](samples[i])``."""
    x = np.array(samples, dtype=float).ravel()
    specs = tuple(specs)
    if x.size == 0 or not specs:
        raise InvalidArgumentError("build_library needs at least one sample and one spec")
    _check_finite(x)
    values = np.empty((x.size, len(specs)))
    for j, spec in enumerate(specs):
        values[:, j] = spec(x)
    x.setflags(write=False)
    values.setflags(write=False)
    return LibraryMatrix(x, specs, values)
