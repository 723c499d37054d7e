"""Uniformly sampled single-channel signals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A uniformly sampled channel starting at ``t0`` with step ``dt``."""

    t0: float
    dt: float
    values: np.ndarray
    label: str = "x"
    units: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise InvalidArgumentError("TimeSeries values must be a non-empty 1-D array")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InvalidArgumentError(f"dt must be positive, got {self.dt}")

    def __len__(self):
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    @property
    def duration(self) -> float:
        return self.dt * self.values.size

    def with_values(self, values, label=None, units=None) -> "TimeSeries":
        return TimeSeries(self.t0, self.dt, values,
                          self.label if label is None else label,
                          self.units if units is None else units)

    def slice(self, start: int, stop: int) -> "TimeSeries":
        """Samples ``start:stop`` with the start time shifted accordingly."""
        return TimeSeries(self.t0 + start * self.dt, self.dt, self.values[start:stop],
                          self.label, self.units)

    def same_grid(self, other: "TimeSeries") -> bool:
        """Same length and step, start times equal to within a nanostep."""
        return (len(self) == len(other) and self.dt == other.dt
                and abs(self.t0 - other.t0) <= 1e-9 * self.dt)
