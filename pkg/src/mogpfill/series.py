"""Irregularly sampled scalar series and the z-score helper shared by the models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstantSeries


@dataclass(frozen=True)
class TimeSeries:
    """Observations of one descriptor at strictly ascending times (days)."""

    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float).reshape(-1)
        if t.shape != v.shape:
            raise ValueError(f"times and values differ in length ({t.size} vs {v.size})")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
            raise ValueError("times and values must be finite")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly ascending")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.times.size

    @classmethod
    def empty(cls, label: str = "") -> "TimeSeries":
        return cls(np.empty(0), np.empty(0), label)

    def without_times(self, drop) -> "TimeSeries":
        keep = ~np.isin(self.times, np.asarray(drop, dtype=float))
        return TimeSeries(self.times[keep], self.values[keep], self.label)

    def shifted(self, delta: float) -> "TimeSeries":
        return TimeSeries(self.times + delta, self.values, self.label)


@dataclass(frozen=True)
class PredictionBand:
    """Predictive mean and standard deviation of one output at query times."""

    times: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    @property
    def variance(self) -> np.ndarray:
        return self.std**2


def zscore(values, output=None):
    """Return ``(normalized, mean, std)`` using the population standard deviation."""
    values = np.asarray(values, dtype=float)
    mean = float(np.mean(values))
    std = float(np.std(values))
    if not std > 0.0 or std < 1e-12 * max(1.0, abs(mean)):
        raise ConstantSeries(output)
    return (values - mean) / std, mean, std
