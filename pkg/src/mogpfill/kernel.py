"""
Stationary unit-variance covariance functions on scalar time inputs.

Two kernels are provided, both written as functions of the lag ``r = |t1 - t2|``
in days:

    Matern 3/2           k(r) = (1 + sqrt(3) r / l) exp(-sqrt(3) r / l)
    squared exponential  k(r) = exp(-r^2 / (2 l^2))

The kernel variance is fixed to one. Signal amplitude lives in the
coregionalization weights of the multi-output model (or in the z-scored data
for the single-output model), so the only hyperparameter is the lengthscale.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

_SQRT3 = np.sqrt(3.0)


class KernelKind(str, enum.Enum):
    MATERN32 = "matern32"
    SQUARED_EXPONENTIAL = "se"

    @classmethod
    def parse(cls, value) -> "KernelKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        aliases = {
            "matern32": cls.MATERN32,
            "matern": cls.MATERN32,
            "se": cls.SQUARED_EXPONENTIAL,
            "rbf": cls.SQUARED_EXPONENTIAL,
            "squaredexponential": cls.SQUARED_EXPONENTIAL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown kernel kind {value!r}") from None


@dataclass(frozen=True)
class KernelParams:
    """Kernel family and lengthscale (days) of one latent GP."""

    kind: KernelKind
    lengthscale: float

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind.parse(self.kind))
        ell = float(self.lengthscale)
        if not np.isfinite(ell) or ell <= 0.0:
            raise ValueError(f"lengthscale must be positive and finite, got {self.lengthscale!r}")
        object.__setattr__(self, "lengthscale", ell)

    def with_lengthscale(self, lengthscale: float) -> "KernelParams":
        return KernelParams(self.kind, lengthscale)


def matern32(lengthscale: float) -> KernelParams:
    return KernelParams(KernelKind.MATERN32, lengthscale)


def _as_times(t, name: str) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        t = t[None]
    if t.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector of times")
    if t.size == 0:
        raise ValueError(f"{name} is empty")
    return t


def _lags(rows, cols) -> np.ndarray:
    rows = _as_times(rows, "rows")
    cols = _as_times(cols, "cols")
    return np.abs(rows[:, None] - cols[None, :])


def _k_of_r(params: KernelParams, r):
    ell = params.lengthscale
    if params.kind is KernelKind.MATERN32:
        s = _SQRT3 * r / ell
        return (1.0 + s) * np.exp(-s)
    return np.exp(-0.5 * (r / ell) ** 2)


def _dk_dell_of_r(params: KernelParams, r):
    ell = params.lengthscale
    if params.kind is KernelKind.MATERN32:
        s = _SQRT3 * r / ell
        return s * s * np.exp(-s) / ell
    u = r / ell
    return u * u * np.exp(-0.5 * u * u) / ell


def kernel_eval(params: KernelParams, t1: float, t2: float) -> float:
    """Covariance between two scalar times; equals 1 when ``t1 == t2``."""
    return float(_k_of_r(params, abs(float(t1) - float(t2))))


def kernel_matrix(params: KernelParams, rows, cols) -> np.ndarray:
    """Pairwise covariance matrix with element (i, j) = k(rows[i], cols[j])."""
    return _k_of_r(params, _lags(rows, cols))


def kernel_grad_lengthscale(params: KernelParams, rows, cols) -> np.ndarray:
    """Element-wise derivative of :func:`kernel_matrix` with respect to the lengthscale."""
    return _dk_dell_of_r(params, _lags(rows, cols))
