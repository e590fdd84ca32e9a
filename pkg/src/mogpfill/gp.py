"""
Single-output GP regression with a unit-variance stationary kernel.

Training values are z-scored, then ``(log lengthscale, log noise variance)``
are fitted by maximizing the exact log marginal likelihood from several
starting points. This is both the baseline gap filler and the degenerate
case of the two-output model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from scipy.optimize import minimize

from .covariance import Factor, stable_factorize
from .errors import NotPositiveDefinite, OptimizerDiverged, TooFewSamples
from .kernel import KernelKind, KernelParams, kernel_grad_lengthscale, kernel_matrix
from .series import PredictionBand, TimeSeries, zscore

logger = logging.getLogger(__name__)

_LOG_2PI = np.log(2.0 * np.pi)
# Penalty returned to the optimizer when a trial point cannot be factorized.
_FAILED_OBJECTIVE = 1e20
VARIANCE_FLOOR = 1e-15


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings shared by the single- and two-output trainers."""

    restarts: int = 5
    seed: int = 0
    max_iter: int = 500
    gtol: float = 1e-4
    noise_floor: float = 1e-6
    kernel: KernelKind = KernelKind.MATERN32

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        object.__setattr__(self, "kernel", KernelKind.parse(self.kernel))


@dataclass(frozen=True)
class OptimizerInfo:
    iterations: int = 0
    log_likelihood: float = float("nan")
    restart_index: int = -1


@dataclass(frozen=True)
class GpModel:
    kernel: KernelParams
    noise_variance: float
    norm_mean: float
    norm_std: float
    train_times: np.ndarray
    train_values_normalized: np.ndarray
    factor: Factor = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    info: OptimizerInfo = OptimizerInfo()

    @property
    def jitter(self) -> float:
        return self.factor.jitter


def _gp_cov(kernel: KernelParams, noise_variance: float, times) -> np.ndarray:
    K = kernel_matrix(kernel, times, times)
    K[np.diag_indices_from(K)] += noise_variance
    return K


def gp_log_marginal_likelihood(kernel: KernelParams, noise_variance: float, times, y,
                               return_grad: bool = False):
    """Exact log marginal likelihood of ``y`` under ``N(0, K + noise I)``.

    With ``return_grad`` the gradient with respect to
    ``(log lengthscale, log noise_variance)`` is returned as well.
    """
    times = np.asarray(times, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size < 1:
        raise TooFewSamples("at least one training sample is required")
    F = stable_factorize(_gp_cov(kernel, noise_variance, times))
    alpha = F.solve(y)
    n = y.size
    lml = -0.5 * float(y @ alpha) - 0.5 * F.logdet() - 0.5 * n * _LOG_2PI
    if not return_grad:
        return lml
    W = np.outer(alpha, alpha) - F.inverse()
    dK = kernel_grad_lengthscale(kernel, times, times)
    g_ell = 0.5 * float(np.sum(W * dK)) * kernel.lengthscale
    g_noise = 0.5 * float(np.trace(W)) * noise_variance
    return lml, np.array([g_ell, g_noise])


def build_gp_model(kernel: KernelParams, noise_variance: float, times, values,
                   info: OptimizerInfo = OptimizerInfo(), normalization=None) -> GpModel:
    """Condition a GP with fixed hyperparameters on ``(times, values)``.

    ``values`` are in original units unless ``normalization=(mean, std)`` is
    given, in which case they are taken as already z-scored.
    """
    times = np.array(times, dtype=float)
    if normalization is None:
        yn, mean, std = zscore(values)
    else:
        mean, std = map(float, normalization)
        yn = np.array(values, dtype=float)
    F = stable_factorize(_gp_cov(kernel, noise_variance, times))
    alpha = F.solve(yn)
    for arr in (times, yn, alpha):
        arr.setflags(write=False)
    return GpModel(kernel, float(noise_variance), mean, std, times, yn, F, alpha, info)


def _initial_lengthscales(span: float, restarts: int, rng) -> list:
    bases = (span / 10.0, span / 3.0, span)
    return [bases[i % 3] * float(np.exp(rng.normal(0.0, 0.2))) for i in range(restarts)]


def gp_train(series: TimeSeries, config: TrainConfig = TrainConfig()) -> GpModel:
    """Fit lengthscale and noise variance by maximizing the marginal likelihood.

    Raises
    ------
    TooFewSamples
        Fewer than two samples.
    ConstantSeries
        The values have zero variance.
    OptimizerDiverged
        No restart reached a finite likelihood.
    """
    if len(series) < 2:
        raise TooFewSamples(f"GP training needs at least 2 samples, got {len(series)}")
    t = series.times
    yn, mean, std = zscore(series.values, output=1)
    span = float(t[-1] - t[0])
    kind = config.kernel
    floor = config.noise_floor

    bounds = [(np.log(span * 1e-4), np.log(span * 1e2)), (np.log(floor), np.log(10.0))]

    def objective(theta):
        ell, s2 = np.exp(theta)
        try:
            lml, g = gp_log_marginal_likelihood(KernelParams(kind, ell), s2, t, yn, return_grad=True)
        except NotPositiveDefinite:
            return _FAILED_OBJECTIVE, np.zeros(2)
        return -lml, -g

    rng = np.random.default_rng(config.seed)
    best = None
    for i, ell0 in enumerate(_initial_lengthscales(span, config.restarts, rng)):
        x0 = np.clip(np.log([ell0, 0.1]), [b[0] for b in bounds], [b[1] for b in bounds])
        res = minimize(objective, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": config.max_iter, "gtol": config.gtol, "ftol": 1e-15})
        lml = -float(res.fun)
        logger.debug("gp restart %d: lml=%.6f ell=%.4g noise=%.4g (%s)",
                     i, lml, *np.exp(res.x), res.message)
        if not np.isfinite(lml) or res.fun >= _FAILED_OBJECTIVE:
            continue
        if best is None or lml > best[0]:
            best = (lml, res.x, int(res.nit), i)
    if best is None:
        raise OptimizerDiverged("all GP optimizer restarts failed")

    lml, x, nit, idx = best
    ell, s2 = np.exp(x)
    return build_gp_model(KernelParams(kind, ell), s2, t, yn,
                          info=OptimizerInfo(nit, lml, idx), normalization=(mean, std))


def gp_predict(model: GpModel, times, normalized: bool = False) -> PredictionBand:
    """Predictive mean and std (noise included) at ``times``.

    Results are in original units unless ``normalized`` is set.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    ks = kernel_matrix(model.kernel, times, model.train_times)
    mean = ks @ model.alpha
    v = la.solve_triangular(model.factor.lower, ks.T, lower=True, check_finite=False)
    var = 1.0 + model.noise_variance - np.sum(v * v, axis=0)
    std = np.sqrt(np.maximum(var, VARIANCE_FLOOR))
    if normalized:
        return PredictionBand(times, mean, std)
    return PredictionBand(times, mean * model.norm_std + model.norm_mean, std * model.norm_std)
