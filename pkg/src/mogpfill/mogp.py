"""
Two-output semiparametric latent factor model (SLFM).

Both outputs are linear mixtures of two independent unit-variance latent GPs:

    f_1(t) = a_11 u_1(t) + a_12 u_2(t)
    f_2(t) = a_21 u_1(t) + a_22 u_2(t)

with independent Gaussian noise per output. The eight free parameters are
two lengthscales, the four mixing weights and two noise variances, all fitted
jointly on z-scored data by maximizing the exact marginal likelihood.

After training, the latent GP with the longer lengthscale is labelled LF
(low frequency, the shared seasonal trend) and the other HF. The ratio
``|a_1^LF / a_1^HF|`` indicates how much of output 1 is carried by the
component it shares with output 2, i.e. whether gap filling from the radar
series can be trusted.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from scipy.optimize import minimize

from .covariance import (
    CoregVector,
    Factor,
    MultiInput,
    NoiseVariances,
    assemble_full_covariance,
    coreg_matrix,
    cross_covariance_blocks,
    latent_kernel_matrices,
    stable_factorize,
)
from .errors import NotPositiveDefinite, OptimizerDiverged, TooFewSamples
from .gp import VARIANCE_FLOOR, OptimizerInfo, TrainConfig
from .kernel import KernelParams, kernel_grad_lengthscale
from .series import PredictionBand, TimeSeries, zscore

logger = logging.getLogger(__name__)

_LOG_2PI = np.log(2.0 * np.pi)
_FAILED_OBJECTIVE = 1e20
N_PARAMS = 8
PARAM_NAMES = ("log_ell_1", "log_ell_2", "a_1_1", "a_2_1", "a_1_2", "a_2_2",
               "log_noise_1", "log_noise_2")
SYNERGY_THRESHOLD = 1.5


@dataclass(frozen=True)
class SlfmModel:
    kernels: tuple
    coregs: tuple
    noise: NoiseVariances
    norm_mean: tuple
    norm_std: tuple
    inputs: MultiInput
    values_normalized: np.ndarray
    factor: Factor = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    info: OptimizerInfo = OptimizerInfo()

    @property
    def jitter(self) -> float:
        return self.factor.jitter

    def values_normalized_per_output(self) -> tuple:
        n1 = self.inputs.counts[0]
        return self.values_normalized[:n1], self.values_normalized[n1:]


def pack_params(kernels, coregs, noise) -> np.ndarray:
    """Flatten hyperparameters to the 8-vector used by the optimizer."""
    a = [c.array if isinstance(c, CoregVector) else np.asarray(c, dtype=float) for c in coregs]
    s2 = noise.array if isinstance(noise, NoiseVariances) else np.asarray(noise, dtype=float)
    return np.array([np.log(kernels[0].lengthscale), np.log(kernels[1].lengthscale),
                     a[0][0], a[0][1], a[1][0], a[1][1], np.log(s2[0]), np.log(s2[1])])


def unpack_params(theta, kind):
    theta = np.asarray(theta, dtype=float)
    kernels = (KernelParams(kind, np.exp(theta[0])), KernelParams(kind, np.exp(theta[1])))
    coregs = (theta[2:4].copy(), theta[4:6].copy())
    noise = np.exp(theta[6:8])
    return kernels, coregs, noise


def mogp_log_marginal_likelihood(kernels, coregs, noise, inputs: MultiInput, y,
                                 return_grad: bool = False):
    """Gaussian log likelihood of the stacked normalized samples ``y``.

    The gradient (``return_grad=True``) is taken with respect to
    ``[log ell_1, log ell_2, a_11, a_21, a_12, a_22, log noise_1, log noise_2]``
    via ``0.5 * tr((alpha alpha^T - C^-1) dC/dtheta)``.
    """
    y = np.asarray(y, dtype=float)
    if y.size != inputs.total:
        raise ValueError(f"expected {inputs.total} stacked values, got {y.size}")
    if y.size < 2:
        raise TooFewSamples("the two-output likelihood needs at least 2 samples in total")
    C = assemble_full_covariance(kernels, coregs, inputs, noise)
    F = stable_factorize(C)
    alpha = F.solve(y)
    lml = -0.5 * float(y @ alpha) - 0.5 * F.logdet() - 0.5 * y.size * _LOG_2PI
    if not return_grad:
        return lml

    idx = inputs.output_index
    s2 = noise.array if isinstance(noise, NoiseVariances) else np.asarray(noise, dtype=float)
    W = np.outer(alpha, alpha) - F.inverse()
    Ks = latent_kernel_matrices(kernels, inputs)
    grad = np.zeros(N_PARAMS)
    for q, (kp, coreg, K) in enumerate(zip(kernels, coregs, Ks)):
        a = coreg.array if isinstance(coreg, CoregVector) else np.asarray(coreg, dtype=float)
        v = a[idx]
        dK = kernel_grad_lengthscale(kp, inputs.stacked, inputs.stacked)
        grad[q] = 0.5 * float(np.sum(W * np.outer(v, v) * dK)) * kp.lengthscale
        # d(v v^T)/da_d = m v^T + v m^T, both halves contribute equally by symmetry
        WKv = (W * K) @ v
        for d in range(2):
            grad[2 + 2 * q + d] = float(np.sum(WKv[idx == d]))
    Wd = np.diag(W)
    for d in range(2):
        grad[6 + d] = 0.5 * float(np.sum(Wd[idx == d])) * s2[d]
    return lml, grad


def mogp_gradients(kernels, coregs, noise, inputs: MultiInput, y) -> np.ndarray:
    """Analytic gradient of :func:`mogp_log_marginal_likelihood` (8-vector)."""
    return mogp_log_marginal_likelihood(kernels, coregs, noise, inputs, y, return_grad=True)[1]


def _normalize_outputs(series_1: TimeSeries, series_2: TimeSeries):
    norm = []
    values = []
    for d, s in enumerate((series_1, series_2), start=1):
        if len(s) == 0:
            norm.append((0.0, 1.0))
            values.append(np.empty(0))
            continue
        yn, m, sd = zscore(s.values, output=d)
        norm.append((m, sd))
        values.append(yn)
    return norm, values


def build_slfm_model(kernels, coregs, noise, series_1: TimeSeries, series_2: TimeSeries,
                     info: OptimizerInfo = OptimizerInfo(), normalization=None) -> SlfmModel:
    """Condition an SLFM with fixed hyperparameters on the two series.

    Series values are in original units unless ``normalization`` gives
    ``((mean_1, std_1), (mean_2, std_2))``, in which case they are taken as
    already z-scored.
    """
    coregs = tuple(c if isinstance(c, CoregVector) else CoregVector(c) for c in coregs)
    noise = noise if isinstance(noise, NoiseVariances) else NoiseVariances(noise)
    inputs = MultiInput((series_1.times, series_2.times))
    if normalization is None:
        norm, values = _normalize_outputs(series_1, series_2)
    else:
        norm = [tuple(map(float, p)) for p in normalization]
        values = [series_1.values, series_2.values]
    y = np.concatenate(values).astype(float)
    F = stable_factorize(assemble_full_covariance(kernels, coregs, inputs, noise))
    alpha = F.solve(y)
    y.setflags(write=False)
    alpha.setflags(write=False)
    return SlfmModel(tuple(kernels), coregs, noise,
                     (norm[0][0], norm[1][0]), (norm[0][1], norm[1][1]),
                     inputs, y, F, alpha, info)


def _cross_sign(series_1: TimeSeries, series_2: TimeSeries) -> float:
    """Sign of the zero-lag correlation, pairing output 1 with interpolated output 2."""
    t1, t2 = series_1.times, series_2.times
    inside = (t1 >= t2[0]) & (t1 <= t2[-1])
    if inside.sum() < 3:
        return 1.0
    y2 = np.interp(t1[inside], t2, series_2.values)
    y1 = series_1.values[inside]
    if np.std(y1) == 0 or np.std(y2) == 0:
        return 1.0
    rho = np.corrcoef(y1, y2)[0, 1]
    return -1.0 if rho < 0 else 1.0


def initial_params(series_1: TimeSeries, series_2: TimeSeries) -> np.ndarray:
    """Deterministic starting point with the LF/HF symmetry already broken."""
    t_all = np.concatenate([series_1.times, series_2.times])
    span = float(t_all.max() - t_all.min())
    sign = _cross_sign(series_1, series_2)
    return np.array([np.log(span / 5.0), np.log(span / 40.0),
                     0.8, 0.8 * sign, 0.3, 0.05,
                     np.log(0.1), np.log(0.1)])


def _perturb(theta0, rng) -> np.ndarray:
    theta = theta0.copy()
    theta[0:2] += rng.normal(0.0, 0.3, size=2)
    theta[2:6] += rng.normal(0.0, 0.15, size=4)
    theta[6:8] += rng.normal(0.0, 0.5, size=2)
    return theta


def mogp_train(series_1: TimeSeries, series_2: TimeSeries,
               config: TrainConfig = TrainConfig()) -> SlfmModel:
    """Jointly fit the 8 SLFM parameters on z-scored copies of both series.

    The first restart starts from :func:`initial_params`; the others from
    random perturbations of it. The restart with the highest likelihood wins.
    Latent GPs of the returned model are ordered by descending lengthscale.

    Raises
    ------
    TooFewSamples
        Either series has fewer than 2 samples.
    ConstantSeries
        Either series is constant (``.output`` names which).
    OptimizerDiverged
        No restart reached a finite likelihood.
    """
    for d, s in enumerate((series_1, series_2), start=1):
        if len(s) < 2:
            raise TooFewSamples(f"output {d} needs at least 2 samples, got {len(s)}")
    n_total = len(series_1) + len(series_2)
    if n_total < N_PARAMS:
        warnings.warn(f"only {n_total} samples for {N_PARAMS} free parameters", stacklevel=2)

    norm, values = _normalize_outputs(series_1, series_2)
    inputs = MultiInput((series_1.times, series_2.times))
    y = np.concatenate(values)
    kind = config.kernel
    span = float(inputs.stacked.max() - inputs.stacked.min())
    log_floor = np.log(config.noise_floor)
    bounds = ([(np.log(span * 1e-4), np.log(span * 1e2))] * 2
              + [(None, None)] * 4
              + [(log_floor, np.log(10.0))] * 2)
    lo = np.array([b[0] if b[0] is not None else -np.inf for b in bounds])
    hi = np.array([b[1] if b[1] is not None else np.inf for b in bounds])

    def objective(theta):
        kernels, coregs, s2 = unpack_params(theta, kind)
        try:
            lml, g = mogp_log_marginal_likelihood(kernels, coregs, s2, inputs, y, return_grad=True)
        except NotPositiveDefinite:
            return _FAILED_OBJECTIVE, np.zeros(N_PARAMS)
        return -lml, -g

    rng = np.random.default_rng(config.seed)
    theta_init = initial_params(series_1, series_2)
    best = None
    for i in range(config.restarts):
        x0 = theta_init if i == 0 else _perturb(theta_init, rng)
        x0 = np.clip(x0, lo, hi)
        res = minimize(objective, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": config.max_iter, "gtol": config.gtol, "ftol": 1e-15})
        lml = -float(res.fun)
        logger.debug("slfm restart %d: lml=%.6f nit=%d (%s)", i, lml, res.nit, res.message)
        if not np.isfinite(lml) or res.fun >= _FAILED_OBJECTIVE:
            continue
        if best is None or lml > best[0]:
            best = (lml, res.x, int(res.nit), i)
    if best is None:
        raise OptimizerDiverged("all SLFM optimizer restarts failed")

    lml, theta, nit, idx = best
    kernels, coregs, s2 = unpack_params(theta, kind)
    order = sorted(range(2), key=lambda q: -kernels[q].lengthscale)
    kernels = tuple(kernels[q] for q in order)
    coregs = tuple(CoregVector(coregs[q]) for q in order)
    s1 = TimeSeries(series_1.times, values[0])
    s2_series = TimeSeries(series_2.times, values[1])
    return build_slfm_model(kernels, coregs, s2, s1, s2_series,
                            info=OptimizerInfo(nit, lml, idx), normalization=norm)


def mogp_predict(model: SlfmModel, times, normalized: bool = False) -> tuple:
    """Predictive bands of both outputs at arbitrary query ``times``.

    Returns ``(band_1, band_2)``; the std includes each output's noise.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    cross = cross_covariance_blocks(model.kernels, model.coregs, model.inputs, times)
    prior = sum(c.array**2 for c in model.coregs) + model.noise.array
    bands = []
    for d in range(2):
        Kd = cross[d]
        mean = Kd @ model.alpha
        v = la.solve_triangular(model.factor.lower, Kd.T, lower=True, check_finite=False)
        var = prior[d] - np.sum(v * v, axis=0)
        std = np.sqrt(np.maximum(var, VARIANCE_FLOOR))
        if not normalized:
            mean = mean * model.norm_std[d] + model.norm_mean[d]
            std = std * model.norm_std[d]
        bands.append(PredictionBand(times, mean, std))
    return tuple(bands)


class SynergyClass(str, enum.Enum):
    SYNERGY_DOMINANT = "SynergyDominant"
    MIXED = "Mixed"
    INDEPENDENT = "Independent"


@dataclass(frozen=True)
class SynergyDiagnostics:
    ell_lf: float
    ell_hf: float
    a_lf: tuple
    a_hf: tuple
    b_lf: np.ndarray
    b_hf: np.ndarray
    b12_lf: float
    b12_hf: float
    ratio_out1: float
    ratio_out2: float
    synergy_class: SynergyClass

    def as_dict(self) -> dict:
        return {
            "ell_lf": self.ell_lf,
            "ell_hf": self.ell_hf,
            "a_lf": list(self.a_lf),
            "a_hf": list(self.a_hf),
            "B_lf": [list(r) for r in self.b_lf],
            "B_hf": [list(r) for r in self.b_hf],
            "b12_lf": self.b12_lf,
            "b12_hf": self.b12_hf,
            "ratio_out1": self.ratio_out1,
            "ratio_out2": self.ratio_out2,
            "synergy_class": self.synergy_class.value,
        }


def _abs_ratio(num: float, den: float) -> float:
    num, den = abs(num), abs(den)
    if den == 0.0:
        return float("inf") if num > 0.0 else float("nan")
    return num / den


def diagnose(model: SlfmModel, threshold: float = SYNERGY_THRESHOLD,
             coupling_tol: float = 0.05) -> SynergyDiagnostics:
    """Label the latent GPs LF/HF and classify the optical-radar synergy.

    LF is the latent GP with the longer lengthscale (ties go to the larger
    ``|b12|``). The model is ``Independent`` when no latent GP couples the
    outputs, i.e. every ``|b12|`` is below ``coupling_tol`` times the geometric
    mean of the two output variances. Otherwise it is ``SynergyDominant`` when
    ``|a_1^LF / a_1^HF| > threshold`` and ``Mixed`` when not.
    """
    q = sorted(range(2), key=lambda i: (-model.kernels[i].lengthscale,
                                        -abs(model.coregs[i].b12)))
    lf, hf = q
    a_lf, a_hf = model.coregs[lf].a, model.coregs[hf].a
    b_lf, b_hf = coreg_matrix(model.coregs[lf]), coreg_matrix(model.coregs[hf])
    ratio1 = _abs_ratio(a_lf[0], a_hf[0])
    ratio2 = _abs_ratio(a_lf[1], a_hf[1])

    total = b_lf + b_hf
    scale = np.sqrt(total[0, 0] * total[1, 1])
    coupling = max(abs(b_lf[0, 1]), abs(b_hf[0, 1]))
    if not coupling > coupling_tol * scale:
        cls = SynergyClass.INDEPENDENT
    elif ratio1 > threshold:
        cls = SynergyClass.SYNERGY_DOMINANT
    else:
        cls = SynergyClass.MIXED
    return SynergyDiagnostics(
        ell_lf=model.kernels[lf].lengthscale,
        ell_hf=model.kernels[hf].lengthscale,
        a_lf=a_lf,
        a_hf=a_hf,
        b_lf=b_lf,
        b_hf=b_hf,
        b12_lf=float(b_lf[0, 1]),
        b12_hf=float(b_hf[0, 1]),
        ratio_out1=ratio1,
        ratio_out2=ratio2,
        synergy_class=cls,
    )
