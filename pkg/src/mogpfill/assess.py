"""
Leave-out assessment of gap-filling methods.

Selected output-1 samples are withheld from training, each method predicts
them, and the predictions are scored against the withheld values in original
units. R^2 is the squared Pearson correlation by default; the coefficient of
determination is available as ``r2_mode="determination"``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import interp1d

from .errors import ConstantReference, TooFewSamples
from .gp import TrainConfig, gp_predict, gp_train
from .io import fmt, fmt_vec
from .mogp import diagnose, mogp_predict, mogp_train
from .series import TimeSeries

METHODS = ("mogp", "gp", "linear", "nearest", "previous")
BASELINES = ("linear", "nearest", "previous")


def metric_r2(pred, ref, mode: str = "pearson") -> float:
    """Squared Pearson correlation (or coefficient of determination) of ``pred`` vs ``ref``."""
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if pred.shape != ref.shape:
        raise ValueError("pred and ref differ in shape")
    if ref.size < 2:
        raise TooFewSamples("R^2 needs at least 2 points")
    dr = ref - ref.mean()
    ss_ref = float(dr @ dr)
    if ss_ref == 0.0:
        raise ConstantReference("reference values are constant")
    if mode == "determination":
        resid = ref - pred
        return 1.0 - float(resid @ resid) / ss_ref
    if mode != "pearson":
        raise ValueError(f"unknown R^2 mode {mode!r}")
    dp = pred - pred.mean()
    ss_pred = float(dp @ dp)
    if ss_pred == 0.0:
        return 0.0
    r = float(dp @ dr) / np.sqrt(ss_pred * ss_ref)
    return min(r * r, 1.0)


def rmse(pred, ref) -> float:
    diff = np.asarray(pred, dtype=float) - np.asarray(ref, dtype=float)
    return float(np.sqrt(np.mean(diff * diff)))


def baseline_predict(series: TimeSeries, times, method: str) -> np.ndarray:
    """Linear, nearest-neighbour or previous-neighbour interpolation.

    Outside the sampled range the edge values are held constant.
    """
    times = np.asarray(times, dtype=float)
    if len(series) == 0:
        raise TooFewSamples("interpolation needs at least one sample")
    if method == "linear":
        return np.interp(times, series.times, series.values)
    if method not in ("nearest", "previous"):
        raise ValueError(f"unknown baseline {method!r}")
    if len(series) == 1:
        return np.full(times.shape, series.values[0])
    f = interp1d(series.times, series.values, kind=method, bounds_error=False,
                 fill_value=(series.values[0], series.values[-1]), assume_sorted=True)
    return f(times)


@dataclass
class AssessmentReport:
    method: str
    holdout_times: np.ndarray
    predicted: np.ndarray
    reference: np.ndarray
    r2: float
    rmse: float
    predicted_std: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def residuals(self) -> np.ndarray:
        return self.predicted - self.reference

    def to_text(self, epoch: float = 0.0) -> str:
        items = [
            ("method", self.method),
            ("n_holdout", str(self.holdout_times.size)),
            ("r2", fmt(self.r2)),
            ("rmse", fmt(self.rmse)),
            ("holdout_times", fmt_vec(self.holdout_times - epoch)),
            ("predicted", fmt_vec(self.predicted)),
            ("reference", fmt_vec(self.reference)),
            ("residuals", fmt_vec(self.residuals)),
        ]
        if self.predicted_std is not None:
            items.append(("predicted_std", fmt_vec(self.predicted_std)))
        for key, value in self.diagnostics.items():
            items.append((f"diag.{key}", _fmt_diag(value)))
        return "".join(f"{k} = {v}\n" for k, v in items)


def _fmt_diag(value) -> str:
    if isinstance(value, str):
        return value
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return fmt(arr)
    return fmt_vec(arr)


def assess(series_1: TimeSeries, series_2: TimeSeries | None, holdout_times, method: str,
           config: TrainConfig = TrainConfig(), r2_mode: str = "pearson") -> AssessmentReport:
    """Withhold ``holdout_times`` from output 1, fit ``method``, score the predictions.

    Holdout times must match output-1 sample times exactly. Output 2 is only
    used by ``mogp`` and is never thinned.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    holdout = np.unique(np.asarray(holdout_times, dtype=float))
    if holdout.size == 0:
        raise ValueError("holdout list is empty; nothing to assess")
    missing = holdout[~np.isin(holdout, series_1.times)]
    if missing.size:
        raise ValueError(f"holdout times not present in output 1: {missing.tolist()}")
    mask = np.isin(series_1.times, holdout)
    reference = series_1.values[mask]
    train = TimeSeries(series_1.times[~mask], series_1.values[~mask], series_1.label)

    std = None
    diag = {}
    if method == "mogp":
        if series_2 is None:
            raise ValueError("method 'mogp' needs a second series")
        model = mogp_train(train, series_2, config)
        band = mogp_predict(model, holdout)[0]
        predicted, std = band.mean, band.std
        diag = diagnose(model).as_dict()
        diag["log_likelihood"] = model.info.log_likelihood
    elif method == "gp":
        model = gp_train(train, config)
        band = gp_predict(model, holdout)
        predicted, std = band.mean, band.std
        diag = {"lengthscale": model.kernel.lengthscale, "noise_variance": model.noise_variance,
                "log_likelihood": model.info.log_likelihood}
    else:
        predicted = baseline_predict(train, holdout, method)

    if holdout.size < 2:
        r2 = float("nan")
    else:
        try:
            r2 = metric_r2(predicted, reference, r2_mode)
        except ConstantReference:
            warnings.warn("held-out reference values are constant; R^2 undefined", stacklevel=2)
            r2 = float("nan")
    return AssessmentReport(method, holdout, np.asarray(predicted, dtype=float), reference,
                            r2, rmse(predicted, reference), std, diag)
