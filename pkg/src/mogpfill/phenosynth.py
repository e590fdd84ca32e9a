"""
Synthetic optical/radar phenology scenarios and vegetation descriptor utilities.

Two generators are available:

``slfm``
    Draws the two latent GPs on the union of all required times and mixes
    them with the given weight vectors, so the sample is an exact draw from
    the two-output model.
``double_logistic``
    One green-up/senescence season per year for output 1; output 2 is an
    affine image of the same seasonal curve plus independent short-scale
    detail drawn from a Matern GP.

Output 1 is sampled every ``interval_1`` days with the gap windows removed,
output 2 every ``interval_2`` days with no gaps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy.special import expit

from .covariance import stable_factorize
from .errors import ConstantSeries, ModelFormatError, TooFewPairs, ZeroDenominator
from .kernel import KernelKind, KernelParams, kernel_matrix
from .series import TimeSeries

PAIRING_TOLERANCE_DAYS = 1.5

# Parameters of a trained LAI/RVI model: (lengthscale, a_1, a_2).
REFERENCE_LF = (76.44, 0.8420, 1.0831)
REFERENCE_HF = (13.43, 0.4243, -0.036)


def rvi(vh, vv):
    """Dual-pol radar vegetation index ``4 VH / (VH + VV)`` on linear backscatter."""
    vh = np.asarray(vh, dtype=float)
    vv = np.asarray(vv, dtype=float)
    if np.any(vh < 0) or np.any(vv < 0):
        raise ValueError("backscatter must be nonnegative linear power")
    den = vh + vv
    if np.any(den == 0):
        raise ZeroDenominator("VH + VV is zero")
    out = 4.0 * vh / den
    return float(out) if out.ndim == 0 else out


def merge_daily(asc: TimeSeries, desc: TimeSeries) -> TimeSeries:
    """Union of two acquisition series, averaging samples on the same calendar day.

    The calendar day of a sample is ``floor(time)``. Merged samples take the
    mean of both their times and their values.
    """
    t = np.concatenate([asc.times, desc.times])
    v = np.concatenate([asc.values, desc.values])
    label = asc.label or desc.label
    if t.size == 0:
        return TimeSeries.empty(label)
    _, inverse = np.unique(np.floor(t), return_inverse=True)
    counts = np.bincount(inverse)
    t_mean = np.bincount(inverse, weights=t) / counts
    v_mean = np.bincount(inverse, weights=v) / counts
    return TimeSeries(t_mean, v_mean, label)


def _mutual_nearest_pairs(ta, tb, tol):
    """Index pairs (i, j) where a[i] and b[j] are each other's nearest sample within ``tol``."""
    if ta.size == 0 or tb.size == 0:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)

    def nearest(src, dst):
        if dst.size == 1:
            return np.zeros(src.size, dtype=int)
        pos = np.clip(np.searchsorted(dst, src), 1, dst.size - 1)
        left = pos - 1
        return np.where(np.abs(src - dst[left]) <= np.abs(dst[pos] - src), left, pos)

    a_to_b = nearest(ta, tb)
    b_to_a = nearest(tb, ta)
    i = np.arange(ta.size)
    ok = (b_to_a[a_to_b] == i) & (np.abs(ta - tb[a_to_b]) <= tol)
    return i[ok], a_to_b[ok]


def pearson_temporal(a: TimeSeries, b: TimeSeries,
                     pairing_tolerance_days: float = PAIRING_TOLERANCE_DAYS) -> float:
    """Pearson correlation over samples paired by mutual-nearest acquisition time.

    Raises
    ------
    TooFewPairs
        Fewer than 3 pairs within the tolerance.
    ConstantSeries
        Either set of paired values has zero variance.
    """
    i, j = _mutual_nearest_pairs(a.times, b.times, pairing_tolerance_days)
    if i.size < 3:
        raise TooFewPairs(f"only {i.size} samples paired within {pairing_tolerance_days} days")
    x = a.values[i] - a.values[i].mean()
    y = b.values[j] - b.values[j].mean()
    sx = np.sqrt(x @ x)
    sy = np.sqrt(y @ y)
    if sx == 0 or sy == 0:
        raise ConstantSeries(message="paired values have zero variance")
    return float(np.clip((x @ y) / (sx * sy), -1.0, 1.0))


def select_descriptor(optical: TimeSeries, candidates,
                      pairing_tolerance_days: float = PAIRING_TOLERANCE_DAYS) -> list:
    """Rank ``(label, series)`` candidates by temporal correlation with ``optical``.

    Candidates whose correlation cannot be computed are dropped with a warning.
    Ties are broken by label.
    """
    ranked = []
    for label, series in candidates:
        try:
            rho = pearson_temporal(optical, series, pairing_tolerance_days)
        except (TooFewPairs, ConstantSeries) as exc:
            warnings.warn(f"candidate {label!r} excluded: {exc}", stacklevel=2)
            continue
        ranked.append((label, rho))
    ranked.sort(key=lambda p: (-p[1], p[0]))
    return ranked


@dataclass(frozen=True)
class ScenarioConfig:
    """Design of a synthetic optical/radar experiment.

    ``gaps`` holds ``(start, length)`` windows removed from output 1; a sample
    at time ``t`` is dropped when ``start <= t < start + length``.
    """

    generator: str = "slfm"
    span_days: float = 1095.0
    interval_1: float = 15.0
    interval_2: float = 6.0
    gaps: tuple = ()
    noise_std_1: float = 0.05
    noise_std_2: float = 0.05
    seed: int | None = None
    kernel: str = "matern32"
    # slfm generator
    lengthscale_lf: float = REFERENCE_LF[0]
    lengthscale_hf: float = REFERENCE_HF[0]
    a_lf: tuple = REFERENCE_LF[1:]
    a_hf: tuple = REFERENCE_HF[1:]
    mean_1: float = 0.0
    mean_2: float = 0.0
    # double_logistic generator
    base: float = 0.2
    amp: float = 4.5
    k_up: float = 0.08
    k_down: float = 0.08
    season_length: float = 180.0
    season_start: float = 60.0
    season_period: float = 365.0
    radar_offset: float = 0.3
    radar_scale: float = 0.15
    radar_hf_std: float = 0.1
    radar_hf_lengthscale: float = 10.0

    def __post_init__(self):
        gaps = tuple((float(s), float(n)) for s, n in self.gaps)
        object.__setattr__(self, "gaps", gaps)
        object.__setattr__(self, "a_lf", tuple(float(x) for x in self.a_lf))
        object.__setattr__(self, "a_hf", tuple(float(x) for x in self.a_hf))

    def validate(self) -> None:
        if self.generator not in ("slfm", "double_logistic"):
            raise ValueError(f"unknown generator {self.generator!r}")
        if not self.span_days > 0:
            raise ValueError("span_days must be positive")
        if not (self.interval_1 > 0 and self.interval_2 > 0):
            raise ValueError("sampling intervals must be positive")
        for s, n in self.gaps:
            if n <= 0 or s < 0 or s + n > self.span_days:
                raise ValueError(f"gap ({s}, {n}) must lie within [0, {self.span_days}] and have positive length")
        if self.noise_std_1 < 0 or self.noise_std_2 < 0:
            raise ValueError("noise std must be nonnegative")
        if len(self.a_lf) != 2 or len(self.a_hf) != 2:
            raise ValueError("a_lf and a_hf need two components")
        if not (self.lengthscale_lf > 0 and self.lengthscale_hf > 0 and self.radar_hf_lengthscale > 0):
            raise ValueError("lengthscales must be positive")
        KernelKind.parse(self.kernel)

    def with_overrides(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


def sample_times(span: float, interval: float) -> np.ndarray:
    """``0, interval, 2 interval, ...`` strictly below ``span``."""
    n = int(np.ceil(span / interval - 1e-9))
    return np.arange(n) * interval


def in_gaps(times, gaps) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    mask = np.zeros(times.shape, dtype=bool)
    for s, n in gaps:
        mask |= (times >= s) & (times < s + n)
    return mask


def _draw_gp(kp: KernelParams, times, rng) -> np.ndarray:
    F = stable_factorize(kernel_matrix(kp, times, times))
    return F.lower @ rng.standard_normal(times.size)


def double_logistic(t, cfg: ScenarioConfig) -> np.ndarray:
    """Sum of one green-up/senescence double-logistic season per period."""
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, cfg.base)
    n_seasons = int(np.ceil(cfg.span_days / cfg.season_period)) + 1
    for k in range(n_seasons):
        sos = cfg.season_start + k * cfg.season_period
        eos = sos + cfg.season_length
        out += cfg.amp * (expit(cfg.k_up * (t - sos)) - expit(cfg.k_down * (t - eos)))
    return out


def generate_scenario(config: ScenarioConfig):
    """Draw ``(truth_1, observed_1, observed_2)`` for a scenario.

    ``truth_1`` is the noiseless output-1 curve on a daily grid. The result is
    a deterministic function of the config (including ``seed``).
    """
    config.validate()
    if config.seed is None:
        raise ValueError("scenario seed is required for reproducibility")
    rng = np.random.default_rng(config.seed)
    kind = KernelKind.parse(config.kernel)

    t_truth = sample_times(config.span_days, 1.0)
    t1 = sample_times(config.span_days, config.interval_1)
    t2 = sample_times(config.span_days, config.interval_2)
    grid = np.unique(np.concatenate([t_truth, t1, t2]))
    at = {name: np.searchsorted(grid, t) for name, t in (("truth", t_truth), ("1", t1), ("2", t2))}

    if config.generator == "slfm":
        u_lf = _draw_gp(KernelParams(kind, config.lengthscale_lf), grid, rng)
        u_hf = _draw_gp(KernelParams(kind, config.lengthscale_hf), grid, rng)
        f1 = config.mean_1 + config.a_lf[0] * u_lf + config.a_hf[0] * u_hf
        f2 = config.mean_2 + config.a_lf[1] * u_lf + config.a_hf[1] * u_hf
    else:
        season = double_logistic(grid, config)
        detail = _draw_gp(KernelParams(kind, config.radar_hf_lengthscale), grid, rng)
        f1 = season
        f2 = config.radar_offset + config.radar_scale * season + config.radar_hf_std * detail

    keep_1 = ~in_gaps(t1, config.gaps)
    y1 = f1[at["1"]] + config.noise_std_1 * rng.standard_normal(t1.size)
    y2 = f2[at["2"]] + config.noise_std_2 * rng.standard_normal(t2.size)

    truth_1 = TimeSeries(t_truth, f1[at["truth"]], "truth_1")
    observed_1 = TimeSeries(t1[keep_1], y1[keep_1], "observed_1")
    observed_2 = TimeSeries(t2, y2, "observed_2")
    return truth_1, observed_1, observed_2


_TUPLE_FIELDS = {"a_lf", "a_hf"}


def parse_scenario_text(text: str) -> ScenarioConfig:
    """Parse a flat ``key = value`` scenario file.

    Blank lines and ``#`` comments are ignored. ``gaps`` is a comma-separated
    list of ``start:length`` windows; ``a_lf``/``a_hf`` are two comma-separated
    numbers.
    """
    known = {f.name: f for f in fields(ScenarioConfig)}
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelFormatError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ModelFormatError(f"line {lineno}: unknown scenario key {key!r}")
        try:
            kw[key] = _parse_scenario_value(key, value)
        except ValueError as exc:
            raise ModelFormatError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return ScenarioConfig(**kw)


def _parse_scenario_value(key: str, value: str):
    value = value.strip("[]() ")
    if key in ("generator", "kernel"):
        return value
    if key == "seed":
        return int(value)
    if key == "gaps":
        return parse_gaps(value)
    if key in _TUPLE_FIELDS:
        parts = [float(p) for p in value.split(",") if p.strip()]
        if len(parts) != 2:
            raise ValueError("expected two numbers")
        return tuple(parts)
    return float(value)


def parse_gaps(value: str) -> tuple:
    gaps = []
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        start, length = item.split(":")
        gaps.append((float(start), float(length)))
    return tuple(gaps)
