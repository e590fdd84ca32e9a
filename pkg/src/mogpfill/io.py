"""
Series CSV files and the versioned text model format.

Series files have a ``time,value`` header and one sample per line; times are
fractional days since a user-declared epoch. Missing observations are simply
absent rows.

Model files are line-oriented ``key = value`` text with vectors written as
bracketed comma lists. Floats use Python's shortest round-trip repr, so
save -> load -> save is byte-identical and a loaded model predicts exactly as
the in-memory one.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .covariance import CoregVector, NoiseVariances
from .errors import ModelFormatError
from .gp import GpModel, OptimizerInfo, build_gp_model
from .kernel import KernelKind, KernelParams
from .mogp import SlfmModel, build_slfm_model
from .series import TimeSeries

FORMAT_VERSION = 1


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x) -> str:
    return repr(float(x))


def fmt_vec(values) -> str:
    return "[" + ", ".join(fmt(v) for v in np.asarray(values, dtype=float).reshape(-1)) + "]"


# --- series CSV ---------------------------------------------------------------

def parse_series_csv(text: str, label: str = "", epoch: float = 0.0) -> TimeSeries:
    """Parse ``time,value`` CSV text; rows are sorted by time, duplicates rejected."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip().lower() for h in next(reader)]
    except StopIteration:
        raise ValueError("series file is empty") from None
    if header[:2] != ["time", "value"]:
        raise ValueError(f"expected header 'time,value', got {','.join(header)!r}")
    times, values = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            times.append(float(row[0]))
            values.append(float(row[1]))
        except (ValueError, IndexError):
            raise ValueError(f"line {lineno}: cannot parse {','.join(row)!r}") from None
    t = np.array(times) + epoch
    v = np.array(values)
    order = np.argsort(t, kind="stable")
    t, v = t[order], v[order]
    if t.size > 1 and np.any(np.diff(t) == 0):
        raise ValueError("duplicate sample times")
    return TimeSeries(t, v, label)


def read_series_csv(path, epoch: float = 0.0, label: str | None = None) -> TimeSeries:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        return parse_series_csv(text, label if label is not None else path.stem, epoch)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def series_to_csv(series: TimeSeries, epoch: float = 0.0) -> str:
    lines = ["time,value"]
    lines += [f"{fmt(t - epoch)},{fmt(v)}" for t, v in zip(series.times, series.values)]
    return "\n".join(lines) + "\n"


def write_series_csv(path, series: TimeSeries, epoch: float = 0.0) -> None:
    atomic_write_text(path, series_to_csv(series, epoch))


def read_times(path, epoch: float = 0.0) -> np.ndarray:
    """Query times from a CSV whose first column is headed ``time``."""
    path = Path(path)
    rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    if not rows or rows[0][0].strip().lower() != "time":
        raise ValueError(f"{path}: first column must be headed 'time'")
    try:
        return np.array([float(r[0]) for r in rows[1:] if r and r[0].strip()]) + epoch
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def parse_grid(spec: str) -> np.ndarray:
    """``start:stop:step`` -> inclusive regular grid."""
    try:
        start, stop, step = (float(p) for p in spec.split(":"))
    except ValueError:
        raise ValueError(f"malformed grid {spec!r}; expected start:stop:step") from None
    if not step > 0 or stop < start or not np.isfinite([start, stop, step]).all():
        raise ValueError(f"malformed grid {spec!r}; need step > 0 and stop >= start")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + np.arange(n) * step


def predictions_to_csv(times, bands, epoch: float = 0.0) -> str:
    header = ["time"]
    for d in range(1, len(bands) + 1):
        header += [f"mean_{d}", f"std_{d}"]
    lines = [",".join(header)]
    for i, t in enumerate(times):
        row = [fmt(t - epoch)]
        for b in bands:
            row += [fmt(b.mean[i]), fmt(b.std[i])]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


# --- model files ----------------------------------------------------------------

def model_to_text(model) -> str:
    info = model.info
    if isinstance(model, GpModel):
        items = [
            ("format_version", str(FORMAT_VERSION)),
            ("kind", "GP"),
            ("kernel", model.kernel.kind.value),
            ("lengthscale", fmt(model.kernel.lengthscale)),
            ("noise_variance", fmt(model.noise_variance)),
            ("norm_mean", fmt(model.norm_mean)),
            ("norm_std", fmt(model.norm_std)),
            ("train_times", fmt_vec(model.train_times)),
            ("train_values_normalized", fmt_vec(model.train_values_normalized)),
        ]
    elif isinstance(model, SlfmModel):
        v1, v2 = model.values_normalized_per_output()
        items = [
            ("format_version", str(FORMAT_VERSION)),
            ("kind", "SLFM"),
            ("kernel", model.kernels[0].kind.value),
            ("lengthscales", fmt_vec([k.lengthscale for k in model.kernels])),
            ("coreg_1", fmt_vec(model.coregs[0].a)),
            ("coreg_2", fmt_vec(model.coregs[1].a)),
            ("noise_variances", fmt_vec(model.noise.sigma2)),
            ("norm_mean", fmt_vec(model.norm_mean)),
            ("norm_std", fmt_vec(model.norm_std)),
            ("times_1", fmt_vec(model.inputs.times_per_output[0])),
            ("times_2", fmt_vec(model.inputs.times_per_output[1])),
            ("values_normalized_1", fmt_vec(v1)),
            ("values_normalized_2", fmt_vec(v2)),
        ]
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    items += [
        ("jitter", fmt(model.jitter)),
        ("iterations", str(int(info.iterations))),
        ("log_likelihood", fmt(info.log_likelihood)),
        ("restart_index", str(int(info.restart_index))),
    ]
    return "".join(f"{k} = {v}\n" for k, v in items)


def _parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ModelFormatError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def _vec(fields: dict, key: str) -> np.ndarray:
    raw = _get(fields, key)
    if not (raw.startswith("[") and raw.endswith("]")):
        raise ModelFormatError(f"{key}: expected a bracketed list")
    body = raw[1:-1].strip()
    if not body:
        return np.empty(0)
    try:
        return np.array([float(x) for x in body.split(",")])
    except ValueError:
        raise ModelFormatError(f"{key}: non-numeric entry") from None


def _get(fields: dict, key: str) -> str:
    try:
        return fields[key]
    except KeyError:
        raise ModelFormatError(f"missing key {key!r}") from None


def _num(fields: dict, key: str, cast=float):
    raw = _get(fields, key)
    try:
        return cast(raw)
    except ValueError:
        raise ModelFormatError(f"{key}: cannot parse {raw!r}") from None


def model_from_text(text: str):
    """Rebuild a :class:`GpModel` or :class:`SlfmModel` from model-file text."""
    fields = _parse_kv(text)
    version = _get(fields, "format_version")
    if version != str(FORMAT_VERSION):
        raise ModelFormatError(f"unsupported model format version {version!r}")
    kind = _get(fields, "kind")
    try:
        kk = KernelKind.parse(_get(fields, "kernel"))
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None
    info = OptimizerInfo(_num(fields, "iterations", int), _num(fields, "log_likelihood"),
                         _num(fields, "restart_index", int))
    if kind == "GP":
        return build_gp_model(
            KernelParams(kk, _num(fields, "lengthscale")),
            _num(fields, "noise_variance"),
            _vec(fields, "train_times"),
            _vec(fields, "train_values_normalized"),
            info=info,
            normalization=(_num(fields, "norm_mean"), _num(fields, "norm_std")),
        )
    if kind == "SLFM":
        ells = _vec(fields, "lengthscales")
        mean, std = _vec(fields, "norm_mean"), _vec(fields, "norm_std")
        if ells.size != 2 or mean.size != 2 or std.size != 2:
            raise ModelFormatError("SLFM vectors must have two entries")
        s1 = TimeSeries(_vec(fields, "times_1"), _vec(fields, "values_normalized_1"))
        s2 = TimeSeries(_vec(fields, "times_2"), _vec(fields, "values_normalized_2"))
        return build_slfm_model(
            (KernelParams(kk, ells[0]), KernelParams(kk, ells[1])),
            (CoregVector(_vec(fields, "coreg_1")), CoregVector(_vec(fields, "coreg_2"))),
            NoiseVariances(_vec(fields, "noise_variances")),
            s1, s2, info=info,
            normalization=((mean[0], std[0]), (mean[1], std[1])),
        )
    raise ModelFormatError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    atomic_write_text(path, model_to_text(model))


def load_model(path):
    return model_from_text(Path(path).read_text(encoding="utf-8"))
