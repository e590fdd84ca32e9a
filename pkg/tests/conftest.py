import numpy as np
import pytest

from mogpfill.kernel import matern32
from mogpfill.mogp import build_slfm_model
from mogpfill.series import TimeSeries

REF_LF = (76.44, (0.8420, 1.0831))
REF_HF = (13.43, (0.4243, -0.036))


def central_diff(f, x, h=1e-5):
    """Central finite-difference gradient of scalar ``f`` at ``x``."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b):
    """Norm-wise relative error, max-norm."""
    a, b = np.asarray(a), np.asarray(b)
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-12)


def random_series(rng, n, span=300.0, label=""):
    t = np.sort(rng.choice(np.arange(0, span, 0.5), size=n, replace=False))
    return TimeSeries(t, rng.normal(size=n), label)


def reference_model(series_1=None, series_2=None, noise=(0.05, 0.01)):
    if series_1 is None:
        series_1 = TimeSeries([0.0, 30.0, 60.0, 120.0], [0.1, 0.9, 1.3, -0.4])
    if series_2 is None:
        series_2 = TimeSeries(np.arange(0.0, 150.0, 12.0), np.sin(np.arange(0.0, 150.0, 12.0) / 25.0))
    return build_slfm_model(
        (matern32(REF_LF[0]), matern32(REF_HF[0])),
        (REF_LF[1], REF_HF[1]),
        noise,
        series_1,
        series_2,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
