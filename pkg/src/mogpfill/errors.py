"""Exceptions raised by the fitting, prediction and descriptor utilities."""

import numpy as np


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Covariance could not be factorized even after the maximum jitter."""


class ConstantSeries(ValueError):
    """A series has zero variance and cannot be z-score normalized."""

    def __init__(self, output=None, message=None):
        self.output = output
        if message is None:
            where = f" (output {output})" if output is not None else ""
            message = f"series is constant{where}; cannot normalize"
        super().__init__(message)


class TooFewSamples(ValueError):
    pass


class TooFewPairs(ValueError):
    pass


class OptimizerDiverged(RuntimeError):
    """Every optimizer restart failed to produce a finite likelihood."""


class ZeroDenominator(ZeroDivisionError):
    pass


class ConstantReference(ValueError):
    pass


class ModelFormatError(ValueError):
    """Model or scenario file is malformed or has an unsupported version."""
