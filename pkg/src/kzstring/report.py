"""Residual reports and convergence-order fits."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ResidualReport:
    """Named residual norms plus free-form grid metadata.

    A residual passes when it does not exceed its tolerance; residuals
    without a tolerance are informational.
    """

    residuals: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.residuals[name]

    def failures(self):
        return [k for k, tol in self.tolerances.items()
                if k in self.residuals and not self.residuals[k] <= tol]

    @property
    def passed(self):
        return not self.failures()

    def merged(self, other, prefix=""):
        out = ResidualReport(dict(self.residuals), dict(self.metadata), dict(self.tolerances))
        out.residuals.update({prefix + k: v for k, v in other.residuals.items()})
        out.metadata.update({prefix + k: v for k, v in other.metadata.items()})
        out.tolerances.update({prefix + k: v for k, v in other.tolerances.items()})
        return out


def fit_order(steps, errors):
    """Least-squares slope of ``log(error)`` against ``log(step)``.

    Returns NaN for fewer than two points or non-positive errors.
    """
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if steps.size < 2 or np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        return float("nan")
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)
