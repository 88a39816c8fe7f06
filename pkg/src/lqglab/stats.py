"""Monte Carlo result record and jackknife error helpers."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSamples


@dataclass(frozen=True)
class MonteCarloResult:
    """Reproducible summary of a seeded Monte Carlo experiment.

    estimate/std_error are the headline numbers; detail carries any
    estimator-specific extras (matrices, per-seed values) for reports.
    """

    estimate: float
    std_error: float
    n_samples: int
    seeds: tuple
    detail: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")


def jackknife_stderr(values, estimator):
    """Leave-one-out jackknife standard error of estimator(values).

    values: (n,) or (n, k) array, rows are independent samples.
    estimator: callable taking the row-array and returning a scalar.
    """
    values = np.asarray(values)
    n = values.shape[0]
    if n < 2:
        raise InsufficientSamples(f"jackknife needs >= 2 samples, got {n}")
    idx = np.arange(n)
    loo = np.array([estimator(values[idx != i]) for i in range(n)])
    return float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def covariance(x, y):
    """Sample covariance with the n-1 normalization."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    return float(np.cov(x, y, ddof=1)[0, 1])


def median_stderr(values):
    """Normal-approximation standard error of the sample median,
    1.2533 * sd / sqrt(n)."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        raise InsufficientSamples(f"median stderr needs >= 2 samples, got {n}")
    return float(1.2533 * values.std(ddof=1) / np.sqrt(n))
