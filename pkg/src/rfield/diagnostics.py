"""z-scores comparing ensemble estimates with Gaussian predictions.

Standard errors are the analytic ones under the null hypothesis that the
observable is N(0, V), so every z-score here is a pure function of the
ensemble sums and the predicted variance.
"""

from __future__ import annotations

import math

import numpy as np

from .ensemble import EnsembleStats
from .wick import wick_moment


def charfun_zscores(stats: EnsembleStats, obs: int, variance: float) -> list[dict]:
    """Per lambda: analytic exp(-lambda^2 V / 2) vs the empirical estimate."""
    M = stats.count
    emp = stats.charfun[obs]
    rows = []
    for lam, e in zip(stats.lambdas, emp):
        phi = math.exp(-0.5 * lam * lam * variance)
        phi2 = math.exp(-2.0 * lam * lam * variance)
        se_re = math.sqrt(max(0.5 * (1 + phi2) - phi * phi, 0.0) / M)
        se_im = math.sqrt(max(0.5 * (1 - phi2), 0.0) / M)
        rows.append(
            {
                "lambda": lam,
                "analytic": phi,
                "empirical_re": float(e.real),
                "empirical_im": float(e.imag),
                "z_re": (e.real - phi) / se_re if se_re > 0 else 0.0,
                "z_im": e.imag / se_im if se_im > 0 else 0.0,
            }
        )
    return rows


def variance_zscore(stats: EnsembleStats, obs: int, variance: float) -> float:
    """(empirical - predicted) / (V sqrt(2/M))."""
    return float((stats.variance[obs] - variance) / (variance * math.sqrt(2.0 / stats.count)))


def mean_zscore(stats: EnsembleStats, obs: int, variance: float) -> float:
    return float(stats.mean[obs] / math.sqrt(variance / stats.count))


def kurtosis_zscore(stats: EnsembleStats, obs: int) -> float:
    return float(stats.excess_kurtosis[obs] / math.sqrt(24.0 / stats.count))


def covariance_zscore(stats: EnsembleStats, i: int, j: int, cov: np.ndarray) -> float:
    se = math.sqrt((cov[i, i] * cov[j, j] + cov[i, j] ** 2) / stats.count)
    return float((stats.covariance[i, j] - cov[i, j]) / se)


def moment_zscore(stats: EnsembleStats, idx, cov: np.ndarray) -> float:
    """Declared raw moment vs Wick, error from the doubled-index Wick moment."""
    idx = tuple(idx)
    predicted = wick_moment(cov, idx)
    second = wick_moment(cov, idx + idx)
    se = math.sqrt(max(second - predicted**2, 0.0) / stats.count)
    return float((stats.moment(idx) - predicted) / se)


def sign_zscore(stats: EnsembleStats, i: int, j: int, predicted: float) -> float:
    se = math.sqrt(max(1.0 - predicted**2, 1e-300) / stats.count)
    return float((stats.sign_correlation(i, j) - predicted) / se)
