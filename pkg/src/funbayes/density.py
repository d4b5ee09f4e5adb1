"""Univariate kernel density estimation and empirical CDFs for projected scores.

Bandwidths come from the two-stage direct plug-in selector with a
normal-reference start (Gaussian kernel throughout); Silverman's rule is
the fallback for tiny or numerically hostile samples.  Log densities are
floored so that a score falling far outside one group's support still
yields a finite Bayes log-ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DataError
from .fdata import _frozen_array

__all__ = [
    "MarginalEstimate",
    "plugin_bandwidth",
    "silverman_bandwidth",
    "kde_logdensity",
    "ecdf",
    "clamp_pseudo",
]

LOG_DENSITY_FLOOR = np.log(1e-300)
_SQRT_2PI = np.sqrt(2.0 * np.pi)


def silverman_bandwidth(sample: np.ndarray) -> float:
    """Silverman's rule of thumb, 0.9 min(sd, IQR/1.34) n^(-1/5)."""
    x = np.asarray(sample, dtype=float)
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = q75 - q25
    scale = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * scale * x.size ** (-0.2)


def _phi4(x):
    # 4th derivative of the standard normal density
    x2 = x * x
    return (x2 * x2 - 6.0 * x2 + 3.0) * np.exp(-0.5 * x2) / _SQRT_2PI


def _phi6(x):
    # 6th derivative of the standard normal density
    x2 = x * x
    return (x2 * x2 * x2 - 15.0 * x2 * x2 + 45.0 * x2 - 15.0) * np.exp(-0.5 * x2) / _SQRT_2PI


def _pairwise_functional_sum(x: np.ndarray, g: float, deriv) -> float:
    # (1/n^2) sum_{i,j} K^{(r)}((x_i - x_j)/g), blocked to bound memory
    n = x.size
    total = 0.0
    step = max(1, int(2**22 // max(n, 1)))
    for lo in range(0, n, step):
        diff = (x[lo : lo + step, None] - x[None, :]) / g
        total += float(deriv(diff).sum())
    return total / (n * n)


def _plugin_bandwidth_impl(sample: np.ndarray) -> tuple[float, bool]:
    """Two-stage direct plug-in; returns (bandwidth, used_silverman_fallback)."""
    x = np.asarray(sample, dtype=float)
    n = x.size
    sd = float(np.std(x, ddof=1)) if n >= 2 else 0.0
    if not np.isfinite(sd) or sd <= 0.0:
        raise DataError("plug-in bandwidth needs a sample with nonzero variance")
    if n < 5:
        return silverman_bandwidth(x), True
    q75, q25 = np.percentile(x, [75, 25])
    iqr = q75 - q25
    scale = min(sd, iqr / 1.34) if iqr > 0 else sd

    # normal-reference value of psi_8, then estimate psi_6 and psi_4 in turn
    psi8 = 105.0 / (32.0 * np.sqrt(np.pi) * scale**9)
    g1 = (30.0 / (_SQRT_2PI * psi8 * n)) ** (1.0 / 9.0)
    psi6 = _pairwise_functional_sum(x, g1, _phi6) / g1**7
    if not np.isfinite(psi6) or psi6 >= 0.0:
        return silverman_bandwidth(x), True
    g2 = (-6.0 / (_SQRT_2PI * psi6 * n)) ** (1.0 / 7.0)
    psi4 = _pairwise_functional_sum(x, g2, _phi4) / g2**5
    if not np.isfinite(psi4) or psi4 <= 0.0:
        return silverman_bandwidth(x), True
    h = (1.0 / (2.0 * np.sqrt(np.pi) * psi4 * n)) ** 0.2
    if not np.isfinite(h) or h <= 0.0:
        return silverman_bandwidth(x), True
    return float(h), False


def plugin_bandwidth(sample: np.ndarray) -> float:
    """Direct plug-in bandwidth for a Gaussian kernel.

    Falls back to Silverman's rule on samples shorter than 5 or when the
    stage equations fail; raises :class:`DataError` on zero variance.
    """
    return _plugin_bandwidth_impl(sample)[0]


@dataclass(frozen=True)
class MarginalEstimate:
    """Kernel density estimate of one score dimension within one group."""

    sample: np.ndarray  # sorted
    bandwidth: float
    sd: float
    silverman_fallback: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sample", _frozen_array(self.sample))
        if self.sample.ndim != 1 or self.sample.size < 2:
            raise DataError("marginal estimate needs at least 2 sample points")
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise DataError("bandwidth must be positive")
        if not (np.isfinite(self.sd) and self.sd > 0):
            raise DataError("sd must be positive")

    @classmethod
    def fit(cls, sample: np.ndarray) -> "MarginalEstimate":
        x = np.sort(np.asarray(sample, dtype=float))
        h, fallback = _plugin_bandwidth_impl(x)
        return cls(x, h, float(np.std(x, ddof=1)), fallback)

    @property
    def n(self) -> int:
        return self.sample.size


def kde_logdensity(est: MarginalEstimate, x) -> float | np.ndarray:
    """Log of the Gaussian-kernel density estimate at x (scalar or vector).

    Values are floored at log(1e-300) so downstream log-ratio sums stay
    finite when a point falls far outside the sample support.
    """
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    z = (xv[:, None] - est.sample[None, :]) / est.bandwidth
    out = logsumexp(-0.5 * z * z, axis=1) - np.log(est.n * est.bandwidth * _SQRT_2PI)
    out = np.maximum(out, LOG_DENSITY_FLOOR)
    return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


def ecdf(sample: np.ndarray, x) -> float | np.ndarray:
    """Empirical CDF with the n+1 convention: #{sample <= x} / (n + 1)."""
    s = np.asarray(sample, dtype=float)
    if s.size == 0:
        raise DataError("ecdf needs a nonempty sample")
    s = np.sort(s)
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.searchsorted(s, xv, side="right") / (s.size + 1.0)
    return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


def clamp_pseudo(u, n: int):
    """Clamp pseudo-observations to [1/(2(n+1)), 1 - 1/(2(n+1))] before quantile transforms."""
    eps = 0.5 / (n + 1.0)
    return np.clip(u, eps, 1.0 - eps)
