"""Equicoordinate critical values for simultaneous normal confidence intervals.

For ``Z ~ N(0, R)`` with ``R`` an ``m x m`` correlation matrix, the two-sided
equicoordinate quantile at level ``p`` is the smallest ``c`` with
``P(max_i |Z_i| <= c) >= p``.  It is estimated by Monte Carlo from a
counter-based (Philox) generator, so a given seed always reproduces the
same value regardless of how the draws are blocked.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import InvalidCorrelationError

DEFAULT_SAMPLES = 2_000_000
_BLOCK = 250_000


@dataclass(frozen=True)
class CriticalValue:
    value: float
    mc_se: float
    clipped: bool = False
    raw: float = math.nan

    def __float__(self):
        return self.value


def validate_correlation(corr, tol: float = 1e-10) -> np.ndarray:
    corr = np.array(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1] or corr.shape[0] == 0:
        raise InvalidCorrelationError(f"correlation must be square, got shape {corr.shape}")
    if not np.all(np.isfinite(corr)):
        raise InvalidCorrelationError("correlation has non-finite entries")
    if not np.allclose(corr, corr.T, atol=1e-12, rtol=0):
        raise InvalidCorrelationError("correlation is not symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-12, rtol=0):
        raise InvalidCorrelationError("correlation diagonal must be 1")
    if np.any(np.abs(corr) > 1 + 1e-12):
        raise InvalidCorrelationError("correlation entries must lie in [-1, 1]")
    if np.linalg.eigvalsh(corr).min() < -tol:
        raise InvalidCorrelationError("correlation is not positive semidefinite")
    return 0.5 * (corr + corr.T)


def symmetric_sqrt(corr: np.ndarray) -> tuple[np.ndarray, bool]:
    """Symmetric square root with negative eigenvalues clipped at zero."""
    vals, vecs = np.linalg.eigh(corr)
    clipped = bool(np.any(vals < -1e-12))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T, clipped


@functools.lru_cache(maxsize=2)
def _base_draws(seed: int, n_samples: int, m: int) -> np.ndarray:
    # Cached: the same (seed, n, m) always yields the same standard normals.
    out = np.empty((n_samples, m))
    for start in range(0, n_samples, _BLOCK):
        stop = min(start + _BLOCK, n_samples)
        bit_gen = np.random.Philox(key=seed).advance(start * m)
        out[start:stop] = np.random.Generator(bit_gen).standard_normal((stop - start, m))
    out.setflags(write=False)
    return out


def univariate_quantile(level: float) -> float:
    return float(norm.ppf(0.5 + level / 2.0))


def bonferroni_quantile(m: int, level: float) -> float:
    """Deterministic upper bound ``Phi^{-1}(1 - (1 - level) / (2m))``."""
    return float(norm.ppf(1.0 - (1.0 - level) / (2.0 * m)))


def sidak_quantile(m: int, level: float) -> float:
    """Exact value for independent coordinates; an upper bound for any correlation."""
    return float(norm.ppf(0.5 + level ** (1.0 / m) / 2.0))


def equicoordinate_quantile(corr, level: float = 0.95, seed: int = 0,
                            n_samples: int = DEFAULT_SAMPLES) -> CriticalValue:
    """Monte Carlo two-sided equicoordinate normal quantile.

    The estimate is the empirical ``level``-quantile of ``max_i |Z_i|`` over
    ``n_samples`` draws of ``Z = R^{1/2} e``.  Because the univariate and
    Sidak quantiles bound the true value from below and above for every
    correlation matrix, the estimate is clamped to that range (the unclamped
    value is kept in ``raw``).  ``clipped`` flags a correlation matrix whose
    negative eigenvalues were set to zero.  The Monte Carlo standard error uses the binomial variance of the empirical CDF
    divided by a finite-difference density estimate at the quantile.
    """
    if not (0.0 < level < 1.0):
        raise ValueError(f"level must lie in (0, 1), got {level}")
    corr = validate_correlation(corr)
    m = corr.shape[0]
    root, clipped = symmetric_sqrt(corr)
    z = _base_draws(int(seed), int(n_samples), m) @ root
    stat = np.abs(z).max(axis=1)
    c = float(np.quantile(stat, level, method="inverted_cdf"))

    h = 0.01
    dens = np.count_nonzero(np.abs(stat - c) <= h) / (2 * h * n_samples)
    mc_se = math.sqrt(level * (1 - level) / n_samples) / dens if dens > 0 else math.inf

    lo, hi = univariate_quantile(level), sidak_quantile(m, level)
    return CriticalValue(min(max(c, lo), hi), mc_se, clipped, c)
