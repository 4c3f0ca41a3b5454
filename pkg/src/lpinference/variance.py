"""Long-run, heteroskedasticity-robust and wild-block-bootstrap variances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import EstimationError, RegressionDesign

__all__ = [
    "LrvEstimate",
    "bartlett_weights",
    "hc_variance",
    "newey_west_lrv",
    "wild_block_bootstrap_se",
]


@dataclass(frozen=True)
class LrvEstimate:
    value: np.ndarray
    truncation: int
    kernel: str = "bartlett"

    @property
    def scalar(self) -> float:
        if self.value.shape != (1, 1):
            raise ValueError("long-run variance is not a scalar")
        return float(self.value[0, 0])


def bartlett_weights(J: int) -> np.ndarray:
    """Kernel weights ``1 - j/(J+1)`` for ``j = 1..J``."""
    j = np.arange(1, J + 1)
    return 1.0 - j / (J + 1.0)


def newey_west_lrv(scores, J: int) -> LrvEstimate:
    """Bartlett-kernel long-run covariance of a ``T x k`` score matrix.

    Scores are demeaned first and every autocovariance uses divisor ``T``,
    which keeps the estimate positive semi-definite.
    """
    u = np.asarray(scores, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    T, k = u.shape
    if k == 0:
        raise ValueError("scores have no columns")
    if J < 0:
        raise ValueError("truncation must be non-negative")
    if T < J + 2:
        raise ValueError(f"need T >= J + 2 (T={T}, J={J})")
    u = u - u.mean(axis=0)
    value = u.T @ u / T
    for j, w in enumerate(bartlett_weights(J), start=1):
        gamma = u[j:].T @ u[:-j] / T
        value += w * (gamma + gamma.T)
    return LrvEstimate(value=value, truncation=J)


def hc_variance(design: RegressionDesign, residuals, variant: str = "hc3") -> np.ndarray:
    """Heteroskedasticity-robust sandwich covariance of the OLS coefficients.

    ``hc0`` weights squared residuals by one, ``hc1`` by ``n/(n-k)`` and
    ``hc3`` by ``1/(1-h_tt)^2`` with ``h_tt`` the leverage.
    """
    X = design.regressors
    u = np.asarray(residuals, dtype=float)
    n, k = X.shape
    if u.shape != (n,):
        raise ValueError(f"residuals must have length {n}")
    XtX = X.T @ X
    try:
        bread = np.linalg.inv(XtX)
    except np.linalg.LinAlgError as exc:
        raise EstimationError("singular X'X") from exc
    if variant == "hc0":
        w = np.ones(n)
    elif variant == "hc1":
        if n <= k:
            raise EstimationError("hc1 needs n > k")
        w = np.full(n, n / (n - k))
    elif variant == "hc3":
        lev = np.einsum("ij,jk,ik->i", X, bread, X)
        if np.any(lev >= 1 - 1e-12):
            raise EstimationError("leverage of one makes hc3 undefined")
        w = 1.0 / (1.0 - lev) ** 2
    else:
        raise ValueError(f"unknown HC variant {variant!r}")
    meat = (X * (w * u**2)[:, None]).T @ X
    cov = bread @ meat @ bread
    return (cov + cov.T) / 2


def rademacher(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(0, 2, size=shape) * 2.0 - 1.0


def wild_block_bootstrap_se(
    values,
    block_size: int,
    n_boot: int,
    rng: np.random.Generator | int,
    *,
    weights: Callable[[np.random.Generator, tuple[int, int]], np.ndarray] = rademacher,
) -> float:
    """Wild-block-bootstrap standard error of the sample mean.

    Demeaned values are cut into consecutive blocks of ``block_size`` (the
    last block may be shorter); each block gets one weight per replicate. A
    replicate is the mean of the weighted demeaned values plus the sample
    mean, and the standard error is the standard deviation of the replicates.

    Parameters
    ----------
    rng : Generator or int
        Random stream, or a seed for a fresh one.
    weights : callable, optional
        ``weights(rng, (n_boot, n_blocks))`` draws the block multipliers.
    """
    x = np.asarray(values, dtype=float)
    T = x.shape[0]
    if x.ndim != 1:
        raise ValueError("values must be a vector")
    if not 1 <= block_size <= T // 2:
        raise ValueError(f"block_size must lie in [1, {T // 2}]")
    if n_boot < 2:
        raise ValueError("need at least two bootstrap replications")
    rng = np.random.default_rng(rng)
    mean = x.mean()
    e = x - mean
    n_blocks = -(-T // block_size)
    block_sums = np.add.reduceat(e, np.arange(0, T, block_size))
    W = weights(rng, (n_boot, n_blocks))
    reps = mean + W @ block_sums / T
    return float(np.std(reps, ddof=1))
