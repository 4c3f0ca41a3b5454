"""Confidence and significance bands for impulse responses, and the tests built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .core import LPSpec, TimeSeriesDataset, WeakInstrumentError
from .estimators import IrfEstimate, iv_sample
from .variance import newey_west_lrv, wild_block_bootstrap_se

__all__ = [
    "BandSet",
    "JointTestResult",
    "LmResult",
    "bonferroni_level",
    "chi2_quantile",
    "joint_zero_test",
    "lm_statistic",
    "normal_quantile",
    "pointwise_bands",
    "scheffe_bands",
    "significance_bands_asymptotic",
    "significance_bands_bootstrap",
    "supt_bands",
]

BAND_KINDS = ("pointwise", "scheffe", "sup_t", "significance_asymptotic", "significance_bootstrap")
SIGNIFICANCE_KINDS = ("significance_asymptotic", "significance_bootstrap")


@dataclass(frozen=True)
class BandSet:
    """Per-horizon band ``[lower, upper]``.

    ``critical`` holds the multiplier: a scalar for simultaneous bands, one
    value per horizon otherwise. ``center`` is the estimate for confidence
    bands and zero for significance bands.
    """

    kind: str
    level: float
    lower: np.ndarray
    upper: np.ndarray
    critical: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        if self.kind not in BAND_KINDS:
            raise ValueError(f"unknown band kind {self.kind!r}")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound above upper bound")

    @property
    def half_width(self) -> np.ndarray:
        return (self.upper - self.lower) / 2


@dataclass(frozen=True)
class JointTestResult:
    statistic: int
    reject: bool
    per_horizon_flags: np.ndarray


@dataclass(frozen=True)
class LmResult:
    statistic: float
    p_value: float
    multiplier: float
    omega: float
    beta_iv: float
    gamma_zs: float
    n: int


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")


def normal_quantile(p: float) -> float:
    """Standard normal inverse CDF."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    return float(special.ndtri(p))


def chi2_quantile(df: int, p: float) -> float:
    """Chi-square inverse CDF."""
    if int(df) != df or df < 1:
        raise ValueError("df must be a positive integer")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    return float(stats.chi2.ppf(p, df))


def bonferroni_level(alpha: float, n_horizons: int) -> float:
    """Per-horizon one-sided tail ``alpha / (2 n)``."""
    _check_alpha(alpha)
    if n_horizons < 1:
        raise ValueError("need at least one horizon")
    return alpha / (2 * n_horizons)


def _confidence_band(kind, irf, alpha, multiplier, scale=None):
    scale = irf.se if scale is None else scale
    m = np.broadcast_to(np.asarray(multiplier, dtype=float), irf.beta.shape)
    half = m * scale
    return BandSet(
        kind=kind,
        level=1 - alpha,
        lower=irf.beta - half,
        upper=irf.beta + half,
        critical=np.asarray(multiplier, dtype=float),
        center=irf.beta.copy(),
    )


def pointwise_bands(irf: IrfEstimate, alpha: float = 0.05) -> BandSet:
    _check_alpha(alpha)
    return _confidence_band("pointwise", irf, alpha, normal_quantile(1 - alpha / 2))


def scheffe_bands(irf: IrfEstimate, alpha: float = 0.05) -> BandSet:
    """Scheffe band with multiplier ``sqrt(chi2_{d,1-alpha} / d)``, ``d = H + 1``.

    For ``d >= 2`` the multiplier is below the pointwise normal quantile.
    """
    _check_alpha(alpha)
    d = irf.beta.size
    return _confidence_band("scheffe", irf, alpha, math.sqrt(chi2_quantile(d, 1 - alpha) / d))


def psd_factor(cov: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """``L`` with ``L @ L.T == cov`` from a symmetric eigendecomposition.

    Eigenvalues in ``[-tol*scale, 0]`` are clamped to zero; more negative ones
    are an error (``scale`` is the largest absolute eigenvalue, or 1).
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be square")
    if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-14):
        raise ValueError("covariance is not symmetric")
    vals, vecs = np.linalg.eigh((cov + cov.T) / 2)
    scale = max(1.0, float(np.max(np.abs(vals)))) if vals.size else 1.0
    if np.any(vals < -tol * scale):
        raise ValueError(f"covariance is not positive semi-definite (min eigenvalue {vals.min():.3g})")
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def supt_quantile(cov: np.ndarray, alpha: float, M: int, rng) -> float:
    """Simulated ``1 - alpha`` quantile of ``max_h |V_h| / sqrt(cov_hh)``."""
    _check_alpha(alpha)
    if M < 100:
        raise ValueError("need at least 100 draws")
    L = psd_factor(cov)
    sd = np.sqrt(np.diag(cov))
    if np.any(sd <= 0):
        raise ValueError("covariance has a zero variance on the diagonal")
    rng = np.random.default_rng(rng)
    draws = rng.standard_normal((M, L.shape[1])) @ L.T
    stat = np.max(np.abs(draws) / sd, axis=1)
    rank = math.ceil((1 - alpha) * M)
    return float(np.partition(stat, rank - 1)[rank - 1])


def supt_bands(irf: IrfEstimate, alpha: float = 0.05, M: int = 10_000, rng=0) -> BandSet:
    """Plug-in sup-t band ``beta_h +/- q * sqrt(cov_hh)``.

    ``q`` is the ``ceil((1-alpha) M)``-th order statistic of the maximum
    absolute standardised draw from ``N(0, cov)``.
    """
    if irf.cov is None:
        raise ValueError("sup-t bands need a joint covariance (use lp_gmm)")
    q = supt_quantile(irf.cov, alpha, M, rng)
    return _confidence_band("sup_t", irf, alpha, q, scale=np.sqrt(np.diag(irf.cov)))


def _eta_series(data: TimeSeriesDataset, spec: LPSpec):
    """Null-imposed scores ``eta_{t,h} = y[t+h] z[t]`` and ``gamma_sz``."""
    triples, base = iv_sample(data, spec)
    s, z = base.treatment, base.instrument
    gamma = float(np.mean(s * z))
    if abs(gamma) <= 1e-8 * s.std() * z.std():
        raise WeakInstrumentError(f"mean(s*z) = {gamma:.3g} is numerically zero")
    return [y * zz for y, _, zz in triples], gamma


def _significance_band(kind, se_eta, gamma, alpha, n_horizons):
    _check_alpha(alpha)
    zeta = normal_quantile(1 - bonferroni_level(alpha, n_horizons))
    s_beta = np.asarray(se_eta) / abs(gamma)
    upper = zeta * s_beta
    return BandSet(
        kind=kind,
        level=1 - alpha,
        lower=-upper,
        upper=upper,
        critical=np.full(n_horizons, zeta),
        center=np.zeros(n_horizons),
    )


def significance_bands_asymptotic(
    data: TimeSeriesDataset, spec: LPSpec, alpha: float = 0.05
) -> BandSet:
    """Bonferroni significance band around zero from Newey-West standard errors.

    For each horizon the Newey-West standard error of the mean of
    ``y[t+h] z[t]`` (truncation ``spec.joint_lags``) is divided by
    ``mean(s z)`` and scaled by ``zeta_{1 - alpha/(2(H+1))}``.
    """
    etas, gamma = _eta_series(data, spec)
    J = spec.joint_lags
    se_eta = [math.sqrt(newey_west_lrv(eta, J).scalar / eta.size) for eta in etas]
    return _significance_band("significance_asymptotic", se_eta, gamma, alpha, spec.n_horizons)


def significance_bands_bootstrap(
    data: TimeSeriesDataset,
    spec: LPSpec,
    alpha: float = 0.05,
    block_size: int | None = None,
    B: int | None = None,
    rng=0,
) -> BandSet:
    """As :func:`significance_bands_asymptotic`, with wild-block-bootstrap
    standard errors for the mean of ``y[t+h] z[t]``. One random stream is
    consumed horizon by horizon."""
    etas, gamma = _eta_series(data, spec)
    b = spec.block_size if block_size is None else block_size
    n_boot = spec.n_boot if B is None else B
    rng = np.random.default_rng(rng)
    se_eta = [wild_block_bootstrap_se(eta, b, n_boot, rng) for eta in etas]
    return _significance_band("significance_bootstrap", se_eta, gamma, alpha, spec.n_horizons)


def lm_statistic(data: TimeSeriesDataset, spec: LPSpec, h: int) -> LmResult:
    """LM test of ``beta_h = 0``, ``T_h^2 = (T-h)^-1 lambda^2 / omega``.

    ``lambda = sum z[t] y[t+h]`` and ``omega`` is the Newey-West long-run
    variance of ``z[t] y[t+h]`` (residual evaluated under the null).
    """
    if not 0 <= h <= spec.horizon_max:
        raise ValueError(f"horizon {h} outside 0..{spec.horizon_max}")
    triples, _ = iv_sample(data, spec)
    y, s, z = triples[h]
    n = y.size
    eta = z * y
    lam = float(eta.sum())
    omega = newey_west_lrv(eta, spec.joint_lags).scalar
    if omega <= 0:
        raise ValueError("long-run variance of z*y is zero")
    stat = lam**2 / n / omega
    zs = float(z @ s)
    return LmResult(
        statistic=stat,
        p_value=float(stats.chi2.sf(stat, 1)),
        multiplier=lam,
        omega=omega,
        beta_iv=lam / zs,
        gamma_zs=zs / n,
        n=n,
    )


def joint_zero_test(irf: IrfEstimate, bands: BandSet) -> JointTestResult:
    """Count horizons whose estimate lies outside a significance band."""
    if bands.kind not in SIGNIFICANCE_KINDS:
        raise ValueError("joint zero test needs a significance band")
    if irf.beta.size != bands.upper.size:
        raise ValueError("estimate and band cover different horizons")
    outside = (irf.beta < bands.lower) | (irf.beta > bands.upper)
    count = int(outside.sum())
    return JointTestResult(statistic=count, reject=count > 0, per_horizon_flags=outside)
