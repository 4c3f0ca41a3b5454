"""Local projection estimators: OLS, FGLS, lag-augmented, IV and system GMM."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .core import (
    COND_LIMIT,
    EstimationError,
    LPSpec,
    RegressionDesign,
    TimeSeriesDataset,
    WeakInstrumentError,
    build_design,
    fwl_partial,
    ols_fit,
)
from .variance import hc_variance, newey_west_lrv, wild_block_bootstrap_se

__all__ = [
    "IrfEstimate",
    "estimate",
    "lp_fgls",
    "lp_gmm",
    "lp_iv",
    "lp_lag_augmented",
    "lp_ols",
    "split_panel_jackknife",
]


@dataclass(frozen=True)
class IrfEstimate:
    """Impulse response path ``beta[h]``, ``h = 0..H``.

    ``se`` is already on the scale of the estimator (``sigma_h/sqrt(T-h)``),
    so ``beta +/- c*se`` is a band. ``cov`` is the joint covariance when the
    estimator provides one.
    """

    beta: np.ndarray
    se: np.ndarray
    n_obs: np.ndarray
    cov: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        se = np.asarray(self.se, dtype=float)
        n_obs = np.asarray(self.n_obs, dtype=int)
        if beta.ndim != 1 or se.shape != beta.shape or n_obs.shape != beta.shape:
            raise ValueError("beta, se and n_obs must be vectors of equal length")
        if np.any(se < 0):
            raise ValueError("standard errors must be non-negative")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "se", se)
        object.__setattr__(self, "n_obs", n_obs)
        if self.cov is not None:
            cov = np.asarray(self.cov, dtype=float)
            if cov.shape != (beta.size, beta.size):
                raise ValueError("cov must be (H+1) x (H+1)")
            object.__setattr__(self, "cov", cov)

    @property
    def H(self) -> int:
        return self.beta.size - 1

    @property
    def horizons(self) -> np.ndarray:
        return np.arange(self.beta.size)


def _require_seed(spec: LPSpec, seed):
    if spec.variance == "wild_block" and seed is None:
        raise ValueError("wild_block variance needs a seed")
    return np.random.default_rng(seed) if seed is not None else None


def _treatment_se(design: RegressionDesign, resid: np.ndarray, spec: LPSpec, rng) -> float:
    X = design.regressors
    n = design.n
    if spec.variance == "hc":
        return float(np.sqrt(hc_variance(design, resid, spec.hc_variant)[0, 0]))
    Qinv = np.linalg.inv(X.T @ X / n)
    if spec.variance == "newey_west":
        lam = newey_west_lrv(X * resid[:, None], spec.lags_for(design.horizon)).value
        return float(np.sqrt(max((Qinv @ lam @ Qinv)[0, 0] / n, 0.0)))
    # wild block: bootstrap the mean of the treatment coefficient's influence series
    influence = (X * resid[:, None]) @ Qinv[0]
    return wild_block_bootstrap_se(influence, spec.block_size, spec.n_boot, rng)


def lp_ols(data: TimeSeriesDataset, spec: LPSpec, *, seed: int | None = None) -> IrfEstimate:
    """Horizon-by-horizon OLS local projections.

    Standard errors follow ``spec.variance``; the default is a Newey-West
    sandwich with truncation ``h + 1`` at horizon ``h``.
    """
    rng = _require_seed(spec, seed)
    beta, se, n_obs = [], [], []
    for h in range(spec.n_horizons):
        design = build_design(data, spec, h)
        coef, resid = ols_fit(design.regressors, design.response)
        beta.append(coef[0])
        se.append(_treatment_se(design, resid, spec, rng))
        n_obs.append(design.n)
    return IrfEstimate(beta, se, n_obs, meta=_meta(spec, "ols", seed))


def _meta(spec: LPSpec, estimator: str, seed=None, **extra) -> dict[str, Any]:
    variance = spec.variance
    if variance == "newey_west":
        variance = f"newey_west(J={spec.nw_lags if spec.nw_lags is not None else 'h+1'})"
    elif variance == "hc":
        variance = spec.hc_variant
    elif variance == "wild_block":
        variance = f"wild_block(b={spec.block_size}, B={spec.n_boot})"
    return {"estimator": estimator, "variance": variance, "seed": seed, **extra}


def lp_fgls(
    data: TimeSeriesDataset,
    spec: LPSpec,
    variant: str | None = None,
) -> IrfEstimate:
    """LP-FGLS that strips the moving-average part of the LP residual.

    The horizon-1 regression gives ``beta_1`` and one-step residuals
    ``u[d]`` dated ``d = t + 1``. At horizon ``h >= 2``:

    * ``lusompa``: regress ``y[t+h] - sum_{j<h} beta_j * u[t+h-j]`` on the
      horizon-``h`` design, with ``beta_j`` the FGLS estimates of earlier
      horizons;
    * ``breitung_bruegemann``: regress ``y[t+h] - u[t+h]`` on the design
      augmented with ``u[t+1], ..., u[t+h-1]``.

    Horizons 0 and 1 are plain OLS. Standard errors are heteroskedasticity
    robust (``spec.hc_variant``).
    """
    if variant is None:
        variant = "breitung_bruegemann" if spec.estimator == "fgls_bb" else "lusompa"
    if variant not in ("lusompa", "breitung_bruegemann"):
        raise ValueError(f"unknown FGLS variant {variant!r}")
    if data.aligned:
        raise ValueError("FGLS needs the original time series, not partialled leads")

    T = data.T
    beta = np.zeros(spec.n_horizons)
    se = np.zeros(spec.n_horizons)
    n_obs = np.zeros(spec.n_horizons, dtype=int)
    u = np.full(T, np.nan)  # u[d]: horizon-1 residual dated d
    for h in range(spec.n_horizons):
        design = build_design(data, spec, h)
        rows = np.arange(design.first, design.last + 1)
        X, y = design.regressors, design.response
        if h >= 2:
            if variant == "lusompa":
                y = y - sum(beta[j] * u[rows + h - j] for j in range(1, h))
            else:
                y = y - u[rows + h]
                X = np.column_stack([X, *(u[rows + j] for j in range(1, h))])
            if np.isnan(y).any() or np.isnan(X).any():
                raise EstimationError(f"horizon {h}: residuals from horizon 1 unavailable")
            design = replace(design, response=y, regressors=X)
        coef, resid = ols_fit(X, y)
        if h == 1:
            u[rows + 1] = resid
        beta[h] = coef[0]
        se[h] = np.sqrt(hc_variance(design, resid, spec.hc_variant)[0, 0])
        n_obs[h] = design.n
    return IrfEstimate(beta, se, n_obs, meta=_meta(replace(spec, variance="hc"), f"fgls_{variant}"))


def lp_lag_augmented(data: TimeSeriesDataset, spec: LPSpec) -> IrfEstimate:
    """Lag-augmented LP: one extra lag of every lag-block series.

    With ``p = 0`` this regresses ``y[t+h]`` on ``s[t]``, ``s[t-1]`` (and
    ``y[t-1]`` when the outcome differs from the treatment). Standard errors
    are heteroskedasticity robust only.
    """
    if data.aligned:
        raise ValueError("lag augmentation needs the original time series")
    beta, se, n_obs = [], [], []
    for h in range(spec.n_horizons):
        design = build_design(data, spec, h, extra_lag=True)
        coef, resid = ols_fit(design.regressors, design.response)
        beta.append(coef[0])
        se.append(np.sqrt(hc_variance(design, resid, spec.hc_variant)[0, 0]))
        n_obs.append(design.n)
    return IrfEstimate(beta, se, n_obs, meta=_meta(replace(spec, variance="hc"), "lag_augmented"))


def _needs_partialling(data: TimeSeriesDataset, spec: LPSpec) -> bool:
    return bool(spec.include_intercept or data.controls or spec.control_lags)


def _stacked_sample(data: TimeSeriesDataset, spec: LPSpec):
    """Outcome leads ``(N, H+1)``, treatment ``(N,)`` and instruments ``(N, l)``
    on the common sample, after partialling out intercept and controls."""
    if data.aligned:
        part = data
    elif _needs_partialling(data, spec):
        part = fwl_partial(data, spec)
    else:
        spec.check(data.T)
        N = data.T - spec.horizon_max - 1
        leads = np.column_stack([data.outcome[h : h + N] for h in range(spec.n_horizons)])
        return leads, data.treatment[:N], data.instruments[:N]
    return part.leads[:, : spec.n_horizons], part.treatment, part.instruments


def _weak_instrument_guard(s: np.ndarray, Z: np.ndarray) -> np.ndarray:
    gamma = Z.T @ s / s.size
    scale = 1e-8 * s.std() * Z.std(axis=0)
    if np.all(np.abs(gamma) <= scale):
        raise WeakInstrumentError(f"instrument-treatment covariance {gamma} is numerically zero")
    return gamma


def lp_gmm(
    data: TimeSeriesDataset,
    spec: LPSpec,
    two_step: bool = True,
) -> IrfEstimate:
    """System GMM over all horizons with moments ``E[Z_t'(y_t(H) - S_t beta)] = 0``.

    ``S_t = I (x) s_t`` and ``Z_t = I (x) z_t``; intercept and controls are
    partialled out first. Step one weights moments equally; with
    ``two_step`` the weight is the inverse Bartlett long-run covariance of the
    step-one scores and ``cov = [G' L^-1 G]^-1 / N``. Without it the
    equally-weighted estimate is returned with its sandwich covariance.
    """
    Y, s, Z = _stacked_sample(data, spec)
    N, n_eq = Y.shape
    ell = Z.shape[1]
    gamma = _weak_instrument_guard(s, Z)

    G = np.zeros((ell * n_eq, n_eq))
    for h in range(n_eq):
        G[h * ell : (h + 1) * ell, h] = gamma
    b = (Z.T @ Y / N).T.reshape(-1)  # horizon-major stacking

    beta = np.linalg.solve(G.T @ G, G.T @ b)
    resid = Y - np.outer(s, beta)
    scores = (resid[:, :, None] * Z[:, None, :]).reshape(N, -1)
    lam = newey_west_lrv(scores, spec.joint_lags).value
    if np.linalg.cond(lam) > COND_LIMIT:
        raise EstimationError("long-run covariance of the moments is singular")
    lam_inv = np.linalg.inv(lam)

    if two_step:
        A = G.T @ lam_inv @ G
        beta = np.linalg.solve(A, G.T @ lam_inv @ b)
        cov = np.linalg.inv(A) / N
    else:
        bread = np.linalg.inv(G.T @ G)
        cov = bread @ G.T @ lam @ G @ bread / N
    cov = (cov + cov.T) / 2
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    meta = _meta(replace(spec, nw_lags=spec.joint_lags), "gmm", two_step=two_step, gamma_zs=gamma.tolist())
    return IrfEstimate(beta, se, np.full(n_eq, N), cov=cov, meta=meta)


def iv_sample(data: TimeSeriesDataset, spec: LPSpec):
    """Per-horizon ``(y_lead, s, z)`` triples used by the IV / significance path.

    Without controls or lags the raw series are used on rows ``0..T-1-h``
    (no intercept is removed). Otherwise the data are partialled on the common
    sample first.
    """
    if data.aligned or data.controls or spec.control_lags:
        part = data if data.aligned else fwl_partial(data, spec)
        z = part.instrument
        return [(part.leads[:, h], part.treatment, z) for h in range(spec.n_horizons)], part
    spec.check(data.T)
    y, s, z = data.outcome, data.treatment, data.instrument
    T = data.T
    return [(y[h:], s[: T - h], z[: T - h]) for h in range(spec.n_horizons)], data


def lp_iv(data: TimeSeriesDataset, spec: LPSpec) -> IrfEstimate:
    """Just-identified IV LP, ``beta_h = sum(z*y[t+h]) / sum(z*s)``.

    These are the estimates that significance bands are compared against.
    Standard errors are Newey-West at the estimate (Wald principle).
    """
    triples, _ = iv_sample(data, spec)
    beta, se, n_obs = [], [], []
    for h, (y, s, z) in enumerate(triples):
        zs = z @ s
        _weak_instrument_guard(s, z[:, None])
        b = z @ y / zs
        n = y.size
        omega = newey_west_lrv(z * (y - b * s), spec.lags_for(h)).scalar
        beta.append(b)
        se.append(np.sqrt(omega / n) / abs(zs / n))
        n_obs.append(n)
    return IrfEstimate(beta, se, n_obs, meta=_meta(spec, "iv"))


def split_panel_jackknife(
    full: IrfEstimate,
    first_half: IrfEstimate,
    second_half: IrfEstimate,
) -> IrfEstimate:
    """Half-panel jackknife ``2*b - (b_a + b_b)/2``.

    Standard errors are the full-sample ones, uncorrected.
    """
    if not full.beta.size == first_half.beta.size == second_half.beta.size:
        raise ValueError("estimates cover different horizons")
    beta = 2 * full.beta - 0.5 * (first_half.beta + second_half.beta)
    meta = {**full.meta, "jackknife": True, "se_corrected": False}
    return IrfEstimate(beta, full.se, full.n_obs, cov=full.cov, meta=meta)


def estimate(data: TimeSeriesDataset, spec: LPSpec, *, seed: int | None = None) -> IrfEstimate:
    """Dispatch on ``spec.estimator``."""
    if spec.partialling == "fwl_prewash" and not data.aligned and spec.estimator != "gmm":
        if spec.estimator != "ols":
            raise ValueError("fwl_prewash partialling is available for the ols and gmm estimators")
        data = fwl_partial(data, spec)
    if spec.estimator == "ols":
        return lp_ols(data, spec, seed=seed)
    if spec.estimator in ("fgls", "fgls_bb"):
        return lp_fgls(data, spec)
    if spec.estimator == "lag_augmented":
        return lp_lag_augmented(data, spec)
    return lp_gmm(data, spec)
