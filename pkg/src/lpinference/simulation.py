"""Registered data-generating processes and the Monte Carlo harness."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .bands import (
    BAND_KINDS,
    SIGNIFICANCE_KINDS,
    joint_zero_test,
    pointwise_bands,
    scheffe_bands,
    significance_bands_asymptotic,
    significance_bands_bootstrap,
    supt_bands,
)
from .core import VAR1_A, DgpConfig, EstimationError, LPSpec, TimeSeriesDataset, true_irf
from .estimators import estimate, lp_gmm, lp_iv

__all__ = ["DgpConfig", "McAbort", "McResult", "mc_grid", "run_mc", "simulate"]

log = logging.getLogger(__name__)

MAX_FAILURE_RATE = 0.01


class McAbort(EstimationError):
    """Too many replications failed numerically."""


def simulate(dgp: DgpConfig) -> TimeSeriesDataset:
    """Draw ``burn + T`` periods with standard normal innovations and keep the last ``T``.

    The process starts from zero. Innovations are drawn in one block of shape
    ``(burn + T,)`` for ``ar1``, ``(burn + T, 2)`` ordered ``(e_y, e_x)`` for
    ``var1_paper`` and ``(burn + T, 3)`` ordered ``(u_y, u_s, u_z)`` for
    ``iv_system``.
    """
    rng = np.random.default_rng(dgp.seed)
    n = dgp.burn + dgp.T
    keep = slice(dgp.burn, None)

    if dgp.kind == "ar1":
        u = rng.standard_normal(n)
        y = np.empty(n)
        prev = 0.0
        for t in range(n):
            prev = dgp.intercept + dgp.rho * prev + u[t]
            y[t] = prev
        return TimeSeriesDataset({"y": y[keep]}, y="y", s="y")

    if dgp.kind == "var1_paper":
        e = rng.standard_normal((n, 2))
        shocks = np.column_stack([e[:, 0] + e[:, 1], e[:, 1]])
        X = np.empty((n, 2))
        state = np.zeros(2)
        with np.errstate(over="ignore", invalid="ignore"):
            for t in range(n):
                state = VAR1_A @ state + shocks[t]
                X[t] = state
        if not np.all(np.isfinite(X)):
            raise EstimationError("var1_paper simulation overflowed (explosive root 1.1)")
        series = {"y": X[keep, 0], "x": X[keep, 1], "e_y": e[keep, 0], "e_x": e[keep, 1]}
        return TimeSeriesDataset(series, y="x", s="x", lagged=("y",))

    u = rng.standard_normal((n, 3))
    y = np.empty(n)
    s = np.empty(n)
    y_prev = s_prev = 0.0
    for t in range(n):
        s_t = 0.5 * s_prev - 0.25 * y_prev + u[t, 2] + u[t, 1]
        y_t = dgp.beta * s_t + 0.75 * y_prev + u[t, 0]
        y[t], s[t] = y_t, s_t
        y_prev, s_prev = y_t, s_t
    series = {"y": y[keep], "s": s[keep], "z": u[keep, 2]}
    return TimeSeriesDataset(series, y="y", s="s", z="z")


@dataclass(frozen=True)
class McResult:
    dgp: DgpConfig
    band_kind: str
    n_reps: int
    rejection_rate: float
    mc_standard_error: float
    coverage_rate: float | None = None
    n_failed: int = 0
    failed_seeds: tuple[int, ...] = field(default=())


def mc_grid(T_values=(100, 500), betas=(0.0, 0.25, 0.5, 0.75), burn_in=None) -> list[DgpConfig]:
    """The ``iv_system`` grid of sample sizes and treatment effects."""
    return [
        DgpConfig("iv_system", T=T, beta=b, burn_in=burn_in) for T in T_values for b in betas
    ]


def _rep_seeds(master_seed: int, cfg_index: int, rep: int) -> tuple[int, int]:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(cfg_index, rep))
    data_seed, band_seed = ss.generate_state(2, dtype=np.uint64)
    return int(data_seed), int(band_seed)


def _band(kind: str, data, spec: LPSpec, alpha: float, rng, supt_draws: int):
    """Return ``(estimate, band)`` for one band kind."""
    if kind in SIGNIFICANCE_KINDS:
        irf = lp_iv(data, spec)
        if kind == "significance_asymptotic":
            return irf, significance_bands_asymptotic(data, spec, alpha)
        return irf, significance_bands_bootstrap(data, spec, alpha, rng=rng)
    if kind == "sup_t":
        irf = lp_gmm(data, spec)
        return irf, supt_bands(irf, alpha, M=supt_draws, rng=rng)
    irf = estimate(data, spec, seed=int(rng.integers(2**63)))
    if kind == "pointwise":
        return irf, pointwise_bands(irf, alpha)
    return irf, scheffe_bands(irf, alpha)


def _one_rep(args):
    cfg, cfg_index, rep, spec, band_kinds, alpha, master_seed, supt_draws, truth = args
    data_seed, band_seed = _rep_seeds(master_seed, cfg_index, rep)
    try:
        data = simulate(replace(cfg, seed=data_seed))
        out = {}
        for kind in band_kinds:
            rng = np.random.default_rng([band_seed, BAND_KINDS.index(kind)])
            irf, band = _band(kind, data, spec, alpha, rng, supt_draws)
            if kind in SIGNIFICANCE_KINDS:
                reject = joint_zero_test(irf, band).reject
                covered = None
            else:
                reject = bool(np.any((band.lower > 0) | (band.upper < 0)))
                covered = bool(np.all((band.lower <= truth) & (truth <= band.upper)))
            out[kind] = (reject, covered)
        return rep, data_seed, out
    except EstimationError as exc:
        log.debug("replication %d of %s failed: %s", rep, cfg, exc)
        return rep, data_seed, None


def run_mc(
    dgp_grid: Sequence[DgpConfig],
    spec: LPSpec,
    band_kinds: Sequence[str] = ("significance_asymptotic", "significance_bootstrap"),
    alpha: float = 0.05,
    n_reps: int = 1000,
    master_seed: int = 0,
    *,
    supt_draws: int = 10_000,
    n_jobs: int = 1,
) -> list[McResult]:
    """Rejection and coverage rates of each band kind over a grid of DGPs.

    Every replication draws its seeds from ``(master_seed, config index,
    replication)``, so results do not depend on ``n_jobs``. Significance
    kinds report the joint zero-response test; confidence kinds report
    whether zero is excluded at some horizon and whether the true response is
    covered at every horizon. More than 1% failed replications raises
    :class:`McAbort`.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    for kind in band_kinds:
        if kind not in BAND_KINDS:
            raise ValueError(f"unknown band kind {kind!r}")

    results = []
    for i, cfg in enumerate(dgp_grid):
        truth = true_irf(cfg, spec.horizon_max)
        tasks = [
            (cfg, i, r, spec, tuple(band_kinds), alpha, master_seed, supt_draws, truth)
            for r in range(n_reps)
        ]
        if n_jobs > 1:
            with ProcessPoolExecutor(max_workers=n_jobs) as pool:
                outcomes = list(pool.map(_one_rep, tasks, chunksize=max(1, n_reps // (4 * n_jobs))))
        else:
            outcomes = [_one_rep(t) for t in tasks]

        failed = tuple(seed for _, seed, out in outcomes if out is None)
        if len(failed) > MAX_FAILURE_RATE * n_reps:
            raise McAbort(
                f"{len(failed)} of {n_reps} replications failed for {cfg}; "
                f"first failing data seeds: {failed[:5]}"
            )
        good = [out for _, _, out in outcomes if out is not None]
        n_ok = len(good)
        for kind in band_kinds:
            rate = sum(o[kind][0] for o in good) / n_ok
            cover = None
            if kind not in SIGNIFICANCE_KINDS:
                cover = sum(o[kind][1] for o in good) / n_ok
            results.append(
                McResult(
                    dgp=cfg,
                    band_kind=kind,
                    n_reps=n_ok,
                    rejection_rate=rate,
                    mc_standard_error=float(np.sqrt(rate * (1 - rate) / n_ok)),
                    coverage_rate=cover,
                    n_failed=len(failed),
                    failed_seeds=failed,
                )
            )
    return results
