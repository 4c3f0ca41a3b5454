"""Minimum-distance smoothing of an impulse response onto a linear basis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .core import COND_LIMIT, EstimationError
from .estimators import IrfEstimate

__all__ = ["BasisMatrix", "SmoothFit", "bspline_basis", "default_bspline", "fit_smooth_irf"]


@dataclass(frozen=True)
class BasisMatrix:
    values: np.ndarray
    kind: str = "custom"
    degree: int | None = None
    knots: tuple[float, ...] = ()

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        n, k = values.shape
        if k > n:
            raise ValueError(f"basis has {k} columns for {n} horizons")
        if np.linalg.matrix_rank(values) < k:
            raise ValueError("basis is not of full column rank")
        object.__setattr__(self, "values", values)

    @classmethod
    def identity(cls, H: int) -> BasisMatrix:
        return cls(np.eye(H + 1), kind="identity")


@dataclass(frozen=True)
class SmoothFit:
    theta: np.ndarray
    fitted: np.ndarray
    Q: float
    q: int
    p_value: float
    cov_theta: np.ndarray


def _cox_de_boor(x: np.ndarray, t: np.ndarray, degree: int) -> np.ndarray:
    """All B-spline basis functions of ``degree`` on knot vector ``t`` at ``x``."""
    n_basis = len(t) - degree - 1
    # degree zero: half-open spans, with the right end of the domain closed
    B = np.zeros((x.size, len(t) - 1))
    last = np.max(np.nonzero(t[1:] > t[:-1])[0])
    for i in range(len(t) - 1):
        if t[i + 1] > t[i]:
            B[:, i] = (x >= t[i]) & (x < t[i + 1])
    B[x == t[-1], last] = 1.0
    for d in range(1, degree + 1):
        nxt = np.zeros((x.size, len(t) - 1 - d))
        for i in range(len(t) - 1 - d):
            left = t[i + d] - t[i]
            right = t[i + d + 1] - t[i + 1]
            if left > 0:
                nxt[:, i] += (x - t[i]) / left * B[:, i]
            if right > 0:
                nxt[:, i] += (t[i + d + 1] - x) / right * B[:, i + 1]
        B = nxt
    return B[:, :n_basis]


def bspline_basis(H: int, degree: int, interior_knots=()) -> BasisMatrix:
    """Clamped B-spline basis on ``[0, H]`` evaluated at ``h = 0..H``.

    The basis has ``len(interior_knots) + degree + 1`` columns.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if H < 0:
        raise ValueError("H must be non-negative")
    knots = np.asarray(interior_knots, dtype=float)
    if knots.size and (np.any(np.diff(knots) <= 0) or knots[0] <= 0 or knots[-1] >= H):
        raise ValueError("interior knots must be strictly increasing inside (0, H)")
    k = knots.size + degree + 1
    if k > H + 1:
        raise ValueError(f"{k} basis functions for {H + 1} horizons")
    if H == 0:
        return BasisMatrix(np.ones((1, 1)), kind="bspline", degree=degree)
    t = np.concatenate([np.zeros(degree + 1), knots, np.full(degree + 1, float(H))])
    values = _cox_de_boor(np.arange(H + 1, dtype=float), t, degree)
    return BasisMatrix(values, kind="bspline", degree=degree, knots=tuple(knots))


def default_bspline(H: int) -> BasisMatrix:
    """Cubic B-spline with interior knots at every third horizon."""
    knots = [float(k) for k in range(3, H, 3)]
    degree = 3
    while knots and len(knots) + degree + 1 > H + 1:
        knots.pop()
    degree = min(degree, H - len(knots))
    return bspline_basis(H, degree, knots)


def fit_smooth_irf(irf: IrfEstimate, basis: BasisMatrix) -> SmoothFit:
    """GLS minimum-distance fit of ``irf.beta`` onto the columns of ``basis``.

    ``Q`` is the minimised criterion, asymptotically chi-square with
    ``H + 1 - k`` degrees of freedom under a correct basis.
    """
    if irf.cov is None:
        raise ValueError("smoothing needs the joint covariance of the estimates")
    Phi = basis.values
    if Phi.shape[0] != irf.beta.size:
        raise ValueError("basis rows do not match the number of horizons")
    omega = irf.cov
    if np.linalg.cond(omega) > COND_LIMIT:
        raise EstimationError("covariance of the estimates is singular")
    try:
        factor = linalg.cho_factor(omega)
    except linalg.LinAlgError as exc:
        raise EstimationError("covariance of the estimates is not positive definite") from exc
    q = Phi.shape[0] - Phi.shape[1]
    if q == 0:
        # square basis: exact interpolation
        theta = np.linalg.solve(Phi, irf.beta)
        inv_phi = np.linalg.inv(Phi)
        cov_theta = inv_phi @ omega @ inv_phi.T
        cov_theta = (cov_theta + cov_theta.T) / 2
        return SmoothFit(theta=theta, fitted=irf.beta.copy(), Q=0.0, q=0, p_value=1.0, cov_theta=cov_theta)
    Wphi = linalg.cho_solve(factor, Phi)
    info = Phi.T @ Wphi
    if np.linalg.cond(info) > COND_LIMIT:
        raise EstimationError("basis information matrix is singular")
    cov_theta = np.linalg.inv(info)
    cov_theta = (cov_theta + cov_theta.T) / 2
    theta = cov_theta @ (Wphi.T @ irf.beta)
    fitted = Phi @ theta
    resid = irf.beta - fitted
    Q = float(max(resid @ linalg.cho_solve(factor, resid), 0.0))
    p_value = float(stats.chi2.sf(Q, q))
    return SmoothFit(theta=theta, fitted=fitted, Q=Q, q=q, p_value=p_value, cov_theta=cov_theta)
