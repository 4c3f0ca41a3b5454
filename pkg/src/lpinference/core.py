"""Data containers, per-horizon regression designs and closed-form response oracles.

Time is indexed from 0 internally. A horizon-``h`` design pairs the response
``y[t + h]`` with regressors dated ``t``. Regressor columns are ordered as
treatment, intercept, contemporaneous controls, then the lag block
(lags ``1..p`` of the outcome, the treatment and every ``lagged`` series).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "COND_LIMIT",
    "DesignError",
    "DgpConfig",
    "EstimationError",
    "LPSpec",
    "RegressionDesign",
    "TimeSeriesDataset",
    "WeakInstrumentError",
    "build_design",
    "fwl_partial",
    "nonlinear_response",
    "ols_fit",
    "true_irf",
]

COND_LIMIT = 1e12

ESTIMATORS = ("ols", "fgls", "fgls_bb", "lag_augmented", "gmm")
VARIANCES = ("newey_west", "hc", "wild_block")
HC_VARIANTS = ("hc0", "hc1", "hc3")
PARTIALLING = ("explicit_regressors", "fwl_prewash")
DGP_KINDS = ("ar1", "var1_paper", "iv_system")


class EstimationError(RuntimeError):
    """Numerical failure during estimation (singular design, weak instrument...)."""


class DesignError(EstimationError):
    """Regressor matrix is rank deficient or has too few rows."""


class WeakInstrumentError(EstimationError):
    """Instrument is (numerically) uncorrelated with the treatment."""


def _as_names(value: str | Sequence[str] | None) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,)
    return tuple(value)


@dataclass(frozen=True)
class TimeSeriesDataset:
    """Aligned series with their roles in a local projection.

    Parameters
    ----------
    series : mapping of str to array_like
        Named real-valued series of common length ``T``.
    y, s : str
        Outcome and treatment. They may name the same series (own-shock LPs).
    z : str or sequence of str, optional
        Instrument(s). Defaults to the treatment.
    controls : sequence of str
        Series entering the regression contemporaneously.
    lagged : sequence of str
        Extra series entering only through lags ``1..p`` (the outcome and the
        treatment are always part of the lag block).
    leads : ndarray, optional
        ``(T, H+1)`` matrix of already aligned outcome leads. Set by
        :func:`fwl_partial`; when present, no trimming or lag block is applied.
    """

    series: Mapping[str, np.ndarray]
    y: str
    s: str
    z: str | Sequence[str] | None = None
    controls: Sequence[str] = ()
    lagged: Sequence[str] = ()
    leads: np.ndarray | None = None

    def __post_init__(self):
        clean = {}
        for name, values in self.series.items():
            arr = np.array(values, dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"series {name!r} must be one-dimensional")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"series {name!r} contains missing or non-finite values")
            arr.flags.writeable = False
            clean[name] = arr
        lengths = {len(v) for v in clean.values()}
        if len(lengths) != 1:
            raise ValueError(f"series lengths differ: {sorted(lengths)}")
        (T,) = lengths
        if T < 2:
            raise ValueError("need at least two observations")
        object.__setattr__(self, "series", clean)

        z = _as_names(self.z) or (self.s,)
        controls = _as_names(self.controls)
        lagged = _as_names(self.lagged)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "lagged", lagged)

        for name in (self.y, self.s, *z, *controls, *lagged):
            if name not in clean:
                raise ValueError(f"unknown column {name!r}")
        for role, names in (("controls", controls), ("lagged", lagged), ("z", z)):
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate names in {role}")
        core = {self.y, self.s}
        if core & set(controls) or core & set(lagged) or set(controls) & set(lagged):
            raise ValueError("controls and lagged series must be distinct from y, s and each other")

        if self.leads is not None:
            leads = np.array(self.leads, dtype=float)
            if leads.ndim != 2 or leads.shape[0] != T:
                raise ValueError("leads must be a (T, H+1) matrix")
            if not np.all(np.isfinite(leads)):
                raise ValueError("leads contain non-finite values")
            leads.flags.writeable = False
            object.__setattr__(self, "leads", leads)

    @property
    def T(self) -> int:
        return len(next(iter(self.series.values())))

    @property
    def aligned(self) -> bool:
        """True when outcome leads are pre-aligned (output of :func:`fwl_partial`)."""
        return self.leads is not None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.series[name]

    @property
    def outcome(self) -> np.ndarray:
        return self.series[self.y]

    @property
    def treatment(self) -> np.ndarray:
        return self.series[self.s]

    @property
    def instruments(self) -> np.ndarray:
        """``(T, l)`` instrument matrix."""
        return np.column_stack([self.series[name] for name in self.z])

    @property
    def instrument(self) -> np.ndarray:
        if len(self.z) != 1:
            raise ValueError("this procedure needs exactly one instrument")
        return self.series[self.z[0]]

    @property
    def lag_names(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys((self.y, self.s, *self.lagged)))


@dataclass(frozen=True)
class LPSpec:
    """Estimation recipe shared by every estimator and band routine.

    ``nw_lags=None`` means the horizon default ``h + 1`` for single-equation
    estimators and ``H + 1`` for stacked / significance computations.
    """

    horizon_max: int = 0
    control_lags: int = 0
    include_intercept: bool = True
    estimator: str = "ols"
    variance: str = "newey_west"
    nw_lags: int | None = None
    hc_variant: str = "hc3"
    block_size: int = 8
    n_boot: int = 1000
    partialling: str = "explicit_regressors"

    def __post_init__(self):
        if self.horizon_max < 0 or self.control_lags < 0:
            raise ValueError("horizon_max and control_lags must be non-negative")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if self.variance not in VARIANCES:
            raise ValueError(f"variance must be one of {VARIANCES}")
        if self.hc_variant not in HC_VARIANTS:
            raise ValueError(f"hc_variant must be one of {HC_VARIANTS}")
        if self.partialling not in PARTIALLING:
            raise ValueError(f"partialling must be one of {PARTIALLING}")
        if self.nw_lags is not None and self.nw_lags < 0:
            raise ValueError("nw_lags must be non-negative")
        if self.block_size < 1:
            raise ValueError("block_size must be at least 1")
        if self.n_boot < 2:
            raise ValueError("n_boot must be at least 2")

    @property
    def n_horizons(self) -> int:
        return self.horizon_max + 1

    def lags_for(self, h: int) -> int:
        return self.nw_lags if self.nw_lags is not None else h + 1

    @property
    def joint_lags(self) -> int:
        return self.nw_lags if self.nw_lags is not None else self.horizon_max + 1

    def check(self, T: int) -> None:
        """Validate the recipe against a sample of length ``T``."""
        if self.horizon_max + self.control_lags + 2 >= T:
            raise ValueError(
                f"T={T} too short for H={self.horizon_max} and p={self.control_lags}"
            )
        if self.variance == "wild_block" and self.block_size > T // 2:
            raise ValueError(f"block_size must lie in [1, {T // 2}]")


@dataclass(frozen=True)
class RegressionDesign:
    response: np.ndarray
    regressors: np.ndarray
    first: int
    last: int
    horizon: int
    names: tuple[str, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.regressors.shape[0]

    @property
    def k(self) -> int:
        return self.regressors.shape[1]


def check_rank(X: np.ndarray, what: str = "regressor matrix") -> None:
    """Raise :class:`DesignError` unless ``X`` has full column rank.

    The condition number is taken on unit-norm columns so that the check is
    invariant to the units of each regressor.
    """
    n, k = X.shape
    if n < k:
        raise DesignError(f"{what}: {n} rows for {k} columns (insufficient observations)")
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        raise DesignError(f"{what}: zero column")
    cond = np.linalg.cond(X / norms)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DesignError(f"{what}: condition number {cond:.3g} exceeds {COND_LIMIT:g}")


def ols_fit(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least squares coefficients and residuals."""
    coef = np.linalg.lstsq(X, y, rcond=None)[0]
    return coef, y - X @ coef


def _sample_rows(data: TimeSeriesDataset, spec: LPSpec, h: int, lag_order: int, sample: str):
    if data.aligned:
        return 0, data.T - 1
    last = data.T - spec.horizon_max - 2 if sample == "common" else data.T - 1 - h
    return lag_order, last


def _block(data: TimeSeriesDataset, spec: LPSpec, rows: np.ndarray, lag_order: int):
    cols, names = [], []
    if spec.include_intercept:
        cols.append(np.ones(len(rows)))
        names.append("const")
    for name in data.controls:
        cols.append(data[name][rows])
        names.append(name)
    if not data.aligned:
        for name in data.lag_names:
            for lag in range(1, lag_order + 1):
                cols.append(data[name][rows - lag])
                names.append(f"{name}.L{lag}")
    return cols, names


def build_design(
    data: TimeSeriesDataset,
    spec: LPSpec,
    h: int,
    *,
    sample: str | None = None,
    extra_lag: bool = False,
) -> RegressionDesign:
    """Build the horizon-``h`` regression of ``y[t+h]`` on ``s[t]`` and controls.

    Parameters
    ----------
    sample : {"per_horizon", "common"}, optional
        Row selection. Defaults to ``"common"`` (rows ``p .. T-H-2``) for the
        GMM estimator and ``"per_horizon"`` (rows ``p .. T-1-h``) otherwise.
    extra_lag : bool
        Raise the lag order by one (lag augmentation).
    """
    if not 0 <= h <= spec.horizon_max:
        raise ValueError(f"horizon {h} outside 0..{spec.horizon_max}")
    if sample is None:
        sample = "common" if spec.estimator == "gmm" else "per_horizon"
    if sample not in ("per_horizon", "common"):
        raise ValueError("sample must be 'per_horizon' or 'common'")
    if not data.aligned:
        spec.check(data.T)
    lag_order = spec.control_lags + int(extra_lag)
    first, last = _sample_rows(data, spec, h, lag_order, sample)
    if last < first:
        raise DesignError(f"horizon {h}: no observations left after trimming")
    rows = np.arange(first, last + 1)
    if data.aligned:
        response = data.leads[rows, h]
    else:
        response = data.outcome[rows + h]
    cols, names = _block(data, spec, rows, lag_order)
    X = np.column_stack([data.treatment[rows], *cols])
    check_rank(X, f"horizon {h} design")
    return RegressionDesign(
        response=response,
        regressors=X,
        first=first,
        last=last,
        horizon=h,
        names=(data.s, *names),
    )


def fwl_partial(data: TimeSeriesDataset, spec: LPSpec) -> TimeSeriesDataset:
    """Residualise outcome leads, treatment and instruments on the control block.

    The regression uses the common sample ``p .. T-H-2`` for every series so
    that an LP on the output, without controls, reproduces the treatment
    coefficients of the explicit-regressor LP on that same sample.
    """
    if data.aligned:
        raise ValueError("dataset is already partialled")
    spec.check(data.T)
    H, p = spec.horizon_max, spec.control_lags
    rows = np.arange(p, data.T - H - 1)
    cols, _ = _block(data, spec, rows, p)
    if not cols:
        raise ValueError("nothing to partial out: no intercept, controls or lags")
    X = np.column_stack(cols)
    check_rank(X, "control matrix")

    leads = np.column_stack([data.outcome[rows + h] for h in range(H + 1)])
    targets = np.column_stack([leads, data.treatment[rows], data.instruments[rows]])
    _, resid = ols_fit(X, targets)

    series = {data.y: resid[:, 0], data.s: resid[:, H + 1]}
    for i, name in enumerate(data.z):
        series.setdefault(name, resid[:, H + 2 + i])
    return TimeSeriesDataset(series=series, y=data.y, s=data.s, z=data.z, leads=resid[:, : H + 1])


@dataclass(frozen=True)
class DgpConfig:
    """Registered data-generating process.

    ``ar1``: ``y = intercept + rho*y[-1] + u``.
    ``var1_paper``: bivariate VAR(1) in ``(y, x)`` with ``A = [[.7,.4],[.4,.7]]``,
    ``u_y = e_y + e_x`` and ``u_x = e_x``.
    ``iv_system``: ``y = beta*s + .75*y[-1] + u_y``,
    ``s = .5*s[-1] - .25*y[-1] + z + u_s``, ``z = u_z``.
    """

    kind: str
    T: int = 100
    burn_in: int | None = None
    seed: int = 0
    rho: float = 0.5
    intercept: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in DGP_KINDS:
            raise ValueError(f"unsupported DGP kind {self.kind!r}; choose from {DGP_KINDS}")
        if self.T < 10:
            raise ValueError("T must be at least 10")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")

    @property
    def burn(self) -> int:
        if self.burn_in is not None:
            return self.burn_in
        return {"ar1": 500, "var1_paper": 1000, "iv_system": 500}[self.kind]


VAR1_A = np.array([[0.7, 0.4], [0.4, 0.7]])
VAR1_LOADINGS = {"e_x": np.array([1.0, 1.0]), "e_y": np.array([1.0, 0.0])}


def true_irf(
    dgp: DgpConfig,
    H: int,
    *,
    response: str | None = None,
    shock: str | None = None,
) -> np.ndarray:
    """Population impulse response for ``h = 0..H``.

    For ``var1_paper`` the default is the response of ``x`` to ``e_x`` (impact
    loading ``(1, 1)'`` on ``(y, x)``). For ``iv_system`` it is the response of
    ``y`` to a unit treatment innovation.
    """
    h = np.arange(H + 1)
    if dgp.kind == "ar1":
        return dgp.rho ** h.astype(float)
    if dgp.kind == "var1_paper":
        idx = {"y": 0, "x": 1}[response or "x"]
        state = VAR1_LOADINGS[shock or "e_x"].copy()
        out = np.empty(H + 1)
        for i in range(H + 1):
            out[i] = state[idx]
            state = VAR1_A @ state
        return out
    if dgp.kind == "iv_system":
        # structural form A0 x_t = A1 x_{t-1} + e_t with x = (y, s)
        A0 = np.array([[1.0, -dgp.beta], [0.0, 1.0]])
        A1 = np.array([[0.75, 0.0], [-0.25, 0.5]])
        A = np.linalg.solve(A0, A1)
        state = np.linalg.solve(A0, np.array([0.0, 1.0]))
        idx = {"y": 0, "s": 1}[response or "y"]
        out = np.empty(H + 1)
        for i in range(H + 1):
            out[i] = state[idx]
            state = A @ state
        return out
    raise ValueError(f"unsupported DGP kind {dgp.kind!r}")


def nonlinear_response(beta_h: float, phi_h: float, s0: float, delta: float, x: float) -> float:
    """Response of ``y[t+h]`` to moving ``s[t]`` from ``s0`` to ``s0 + delta``
    in the LP with a ``s**2 * x`` interaction."""
    return beta_h * delta + phi_h * (delta**2 + 2 * delta * s0) * x
