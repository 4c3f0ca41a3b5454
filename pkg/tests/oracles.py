"""Independent reference implementations used by the tests.

Written with plain Python loops and small closed-form inverses so that they
share no code path with the library.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from statistics import NormalDist

FIXTURES = Path(__file__).parent / "fixtures"


def read_fixture(name: str) -> dict[str, list[float]]:
    with open(FIXTURES / name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {key: [float(r[key]) for r in rows] for key in rows[0]}


def inv2(m):
    (a, b), (c, d) = m
    det = a * d - b * c
    return [[d / det, -b / det], [-c / det, a / det]]


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def ols2(x1, x2, y):
    """Coefficients of ``y`` on two regressors via the 2x2 normal equations."""
    xtx = [
        [sum(a * a for a in x1), sum(a * b for a, b in zip(x1, x2))],
        [sum(a * b for a, b in zip(x1, x2)), sum(b * b for b in x2)],
    ]
    xty = [[sum(a * c for a, c in zip(x1, y))], [sum(b * c for b, c in zip(x2, y))]]
    coef = matmul(inv2(xtx), xty)
    return coef[0][0], coef[1][0]


def bartlett_lrv(x, J):
    """Scalar Bartlett long-run variance, demeaned, divisor ``n``."""
    n = len(x)
    m = sum(x) / n
    e = [v - m for v in x]
    total = sum(v * v for v in e) / n
    for j in range(1, J + 1):
        g = sum(e[t] * e[t - j] for t in range(j, n)) / n
        total += 2 * (1 - j / (J + 1)) * g
    return total


def hc3_sandwich(x, u):
    """HC3 covariance for regressors ``(x, 1)`` by explicit sums."""
    n = len(x)
    xtx = [[sum(v * v for v in x), sum(x)], [sum(x), float(n)]]
    bread = inv2(xtx)
    meat = [[0.0, 0.0], [0.0, 0.0]]
    for t in range(n):
        row = (x[t], 1.0)
        lev = sum(row[i] * bread[i][j] * row[j] for i in range(2) for j in range(2))
        w = u[t] ** 2 / (1 - lev) ** 2
        for i in range(2):
            for j in range(2):
                meat[i][j] += w * row[i] * row[j]
    return matmul(matmul(bread, meat), bread)


def fgls_lusompa_h2(y):
    """Own-shock FGLS at horizon 2 with an intercept and no lags.

    1. Regress ``y[t+1]`` on ``(y[t], 1)`` for ``t = 0..T-2``; keep ``b1`` and
       residuals ``u[t+1]``.
    2. Form ``y[t+2] - b1 * u[t+1]`` for ``t = 0..T-3``.
    3. Regress it on ``(y[t], 1)``; the slope is the horizon-2 estimate.
    """
    T = len(y)
    x1 = y[: T - 1]
    resp1 = y[1:]
    b1, c1 = ols2(x1, [1.0] * len(x1), resp1)
    u = {t + 1: resp1[t] - b1 * x1[t] - c1 for t in range(T - 1)}
    x2 = y[: T - 2]
    ytil = [y[t + 2] - b1 * u[t + 1] for t in range(T - 2)]
    b2, _ = ols2(x2, [1.0] * len(x2), ytil)
    return b1, b2


def normal_quantile_bisect(p, lo=-10.0, hi=10.0, tol=1e-13):
    """Invert ``Phi(x) = (1 + erf(x / sqrt 2)) / 2`` by bisection."""
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if 0.5 * (1 + math.erf(mid / math.sqrt(2))) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def significance_band_oracle(y, s, z, H, J, alpha):
    """Follow the significance-band recipe one step at a time (no controls).

    1. ``gamma = mean(s z)`` over the full sample.
    2. ``eta_h[t] = y[t+h] z[t]`` for ``t = 0..T-1-h``.
    3. ``se_h = sqrt(lrv(eta_h, J) / n_h) / |gamma|``.
    4. Band ``+/- zeta se_h`` with ``zeta`` the ``1 - alpha / (2 (H+1))`` normal quantile.
    """
    T = len(y)
    gamma = sum(a * b for a, b in zip(s, z)) / T
    zeta = NormalDist().inv_cdf(1 - alpha / (2 * (H + 1)))
    upper = []
    for h in range(H + 1):
        eta = [y[t + h] * z[t] for t in range(T - h)]
        se = math.sqrt(bartlett_lrv(eta, J) / len(eta)) / abs(gamma)
        upper.append(zeta * se)
    return upper
