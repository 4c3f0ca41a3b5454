import numpy as np
import pytest

from lpinference import DgpConfig, LPSpec, TimeSeriesDataset, simulate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ar_data(rng):
    y = np.zeros(200)
    e = rng.standard_normal(200)
    for t in range(1, 200):
        y[t] = 0.5 * y[t - 1] + e[t]
    x = rng.standard_normal(200)
    return TimeSeriesDataset({"y": y, "x": x, "w": rng.standard_normal(200)}, y="y", s="x")


@pytest.fixture
def iv_data():
    return simulate(DgpConfig("iv_system", T=300, beta=0.5, seed=7))


@pytest.fixture
def small_spec():
    return LPSpec(horizon_max=4, control_lags=1)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            for name, value in getattr(rep, "user_properties", []):
                if name == "acceptance":
                    lines.append(value)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
