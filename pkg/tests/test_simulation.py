from dataclasses import replace

import numpy as np
import pytest

from lpinference import DgpConfig, LPSpec, lp_iv, run_mc, significance_bands_asymptotic, simulate
from lpinference.bands import significance_bands_bootstrap
from lpinference.simulation import McAbort, mc_grid


class TestSimulate:
    def test_white_noise_ar1(self):
        dgp = DgpConfig("ar1", T=50, rho=0.0, seed=3, burn_in=20)
        y = simulate(dgp)["y"]
        u = np.random.default_rng(3).standard_normal(70)
        np.testing.assert_array_equal(y, u[20:])

    def test_reproducible(self):
        dgp = DgpConfig("iv_system", T=80, seed=9, beta=0.5)
        a, b = simulate(dgp), simulate(dgp)
        for name in a.series:
            np.testing.assert_array_equal(a[name], b[name])

    @pytest.mark.parametrize("kind,names", [("ar1", ["y"]), ("iv_system", ["y", "s", "z"]),
                                            ("var1_paper", ["y", "x", "e_y", "e_x"])])
    def test_columns(self, kind, names):
        data = simulate(DgpConfig(kind, T=40, burn_in=0 if kind == "var1_paper" else None))
        assert list(data.series) == names
        assert data.T == 40

    def test_iv_system_null(self):
        data = simulate(DgpConfig("iv_system", T=100_000, beta=0.0, seed=4))
        y, z = data["y"], data["z"]
        for h in range(5):
            assert abs(np.corrcoef(z[: y.size - h], y[h:])[0, 1]) < 0.02

    def test_var1_shocks(self):
        data = simulate(DgpConfig("var1_paper", T=30, burn_in=0, seed=2))
        x, y = data["x"], data["y"]
        ex, ey = data["e_x"], data["e_y"]
        np.testing.assert_allclose(x[1:], 0.4 * y[:-1] + 0.7 * x[:-1] + ex[1:], atol=1e-12)
        np.testing.assert_allclose(y[1:], 0.7 * y[:-1] + 0.4 * x[:-1] + ey[1:] + ex[1:], atol=1e-12)

    def test_var1_default_burn_in_is_explosive(self):
        # root 1.1: after 1000 burn-in periods the levels are of order 1e41
        data = simulate(DgpConfig("var1_paper", T=150, seed=1))
        assert np.abs(data["x"]).max() > 1e30

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unsupported"):
            DgpConfig("garch")


SPEC = LPSpec(horizon_max=4, nw_lags=8, block_size=8, n_boot=200)


class TestRunMc:
    def test_grid_shape(self):
        grid = mc_grid(T_values=(100,), betas=(0.0, 0.5))
        res = run_mc(grid, SPEC, n_reps=10, master_seed=1)
        assert len(res) == 4
        assert [(r.dgp.beta, r.band_kind) for r in res][:2] == [(0.0, "significance_asymptotic"),
                                                                (0.0, "significance_bootstrap")]
        assert all(r.n_reps == 10 and r.n_failed == 0 for r in res)

    def test_mc_grid_size(self):
        assert len(mc_grid()) == 8

    def test_deterministic_across_jobs(self):
        grid = mc_grid(T_values=(100,), betas=(0.25,))
        serial = run_mc(grid, SPEC, n_reps=16, master_seed=5)
        parallel = run_mc(grid, SPEC, n_reps=16, master_seed=5, n_jobs=2)
        assert [r.rejection_rate for r in serial] == [r.rejection_rate for r in parallel]

    def test_confidence_kinds_report_coverage(self):
        grid = [DgpConfig("iv_system", T=200, beta=0.5)]
        res = run_mc(grid, LPSpec(horizon_max=3), band_kinds=("pointwise", "scheffe", "sup_t"),
                     n_reps=20, master_seed=2, supt_draws=500)
        assert all(r.coverage_rate is not None for r in res)

    def test_own_shock_sup_t_is_degenerate(self):
        # with y = s the impact moment has zero variance, so the joint covariance is singular
        with pytest.raises(McAbort):
            run_mc([DgpConfig("ar1", T=200)], LPSpec(horizon_max=3), band_kinds=("sup_t",),
                   n_reps=5, supt_draws=500)

    def test_abort_on_failures(self):
        # explosive levels make the lagged design numerically collinear in every replication
        grid = [DgpConfig("var1_paper", T=150, seed=0)]
        with pytest.raises(McAbort):
            run_mc(grid, LPSpec(horizon_max=2, control_lags=1, estimator="ols"),
                   band_kinds=("pointwise",), n_reps=20)

    @pytest.mark.parametrize("n_reps,alpha", [(0, 0.05), (10, 1.5)])
    def test_validation(self, n_reps, alpha):
        with pytest.raises(ValueError):
            run_mc(mc_grid()[:1], SPEC, n_reps=n_reps, alpha=alpha)

    @pytest.mark.slow
    def test_bootstrap_close_to_asymptotic(self):
        spec = replace(SPEC, n_boot=1000)
        gaps = []
        for rep in range(100):
            data = simulate(DgpConfig("iv_system", T=100, seed=rep))
            a = significance_bands_asymptotic(data, spec).upper
            b = significance_bands_bootstrap(data, spec, rng=rep).upper
            gaps.append(np.max(np.abs(b - a) / a))
        assert np.mean(gaps) < 0.10

    def test_lp_iv_used_for_significance(self):
        data = simulate(DgpConfig("iv_system", T=100, seed=1, beta=0.5))
        assert lp_iv(data, SPEC).beta.shape == (5,)
