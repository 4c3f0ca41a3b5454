import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lpinference import EstimationError, RegressionDesign, hc_variance, newey_west_lrv, wild_block_bootstrap_se
from lpinference.variance import bartlett_weights

from oracles import bartlett_lrv, hc3_sandwich, read_fixture


def design_from(X, y=None):
    X = np.asarray(X, dtype=float)
    y = np.zeros(X.shape[0]) if y is None else y
    return RegressionDesign(response=y, regressors=X, first=0, last=X.shape[0] - 1, horizon=0)


class TestNeweyWest:
    def test_hand_example(self):
        assert newey_west_lrv([1.0, -1.0, 1.0, -1.0], 1).scalar == pytest.approx(0.25, abs=1e-12)

    def test_zero_truncation_is_variance(self, rng):
        x = rng.standard_normal(50)
        assert newey_west_lrv(x, 0).scalar == pytest.approx(np.var(x), rel=1e-12)

    def test_constant_series(self):
        assert newey_west_lrv(np.full(20, 3.0), 4).scalar == 0.0

    def test_weights(self):
        np.testing.assert_allclose(bartlett_weights(3), [0.75, 0.5, 0.25])

    @pytest.mark.parametrize("J", [0, 1, 3, 8])
    def test_matches_loop_oracle(self, rng, J):
        x = rng.standard_normal(40)
        assert newey_west_lrv(x, J).scalar == pytest.approx(bartlett_lrv(list(x), J), rel=1e-12)

    def test_too_short(self):
        with pytest.raises(ValueError, match="T >= J"):
            newey_west_lrv(np.ones(4), 3)

    @settings(max_examples=40, deadline=None)
    @given(
        x=arrays(np.float64, st.tuples(st.integers(6, 40), st.integers(1, 3)),
                 elements=st.floats(-1e3, 1e3, allow_nan=False)),
        J=st.integers(0, 4),
    )
    def test_symmetric_psd(self, x, J):
        value = newey_west_lrv(x, J).value
        np.testing.assert_allclose(value, value.T, atol=1e-9)
        scale = max(1.0, np.abs(value).max())
        assert np.linalg.eigvalsh(value).min() >= -1e-9 * scale


class TestHc:
    def test_hc3_five_row_oracle(self):
        fx = read_fixture("five_rows.csv")
        X = np.column_stack([fx["x"], np.ones(5)])
        cov = hc_variance(design_from(X), np.array(fx["u"]), "hc3")
        np.testing.assert_allclose(cov, hc3_sandwich(fx["x"], fx["u"]), rtol=1e-12, atol=1e-12)

    def test_hc1_scales_hc0(self, rng):
        X = np.column_stack([rng.standard_normal(30), np.ones(30)])
        u = rng.standard_normal(30)
        np.testing.assert_allclose(hc_variance(design_from(X), u, "hc1"),
                                   hc_variance(design_from(X), u, "hc0") * 30 / 28, rtol=1e-12)

    def test_homoskedastic_orthonormal(self):
        n = 400
        q, _ = np.linalg.qr(np.random.default_rng(2).standard_normal((n, 3)))
        u = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        # orthonormal X and unit squared residuals: the sandwich is the identity
        np.testing.assert_allclose(hc_variance(design_from(q), u, "hc0"), np.eye(3), atol=1e-12)

    def test_unit_leverage(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        with pytest.raises(EstimationError, match="leverage"):
            hc_variance(design_from(X), np.ones(3), "hc3")

    def test_unknown_variant(self, rng):
        with pytest.raises(ValueError):
            hc_variance(design_from(np.ones((5, 1))), np.ones(5), "hc7")


class TestWildBlock:
    def test_forced_positive_weights(self, rng):
        x = rng.standard_normal(50)
        se = wild_block_bootstrap_se(x, 5, 100, rng, weights=lambda r, shape: np.ones(shape))
        assert se == pytest.approx(0.0, abs=1e-15)

    def test_constant_series(self):
        assert wild_block_bootstrap_se(np.full(40, 2.0), 4, 200, 9) == 0.0

    def test_iid_matches_analytic(self):
        x = np.random.default_rng(5).standard_normal(500)
        se = wild_block_bootstrap_se(x, 1, 2000, 11)
        assert se == pytest.approx(x.std() / np.sqrt(500), rel=0.10)

    def test_deterministic(self, rng):
        x = rng.standard_normal(60)
        assert wild_block_bootstrap_se(x, 6, 300, 4) == wild_block_bootstrap_se(x, 6, 300, 4)

    def test_partial_last_block(self):
        # blocks {0..3}, {4..7}, {8, 9}; the short last block keeps its own weight
        x = np.arange(10.0)
        W = np.array([[1.0, 1.0, -1.0], [1.0, 1.0, 1.0]])

        def fixed(rng, shape):
            assert shape == (2, 3)
            return W

        se = wild_block_bootstrap_se(x, 4, 2, 1, weights=fixed)
        last_block = (8 - 4.5) + (9 - 4.5)
        # replicate difference is 2 * last_block / T; sd of two values is |diff| / sqrt 2
        assert se == pytest.approx(2 * last_block / 10 / np.sqrt(2), rel=1e-12)

    @pytest.mark.parametrize("b", [0, 26])
    def test_block_size_bounds(self, b):
        with pytest.raises(ValueError, match="block_size"):
            wild_block_bootstrap_se(np.ones(50), b, 10, 0)
