"""Box-Cox transform: closed forms, round trips, lambda recovery."""

import math

import numpy as np
import pytest

from fulfillkit.errors import NumericError
from fulfillkit.models import (
    BoxCoxTransform,
    boxcox_apply,
    boxcox_fit,
    boxcox_invert,
)


class TestApply:
    def test_lambda_one_is_shift(self):
        y = np.array([1.0, 10.0, 365.0])
        for gm in (1.0, 180.0):
            out = boxcox_apply(y, BoxCoxTransform(1.0, gm))
            np.testing.assert_allclose(out, y - 1.0)

    def test_lambda_zero_scales_log(self):
        y = np.array([0.5, 2.0, 100.0])
        out = boxcox_apply(y, BoxCoxTransform(0.0, 1.0))
        np.testing.assert_allclose(out, np.log(y))
        out2 = boxcox_apply(y, BoxCoxTransform(0.0, 2.0))
        np.testing.assert_allclose(out2, 2.0 * np.log(y))

    def test_plain_log_flag(self):
        y = np.array([0.5, 2.0, 100.0])
        out = boxcox_apply(y, BoxCoxTransform(0.0, 7.0, plain_log=True))
        np.testing.assert_allclose(out, np.log(y))

    def test_continuity_at_zero(self):
        y = np.array([0.5, 2.0, 100.0])
        near = boxcox_apply(y, BoxCoxTransform(1e-8, 2.0))
        at = boxcox_apply(y, BoxCoxTransform(0.0, 2.0))
        assert np.abs(near - at).max() < 1e-6

    def test_rejects_nonpositive(self):
        with pytest.raises(NumericError, match="positive"):
            boxcox_apply([1.0, 0.0], BoxCoxTransform(0.5, 1.0))
        with pytest.raises(NumericError, match="positive"):
            boxcox_apply([-3.0], BoxCoxTransform(1.0, 1.0))

    def test_transform_validation(self):
        with pytest.raises(NumericError):
            BoxCoxTransform(1.5, 1.0)
        with pytest.raises(NumericError):
            BoxCoxTransform(0.5, 0.0)


class TestInvert:
    def test_round_trip_paper_scale(self):
        t = BoxCoxTransform(0.11, 180.0)
        back, clamped = boxcox_invert(boxcox_apply(np.array([365.0]), t), t)
        assert abs(back[0] - 365.0) < 1e-6
        assert not clamped.any()

    def test_round_trip_relative_error(self):
        rng = np.random.default_rng(0)
        y = rng.uniform(0.5, 900.0, size=50)
        for lam in (-1.0, -0.5, 0.0, 0.11, 0.5, 1.0):
            for gm in (1.0, 50.0):
                t = BoxCoxTransform(lam, gm)
                back, clamped = boxcox_invert(boxcox_apply(y, t), t)
                assert not clamped.any()
                assert np.max(np.abs(back - y) / y) < 1e-9

    def test_lambda_one_inverse(self):
        t = BoxCoxTransform(1.0, 33.0)
        back, _ = boxcox_invert(np.array([4.0]), t)
        assert back[0] == pytest.approx(5.0)

    def test_out_of_domain_clamps(self):
        t = BoxCoxTransform(0.5, 1.0)
        back, clamped = boxcox_invert(np.array([-3.0, 0.0]), t)
        assert back[0] == 1.0 and clamped[0]
        assert back[1] == pytest.approx(1.0) and not clamped[1]  # base = 1 -> y = 1

    def test_plain_log_invert(self):
        t = BoxCoxTransform(0.0, 7.0, plain_log=True)
        back, _ = boxcox_invert(np.array([math.log(42.0)]), t)
        assert back[0] == pytest.approx(42.0)


class TestFit:
    def test_recovers_half(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(0.0, 1.0, size=500)
        z = 1.0 + 0.5 * x + rng.normal(0.0, 0.01, size=500)
        y = z ** (1.0 / 0.5)
        t = boxcox_fit(x.reshape(-1, 1), y)
        assert 0.45 <= t.lambda_ <= 0.55

    def test_recovers_log(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(0.0, 1.0, size=500)
        y = np.exp(0.3 + 0.8 * x + rng.normal(0.0, 0.01, size=500))
        t = boxcox_fit(x.reshape(-1, 1), y)
        assert -0.05 <= t.lambda_ <= 0.05

    def test_constant_target_ties_to_zero(self):
        x = np.arange(6.0).reshape(-1, 1)
        t = boxcox_fit(x, np.full(6, 5.0))
        assert t.lambda_ == 0.0

    def test_restricted_grid(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0.0, 1.0, size=100)
        y = np.exp(0.5 + x)
        t = boxcox_fit(x.reshape(-1, 1), y, grid=[0.5])
        assert t.lambda_ == 0.5

    def test_geometric_mean_stored(self):
        y = np.array([2.0, 8.0])
        t = boxcox_fit(np.zeros((2, 1)), y)
        assert t.geometric_mean == pytest.approx(4.0)

    def test_singular_design_profiles_fine(self):
        # duplicate constant columns leave lstsq rank-deficient but solvable
        rng = np.random.default_rng(4)
        X = np.ones((80, 3))
        y = np.exp(rng.normal(1.0, 0.2, size=80))
        t = boxcox_fit(X, y)
        assert -1.0 <= t.lambda_ <= 1.0

    def test_errors(self):
        with pytest.raises(NumericError, match="positive"):
            boxcox_fit(np.zeros((2, 1)), [1.0, -1.0])
        with pytest.raises(NumericError, match="grid"):
            boxcox_fit(np.zeros((2, 1)), [1.0, 2.0], grid=[2.0])
        with pytest.raises(NumericError, match="grid"):
            boxcox_fit(np.zeros((2, 1)), [1.0, 2.0], grid=[])
        with pytest.raises(NumericError, match="row counts"):
            boxcox_fit(np.zeros((3, 1)), [1.0, 2.0])
