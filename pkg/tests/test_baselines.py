"""Baselines: majority class, the 8-descriptor models, duration buffers."""

import numpy as np
import pytest

from fulfillkit.errors import DataError
from fulfillkit.features import TimePoint
from fulfillkit.models import (
    GbtParams,
    LinearModel,
    TreeEnsemble,
    baseline8,
    baseline_feature_matrix,
    majority_baseline,
    recommend_duration,
)
from fulfillkit.models.baselines import baseline_schema, linear_fit
from fulfillkit.synth import SynthConfig, generate_synthetic


class TestMajority:
    def test_modal_class(self):
        model = majority_baseline([1.0, 1.0, 1.0, 0.0])
        assert model.predict(np.zeros((5, 2))).tolist() == [1.0] * 5

    def test_tie_predicts_late(self):
        model = majority_baseline([0.0, 1.0, 0.0, 1.0])
        assert model.majority_class == 0.0

    def test_single_class(self):
        model = majority_baseline([0.0, 0.0])
        assert model.majority_class == 0.0

    def test_empty_rejected(self):
        with pytest.raises(DataError, match="labels"):
            majority_baseline([])


class TestLinear:
    def test_recovers_planted_within_three_se(self):
        rng = np.random.default_rng(0)
        n, sigma = 200, 0.5
        X = rng.normal(size=(n, 2))
        theta_true = np.array([2.0, 3.0, -1.5])
        y = theta_true[0] + X @ theta_true[1:] + rng.normal(0.0, sigma, size=n)
        model = linear_fit(X, y)
        design = np.hstack([np.ones((n, 1)), X])
        cov = sigma**2 * np.linalg.inv(design.T @ design)
        se = np.sqrt(np.diag(cov))
        assert (np.abs(model.theta - theta_true) <= 3.0 * se).all()

    def test_predict_width_checked(self):
        model = LinearModel(theta=np.array([1.0, 2.0]))
        with pytest.raises(DataError, match="features"):
            model.predict(np.zeros((1, 3)))


class TestBaselineSchema:
    def test_tp1_masks_pledge_features(self):
        names = [s.name for s in baseline_schema(TimePoint.TP1)]
        assert "backers" not in names and "percent_raised" not in names
        assert len(names) == 20  # 5 numeric + 15 one-hot

    def test_tp3_includes_all_eight(self):
        names = [s.name for s in baseline_schema(TimePoint.TP3)]
        assert "backers" in names and "percent_raised" in names
        assert len(names) == 22

    def test_matrix_hand_values(self):
        corpus, _ = generate_synthetic(SynthConfig(n_projects=4), seed=5)
        matrix = baseline_feature_matrix(corpus, TimePoint.TP3)
        pid = matrix.ids[0]
        project = corpus.projects[pid]
        assert matrix.column("goal")[0] == project.goal
        assert matrix.column("n_rewards")[0] == len(project.rewards)
        assert matrix.column("backers")[0] == sum(r.backer_count for r in project.rewards)
        assert matrix.column("percent_raised")[0] == pytest.approx(
            project.pledged / project.goal
        )

    def test_tp2_matrix_narrower(self):
        corpus, _ = generate_synthetic(SynthConfig(n_projects=4), seed=5)
        assert baseline_feature_matrix(corpus, TimePoint.TP2).values.shape[1] == 20


class TestBaseline8:
    def test_classify_returns_ensemble(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(40, 6))
        y = (X[:, 0] > 0).astype(float)
        model = baseline8(X, y, "classify", seed=0, params=GbtParams(n_trees=5))
        assert isinstance(model, TreeEnsemble)

    def test_regress_returns_linear(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(40, 3))
        y = X @ np.array([1.0, -2.0, 0.5]) + 4.0
        model = baseline8(X, y, "regress")
        assert isinstance(model, LinearModel)
        np.testing.assert_allclose(model.theta, [4.0, 1.0, -2.0, 0.5], atol=1e-8)

    def test_unknown_task(self):
        with pytest.raises(DataError, match="task"):
            baseline8(np.zeros((2, 1)), np.array([0.0, 1.0]), "cluster")


class TestRecommendDuration:
    def test_paper_style_buffer(self):
        buffers = {TimePoint.TP1: 101.0, TimePoint.TP4: 78.0}
        assert recommend_duration(200.0, TimePoint.TP4, buffers) == 278

    def test_zero_buffer_identity_on_whole_days(self):
        assert recommend_duration(200.0, "tp1", {"tp1": 0.0}) == 200

    def test_rounds_up(self):
        assert recommend_duration(10.2, "tp2", {"tp2": 0.5}) == 11

    def test_missing_entry(self):
        with pytest.raises(DataError, match="buffer"):
            recommend_duration(10.0, TimePoint.TP2, {TimePoint.TP1: 1.0})
