import numpy as np
import pytest

from fulfillkit.artifacts import (
    Provenance,
    load_classifier,
    load_regressor,
    load_semantic_model,
    read_feature_matrix,
    save_classifier,
    save_regressor,
    save_semantic_model,
    schema_sidecar_path,
    write_boruta_result,
    write_difficulty_report,
    write_eval_report,
    write_feature_matrix,
    write_vif_report,
)
from fulfillkit.clustering import ClusterModel, DifficultyReport, SemanticModel
from fulfillkit.embeddings import EmbeddingTable
from fulfillkit.errors import DataError
from fulfillkit.evaluation import evaluate_classification, EvalReport
from fulfillkit.features import FeatureContext, FeatureMatrix, FeatureSpec, TimePoint
from fulfillkit.models import (
    GbtParams,
    boxcox_apply,
    boxcox_fit,
    enet_fit,
    gbt_fit,
    gbt_predict,
)
from fulfillkit.selection import boruta_select, vif_eliminate
from fulfillkit.synth import SynthConfig, generate_synthetic

PROV = Provenance(config_hash="cafef00dcafef00d", master_seed=7)


def random_block(n=80, p=5, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = (X[:, 0] + 0.5 * X[:, 1] + rng.normal(scale=0.2, size=n) > 0).astype(float)
    return X, y


class TestClassifierDocument:
    def test_round_trip_predictions_identical(self, tmp_path):
        X, y = random_block()
        model = gbt_fit(X, y, GbtParams(n_trees=12, depth=3), seed=3,
                        feature_names=[f"f{i}" for i in range(X.shape[1])])
        path = tmp_path / "classifier.json"
        save_classifier(model, path, PROV)
        again = load_classifier(path)
        np.testing.assert_array_equal(gbt_predict(model, X), gbt_predict(again, X))
        assert again.feature_names == model.feature_names
        assert again.n_features == model.n_features

    def test_provenance_embedded(self, tmp_path):
        X, y = random_block()
        model = gbt_fit(X, y, GbtParams(n_trees=2, depth=2), seed=3)
        path = tmp_path / "classifier.json"
        save_classifier(model, path, PROV)
        text = path.read_text()
        assert '"config_hash": "cafef00dcafef00d"' in text
        assert '"master_seed": 7' in text

    def test_wrong_kind_rejected(self, tmp_path):
        X, y = random_block()
        model = gbt_fit(X, y, GbtParams(n_trees=2, depth=2), seed=3)
        path = tmp_path / "model.json"
        save_classifier(model, path, PROV)
        with pytest.raises(DataError, match="regressor"):
            load_regressor(path)

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("not json at all")
        with pytest.raises(DataError):
            load_classifier(path)


class TestRegressorDocument:
    def test_round_trip_predictions_identical(self, tmp_path):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(120, 4))
        y = np.exp(0.4 * X[:, 0] + rng.normal(scale=0.05, size=120)) * 30
        transform = boxcox_fit(X, y)
        z = boxcox_apply(y, transform)
        model = enet_fit(X, z, 0.01, 0.1, feature_names=("a", "b", "c", "d"))
        path = tmp_path / "regressor.json"
        save_regressor(model, transform, path, PROV, medians=[0.5, 0.0, 1.0, 2.0])
        model2, transform2, medians = load_regressor(path)
        np.testing.assert_array_equal(model.predict(X), model2.predict(X))
        assert transform2.lambda_ == transform.lambda_
        assert transform2.geometric_mean == transform.geometric_mean
        np.testing.assert_array_equal(medians, [0.5, 0.0, 1.0, 2.0])

    def test_bit_exact_reals(self, tmp_path):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(60, 3))
        y = X @ np.array([1 / 3, -2 / 7, 0.1]) + 5.0
        model = enet_fit(X, y, 0.0, 0.0)
        transform = boxcox_fit(X, np.abs(y) + 1.0)
        path = tmp_path / "regressor.json"
        save_regressor(model, transform, path, PROV)
        model2, _, medians = load_regressor(path)
        np.testing.assert_array_equal(model.coef_std, model2.coef_std)
        np.testing.assert_array_equal(model.x_mean, model2.x_mean)
        assert model.y_mean == model2.y_mean
        assert medians is None


class TestSemanticModelDocument:
    def test_round_trip_assignments_identical(self, tmp_path):
        rng = np.random.default_rng(2)
        word = ClusterModel(k=4, centers=rng.normal(size=(4, 6)))
        reward = ClusterModel(k=3, centers=rng.normal(size=(3, 4)))
        model = SemanticModel(word_model=word, reward_model=reward)
        path = tmp_path / "semantic.json"
        save_semantic_model(model, path, PROV)
        again = load_semantic_model(path)
        pts = rng.normal(size=(50, 6))
        np.testing.assert_array_equal(
            model.word_model.assign(pts), again.word_model.assign(pts)
        )
        np.testing.assert_array_equal(word.centers, again.word_model.centers)
        assert again.k1 == 4 and again.k2 == 3


class TestFeatureMatrixCsv:
    def matrix(self):
        specs = (
            FeatureSpec("goal", TimePoint.TP1),
            FeatureSpec("smog_bio", TimePoint.TP1, log_transform=False),
            FeatureSpec("backers", TimePoint.TP2),
        )
        values = np.array([[1.5, float("nan"), 10.0], [2.5, 8.25, 0.0]])
        return FeatureMatrix(
            ids=("p1", "p2"), specs=specs, values=values, tp=TimePoint.TP2
        )

    def test_round_trip(self, tmp_path):
        matrix = self.matrix()
        path = tmp_path / "features_tp2.csv"
        write_feature_matrix(matrix, path, PROV)
        again = read_feature_matrix(path)
        assert again.ids == matrix.ids
        assert again.specs == matrix.specs
        assert again.tp is TimePoint.TP2
        np.testing.assert_array_equal(again.values, matrix.values)

    def test_sidecar_carries_schema(self, tmp_path):
        path = tmp_path / "features_tp2.csv"
        write_feature_matrix(self.matrix(), path, PROV)
        sidecar = schema_sidecar_path(path)
        assert sidecar.name == "features_tp2.schema.json"
        text = sidecar.read_text()
        assert '"availability": "tp2"' in text
        assert '"log_transform": false' in text

    def test_header_mismatch_rejected(self, tmp_path):
        path = tmp_path / "features_tp2.csv"
        write_feature_matrix(self.matrix(), path, PROV)
        body = path.read_text().replace("smog_bio", "smog_bogus")
        path.write_text(body)
        with pytest.raises(DataError, match="schema sidecar"):
            read_feature_matrix(path)


class TestSelectionReports:
    def test_vif_csv(self, tmp_path):
        rng = np.random.default_rng(1)
        base = rng.normal(size=(60, 3))
        X = np.column_stack([base, base[:, 0] + base[:, 1]])
        kept, report = vif_eliminate(X)
        path = tmp_path / "vif.csv"
        write_vif_report(kept, report, path, PROV)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# tool_version:")
        assert lines[3] == "feature,statistic,status"
        statuses = [ln.split(",")[2] for ln in lines[4:]]
        assert "eliminated" in statuses and "kept" in statuses

    def test_boruta_csv_ranked_by_z(self, tmp_path):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(120, 4))
        y = (X[:, 2] > 0).astype(float)
        result = boruta_select(X, y, n_runs=20, seed=3, n_trees=30, max_depth=4)
        path = tmp_path / "boruta.csv"
        write_boruta_result(result, path, PROV)
        _, rows = [], []
        for line in path.read_text().splitlines():
            if not line.startswith("#") and not line.startswith("feature"):
                rows.append(line.split(","))
        zs = [float(r[1]) for r in rows]
        assert zs == sorted(zs, reverse=True)
        assert rows[0][0] == "2"


class TestDifficultyReportCsv:
    def test_columns_and_missing_probability(self, tmp_path):
        report = DifficultyReport(
            counts=(5, 0, 3), p_cluster=(0.625, 0.0, 0.375), p_on_time=(0.8, None, 0.5)
        )
        path = tmp_path / "difficulty.csv"
        write_difficulty_report(report, path, PROV)
        lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
        assert lines[0] == "cluster,count,probability"
        assert lines[1] == "0,5,0.8"
        assert lines[2] == "1,0,"


@pytest.fixture(scope="module")
def outcome(tmp_path_factory):
    corpus, _ = generate_synthetic(SynthConfig(n_projects=60), seed=4)
    table = EmbeddingTable(
        vocab={"shirt": 0, "game": 1}, vectors=np.array([[0.0] * 6, [1.0] * 6])
    )
    context = FeatureContext(
        semantic_model=SemanticModel(
            word_model=ClusterModel(k=2, centers=np.array([[0.0] * 6, [1.0] * 6])),
            reward_model=ClusterModel(k=2, centers=np.array([[0.0, 5.0], [5.0, 0.0]])),
        ),
        embedding_table=table,
        n_slots=3,
    )
    ev = evaluate_classification(
        corpus, context, "tp4", k=3, seed=2,
        params=GbtParams(n_trees=8, depth=2), selection="none",
    )
    report = EvalReport(
        seed=2, k=3, classification={"tp4": ev}, regression={}, ablation_table=None
    )
    out = tmp_path_factory.mktemp("eval")
    paths = write_eval_report(report, corpus, out, PROV)
    return corpus, report, out, paths


class TestEvalReportFiles:

    def test_files_written(self, outcome):
        _, _, out, paths = outcome
        names = {p.name for p in paths}
        assert names == {
            "eval_report.csv",
            "eval_report.md",
            "predictions_classification_tp4.csv",
        }

    def test_csv_has_one_row_per_leg(self, outcome):
        _, _, out, _ = outcome
        lines = [
            l for l in (out / "eval_report.csv").read_text().splitlines()
            if not l.startswith("#")
        ]
        assert lines[0].startswith("tp,task,k,accuracy")
        assert len(lines) == 2
        assert lines[1].startswith("tp4,classification,3,")

    def test_markdown_mentions_tables(self, outcome):
        _, _, out, _ = outcome
        text = (out / "eval_report.md").read_text()
        assert "config_hash: cafef00dcafef00d" in text
        assert "| TP | Accuracy |" in text
        assert "TP4" in text

    def test_prediction_dump_complete(self, outcome):
        corpus, report, out, _ = outcome
        lines = [
            l for l in (out / "predictions_classification_tp4.csv").read_text().splitlines()
            if not l.startswith("#")
        ]
        assert lines[0] == "project_id,fold,probability_on_time,on_time"
        assert len(lines) - 1 == len(report.classification["tp4"].predictions)
        folds = {int(l.split(",")[1]) for l in lines[1:]}
        assert folds == {0, 1, 2}

    def test_rewrite_is_byte_identical(self, outcome):
        corpus, report, out, _ = outcome
        before = (out / "eval_report.csv").read_bytes()
        write_eval_report(report, corpus, out, PROV)
        assert (out / "eval_report.csv").read_bytes() == before
