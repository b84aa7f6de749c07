"""Artifact serialization: model documents, feature tables, and reports.

Every file carries provenance (tool version, config hash, master seed):
JSON documents under a ``_meta`` key, line-oriented files as leading ``#``
comment lines, markdown as an HTML comment. Reals are written with repr
precision so reloading reproduces the exact float64 values, which is what
makes same-seed reruns byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .clustering import ClusterModel, DifficultyReport, SemanticModel
from .corpus import Corpus
from .errors import DataError
from .evaluation import (
    AblationTable,
    ClassificationEval,
    EvalReport,
    RegressionEval,
)
from .features import FeatureMatrix, FeatureSpec, TimePoint
from .models import BoxCoxTransform, ElasticNetModel
from .models.trees import TreeEnsemble, _Node
from .selection import BorutaResult, VifReport

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Provenance:
    config_hash: str
    master_seed: int
    tool_version: str = __version__

    def as_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "config_hash": self.config_hash,
            "master_seed": self.master_seed,
        }

    def comment_lines(self) -> list[str]:
        return [f"# {key}: {value}" for key, value in self.as_dict().items()]


def _fmt(value) -> str:
    """One cell: repr floats (round-trip exact), empty for None."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _write_csv(
    path: str | Path,
    provenance: Provenance,
    header: Sequence[str],
    rows: Sequence[Sequence],
) -> Path:
    buf = io.StringIO()
    for line in provenance.comment_lines():
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(cell) for cell in row])
    return _write_text(path, buf.getvalue())


def _read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    rows = list(csv.reader(body))
    if not rows:
        raise DataError(f"{path}: no rows")
    return rows[0], rows[1:]


def _dump_json(path: str | Path, document: dict) -> Path:
    text = json.dumps(document, sort_keys=True, separators=(",", ": "), indent=1)
    return _write_text(path, text + "\n")


def _load_json(path: str | Path, kind: str) -> dict:
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: cannot read {kind} document: {exc}") from exc
    if not isinstance(document, dict) or document.get("kind") != kind:
        raise DataError(f"{path}: not a {kind!r} document")
    if document.get("version") != FORMAT_VERSION:
        raise DataError(
            f"{path}: unsupported {kind} document version {document.get('version')!r}"
        )
    return document


def _floats(seq) -> list[float]:
    return [float(x) for x in seq]


# -- classifier ---------------------------------------------------------------


def _flatten_tree(root: _Node) -> dict:
    values, features, thresholds, missing_left, left, right = [], [], [], [], [], []

    def walk(node: _Node) -> int:
        index = len(values)
        values.append(float(node.value))
        features.append(int(node.feature))
        thresholds.append(float(node.threshold))
        missing_left.append(bool(node.missing_left))
        left.append(-1)
        right.append(-1)
        if node.left is not None:
            left[index] = walk(node.left)
        if node.right is not None:
            right[index] = walk(node.right)
        return index

    walk(root)
    return {
        "value": values,
        "feature": features,
        "threshold": thresholds,
        "missing_left": missing_left,
        "left": left,
        "right": right,
    }


def _rebuild_tree(doc: dict, index: int = 0) -> _Node:
    node = _Node(
        value=float(doc["value"][index]),
        feature=int(doc["feature"][index]),
        threshold=float(doc["threshold"][index]),
        missing_left=bool(doc["missing_left"][index]),
    )
    if doc["left"][index] >= 0:
        node.left = _rebuild_tree(doc, doc["left"][index])
    if doc["right"][index] >= 0:
        node.right = _rebuild_tree(doc, doc["right"][index])
    return node


def save_classifier(model: TreeEnsemble, path: str | Path, provenance: Provenance) -> Path:
    document = {
        "_meta": provenance.as_dict(),
        "kind": "classifier",
        "version": FORMAT_VERSION,
        "learning_rate": float(model.learning_rate),
        "base_score": float(model.base_score),
        "n_features": int(model.n_features),
        "feature_names": list(model.feature_names) if model.feature_names else None,
        "trees": [_flatten_tree(t) for t in model.trees],
    }
    return _dump_json(path, document)


def load_classifier(path: str | Path) -> TreeEnsemble:
    doc = _load_json(path, "classifier")
    names = doc.get("feature_names")
    return TreeEnsemble(
        trees=tuple(_rebuild_tree(t) for t in doc["trees"]),
        learning_rate=float(doc["learning_rate"]),
        base_score=float(doc["base_score"]),
        n_features=int(doc["n_features"]),
        feature_names=tuple(names) if names else None,
    )


# -- regressor ----------------------------------------------------------------


def save_regressor(
    model: ElasticNetModel,
    transform: BoxCoxTransform,
    path: str | Path,
    provenance: Provenance,
    medians: Sequence[float] | None = None,
) -> Path:
    """``medians`` are the training-set imputation values, one per model
    feature, so inference can fill missing inputs the same way training did."""
    document = {
        "_meta": provenance.as_dict(),
        "kind": "regressor",
        "version": FORMAT_VERSION,
        "coef_std": _floats(model.coef_std),
        "x_mean": _floats(model.x_mean),
        "x_scale": _floats(model.x_scale),
        "y_mean": float(model.y_mean),
        "lambda1": float(model.lambda1),
        "lambda2": float(model.lambda2),
        "feature_names": list(model.feature_names) if model.feature_names else None,
        "medians": _floats(medians) if medians is not None else None,
        "box_cox": {
            "lambda": float(transform.lambda_),
            "geometric_mean": float(transform.geometric_mean),
            "plain_log": bool(transform.plain_log),
        },
    }
    return _dump_json(path, document)


def load_regressor(
    path: str | Path,
) -> tuple[ElasticNetModel, BoxCoxTransform, np.ndarray | None]:
    doc = _load_json(path, "regressor")
    names = doc.get("feature_names")
    model = ElasticNetModel(
        coef_std=np.array(doc["coef_std"], dtype=float),
        x_mean=np.array(doc["x_mean"], dtype=float),
        x_scale=np.array(doc["x_scale"], dtype=float),
        y_mean=float(doc["y_mean"]),
        lambda1=float(doc["lambda1"]),
        lambda2=float(doc["lambda2"]),
        feature_names=tuple(names) if names else None,
    )
    bc = doc["box_cox"]
    transform = BoxCoxTransform(
        lambda_=float(bc["lambda"]),
        geometric_mean=float(bc["geometric_mean"]),
        plain_log=bool(bc["plain_log"]),
    )
    medians = doc.get("medians")
    return model, transform, (np.array(medians, dtype=float) if medians is not None else None)


# -- semantic model -----------------------------------------------------------


def _cluster_doc(model: ClusterModel) -> dict:
    return {
        "k": int(model.k),
        "dim": int(model.centers.shape[1]),
        "centers": _floats(model.centers.ravel()),
    }


def _cluster_from(doc: dict) -> ClusterModel:
    centers = np.array(doc["centers"], dtype=float).reshape(doc["k"], doc["dim"])
    return ClusterModel(k=int(doc["k"]), centers=centers)


def save_semantic_model(model: SemanticModel, path: str | Path, provenance: Provenance) -> Path:
    document = {
        "_meta": provenance.as_dict(),
        "kind": "semantic_model",
        "version": FORMAT_VERSION,
        "word_model": _cluster_doc(model.word_model),
        "reward_model": _cluster_doc(model.reward_model),
    }
    return _dump_json(path, document)


def load_semantic_model(path: str | Path) -> SemanticModel:
    doc = _load_json(path, "semantic_model")
    return SemanticModel(
        word_model=_cluster_from(doc["word_model"]),
        reward_model=_cluster_from(doc["reward_model"]),
    )


# -- feature matrix -----------------------------------------------------------


def schema_sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".schema.json")


def write_feature_matrix(matrix: FeatureMatrix, path: str | Path, provenance: Provenance) -> Path:
    rows = [
        [pid] + [float(v) for v in matrix.values[i]]
        for i, pid in enumerate(matrix.ids)
    ]
    out = _write_csv(path, provenance, ("project_id",) + matrix.names, rows)
    sidecar = {
        "_meta": provenance.as_dict(),
        "kind": "feature_schema",
        "version": FORMAT_VERSION,
        "tp": matrix.tp.value,
        "transformed": bool(matrix.transformed),
        "columns": [
            {
                "name": spec.name,
                "availability": spec.availability.value,
                "log_transform": bool(spec.log_transform),
            }
            for spec in matrix.specs
        ],
    }
    _dump_json(schema_sidecar_path(path), sidecar)
    return out


def read_feature_matrix(path: str | Path) -> FeatureMatrix:
    sidecar = _load_json(schema_sidecar_path(path), "feature_schema")
    header, rows = _read_csv(path)
    specs = tuple(
        FeatureSpec(
            name=c["name"],
            availability=TimePoint.parse(c["availability"]),
            log_transform=bool(c["log_transform"]),
        )
        for c in sidecar["columns"]
    )
    expected = ("project_id",) + tuple(s.name for s in specs)
    if tuple(header) != expected:
        raise DataError(f"{path}: column header does not match its schema sidecar")
    ids = tuple(row[0] for row in rows)
    values = np.array(
        [[float(cell) for cell in row[1:]] for row in rows], dtype=float
    ).reshape(len(rows), len(specs))
    return FeatureMatrix(
        ids=ids,
        specs=specs,
        values=values,
        tp=TimePoint.parse(sidecar["tp"]),
        transformed=bool(sidecar["transformed"]),
    )


# -- selection and clustering reports ------------------------------------------


def write_difficulty_report(report: DifficultyReport, path: str | Path, provenance: Provenance) -> Path:
    rows = [
        [i, report.counts[i], report.p_on_time[i]]
        for i in range(len(report.counts))
    ]
    return _write_csv(path, provenance, ("cluster", "count", "probability"), rows)


def write_vif_report(
    kept: Sequence[str], report: VifReport, path: str | Path, provenance: Provenance
) -> Path:
    kept_set = set(kept)
    rows = []
    for name, value in report.initial.items():
        if name in report.degenerate:
            status = "degenerate"
        elif name in kept_set:
            status = "kept"
        else:
            status = "eliminated"
        statistic = report.final.get(name, value)
        rows.append([name, statistic, status])
    return _write_csv(path, provenance, ("feature", "statistic", "status"), rows)


def write_boruta_result(result: BorutaResult, path: str | Path, provenance: Provenance) -> Path:
    order = sorted(
        result.statuses,
        key=lambda name: (-result.z_mean[name], name),
    )
    rows = [[name, result.z_mean[name], result.statuses[name]] for name in order]
    return _write_csv(path, provenance, ("feature", "statistic", "status"), rows)


# -- evaluation reports ---------------------------------------------------------


_CLS_COLUMNS = (
    "tp",
    "task",
    "k",
    "accuracy",
    "majority_accuracy",
    "baseline_accuracy",
    "p_vs_majority",
    "p_vs_baseline",
    "rmse",
    "nrmse_range",
    "nrmse_mean",
    "baseline_rmse",
    "baseline_nrmse_range",
    "baseline_nrmse_mean",
)


def _classification_row(tp: str, ev: ClassificationEval) -> list:
    return [
        tp, "classification", ev.k,
        ev.accuracy, ev.majority_accuracy, ev.baseline_accuracy,
        ev.p_vs_majority, ev.p_vs_baseline,
        None, None, None, None, None, None,
    ]


def _regression_row(tp: str, ev: RegressionEval) -> list:
    return [
        tp, "regression", ev.k,
        None, None, None, None, ev.p_vs_baseline,
        ev.rmse, ev.nrmse_range, ev.nrmse_mean,
        ev.baseline_rmse, ev.baseline_nrmse_range, ev.baseline_nrmse_mean,
    ]


def _round(value: float | None, places: int = 4) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    return f"{value:.{places}f}"


def _markdown_report(report: EvalReport) -> str:
    lines = [
        "<!--",
        *(f"{k}: {v}" for k, v in report.provenance.items()),
        "-->",
        "",
        "# Evaluation report",
        "",
        f"Cross-validation: {report.k} folds, master seed {report.seed}.",
        "",
    ]
    if report.classification:
        lines += [
            "## Delivery status (on time vs late)",
            "",
            "| TP | Accuracy | Majority | 8-feature baseline | p vs majority | p vs baseline |",
            "|----|----------|----------|--------------------|---------------|---------------|",
        ]
        for tp, ev in report.classification.items():
            lines.append(
                f"| {tp.upper()} | {_round(ev.accuracy)} | {_round(ev.majority_accuracy)} "
                f"| {_round(ev.baseline_accuracy)} | {_round(ev.p_vs_majority)} "
                f"| {_round(ev.p_vs_baseline)} |"
            )
        lines.append("")
    if report.regression:
        lines += [
            "## Delivery duration (days)",
            "",
            "| TP | RMSE | NRMSE@range | NRMSE@mean | baseline NRMSE@range | p vs baseline |",
            "|----|------|-------------|------------|----------------------|---------------|",
        ]
        for tp, ev in report.regression.items():
            lines.append(
                f"| {tp.upper()} | {_round(ev.rmse, 2)} | {_round(ev.nrmse_range)} "
                f"| {_round(ev.nrmse_mean)} | {_round(ev.baseline_nrmse_range)} "
                f"| {_round(ev.p_vs_baseline)} |"
            )
        lines.append("")
    if report.ablation_table is not None:
        table = report.ablation_table
        lines += [
            "## Feature-group ablation",
            "",
            f"All-feature accuracy at {table.tp.value.upper()}: {_round(table.baseline_accuracy)}.",
            "",
            "| Group removed | Features removed | Accuracy | Delta |",
            "|---------------|------------------|----------|-------|",
        ]
        for row in table.rows:
            lines.append(
                f"| {row.group} | {len(row.excluded)} | {_round(row.accuracy)} "
                f"| {_round(row.delta)} |"
            )
        lines.append("")
    return "\n".join(lines)


def write_eval_report(
    report: EvalReport,
    corpus: Corpus,
    out_dir: str | Path,
    provenance: Provenance,
) -> list[Path]:
    """CSV + markdown summary plus per-fold raw prediction dumps."""
    out_dir = Path(out_dir)
    written: list[Path] = []
    rows: list[list] = []
    for tp, ev in report.classification.items():
        rows.append(_classification_row(tp, ev))
    for tp, ev in report.regression.items():
        rows.append(_regression_row(tp, ev))
    written.append(_write_csv(out_dir / "eval_report.csv", provenance, _CLS_COLUMNS, rows))

    md = _markdown_report(
        _ReportView(report, provenance.as_dict())
    )
    written.append(_write_text(out_dir / "eval_report.md", md))

    for tp, ev in report.classification.items():
        fold_of = {pid: i for i, fold in enumerate(ev.folds) for pid in fold.test_ids}
        pred_rows = [
            [pid, fold_of[pid], prob, int(corpus.labels[pid].on_time)]
            for pid, prob in sorted(ev.predictions.items())
        ]
        written.append(
            _write_csv(
                out_dir / f"predictions_classification_{tp}.csv",
                provenance,
                ("project_id", "fold", "probability_on_time", "on_time"),
                pred_rows,
            )
        )
    for tp, ev in report.regression.items():
        fold_of = {pid: i for i, fold in enumerate(ev.folds) for pid in fold.test_ids}
        pred_rows = [
            [pid, fold_of[pid], days, corpus.labels[pid].actual_duration_days]
            for pid, days in sorted(ev.predictions.items())
        ]
        written.append(
            _write_csv(
                out_dir / f"predictions_regression_{tp}.csv",
                provenance,
                ("project_id", "fold", "predicted_days", "actual_days"),
                pred_rows,
            )
        )
    if report.ablation_table is not None:
        written.append(
            write_ablation_table(report.ablation_table, out_dir / "ablation.csv", provenance)
        )
    return written


def write_ablation_table(table: AblationTable, path: str | Path, provenance: Provenance) -> Path:
    rows = [["(none)", 0, table.baseline_accuracy, 0.0]] + [
        [row.group, len(row.excluded), row.accuracy, row.delta]
        for row in table.rows
    ]
    return _write_csv(
        path, provenance, ("group_removed", "features_removed", "accuracy", "delta"), rows
    )


@dataclass(frozen=True)
class PredictionRow:
    """One time point of a per-project forecast.

    Metric fields are None when the time point lies beyond the data
    available for the project (no events yet, or a cutoff in the future).
    """

    tp: str
    available: bool
    probability_on_time: float | None
    estimated_days: float | None
    buffered_days: float | None


def write_prediction(
    rows: Sequence[PredictionRow], path: str | Path, provenance: Provenance
) -> Path:
    table = [
        [
            row.tp,
            "true" if row.available else "false",
            row.probability_on_time,
            row.estimated_days,
            row.buffered_days,
        ]
        for row in rows
    ]
    return _write_csv(
        path,
        provenance,
        ("tp", "available", "probability_on_time", "estimated_days", "buffered_days"),
        table,
    )


class _ReportView:
    """EvalReport plus the provenance mapping the markdown header needs."""

    def __init__(self, report: EvalReport, provenance: dict):
        self.k = report.k
        self.seed = report.seed
        self.classification = report.classification
        self.regression = report.regression
        self.ablation_table = report.ablation_table
        self.provenance = provenance
