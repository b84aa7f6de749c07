"""Cross-validated evaluation: folds, metrics, model harnesses, ablation.

Anything fitted from labels or value distributions (imputation medians,
variance-inflation drops, Boruta, stepwise search, Box-Cox parameters,
elastic-net grids) is learned inside each training fold and only applied to
the held-out fold. Baselines share the exact fold splits, so significance
tests are paired by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DataError
from .features import (
    FeatureContext,
    TimePoint,
    extract_matrix,
    log1p_matrix,
)
from .models import (
    GbtParams,
    baseline_feature_matrix,
    boxcox_apply,
    boxcox_fit,
    enet_fit_cv,
    enet_predict,
    gbt_fit,
    gbt_predict,
    linear_fit,
    majority_baseline,
)
from .selection import boruta_select, stepwise_aic, vif_eliminate
from .stats import welch_t_test, wilcoxon_test

__all__ = [
    "AblationRow",
    "AblationTable",
    "ClassificationEval",
    "ClassificationFold",
    "EvalReport",
    "RegressionEval",
    "RegressionFold",
    "RegressionMetrics",
    "ablation",
    "accuracy",
    "evaluate_all",
    "evaluate_classification",
    "evaluate_regression",
    "kfold_split",
    "regression_metrics",
    "standard_feature_groups",
    "welch_t_test",
    "wilcoxon_test",
]

DEFAULT_FOLDS = 10
SELECTION_MODES = ("none", "vif", "vif_boruta")
FEATURE_GROUPS = ("creator_activeness", "backer_activeness", "linguistic", "semantic")


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


# --------------------------------------------------------------------------
# Folds and metrics


def kfold_split(
    ids: Sequence[str],
    k: int,
    stratify_on: Sequence | None = None,
    seed: int = 0,
) -> tuple[tuple, ...]:
    """Split ids into k disjoint folds with sizes differing by at most one.

    With ``stratify_on``, each label value is dealt separately so every fold
    holds its class count to within one sample. Each item goes to the
    currently smallest fold (ties to the lowest fold index), which keeps both
    balance properties at every step.
    """
    items = list(ids)
    n = len(items)
    if k < 1 or k > n:
        raise DataError(f"k must be in [1, {n}], got {k}")
    if stratify_on is not None and len(stratify_on) != n:
        raise DataError("stratify_on must align with ids")

    if stratify_on is None:
        groups = [list(range(n))]
    else:
        marks = list(stratify_on)
        groups = [
            [i for i, m in enumerate(marks) if m == value]
            for value in sorted(set(marks))
        ]

    rng = np.random.default_rng(seed)
    folds: list[list] = [[] for _ in range(k)]
    loads = np.zeros(k, dtype=int)
    for members in groups:
        order = rng.permutation(len(members))
        for pos in order:
            target = int(np.argmin(loads))
            folds[target].append(items[members[pos]])
            loads[target] += 1
    return tuple(tuple(f) for f in folds)


def accuracy(pred, truth) -> float:
    p = np.asarray(pred, dtype=float)
    t = np.asarray(truth, dtype=float)
    if p.shape != t.shape or p.ndim != 1:
        raise DataError("pred and truth must be equal-length vectors")
    if p.size == 0:
        raise DataError("empty vectors have no accuracy")
    return float(np.mean(p == t))


class RegressionMetrics(NamedTuple):
    """RMSE plus its range- and mean-normalized variants.

    A degenerate denominator (constant truth, zero-mean truth) makes the
    affected variant NaN; the others stay defined.
    """

    rmse: float
    nrmse_range: float
    nrmse_mean: float


def regression_metrics(pred_days, truth_days) -> RegressionMetrics:
    p = np.asarray(pred_days, dtype=float)
    t = np.asarray(truth_days, dtype=float)
    if p.shape != t.shape or p.ndim != 1:
        raise DataError("pred and truth must be equal-length vectors")
    if p.size == 0:
        raise DataError("empty vectors have no error")
    rmse = float(np.sqrt(np.mean((p - t) ** 2)))
    spread = float(t.max() - t.min())
    mean = float(t.mean())
    return RegressionMetrics(
        rmse=rmse,
        nrmse_range=rmse / spread if spread > 0 else float("nan"),
        nrmse_mean=rmse / mean if mean != 0 else float("nan"),
    )


# --------------------------------------------------------------------------
# Shared fold plumbing


def _column_medians(values: np.ndarray) -> np.ndarray:
    out = np.zeros(values.shape[1])
    for j in range(values.shape[1]):
        col = values[:, j]
        finite = col[np.isfinite(col)]
        if finite.size:
            out[j] = float(np.median(finite))
    return out


def _imputed(values: np.ndarray, medians: np.ndarray) -> np.ndarray:
    out = values.copy()
    mask = ~np.isfinite(out)
    out[mask] = np.broadcast_to(medians, out.shape)[mask]
    return out


def _check_selection(selection: str, allowed: tuple[str, ...]) -> None:
    if selection not in allowed:
        raise DataError(f"selection must be one of {allowed}, got {selection!r}")


def _selected_indices(
    train_values: np.ndarray,
    names: tuple[str, ...],
    y_train: np.ndarray,
    selection: str,
    seed: int,
    vif_threshold: float,
    boruta_runs: int,
    boruta_alpha: float,
    boruta_trees: int,
    boruta_depth: int | None,
) -> list[int]:
    if selection == "none":
        return list(range(len(names)))
    imputed = _imputed(train_values, _column_medians(train_values))
    kept, _ = vif_eliminate(imputed, threshold=vif_threshold)
    indices = sorted(kept)
    if selection == "vif_boruta":
        result = boruta_select(
            train_values[:, indices],
            y_train,
            n_runs=boruta_runs,
            alpha=boruta_alpha,
            seed=seed,
            n_trees=boruta_trees,
            max_depth=boruta_depth,
        )
        confirmed = set(result.features_with("confirmed"))
        indices = [idx for pos, idx in enumerate(indices) if pos in confirmed]
        if not indices:
            raise DataError("selection confirmed no features")
    return indices


def _fold_membership(ids: Sequence[str], folds: tuple[tuple, ...]) -> list[np.ndarray]:
    row_of = {pid: i for i, pid in enumerate(ids)}
    return [np.array([row_of[pid] for pid in fold], dtype=int) for fold in folds]


# --------------------------------------------------------------------------
# Classification harness


@dataclass(frozen=True)
class ClassificationFold:
    test_ids: tuple[str, ...]
    model_accuracy: float
    majority_accuracy: float
    baseline_accuracy: float
    retained: tuple[str, ...]


@dataclass(frozen=True)
class ClassificationEval:
    tp: TimePoint
    k: int
    seed: int
    selection: str
    folds: tuple[ClassificationFold, ...]
    accuracy: float
    majority_accuracy: float
    baseline_accuracy: float
    p_vs_majority: float
    p_vs_baseline: float
    predictions: dict


def _gbt_fold_run(
    values: np.ndarray,
    names: tuple[str, ...],
    y: np.ndarray,
    fold_rows: list[np.ndarray],
    seed: int,
    params: GbtParams,
    selection: str,
    vif_threshold: float,
    boruta_runs: int,
    boruta_alpha: float,
    boruta_trees: int,
    boruta_depth: int | None,
) -> tuple[list[float], list[tuple[str, ...]], np.ndarray]:
    """Train/score one gradient-boosted model per fold.

    Returns per-fold accuracy, per-fold retained feature names, and the
    out-of-fold probability for every row.
    """
    n = values.shape[0]
    out_prob = np.full(n, float("nan"))
    accs: list[float] = []
    retained_names: list[tuple[str, ...]] = []
    for f, test_rows in enumerate(fold_rows):
        train_mask = np.ones(n, dtype=bool)
        train_mask[test_rows] = False
        train_rows = np.flatnonzero(train_mask)
        fold_seed = _fold_seed(seed, f)
        indices = _selected_indices(
            values[train_rows],
            names,
            y[train_rows],
            selection,
            fold_seed,
            vif_threshold,
            boruta_runs,
            boruta_alpha,
            boruta_trees,
            boruta_depth,
        )
        model = gbt_fit(
            values[np.ix_(train_rows, indices)],
            y[train_rows],
            params=params,
            seed=fold_seed,
            feature_names=[names[i] for i in indices],
        )
        prob = gbt_predict(model, values[np.ix_(test_rows, indices)])
        out_prob[test_rows] = prob
        accs.append(accuracy((prob > 0.5).astype(float), y[test_rows]))
        retained_names.append(tuple(names[i] for i in indices))
    return accs, retained_names, out_prob


def evaluate_classification(
    corpus,
    context: FeatureContext,
    tp: TimePoint | str,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
    params: GbtParams | None = None,
    selection: str = "vif",
    vif_threshold: float = 10.0,
    boruta_runs: int = 100,
    boruta_alpha: float = 0.05,
    boruta_trees: int = 300,
    boruta_depth: int | None = None,
    pairing: str = "fold",
) -> ClassificationEval:
    """K-fold on-time/late evaluation against both baselines.

    Reports mean fold accuracy for the boosted model, the majority-class
    constant, and the core-feature model, plus one-sided signed-rank
    p-values that the model beats each baseline. ``pairing`` chooses the
    significance pairing unit: per-fold accuracies or per-project
    correctness.
    """
    tp = TimePoint.parse(tp)
    _check_selection(selection, SELECTION_MODES)
    if pairing not in ("fold", "project"):
        raise DataError(f"pairing must be fold or project, got {pairing!r}")
    params = params or GbtParams()

    ids = corpus.labeled_ids()
    if len(ids) < k:
        raise DataError(f"need at least {k} labeled projects, got {len(ids)}")
    y = np.array([1.0 if corpus.labels[pid].on_time else 0.0 for pid in ids])

    matrix = log1p_matrix(extract_matrix(corpus, context, tp, ids))
    base_matrix = baseline_feature_matrix(corpus, tp, ids)
    folds = kfold_split(ids, k, stratify_on=y, seed=seed)
    fold_rows = _fold_membership(ids, folds)

    model_accs, retained, model_prob = _gbt_fold_run(
        matrix.values, matrix.names, y, fold_rows, seed, params, selection,
        vif_threshold, boruta_runs, boruta_alpha, boruta_trees, boruta_depth,
    )
    base_accs, _, base_prob = _gbt_fold_run(
        base_matrix.values, base_matrix.names, y, fold_rows, seed, params,
        "none", vif_threshold, boruta_runs, boruta_alpha, boruta_trees,
        boruta_depth,
    )

    majority_accs: list[float] = []
    majority_pred = np.full(len(ids), float("nan"))
    for test_rows in fold_rows:
        train_mask = np.ones(len(ids), dtype=bool)
        train_mask[test_rows] = False
        constant = majority_baseline(y[train_mask])
        pred = constant.predict(np.empty((len(test_rows), 0)))
        majority_pred[test_rows] = pred
        majority_accs.append(accuracy(pred, y[test_rows]))

    if pairing == "fold":
        p_major = wilcoxon_test(model_accs, majority_accs, alternative="greater")
        p_base = wilcoxon_test(model_accs, base_accs, alternative="greater")
    else:
        correct_model = ((model_prob > 0.5).astype(float) == y).astype(float)
        correct_major = (majority_pred == y).astype(float)
        correct_base = ((base_prob > 0.5).astype(float) == y).astype(float)
        p_major = wilcoxon_test(correct_model, correct_major, alternative="greater")
        p_base = wilcoxon_test(correct_model, correct_base, alternative="greater")

    fold_records = tuple(
        ClassificationFold(
            test_ids=folds[f],
            model_accuracy=model_accs[f],
            majority_accuracy=majority_accs[f],
            baseline_accuracy=base_accs[f],
            retained=retained[f],
        )
        for f in range(k)
    )
    return ClassificationEval(
        tp=tp,
        k=k,
        seed=seed,
        selection=selection,
        folds=fold_records,
        accuracy=float(np.mean(model_accs)),
        majority_accuracy=float(np.mean(majority_accs)),
        baseline_accuracy=float(np.mean(base_accs)),
        p_vs_majority=p_major,
        p_vs_baseline=p_base,
        predictions={pid: float(model_prob[i]) for i, pid in enumerate(ids)},
    )


# --------------------------------------------------------------------------
# Regression harness


@dataclass(frozen=True)
class RegressionFold:
    test_ids: tuple[str, ...]
    metrics: RegressionMetrics
    baseline_metrics: RegressionMetrics
    box_cox_lambda: float
    retained: tuple[str, ...]


@dataclass(frozen=True)
class RegressionEval:
    tp: TimePoint
    k: int
    seed: int
    selection: str
    stepwise: bool
    folds: tuple[RegressionFold, ...]
    rmse: float
    nrmse_range: float
    nrmse_mean: float
    baseline_rmse: float
    baseline_nrmse_range: float
    baseline_nrmse_mean: float
    p_vs_baseline: float
    predictions: dict


def evaluate_regression(
    corpus,
    context: FeatureContext,
    tp: TimePoint | str,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
    selection: str = "vif",
    vif_threshold: float = 10.0,
    stepwise: bool = True,
    lambda1_grid: Sequence[float] | None = None,
    lambda2_grid: Sequence[float] | None = None,
) -> RegressionEval:
    """K-fold delivery-duration evaluation against plain linear regression.

    Pipeline per training fold: impute medians, variance-inflation drops,
    Box-Cox the target, stepwise feature search on the transformed target,
    elastic net with an inner grid search; predictions invert the transform
    and floor at one day. Only projects with an observed duration are used.
    """
    tp = TimePoint.parse(tp)
    _check_selection(selection, ("none", "vif"))

    ids = [
        pid
        for pid in corpus.labeled_ids()
        if corpus.labels[pid].actual_duration_days is not None
    ]
    if len(ids) < k:
        raise DataError(f"need at least {k} projects with durations, got {len(ids)}")
    y_days = np.array([float(corpus.labels[pid].actual_duration_days) for pid in ids])

    matrix = log1p_matrix(extract_matrix(corpus, context, tp, ids))
    names = matrix.names
    base_matrix = baseline_feature_matrix(corpus, tp, ids)
    folds = kfold_split(ids, k, seed=seed)
    fold_rows = _fold_membership(ids, folds)

    n = len(ids)
    out_days = np.full(n, float("nan"))
    fold_records: list[RegressionFold] = []
    base_fold_metrics: list[RegressionMetrics] = []
    for f, test_rows in enumerate(fold_rows):
        train_mask = np.ones(n, dtype=bool)
        train_mask[test_rows] = False
        train_rows = np.flatnonzero(train_mask)
        fold_seed = _fold_seed(seed, f)

        medians = _column_medians(matrix.values[train_rows])
        train_vals = _imputed(matrix.values[train_rows], medians)
        test_vals = _imputed(matrix.values[test_rows], medians)

        if selection == "vif":
            kept, _ = vif_eliminate(train_vals, threshold=vif_threshold)
            indices = sorted(kept)
        else:
            indices = list(range(len(names)))
        X_train = train_vals[:, indices]
        X_test = test_vals[:, indices]

        transform = boxcox_fit(X_train, y_days[train_rows])
        z_train = boxcox_apply(y_days[train_rows], transform)

        if stepwise:
            picked = stepwise_aic(X_train, z_train)
            positions = sorted(picked)
        else:
            positions = list(range(X_train.shape[1]))
        retained = tuple(names[indices[p]] for p in positions)
        if positions:
            X_fit = X_train[:, positions]
            X_eval = X_test[:, positions]
        else:
            # intercept-only fallback: a constant column carries no slope
            X_fit = np.zeros((len(train_rows), 1))
            X_eval = np.zeros((len(test_rows), 1))

        grids = {}
        if lambda1_grid is not None:
            grids["grid1"] = lambda1_grid
        if lambda2_grid is not None:
            grids["grid2"] = lambda2_grid
        model = enet_fit_cv(X_fit, z_train, seed=fold_seed, **grids)
        pred_days = enet_predict(model, transform, X_eval)
        out_days[test_rows] = pred_days
        fold_metric = regression_metrics(pred_days, y_days[test_rows])

        base_model = linear_fit(base_matrix.values[train_rows], y_days[train_rows])
        base_pred = np.maximum(base_model.predict(base_matrix.values[test_rows]), 1.0)
        base_metric = regression_metrics(base_pred, y_days[test_rows])
        base_fold_metrics.append(base_metric)

        fold_records.append(
            RegressionFold(
                test_ids=folds[f],
                metrics=fold_metric,
                baseline_metrics=base_metric,
                box_cox_lambda=float(transform.lambda_),
                retained=retained,
            )
        )

    model_nrmse = [r.metrics.nrmse_range for r in fold_records]
    base_nrmse = [m.nrmse_range for m in base_fold_metrics]
    return RegressionEval(
        tp=tp,
        k=k,
        seed=seed,
        selection=selection,
        stepwise=stepwise,
        folds=tuple(fold_records),
        rmse=float(np.mean([r.metrics.rmse for r in fold_records])),
        nrmse_range=float(np.mean(model_nrmse)),
        nrmse_mean=float(np.mean([r.metrics.nrmse_mean for r in fold_records])),
        baseline_rmse=float(np.mean([m.rmse for m in base_fold_metrics])),
        baseline_nrmse_range=float(np.mean(base_nrmse)),
        baseline_nrmse_mean=float(np.mean([m.nrmse_mean for m in base_fold_metrics])),
        p_vs_baseline=wilcoxon_test(base_nrmse, model_nrmse, alternative="greater"),
        predictions={pid: float(out_days[i]) for i, pid in enumerate(ids)},
    )


# --------------------------------------------------------------------------
# Ablation


@dataclass(frozen=True)
class AblationRow:
    group: str
    excluded: tuple[str, ...]
    accuracy: float
    delta: float


@dataclass(frozen=True)
class AblationTable:
    tp: TimePoint
    k: int
    seed: int
    baseline_accuracy: float
    rows: tuple[AblationRow, ...]


def standard_feature_groups(names: Sequence[str]) -> dict[str, tuple[str, ...]]:
    """The four ablatable feature groups present in a schema.

    Core descriptors (goal, category, counts fixed at launch) belong to no
    group and survive every exclusion.
    """
    creator = {
        "updates",
        "creator_comments",
        "creator_updates",
        "creator_comments_tp4",
        "creator_updates_tp4",
        "update_interval_avg",
        "response_latency_avg",
    }
    backer = {
        "backers",
        "comments",
        "backer_comments_tp4",
        "commenting_backers_tp4",
        "backer_questions_tp4",
    }
    linguistic = {"reward_sentences", "bio_sentences"}
    groups = {
        "creator_activeness": [n for n in names if n in creator],
        "backer_activeness": [
            n for n in names if n in backer or n.startswith("slot_")
        ],
        "linguistic": [
            n
            for n in names
            if n in linguistic or n.startswith("smog_") or n.startswith("liwc_")
        ],
        "semantic": [n for n in names if n.startswith("semantic_")],
    }
    return {name: tuple(members) for name, members in groups.items()}


def ablation(
    corpus,
    context: FeatureContext,
    tp: TimePoint | str = TimePoint.TP4,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
    params: GbtParams | None = None,
    selection: str = "vif",
    groups: dict | None = None,
    vif_threshold: float = 10.0,
) -> AblationTable:
    """Drop one feature group at a time and re-run the classification CV.

    Every run reuses the identical fold splits, so each row's ``delta`` is a
    paired comparison against the all-features accuracy.
    """
    tp = TimePoint.parse(tp)
    _check_selection(selection, ("none", "vif"))
    params = params or GbtParams()

    ids = corpus.labeled_ids()
    if len(ids) < k:
        raise DataError(f"need at least {k} labeled projects, got {len(ids)}")
    y = np.array([1.0 if corpus.labels[pid].on_time else 0.0 for pid in ids])
    matrix = log1p_matrix(extract_matrix(corpus, context, tp, ids))
    names = matrix.names

    chosen = groups if groups is not None else standard_feature_groups(names)
    for group, members in chosen.items():
        unknown = set(members) - set(names)
        if unknown:
            raise DataError(f"group {group!r} names unknown features: {sorted(unknown)}")

    folds = kfold_split(ids, k, stratify_on=y, seed=seed)
    fold_rows = _fold_membership(ids, folds)

    def cv_accuracy(keep: list[int]) -> float:
        accs, _, _ = _gbt_fold_run(
            matrix.values[:, keep],
            tuple(names[i] for i in keep),
            y, fold_rows, seed, params, selection, vif_threshold,
            100, 0.05, 300, None,
        )
        return float(np.mean(accs))

    base_accuracy = cv_accuracy(list(range(len(names))))
    rows = []
    for group in chosen:
        excluded = set(chosen[group])
        keep = [i for i, name in enumerate(names) if name not in excluded]
        if not keep:
            raise DataError(f"excluding group {group!r} removes every feature")
        acc = cv_accuracy(keep)
        rows.append(
            AblationRow(
                group=group,
                excluded=tuple(chosen[group]),
                accuracy=acc,
                delta=acc - base_accuracy,
            )
        )
    return AblationTable(
        tp=tp, k=k, seed=seed, baseline_accuracy=base_accuracy, rows=tuple(rows)
    )


# --------------------------------------------------------------------------
# Combined report


@dataclass(frozen=True)
class EvalReport:
    seed: int
    k: int
    classification: dict
    regression: dict
    ablation_table: AblationTable | None


def evaluate_all(
    corpus,
    context: FeatureContext,
    tps: Sequence[TimePoint | str] = tuple(TimePoint),
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
    params: GbtParams | None = None,
    selection: str = "vif",
    stepwise: bool = True,
    pairing: str = "fold",
    include_ablation: bool = False,
    vif_threshold: float = 10.0,
    boruta_runs: int = 100,
    boruta_alpha: float = 0.05,
    boruta_trees: int = 300,
) -> EvalReport:
    """Run both harnesses at each time point; one report object out.

    The regression and ablation legs support collinearity screening but not
    the shadow-feature step, so ``vif_boruta`` degrades to ``vif`` for them.
    """
    _check_selection(selection, ("none", "vif", "vif_boruta"))
    linear_selection = "none" if selection == "none" else "vif"
    classification = {}
    regression = {}
    for tp in tps:
        tp = TimePoint.parse(tp)
        classification[tp.value] = evaluate_classification(
            corpus, context, tp, k=k, seed=seed, params=params,
            selection=selection, vif_threshold=vif_threshold,
            boruta_runs=boruta_runs, boruta_alpha=boruta_alpha,
            boruta_trees=boruta_trees, pairing=pairing,
        )
        regression[tp.value] = evaluate_regression(
            corpus, context, tp, k=k, seed=seed, selection=linear_selection,
            vif_threshold=vif_threshold, stepwise=stepwise,
        )
    table = (
        ablation(
            corpus, context, k=k, seed=seed, params=params,
            selection=linear_selection, vif_threshold=vif_threshold,
        )
        if include_ablation
        else None
    )
    return EvalReport(
        seed=seed, k=k, classification=classification, regression=regression,
        ablation_table=table,
    )
