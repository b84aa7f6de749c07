"""Reference predictors: majority class, the 8-feature models, buffers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..corpus import CATEGORIES
from ..errors import DataError, NumericError
from ..features import FeatureMatrix, FeatureSpec, TimePoint
from .trees import GbtParams, gbt_fit


@dataclass(frozen=True)
class MajorityModel:
    """Constant predictor of the modal class; ties predict late (0)."""

    majority_class: float

    def predict(self, X) -> np.ndarray:
        n = np.asarray(X).shape[0]
        return np.full(n, self.majority_class)


@dataclass(frozen=True)
class LinearModel:
    """Ordinary least squares, intercept first in ``theta``."""

    theta: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not np.isfinite(self.theta).all():
            raise NumericError("coefficients are not finite")

    def predict(self, X) -> np.ndarray:
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.shape[1] != len(self.theta) - 1:
            raise DataError(
                f"expected {len(self.theta) - 1} features, got {arr.shape[1]}"
            )
        return self.theta[0] + arr @ self.theta[1:]


def majority_baseline(labels) -> MajorityModel:
    arr = np.asarray(labels, dtype=float)
    if arr.size == 0:
        raise DataError("no labels")
    ones = float((arr == 1.0).sum())
    return MajorityModel(majority_class=1.0 if ones > arr.size / 2.0 else 0.0)


def linear_fit(X, y, feature_names: Sequence[str] | None = None) -> LinearModel:
    arr = np.asarray(X, dtype=float)
    target = np.asarray(y, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if not np.isfinite(arr).all() or not np.isfinite(target).all():
        raise NumericError("non-finite training values")
    design = np.hstack([np.ones((arr.shape[0], 1)), arr])
    theta, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    return LinearModel(
        theta=theta,
        feature_names=tuple(feature_names) if feature_names is not None else None,
    )


BASELINE_TP1_FEATURES = (
    "n_rewards",
    "goal",
    "fundraising_days",
    "creator_backed_count",
    "creator_created_count",
)
BASELINE_TP3_FEATURES = ("backers", "percent_raised")


def baseline_schema(tp: TimePoint | str) -> tuple[FeatureSpec, ...]:
    """The 8 plain project descriptors; pledge-dependent ones gated to TP3+."""
    tp = TimePoint.parse(tp)
    specs = [FeatureSpec(name, TimePoint.TP1) for name in BASELINE_TP1_FEATURES]
    specs += [FeatureSpec(name, TimePoint.TP3) for name in BASELINE_TP3_FEATURES]
    specs += [FeatureSpec(f"cat_{name}", TimePoint.TP1, log_transform=False) for name in CATEGORIES]
    return tuple(s for s in specs if s.availability.order <= tp.order)


def baseline_feature_matrix(corpus, tp: TimePoint | str, ids: Sequence[str] | None = None) -> FeatureMatrix:
    tp = TimePoint.parse(tp)
    if ids is None:
        ids = sorted(corpus.projects)
    specs = baseline_schema(tp)
    rows = []
    for pid in ids:
        if pid not in corpus.projects:
            raise DataError(f"unknown project id: {pid}")
        project = corpus.projects[pid]
        values = {
            "n_rewards": float(len(project.rewards)),
            "goal": float(project.goal),
            "fundraising_days": project.fundraising_days,
            "creator_backed_count": float(project.creator_backed_count),
            "creator_created_count": float(project.creator_created_count),
            "backers": float(sum(r.backer_count for r in project.rewards)),
            "percent_raised": float(project.pledged / project.goal),
        }
        for name in CATEGORIES:
            values[f"cat_{name}"] = 1.0 if project.category == name else 0.0
        rows.append([values[s.name] for s in specs])
    values_arr = np.array(rows, dtype=float) if rows else np.zeros((0, len(specs)))
    return FeatureMatrix(ids=tuple(ids), specs=specs, values=values_arr, tp=tp)


def baseline8(
    X_sub,
    y,
    task: str,
    seed: int = 0,
    params: GbtParams | None = None,
    feature_names: Sequence[str] | None = None,
):
    """Model over the 8 plain descriptors: boosted trees to classify,
    ordinary least squares to regress."""
    if task == "classify":
        return gbt_fit(X_sub, y, params=params, seed=seed, feature_names=feature_names)
    if task == "regress":
        return linear_fit(X_sub, y, feature_names=feature_names)
    raise DataError(f"unknown task: {task!r}")


def recommend_duration(
    predicted_days: float,
    tp: TimePoint | str,
    buffer_table: Mapping[TimePoint | str, float],
) -> int:
    """Predicted duration plus the per-time-point safety buffer, whole days."""
    tp = TimePoint.parse(tp)
    normalized = {TimePoint.parse(key): float(v) for key, v in buffer_table.items()}
    if tp not in normalized:
        raise DataError(f"no buffer entry for {tp.value}")
    return math.ceil(float(predicted_days) + normalized[tp])
