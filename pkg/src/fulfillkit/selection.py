"""Feature selection: VIF elimination, Boruta screening, stepwise AIC.

All three accept either a FeatureMatrix or a bare array; feature identifiers
are column names for the former and integer indices for the latter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import binom

from .errors import DataError, NumericError
from .features import FeatureMatrix
from .models.trees import rf_fit, rf_oob_importances

VIF_CAP = 1e12
VIF_THRESHOLD = 10.0
SSE_FLOOR = 1e-12


def _names_and_values(X) -> tuple[tuple, np.ndarray]:
    if isinstance(X, FeatureMatrix):
        return X.names, np.asarray(X.values, dtype=float)
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise DataError("expected a 2-dimensional feature block")
    return tuple(range(arr.shape[1])), arr


@dataclass(frozen=True)
class VifReport:
    """Scores before elimination, the drop order, and survivor scores."""

    initial: dict
    eliminated: tuple
    final: dict
    capped: frozenset
    degenerate: frozenset


@dataclass(frozen=True)
class BorutaResult:
    statuses: dict
    hits: dict
    p_values: dict
    z_mean: dict
    z_median: dict
    z_min: dict
    z_max: dict
    n_runs: int
    alpha: float

    def __post_init__(self) -> None:
        allowed = {"confirmed", "tentative", "rejected"}
        if not set(self.statuses.values()) <= allowed:
            raise DataError("statuses must be confirmed/tentative/rejected")

    def features_with(self, status: str) -> tuple:
        return tuple(name for name, s in self.statuses.items() if s == status)


def _vif_values(values: np.ndarray) -> tuple[np.ndarray, list[bool], list[bool]]:
    p = values.shape[1]
    out = np.empty(p)
    capped = [False] * p
    # constant or non-finite columns never regress or serve as predictors
    degenerate = [
        not (np.isfinite(col).all() and col.var() > 0.0) for col in values.T
    ]
    usable = [j for j in range(p) if not degenerate[j]]
    # centering absorbs the intercept; per-column least squares reduce to
    # solves against one shared Gram matrix
    centered = values[:, usable] - values[:, usable].mean(axis=0)
    gram = centered.T @ centered
    position = {j: i for i, j in enumerate(usable)}
    for j in range(p):
        if degenerate[j]:
            out[j] = float("nan")
            continue
        i = position[j]
        others = [k for k in range(len(usable)) if k != i]
        sst = float(gram[i, i])
        if others:
            coef, _, _, _ = np.linalg.lstsq(
                gram[np.ix_(others, others)], gram[others, i], rcond=None
            )
            sse = sst - float(gram[others, i] @ coef)
        else:
            sse = sst
        r_squared = 1.0 - sse / sst
        if r_squared >= 1.0 - 1e-12:
            out[j] = VIF_CAP
            capped[j] = True
        else:
            out[j] = 1.0 / (1.0 - r_squared)
    return out, capped, degenerate


def vif_scores(X) -> np.ndarray:
    """VIF_j = 1/(1 - R^2_j) of column j regressed on the rest plus an
    intercept; perfect collinearity caps at 1e12, constant or non-finite
    columns come back NaN (degenerate)."""
    _, values = _names_and_values(X)
    n, p = values.shape
    if p < 2:
        raise DataError("need at least two features for VIF")
    if n < p + 1:
        raise DataError("need at least p + 1 rows for VIF")
    scores, _, _ = _vif_values(values)
    return scores


def vif_eliminate(X, threshold: float = VIF_THRESHOLD) -> tuple[tuple, VifReport]:
    """Drop the worst column while any VIF is at or above ``threshold``.

    Ties break to the lowest column index; degenerate (NaN) columns are
    reported but never dropped here.
    """
    names, values = _names_and_values(X)
    n, p = values.shape
    if p < 2:
        raise DataError("need at least two features for VIF")
    if n < p + 1:
        raise DataError("need at least p + 1 rows for VIF")

    active = list(range(p))
    scores, capped0, degenerate0 = _vif_values(values)
    initial = {names[j]: float(scores[j]) for j in range(p)}
    capped = {names[j] for j in range(p) if capped0[j]}
    degenerate = {names[j] for j in range(p) if degenerate0[j]}
    eliminated: list = []
    current = scores
    while len(active) >= 2:
        finite = np.where(np.isnan(current), -np.inf, current)
        worst = int(np.argmax(finite))
        if not (finite[worst] >= threshold):
            break
        eliminated.append(names[active[worst]])
        del active[worst]
        if len(active) < 2:
            current = np.full(len(active), float("nan"))
            break
        current, more_capped, more_degenerate = _vif_values(values[:, active])
        capped |= {names[a] for a, c in zip(active, more_capped) if c}
        degenerate |= {names[a] for a, d in zip(active, more_degenerate) if d}

    final = {names[a]: float(v) for a, v in zip(active, current)}
    report = VifReport(
        initial=initial,
        eliminated=tuple(eliminated),
        final=final,
        capped=frozenset(capped),
        degenerate=frozenset(degenerate),
    )
    return tuple(names[a] for a in active), report


def _derived_seed(seed: int, *stream: int) -> int:
    return int(np.random.SeedSequence([seed, *stream]).generate_state(1)[0])


def boruta_select(
    X,
    y,
    n_runs: int = 100,
    alpha: float = 0.05,
    seed: int = 0,
    n_trees: int = 300,
    max_depth: int | None = None,
) -> BorutaResult:
    """Shadow-feature screening on random-forest permutation importance.

    Per run: permute each column into a shadow copy, fit a forest on the
    doubled block, z-score each feature's per-tree OOB importance (mean over
    trees divided by their spread), and score a hit when the feature beats
    every shadow. Hit counts against Binomial(n_runs, 1/2) decide the status.
    """
    names, values = _names_and_values(X)
    labels = np.asarray(y, dtype=float)
    if n_runs < 20:
        raise DataError("need at least 20 runs")
    if len(np.unique(labels)) < 2:
        raise DataError("labels contain a single class")
    n, p = values.shape

    hits = np.zeros(p, dtype=int)
    z_history = np.empty((n_runs, p))
    for run in range(n_runs):
        rng = np.random.default_rng(_derived_seed(seed, run, 0))
        shadows = np.empty_like(values)
        for j in range(p):
            shadows[:, j] = values[rng.permutation(n), j]
        stacked = np.hstack([values, shadows])
        forest = rf_fit(
            stacked,
            labels,
            n_trees=n_trees,
            seed=_derived_seed(seed, run, 1),
            max_depth=max_depth,
        )
        importances = rf_oob_importances(
            forest, stacked, labels, seed=_derived_seed(seed, run, 2)
        )
        sd = importances.std(axis=0, ddof=1)
        z = importances.mean(axis=0) / np.where(sd > 0, sd, 1.0)
        z = np.where(sd > 0, z, 0.0)
        real, shadow = z[:p], z[p:]
        hits += real > shadow.max()
        z_history[run] = real

    statuses: dict = {}
    p_values: dict = {}
    for j, name in enumerate(names):
        h = int(hits[j])
        p_two = min(1.0, 2.0 * min(binom.cdf(h, n_runs, 0.5), binom.sf(h - 1, n_runs, 0.5)))
        p_values[name] = float(p_two)
        if p_two < alpha and h > n_runs / 2:
            statuses[name] = "confirmed"
        elif p_two < alpha and h < n_runs / 2:
            statuses[name] = "rejected"
        else:
            statuses[name] = "tentative"

    return BorutaResult(
        statuses=statuses,
        hits={name: int(hits[j]) for j, name in enumerate(names)},
        p_values=p_values,
        z_mean={name: float(z_history[:, j].mean()) for j, name in enumerate(names)},
        z_median={name: float(np.median(z_history[:, j])) for j, name in enumerate(names)},
        z_min={name: float(z_history[:, j].min()) for j, name in enumerate(names)},
        z_max={name: float(z_history[:, j].max()) for j, name in enumerate(names)},
        n_runs=n_runs,
        alpha=alpha,
    )


def _subset_sse(gram: np.ndarray, corr: np.ndarray, sst: float, subset: list[int]) -> float:
    if not subset:
        return max(sst, SSE_FLOOR)
    sub = np.ix_(subset, subset)
    coef, _, _, _ = np.linalg.lstsq(gram[sub], corr[subset], rcond=None)
    sse = sst - float(corr[subset] @ coef)
    return max(sse, SSE_FLOOR)


def stepwise_aic(X, y, return_trace: bool = False):
    """Bidirectional stepwise least squares under AIC = n*log(SSE/n) + 2(k+1).

    Starts from the full model (intercept-only when the full design is
    singular) and applies the best strictly-improving single add or drop.
    """
    names, values = _names_and_values(X)
    target = np.asarray(y, dtype=float)
    n, p = values.shape
    if target.shape != (n,):
        raise NumericError("y must be one value per row")
    if not np.isfinite(values).all() or not np.isfinite(target).all():
        raise NumericError("non-finite training values")

    # intercept handled by centering: subset SSE equals with-intercept SSE
    centered = values - values.mean(axis=0)
    y_c = target - target.mean()
    gram = centered.T @ centered
    corr = centered.T @ y_c
    sst = float(y_c @ y_c)

    def aic_of(subset: list[int]) -> float:
        sse = _subset_sse(gram, corr, sst, subset)
        return n * math.log(sse / n) + 2.0 * (len(subset) + 1)

    design_rank = np.linalg.matrix_rank(np.hstack([np.ones((n, 1)), values]))
    start_full = n > p and design_rank == p + 1
    current = list(range(p)) if start_full else []
    current_aic = aic_of(current)
    trace = [current_aic]

    while True:
        best_move = None
        best_aic = current_aic
        for j in current:  # drops first, by index
            candidate = [c for c in current if c != j]
            score = aic_of(candidate)
            if score < best_aic - 1e-12:
                best_aic, best_move = score, candidate
        for j in range(p):  # then adds, by index
            if j in current:
                continue
            candidate = sorted(current + [j])
            score = aic_of(candidate)
            if score < best_aic - 1e-12:
                best_aic, best_move = score, candidate
        if best_move is None:
            break
        current, current_aic = best_move, best_aic
        trace.append(current_aic)

    retained = tuple(names[j] for j in sorted(current))
    return (retained, trace) if return_trace else retained
