"""Elastic-net linear regression by cyclic coordinate descent.

Objective: 1/2 * sum((theta . x_i - y_i)^2) + lambda1*||theta||_1
+ lambda2*||theta||_2^2, penalties applied to coefficients of internally
standardized columns; the intercept is unpenalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DataError, NumericError
from .boxcox import BoxCoxTransform, boxcox_invert

DEFAULT_LAMBDA_GRID = (0.0, 1e-3, 1e-2, 1e-1, 1.0)
# Tiny positive ridge penalties are excluded from the default grid: on a
# rank-deficient design they make the optimum unique but leave the valley
# nearly flat, which stalls coordinate descent without improving fit.
DEFAULT_RIDGE_GRID = (0.0, 1e-1, 1.0)
CONVERGENCE_TOL = 1e-8
MAX_SWEEPS = 20_000


@dataclass(frozen=True)
class ElasticNetModel:
    coef_std: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    lambda1: float
    lambda2: float
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not np.isfinite(self.coef_std).all():
            raise NumericError("coefficients are not finite")
        if self.feature_names is not None and len(self.feature_names) != len(self.coef_std):
            raise DataError("feature names do not match coefficient count")

    @property
    def theta(self) -> np.ndarray:
        """Original-space parameter vector, intercept first."""
        coefs = self.coef_std / self.x_scale
        intercept = self.y_mean - float(coefs @ self.x_mean)
        return np.concatenate([[intercept], coefs])

    def predict(self, X) -> np.ndarray:
        """Linear response in the transformed-target space."""
        arr = self._check(X)
        theta = self.theta
        return theta[0] + arr @ theta[1:]

    def _check(self, X) -> np.ndarray:
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.shape[1] != len(self.coef_std):
            raise DataError(
                f"expected {len(self.coef_std)} features, got {arr.shape[1]}"
            )
        return arr


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    centered = X - mean
    scale = np.sqrt((centered**2).mean(axis=0))
    scale = np.where(scale > 0, scale, 1.0)
    return centered / scale, mean, scale


def _soft_threshold(value: float, limit: float) -> float:
    if value > limit:
        return value - limit
    if value < -limit:
        return value + limit
    return 0.0


def enet_fit(
    X,
    y,
    lambda1: float = 0.0,
    lambda2: float = 0.0,
    feature_names: Sequence[str] | None = None,
    tol: float = CONVERGENCE_TOL,
    max_sweeps: int = MAX_SWEEPS,
    return_history: bool = False,
    theta0: np.ndarray | None = None,
):
    """Cyclic coordinate descent with soft thresholding on the Gram system.

    Converged when no coefficient moves more than ``tol`` in a full sweep.
    ``theta0`` warm-starts the standardized coefficients; near-singular
    designs need the warm path to converge within the sweep budget.
    """
    arr = np.asarray(X, dtype=float)
    target = np.asarray(y, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or target.ndim != 1 or arr.shape[0] != target.shape[0]:
        raise NumericError("X must be (n, p) and y must be (n,)")
    if arr.shape[0] == 0:
        raise NumericError("empty training set")
    if not np.isfinite(arr).all() or not np.isfinite(target).all():
        raise NumericError("non-finite training values")
    if lambda1 < 0 or lambda2 < 0:
        raise NumericError("penalties must be nonnegative")

    std, mean, scale = _standardize(arr)
    y_mean = float(target.mean())
    y_c = target - y_mean
    p = std.shape[1]
    gram = std.T @ std
    corr = std.T @ y_c
    if theta0 is None:
        theta = np.zeros(p)
    else:
        theta = np.array(theta0, dtype=float)
        if theta.shape != (p,) or not np.isfinite(theta).all():
            raise NumericError("warm start does not match the design")
    gram_theta = gram @ theta
    history: list[float] = []

    def objective() -> float:
        residual = y_c - std @ theta
        return float(
            0.5 * residual @ residual
            + lambda1 * np.abs(theta).sum()
            + lambda2 * theta @ theta
        )

    converged = False
    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            rho = corr[j] - gram_theta[j] + gram[j, j] * theta[j]
            denom = gram[j, j] + 2.0 * lambda2
            new = _soft_threshold(rho, lambda1) / denom if denom > 0 else 0.0
            delta = new - theta[j]
            if delta != 0.0:
                gram_theta += gram[:, j] * delta
                theta[j] = new
                max_delta = max(max_delta, abs(delta))
        if return_history:
            history.append(objective())
        if max_delta < tol:
            converged = True
            break
    if not converged:
        raise NumericError("coordinate descent did not converge")

    model = ElasticNetModel(
        coef_std=theta,
        x_mean=mean,
        x_scale=scale,
        y_mean=y_mean,
        lambda1=float(lambda1),
        lambda2=float(lambda2),
        feature_names=tuple(feature_names) if feature_names is not None else None,
    )
    return (model, history) if return_history else model


def enet_kkt_residual(model: ElasticNetModel, X, y) -> float:
    """Largest subgradient-condition violation at the fitted coefficients."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    std = (arr - model.x_mean) / model.x_scale
    y_c = np.asarray(y, dtype=float) - model.y_mean
    grad = std.T @ (std @ model.coef_std - y_c) + 2.0 * model.lambda2 * model.coef_std
    worst = 0.0
    for g, coef in zip(grad, model.coef_std):
        if coef > 0:
            worst = max(worst, abs(g + model.lambda1))
        elif coef < 0:
            worst = max(worst, abs(g - model.lambda1))
        else:
            worst = max(worst, max(0.0, abs(g) - model.lambda1))
    return worst


def enet_predict(model: ElasticNetModel, transform: BoxCoxTransform, x) -> np.ndarray:
    """Delivery-duration prediction in days, floored at 1."""
    linear = model.predict(x)
    days, _ = boxcox_invert(linear, transform)
    return np.maximum(days, 1.0)


def _path_fit(
    arr: np.ndarray,
    target: np.ndarray,
    grid1: Sequence[float],
    lam2: float,
    feature_names: Sequence[str] | None = None,
):
    """Fit every lambda1 in descending order, warm-starting each from the
    previous solution. Yields (grid position, model or None)."""
    by_size = sorted(range(len(grid1)), key=lambda i: -grid1[i])
    theta = None
    for i in by_size:
        try:
            model = enet_fit(
                arr, target, grid1[i], lam2,
                theta0=theta, feature_names=feature_names,
            )
        except NumericError:
            yield i, None
            continue
        theta = model.coef_std
        yield i, model


def enet_fit_cv(
    X,
    y,
    grid1: Sequence[float] = DEFAULT_LAMBDA_GRID,
    grid2: Sequence[float] = DEFAULT_RIDGE_GRID,
    n_folds: int = 5,
    seed: int = 0,
    feature_names: Sequence[str] | None = None,
) -> ElasticNetModel:
    """Grid-search (lambda1, lambda2) by k-fold validation error, then refit
    on all rows with the winning pair. Ties keep the earliest grid entry.

    Candidates that fail to converge on some fold score as infinitely bad
    rather than aborting the search; the refit at the winner still raises if
    it cannot converge.
    """
    arr = np.asarray(X, dtype=float)
    target = np.asarray(y, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    n = arr.shape[0]
    if n < n_folds:
        n_folds = max(2, n)
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    folds = np.array_split(order, n_folds)

    errors = np.zeros((len(grid1), len(grid2)))
    counts = np.zeros((len(grid1), len(grid2)), dtype=int)
    for fold in folds:
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        if not mask.any() or len(fold) == 0:
            continue
        for j, lam2 in enumerate(grid2):
            for i, model in _path_fit(arr[mask], target[mask], grid1, lam2):
                if model is None:
                    errors[i, j] = math.inf
                else:
                    pred = model.predict(arr[fold])
                    errors[i, j] += float(((pred - target[fold]) ** 2).mean())
                counts[i, j] += 1

    best_key: tuple[float, int] | None = None
    best = (0, 0)
    for i in range(len(grid1)):
        for j in range(len(grid2)):
            score = errors[i, j] / counts[i, j] if counts[i, j] else math.inf
            key = (score, i * len(grid2) + j)
            if best_key is None or key < best_key:
                best_key = key
                best = (i, j)

    final = None
    for i, model in _path_fit(arr, target, grid1, float(grid2[best[1]]), feature_names):
        if i == best[0]:
            final = model
            break
    if final is None:
        raise NumericError("coordinate descent did not converge")
    return final
