"""Box-Cox target transform with grid-profiled lambda selection.

The transform is normalized by the geometric mean of the training targets,
which makes residual sums comparable across lambda values: maximizing the
profile likelihood reduces to minimizing the least-squares residual of the
transformed target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ..errors import NumericError

DEFAULT_LAMBDA_GRID = tuple(round(v, 2) for v in np.arange(-1.0, 1.0 + 1e-9, 0.01))


@dataclass(frozen=True)
class BoxCoxTransform:
    """Fitted transform parameters.

    ``plain_log`` switches the lambda=0 branch from the geometric-mean-scaled
    log (the continuous limit of the normalized form) to a bare log.
    """

    lambda_: float
    geometric_mean: float
    plain_log: bool = False

    def __post_init__(self) -> None:
        if not math.isfinite(self.lambda_) or not (-1.0 <= self.lambda_ <= 1.0):
            raise NumericError("lambda must lie in [-1, 1]")
        if not math.isfinite(self.geometric_mean) or self.geometric_mean <= 0:
            raise NumericError("geometric mean must be positive and finite")


class InvertResult(NamedTuple):
    values: np.ndarray
    clamped: np.ndarray


def _positive_array(y, what: str) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if arr.size == 0:
        raise NumericError(f"{what} is empty")
    if not np.isfinite(arr).all():
        raise NumericError(f"{what} has non-finite values")
    if (arr <= 0).any():
        raise NumericError(f"{what} must be strictly positive")
    return arr


def boxcox_apply(y, transform: BoxCoxTransform) -> np.ndarray:
    """Elementwise transform of positive targets."""
    arr = _positive_array(y, "y")
    lam, gm = transform.lambda_, transform.geometric_mean
    if lam == 0.0:
        logs = np.log(arr)
        return logs if transform.plain_log else gm * logs
    return (arr**lam - 1.0) / (lam * gm ** (lam - 1.0))


def boxcox_invert(y_new, transform: BoxCoxTransform) -> InvertResult:
    """Exact inverse; out-of-domain entries clamp to 1.0 with a flag."""
    arr = np.asarray(y_new, dtype=float)
    lam, gm = transform.lambda_, transform.geometric_mean
    if lam == 0.0:
        scaled = arr if transform.plain_log else arr / gm
        values = np.exp(scaled)
        return InvertResult(values, np.zeros(arr.shape, dtype=bool))
    base = 1.0 + lam * gm ** (lam - 1.0) * arr
    ok = base > 0
    values = np.ones(arr.shape, dtype=float)
    values[ok] = base[ok] ** (1.0 / lam)
    return InvertResult(values, ~ok)


def boxcox_fit(
    X, y, grid: Sequence[float] | None = None
) -> BoxCoxTransform:
    """Pick lambda from ``grid`` by least squares of the normalized transform
    against an ordinary linear fit on X; ties resolve to the lambda nearest 0.
    """
    arr = _positive_array(y, "y")
    design = np.asarray(X, dtype=float)
    if design.ndim == 1:
        design = design.reshape(-1, 1)
    if design.shape[0] != arr.shape[0]:
        raise NumericError("X and y row counts differ")
    if not np.isfinite(design).all():
        raise NumericError("X has non-finite values")
    lambdas = DEFAULT_LAMBDA_GRID if grid is None else tuple(float(v) for v in grid)
    if not lambdas:
        raise NumericError("empty lambda grid")
    for lam in lambdas:
        if not math.isfinite(lam) or not (-1.0 <= lam <= 1.0):
            raise NumericError("grid values must lie in [-1, 1]")

    gm = float(np.exp(np.log(arr).mean()))
    ones = np.ones((design.shape[0], 1))
    full = np.hstack([ones, design])
    profile: list[tuple[float, float]] = []
    for lam in lambdas:
        z = boxcox_apply(arr, BoxCoxTransform(lam, gm))
        coef, _, _, _ = np.linalg.lstsq(full, z, rcond=None)
        residual = z - full @ coef
        profile.append((float(residual @ residual), lam))
    best_sse = min(sse for sse, _ in profile)
    # float-noise ties resolve toward the least-transforming lambda
    tol = max(best_sse * 1e-9, 1e-12)
    tied = [lam for sse, lam in profile if sse <= best_sse + tol]
    chosen = min(tied, key=lambda lam: (abs(lam), lam))
    return BoxCoxTransform(lambda_=chosen, geometric_mean=gm)
