"""Paired and two-sample significance tests.

Hand-rolled statistics with scipy used only for distribution tail lookups.
The Wilcoxon exact path enumerates the null by dynamic programming over
doubled ranks (midranks are multiples of 1/2, so doubling makes them
integers), which is exactly the 2^n sign-assignment distribution without
materializing 2^n terms.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm, t as t_dist

from .errors import NumericError

#: Largest n for which the exact Wilcoxon null is enumerated by default.
EXACT_WILCOXON_MAX_N = 20

_ALTERNATIVES = ("greater", "less", "two_sided")


def _rank_with_midranks(values: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Ranks 1..n with ties sharing their midrank. Returns (ranks, tie sizes)."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    tie_sizes: list[int] = []
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # positions i..j (0-based) share ranks i+1..j+1
        mid = (i + j + 2) / 2.0
        ranks[order[i : j + 1]] = mid
        tie_sizes.append(j - i + 1)
        i = j + 1
    return ranks, tie_sizes


def _exact_wplus_counts(doubled_ranks: list[int]) -> np.ndarray:
    """counts[s] = number of sign assignments with doubled W+ equal to s."""
    total = sum(doubled_ranks)
    counts = np.zeros(total + 1, dtype=float)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_test(
    a,
    b,
    alternative: str = "two_sided",
    method: str = "auto",
) -> float:
    """Wilcoxon signed-rank p-value for paired samples a, b.

    Zero differences are dropped; ties in |difference| get midranks. With
    ``method="auto"`` the null is enumerated exactly for n <= 20 remaining
    pairs and approximated by a tie-corrected normal with continuity
    correction beyond that. ``alternative="greater"`` asks whether a tends
    to exceed b. All differences zero gives p = 1.
    """
    if alternative not in _ALTERNATIVES:
        raise NumericError(f"unknown alternative {alternative!r}")
    if method not in ("auto", "exact", "approx"):
        raise NumericError(f"unknown method {method!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise NumericError("wilcoxon_test needs two equal-length 1-d samples")
    d = a - b
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        return 1.0

    ranks, tie_sizes = _rank_with_midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())

    if method == "exact" or (method == "auto" and n <= EXACT_WILCOXON_MAX_N):
        doubled = [int(round(2.0 * r)) for r in ranks]
        counts = _exact_wplus_counts(doubled)
        total = 2.0**n
        w2 = int(round(2.0 * w_plus))
        p_greater = float(counts[w2:].sum()) / total
        p_less = float(counts[: w2 + 1].sum()) / total
    else:
        mu = n * (n + 1) / 4.0
        tie_term = sum(t**3 - t for t in tie_sizes) / 48.0
        sigma2 = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
        if sigma2 <= 0:
            return 1.0
        sigma = math.sqrt(sigma2)
        p_greater = float(norm.sf((w_plus - mu - 0.5) / sigma))
        p_less = float(norm.cdf((w_plus - mu + 0.5) / sigma))

    if alternative == "greater":
        return min(1.0, p_greater)
    if alternative == "less":
        return min(1.0, p_less)
    return min(1.0, 2.0 * min(p_greater, p_less))


def welch_t_test(a, b) -> float:
    """Two-sided Welch t-test p-value for independent samples a, b.

    The statistic and Welch-Satterthwaite degrees of freedom are computed by
    hand; only the t tail lookup comes from scipy. Degenerate case: both
    sample variances zero gives p = 1 for equal means and p = 0 otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or len(a) < 2 or len(b) < 2:
        raise NumericError("welch_t_test needs two 1-d samples of size >= 2")
    na, nb = len(a), len(b)
    ma, mb = float(a.mean()), float(b.mean())
    va, vb = float(a.var(ddof=1)), float(b.var(ddof=1))
    if va == 0.0 and vb == 0.0:
        return 1.0 if ma == mb else 0.0
    se2_a, se2_b = va / na, vb / nb
    t_stat = (ma - mb) / math.sqrt(se2_a + se2_b)
    dof = (se2_a + se2_b) ** 2 / (
        se2_a**2 / (na - 1) + se2_b**2 / (nb - 1)
    )
    return float(2.0 * t_dist.sf(abs(t_stat), dof))
