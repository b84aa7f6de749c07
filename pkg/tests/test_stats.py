"""Significance tests against brute-force oracles and closed forms."""

import itertools

import numpy as np
import pytest

from fulfillkit.errors import NumericError
from fulfillkit.stats import welch_t_test, wilcoxon_test


def brute_force_wilcoxon(d, alternative):
    """Enumerate all 2^n sign assignments of the ranked |d| (midranks)."""
    d = np.asarray(d, dtype=float)
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return 1.0
    absd = np.abs(d)
    order = np.argsort(absd, kind="stable")
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and absd[order[j + 1]] == absd[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    w_obs = ranks[d > 0].sum()
    ge = le = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for s, r in zip(signs, ranks) if s)
        ge += w >= w_obs - 1e-12
        le += w <= w_obs + 1e-12
    p_greater = ge / 2.0**n
    p_less = le / 2.0**n
    if alternative == "greater":
        return min(1.0, p_greater)
    if alternative == "less":
        return min(1.0, p_less)
    return min(1.0, 2.0 * min(p_greater, p_less))


class TestWilcoxon:
    def test_all_positive_n5_greater(self):
        a = np.array([2.0, 3.0, 4.0, 5.0, 6.0])
        b = np.zeros(5)
        assert wilcoxon_test(a, b, "greater") == pytest.approx(1 / 32)

    def test_all_positive_two_to_minus_n(self):
        for n in range(1, 11):
            a = np.arange(1.0, n + 1)
            b = np.zeros(n)
            assert wilcoxon_test(a, b, "greater") == pytest.approx(2.0**-n)

    def test_identical_samples(self):
        a = np.array([1.0, 2.0, 3.0])
        assert wilcoxon_test(a, a, "two_sided") == 1.0
        assert wilcoxon_test(a, a, "greater") == 1.0

    def test_exact_matches_brute_force(self):
        rng = np.random.default_rng(1234)
        for _ in range(40):
            n = int(rng.integers(2, 9))
            d = rng.integers(-4, 5, size=n).astype(float)
            a = d
            b = np.zeros(n)
            for alt in ("greater", "less", "two_sided"):
                got = wilcoxon_test(a, b, alt, method="exact")
                want = brute_force_wilcoxon(d, alt)
                assert got == pytest.approx(want, abs=1e-12), (d, alt)

    def test_exact_null_pmf_sums_to_one(self):
        from fulfillkit.stats import _exact_wplus_counts

        for ranks in ([2, 4, 6], [2, 3, 3, 8], [1, 2, 3, 4, 5]):
            counts = _exact_wplus_counts(ranks)
            assert counts.sum() == pytest.approx(2.0 ** len(ranks))

    def test_exact_vs_approx_near_n20(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            a = rng.normal(0.3, 1.0, size=20)
            b = rng.normal(0.0, 1.0, size=20)
            for alt in ("greater", "less", "two_sided"):
                pe = wilcoxon_test(a, b, alt, method="exact")
                pa = wilcoxon_test(a, b, alt, method="approx")
                assert abs(pe - pa) < 0.01, (alt, pe, pa)

    def test_approx_path_detects_shift(self):
        rng = np.random.default_rng(5)
        a = rng.normal(1.0, 1.0, size=60)
        b = rng.normal(0.0, 1.0, size=60)
        assert wilcoxon_test(a, b, "greater") < 1e-6
        assert wilcoxon_test(a, b, "less") > 0.99

    def test_ties_use_midranks(self):
        # |d| values 1,1,2,2 force midranks 1.5,1.5,3.5,3.5
        a = np.array([1.0, -1.0, 2.0, 2.0])
        b = np.zeros(4)
        got = wilcoxon_test(a, b, "greater", method="exact")
        want = brute_force_wilcoxon(a, "greater")
        assert got == pytest.approx(want)

    def test_bad_inputs(self):
        with pytest.raises(NumericError):
            wilcoxon_test([1.0, 2.0], [1.0], "greater")
        with pytest.raises(NumericError):
            wilcoxon_test([1.0], [1.0], "sideways")


class TestWelch:
    def test_identical_samples(self):
        a = np.array([1.0, 2.0, 3.0, 4.0])
        assert welch_t_test(a, a.copy()) == pytest.approx(1.0)

    def test_strong_separation(self):
        rng = np.random.default_rng(42)
        a = rng.normal(0.0, 1.0, 100)
        b = rng.normal(10.0, 1.0, 100)
        assert welch_t_test(a, b) < 1e-10

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a = rng.normal(0.0, 1.0, 30)
        b = rng.normal(0.5, 2.0, 40)
        assert welch_t_test(a, b) == pytest.approx(welch_t_test(b, a))

    def test_hand_computed_statistic(self):
        # a = [1,2,3,4], b = [2,4,6,8,10]: means 2.5 / 6, var 5/3 and 10,
        # t = -3.5 / sqrt(5/12 + 2), dof via Welch-Satterthwaite = 5.327...
        from scipy.stats import t as t_dist

        a = np.array([1.0, 2.0, 3.0, 4.0])
        b = np.array([2.0, 4.0, 6.0, 8.0, 10.0])
        se2a, se2b = (5 / 3) / 4, 10.0 / 5
        t_stat = (2.5 - 6.0) / np.sqrt(se2a + se2b)
        dof = (se2a + se2b) ** 2 / (se2a**2 / 3 + se2b**2 / 4)
        want = 2 * t_dist.sf(abs(t_stat), dof)
        assert welch_t_test(a, b) == pytest.approx(want, rel=1e-12)

    def test_degenerate_variances(self):
        a = np.array([2.0, 2.0, 2.0])
        b = np.array([2.0, 2.0])
        assert welch_t_test(a, b) == 1.0
        c = np.array([3.0, 3.0])
        assert welch_t_test(a, c) == 0.0

    def test_too_small(self):
        with pytest.raises(NumericError):
            welch_t_test([1.0], [1.0, 2.0])
