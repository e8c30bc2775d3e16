"""
Tests for Friedman, Wilcoxon and rank aggregation
"""

import itertools

import numpy as np
import pytest

from core.errors import ConfigurationError, DataError
from core.metrics import METRIC_NAMES
from core.stats import RankTable, aggregate_reports, friedman, rank_and_normalize, wilcoxon


def brute_force_wilcoxon_p(d):
    d = np.asarray(d, dtype=np.float64)
    d = d[d != 0]
    ranks = np.argsort(np.argsort(np.abs(d))) + 1.0
    # average ties
    for value in np.unique(np.abs(d)):
        tied = np.abs(d) == value
        ranks[tied] = ranks[tied].mean()
    w = min(ranks[d > 0].sum(), ranks[d < 0].sum())
    hits = 0
    for signs in itertools.product((0, 1), repeat=d.size):
        if np.dot(signs, ranks) <= w + 1e-9:
            hits += 1
    return min(1.0, 2.0 * hits / 2 ** d.size)


def brute_force_friedman_p(ranks):
    n, k = ranks.shape
    observed = np.sum(ranks.sum(axis=0) ** 2)
    arrangements = [list(itertools.permutations(row)) for row in ranks]
    hits = 0
    total = 0
    for choice in itertools.product(*arrangements):
        total += 1
        if np.sum(np.sum(choice, axis=0) ** 2) >= observed - 1e-9:
            hits += 1
    return hits / total


# =============================================================================
# RankTable and Friedman
# =============================================================================

class TestRankTable:

    def test_direction(self):
        table = RankTable(("a", "b", "c"), [[0.9, 0.5, 0.7]])
        np.testing.assert_array_equal(table.ranks(), [[1, 3, 2]])
        lower = RankTable(("a", "b", "c"), [[0.9, 0.5, 0.7]], higher_is_better=False)
        np.testing.assert_array_equal(lower.ranks(), [[3, 1, 2]])

    def test_average_ties(self):
        table = RankTable(("a", "b", "c"), [[1.0, 1.0, 0.0]])
        np.testing.assert_array_equal(table.ranks(), [[1.5, 1.5, 3.0]])

    def test_missing_values(self):
        with pytest.raises(DataError, match="missing"):
            RankTable(("a", "b"), [[1.0, np.nan]])

    def test_single_method(self):
        with pytest.raises(DataError, match="at least 2 methods"):
            RankTable(("a",), [[1.0]])


class TestFriedman:

    def test_identical_columns(self):
        table = RankTable(("a", "b", "c"), np.tile([[0.7, 0.7, 0.7]], (6, 1)))
        result = friedman(table)
        assert result.statistic == pytest.approx(0.0, abs=1e-12)
        assert result.p_value == pytest.approx(1.0)
        assert not result.reject

    def test_perfect_ordering(self):
        table = RankTable(("m1", "m2", "m3"), np.tile([[3.0, 2.0, 1.0]], (4, 1)))
        result = friedman(table, alpha=0.05)
        assert result.statistic == pytest.approx(8.0)
        assert result.p_value == pytest.approx(0.0183, abs=1e-4)
        assert result.reject
        assert result.mean_ranks == {"m1": 1.0, "m2": 2.0, "m3": 3.0}

    def test_two_methods_sign_test_form(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            n = int(rng.integers(2, 30))
            values = rng.normal(size=(n, 2))
            wins = int(np.sum(values[:, 0] > values[:, 1]))
            losses = n - wins
            result = friedman(RankTable(("a", "b"), values))
            assert result.statistic == pytest.approx((wins - losses) ** 2 / n)

    def test_exact_matches_enumeration(self):
        rng = np.random.default_rng(13)
        for _ in range(15):
            n = int(rng.integers(2, 6))
            table = RankTable(("a", "b", "c"), rng.integers(0, 4, size=(n, 3)))
            expected = brute_force_friedman_p(table.ranks())
            assert friedman(table, exact=True).p_value == pytest.approx(expected, abs=1e-9)

    def test_exact_worked_example(self):
        table = RankTable(("m1", "m2", "m3"), np.tile([[3.0, 2.0, 1.0]], (4, 1)))
        # only the 6 orderings repeated in every block reach the observed spread
        assert friedman(table, exact=True).p_value == pytest.approx(6 / 6 ** 4)

    def test_block_order_invariance(self):
        rng = np.random.default_rng(5)
        values = rng.normal(size=(12, 3))
        first = friedman(RankTable(("a", "b", "c"), values))
        second = friedman(RankTable(("a", "b", "c"), values[rng.permutation(12)]))
        assert first.statistic == pytest.approx(second.statistic)
        assert first.p_value == pytest.approx(second.p_value)

    def test_insufficient_blocks(self):
        with pytest.raises(DataError, match="insufficient blocks"):
            friedman(RankTable(("a", "b"), [[1.0, 2.0]]))


# =============================================================================
# Wilcoxon
# =============================================================================

class TestWilcoxon:

    def test_identical_samples(self):
        result = wilcoxon([1, 2, 3, 4, 5], [1, 2, 3, 4, 5])
        assert result.p_value == 1.0
        assert not result.reject
        assert result.method == "no effect"

    def test_all_positive(self):
        result = wilcoxon([1, 2, 3, 4, 5, 6], [0] * 6)
        assert result.statistic == 0.0
        assert result.p_value == pytest.approx(0.03125)
        assert result.reject

    def test_mixed_signs(self):
        result = wilcoxon([1, -2, 3, -4, 5, 6], [0] * 6)
        assert result.statistic == 6.0
        assert (result.w_plus, result.w_minus) == (15.0, 6.0)
        assert result.p_value == pytest.approx(28 / 64)

    def test_zero_differences_dropped(self):
        result = wilcoxon([1, 2, 3, 4, 5, 6, 7], [1, 2, 2, 2, 2, 2, 2])
        assert result.n == 7 and result.n_reduced == 5

    def test_exact_matches_enumeration(self):
        rng = np.random.default_rng(77)
        for _ in range(40):
            n = int(rng.integers(1, 13))
            d = rng.integers(-4, 5, size=n).astype(float)
            if not np.any(d):
                continue
            result = wilcoxon(d, np.zeros(n), method="exact")
            assert result.p_value == pytest.approx(brute_force_wilcoxon_p(d), abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=15), rng.normal(size=15)
        forward, backward = wilcoxon(a, b), wilcoxon(b, a)
        assert forward.statistic == backward.statistic
        assert forward.p_value == backward.p_value

    def test_approximation_close_to_exact(self):
        rng = np.random.default_rng(41)
        for n in range(15, 26):
            for _ in range(5):
                a = rng.normal(loc=0.3, size=n)
                b = rng.normal(size=n)
                exact = wilcoxon(a, b, method="exact").p_value
                approx = wilcoxon(a, b, method="approx").p_value
                assert abs(exact - approx) < 0.01

    def test_auto_switches_above_limit(self):
        rng = np.random.default_rng(0)
        assert wilcoxon(rng.normal(size=25), rng.normal(size=25)).method == "exact"
        assert wilcoxon(rng.normal(size=100), rng.normal(size=100)).method == "approx"

    def test_block_order_invariance(self):
        rng = np.random.default_rng(9)
        a, b = rng.normal(size=40), rng.normal(size=40)
        order = rng.permutation(40)
        assert wilcoxon(a, b).p_value == pytest.approx(wilcoxon(a[order], b[order]).p_value)

    def test_length_mismatch(self):
        with pytest.raises(DataError, match="equal lengths"):
            wilcoxon([1, 2, 3], [1, 2])

    def test_unknown_method(self):
        with pytest.raises(ConfigurationError):
            wilcoxon([1, 2], [2, 1], method="pratt")


# =============================================================================
# Rank aggregation
# =============================================================================

class TestRankAndNormalize:

    def test_dominant_method(self):
        values = {"a": [0.9] * 10, "b": [0.1] * 10}
        assert rank_and_normalize(values) == {"a": 0.0, "b": 1.0}

    def test_all_tied(self):
        values = {"a": [1.0, 2.0], "b": [1.0, 2.0], "c": [1.0, 2.0]}
        for scale in ("achievable", "observed"):
            assert rank_and_normalize(values, scale=scale) == {"a": 0.5, "b": 0.5, "c": 0.5}

    def test_three_methods_two_runs(self):
        values = {"a": [3.0, 2.0], "b": [2.0, 3.0], "c": [1.0, 1.0]}
        assert rank_and_normalize(values, scale="observed") == {"a": 0.0, "b": 0.0, "c": 1.0}
        achievable = rank_and_normalize(values, scale="achievable")
        assert achievable == pytest.approx({"a": 0.25, "b": 0.25, "c": 1.0})

    def test_lower_is_better(self):
        values = {"a": [10, 12], "b": [30, 31]}
        assert rank_and_normalize(values, higher_is_better=False) == {"a": 0.0, "b": 1.0}

    def test_bounds_fuzzed(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            k = int(rng.integers(2, 6))
            values = {f"m{j}": rng.integers(0, 3, size=7).tolist() for j in range(k)}
            ranks = rank_and_normalize(values)
            assert all(0.0 <= r <= 1.0 for r in ranks.values())

    def test_empty(self):
        with pytest.raises(DataError):
            rank_and_normalize({})

    def test_unknown_scale(self):
        with pytest.raises(ConfigurationError):
            rank_and_normalize({"a": [1], "b": [2]}, scale="zscore")


def make_record(method, dataset, run, good):
    record = {"method": method, "dataset": dataset, "run": run}
    for name in METRIC_NAMES:
        record[name] = 0.9 if good else 0.5
    # fewer and shorter rules are better
    record["n_rules"] = 5 if good else 20
    record["avg_rule_length"] = 1.5 if good else 4.0
    return record


class TestAggregateReports:

    def test_two_datasets(self):
        reports = [
            {"records": [make_record(m, "d1", r, m == "cortex") for r in range(3) for m in ("cortex", "dt")]},
            {"records": [make_record(m, "d2", r, m == "cortex") for r in range(3) for m in ("cortex", "dt")]},
        ]
        ranking = aggregate_reports(reports)
        assert ranking["methods"] == ["cortex", "dt"]
        assert ranking["overall"] == {"cortex": 0.0, "dt": 1.0}
        assert set(ranking["per_dataset"]) == {"d1", "d2"}
        assert ranking["metrics"]["n_rules"]["cortex"] == 0.0

    def test_missing_partner_record(self):
        records = [make_record("cortex", "d1", 0, True), make_record("dt", "d1", 0, False),
                   make_record("cortex", "d1", 1, True)]
        with pytest.raises(DataError, match="run 1 has no dt record"):
            aggregate_reports([{"records": records}])

    def test_single_method(self):
        with pytest.raises(DataError, match="at least 2 methods"):
            aggregate_reports([{"records": [make_record("cortex", "d1", 0, True)]}])

    def test_not_a_report(self):
        with pytest.raises(DataError, match="records"):
            aggregate_reports([{"summary": {}}])
