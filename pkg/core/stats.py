"""
Stats - Nonparametric comparison of surrogate methods

Friedman test across methods, paired Wilcoxon signed-rank tests and
normalized rank aggregation. Within-block ranks are direction-adjusted so
that rank 1 is always the best method.
"""

import itertools
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Dict, Tuple

import numpy as np
from scipy import stats as st

from core.errors import ConfigurationError, DataError
from core.metrics import METRIC_NAMES

logger = logging.getLogger(__name__)

METRIC_DIRECTIONS = {
    "completeness": True,
    "correctness": True,
    "fidelity": True,
    "robustness": True,
    "n_rules": False,
    "avg_rule_length": False,
}

EXACT_WILCOXON_LIMIT = 25
WILCOXON_METHODS = ("auto", "exact", "approx")
RANK_SCALES = ("achievable", "observed")


@dataclass(frozen=True, eq=False)
class RankTable:
    """n blocks (rows) by k methods (columns)"""

    methods: Tuple[str, ...]
    values: np.ndarray
    higher_is_better: bool = True

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"rank table must be 2-dimensional, got shape {values.shape}")
        if values.shape[1] != len(self.methods):
            raise DataError(f"{len(self.methods)} methods but {values.shape[1]} value columns")
        if values.shape[1] < 2:
            raise DataError("rank table needs at least 2 methods")
        if values.shape[0] < 1:
            raise DataError("rank table needs at least 1 block")
        if not np.all(np.isfinite(values)):
            raise DataError("rank table has missing or infinite values")
        values.setflags(write=False)
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "values", values)

    @property
    def n_blocks(self):
        return self.values.shape[0]

    @property
    def n_methods(self):
        return self.values.shape[1]

    def ranks(self):
        """Within-block average ranks, 1 = best"""
        oriented = -self.values if self.higher_is_better else self.values
        return st.rankdata(oriented, method="average", axis=1)

    @classmethod
    def from_columns(cls, columns, higher_is_better=True):
        """Build from a method -> per-block values mapping"""
        if not columns:
            raise DataError("rank table needs at least one method")
        lengths = {len(v) for v in columns.values()}
        if len(lengths) != 1:
            raise DataError("every method needs the same number of blocks")
        methods = tuple(columns)
        values = np.column_stack([np.asarray(columns[m], dtype=np.float64) for m in methods])
        return cls(methods, values, higher_is_better)


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    p_value: float
    alpha: float
    reject: bool
    n_blocks: int
    n_methods: int
    mean_ranks: Dict[str, float] = field(default_factory=dict)
    method: str = "chi2"

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    alpha: float
    reject: bool
    n: int
    n_reduced: int
    w_plus: float
    w_minus: float
    method: str

    def to_dict(self):
        return asdict(self)


def friedman_statistic(rank_sums, n_blocks, n_methods):
    """Chi-square form 12/(nk(k+1)) * sum R_j^2 - 3n(k+1), no tie correction"""
    n, k = n_blocks, n_methods
    rank_sums = np.asarray(rank_sums, dtype=np.float64)
    statistic = 12.0 / (n * k * (k + 1)) * float(np.sum(rank_sums ** 2)) - 3.0 * n * (k + 1)
    return max(statistic, 0.0)


def _friedman_exact_p(doubled_ranks, observed_square_sum):
    """
    Permutation p-value: every block's rank vector permuted independently

    Works on doubled ranks so average ties stay integral.
    """
    distribution = {(0,) * doubled_ranks.shape[1]: 1.0}
    for block in doubled_ranks:
        arrangements = list(itertools.permutations(block.tolist()))
        weight = 1.0 / len(arrangements)
        grown = defaultdict(float)
        for sums, probability in distribution.items():
            for arrangement in arrangements:
                key = tuple(s + a for s, a in zip(sums, arrangement))
                grown[key] += probability * weight
        distribution = grown

    return float(sum(probability for sums, probability in distribution.items()
                     if sum(s * s for s in sums) >= observed_square_sum))


def friedman(table, alpha=0.05, exact=False):
    """
    Friedman test for differences among k related methods

    Args:
        table (RankTable): n >= 2 blocks of k >= 2 methods
        alpha (float): Significance level
        exact (bool): Permutation p-value instead of the chi-square tail
            (feasible for small k and n only)

    Returns:
        FriedmanResult: Statistic, p-value and decision
    """
    if table.n_blocks < 2:
        raise DataError(f"insufficient blocks: Friedman test needs at least 2, got {table.n_blocks}")

    n, k = table.n_blocks, table.n_methods
    ranks = table.ranks()
    rank_sums = ranks.sum(axis=0)
    statistic = friedman_statistic(rank_sums, n, k)

    if exact:
        doubled = np.rint(2 * ranks).astype(np.int64)
        observed = int(np.sum(doubled.sum(axis=0) ** 2))
        p_value = _friedman_exact_p(doubled, observed)
    else:
        p_value = float(st.chi2.sf(statistic, k - 1))
    p_value = min(1.0, p_value)

    mean_ranks = {m: float(r) for m, r in zip(table.methods, rank_sums / n)}
    return FriedmanResult(statistic, p_value, float(alpha), bool(p_value < alpha), n, k,
                          mean_ranks, "exact" if exact else "chi2")


def _signed_rank_exact_cdf(doubled_ranks, doubled_statistic):
    """P(T <= W) for T the positive-rank sum under random signs"""
    counts = np.zeros(int(doubled_ranks.sum()) + 1)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:counts.size - r]
        counts = counts + shifted
    return float(counts[:doubled_statistic + 1].sum() / 2.0 ** doubled_ranks.size)


def wilcoxon(a, b, alpha=0.05, method="auto"):
    """
    Two-sided Wilcoxon signed-rank test on paired observations

    Zero differences are dropped; |d| is ranked with average ties and
    W = min(W+, W-). The exact null distribution is used up to 25 nonzero
    differences under method='auto', the tie- and continuity-corrected
    normal approximation beyond.

    Args:
        a, b (sequence): Paired observations of equal length
        alpha (float): Significance level
        method (str): 'auto', 'exact' or 'approx'

    Returns:
        WilcoxonResult: Statistic, p-value and decision
    """
    if method not in WILCOXON_METHODS:
        raise ConfigurationError(f"unknown Wilcoxon method '{method}'")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError(f"paired samples must have equal lengths, got {a.size} and {b.size}")

    d = a - b
    d = d[d != 0]
    n_reduced = int(d.size)
    if n_reduced == 0:
        return WilcoxonResult(0.0, 1.0, float(alpha), False, int(a.size), 0, 0.0, 0.0, "no effect")

    ranks = st.rankdata(np.abs(d), method="average")
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    statistic = min(w_plus, w_minus)

    use_exact = method == "exact" or (method == "auto" and n_reduced <= EXACT_WILCOXON_LIMIT)
    if use_exact:
        doubled = np.rint(2 * ranks).astype(np.int64)
        p_value = 2.0 * _signed_rank_exact_cdf(doubled, int(round(2 * statistic)))
        used = "exact"
    else:
        n = n_reduced
        mean = n * (n + 1) / 4.0
        _, tie_sizes = np.unique(ranks, return_counts=True)
        variance = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes ** 3 - tie_sizes)) / 48.0
        if variance <= 0:
            p_value = 1.0
        else:
            z = max(abs(statistic - mean) - 0.5, 0.0) / np.sqrt(variance)
            p_value = 2.0 * float(st.norm.sf(z))
        used = "approx"

    p_value = min(1.0, p_value)
    if n_reduced < 5:
        logger.debug(f"Wilcoxon on {n_reduced} nonzero differences cannot reach small p-values")
    return WilcoxonResult(statistic, p_value, float(alpha), bool(p_value < alpha),
                          int(a.size), n_reduced, w_plus, w_minus, used)


def rank_and_normalize(values, higher_is_better=True, scale="achievable"):
    """
    Normalized rank-sum per method

    Methods are ranked within every run (1 = best, average ties), ranks are
    summed over runs and mapped to [0, 1] with 0 = best.

    Args:
        values (dict): method -> per-run metric values
        higher_is_better (bool): Metric direction
        scale (str): 'achievable' normalizes over [n, n*k]; 'observed'
            min-max normalizes over the observed sums

    Returns:
        dict: method -> normalized rank
    """
    if scale not in RANK_SCALES:
        raise ConfigurationError(f"unknown rank scale '{scale}'")
    if not values:
        raise DataError("nothing to rank")
    table = RankTable.from_columns(values, higher_is_better)
    sums = table.ranks().sum(axis=0)
    n, k = table.n_blocks, table.n_methods

    if scale == "achievable":
        normalized = (sums - n) / (n * (k - 1))
    else:
        low, high = sums.min(), sums.max()
        normalized = np.full(k, 0.5) if np.isclose(low, high) else (sums - low) / (high - low)

    return {m: float(np.clip(v, 0.0, 1.0)) for m, v in zip(table.methods, normalized)}


def overall_rank(normalized_by_metric):
    """Mean normalized rank across metrics, per method"""
    if not normalized_by_metric:
        raise DataError("nothing to aggregate")
    methods = list(next(iter(normalized_by_metric.values())))
    return {m: float(np.mean([ranks[m] for ranks in normalized_by_metric.values()]))
            for m in methods}


def _columns(records, metric, methods):
    """method -> values over (dataset, run) blocks; every block needs every method"""
    blocks = defaultdict(dict)
    for record in records:
        blocks[(record["dataset"], record["run"])][record["method"]] = float(record[metric])
    columns = {m: [] for m in methods}
    for key in sorted(blocks):
        row = blocks[key]
        missing = [m for m in methods if m not in row]
        if missing:
            raise DataError(f"dataset '{key[0]}' run {key[1]} has no {', '.join(missing)} record")
        for m in methods:
            columns[m].append(row[m])
    return columns


def aggregate_reports(reports, scale="achievable"):
    """
    Rank methods across several evaluation reports (datasets)

    Ranks of every run of every dataset are summed per metric, normalized and
    averaged over the six metrics.

    Args:
        reports (list): Report documents, each with a 'records' list

    Returns:
        dict: 'metrics' (metric -> method -> rank), 'overall', 'per_dataset'
    """
    if not reports:
        raise DataError("no reports to aggregate")

    records = []
    for report in reports:
        try:
            records.extend(report["records"])
        except (KeyError, TypeError):
            raise DataError("report document has no 'records' section")
    if not records:
        raise DataError("reports contain no records")

    methods = list(dict.fromkeys(r["method"] for r in records))
    if len(methods) < 2:
        raise DataError("ranking needs at least 2 methods")

    by_metric = {
        metric: rank_and_normalize(_columns(records, metric, methods), METRIC_DIRECTIONS[metric], scale)
        for metric in METRIC_NAMES
    }

    per_dataset = {}
    for dataset in dict.fromkeys(r["dataset"] for r in records):
        subset = [r for r in records if r["dataset"] == dataset]
        per_dataset[dataset] = overall_rank({
            metric: rank_and_normalize(_columns(subset, metric, methods), METRIC_DIRECTIONS[metric], scale)
            for metric in METRIC_NAMES
        })

    logger.info(f"Aggregated {len(records)} records over {len(per_dataset)} dataset(s)")
    return {"methods": methods, "metrics": by_metric,
            "overall": overall_rank(by_metric), "per_dataset": per_dataset}
