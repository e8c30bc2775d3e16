"""
Experiment - Repeated surrogate evaluation runs and their statistical summary

Every run splits the data with seed = base seed + run index, asks the black
box to label the held-out part, fits each surrogate method to those labels,
extracts rules and scores them on the same held-out samples. Runs are
independent and may execute on a thread pool; the report is assembled in
run order.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from core import cost_matrix as cm
from core.baseline_dt import fit_weighted
from core.blackbox import PredictorSource, get_predictions
from core.cortex_tree import TreeParams, fit
from core.dataset import encode, feature_scales, load_csv, split, split_indices
from core.errors import ConfigurationError, CortexError, DataError, with_context
from core.metrics import METRIC_NAMES, evaluate
from core.rules import extract
from core.stats import METRIC_DIRECTIONS, RankTable, friedman, rank_and_normalize, wilcoxon

logger = logging.getLogger(__name__)

METHODS = ("cortex", "dt")
NOISE_STREAM = 1
INSUFFICIENT_BLOCKS = "insufficient blocks"
INSUFFICIENT_METHODS = "insufficient methods"


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved experiment settings"""

    data_path: Optional[str] = None
    target: str = "class"
    predictor: Optional[PredictorSource] = None
    cost_matrix: str = "default"
    minority_cost: Optional[float] = None
    train_fraction: float = 0.7
    repeats: int = 100
    seed: int = 0
    noise_sigma: float = 0.1
    stratified: bool = True
    holdout_fraction: Optional[float] = None
    alpha: float = 0.05
    cortex_params: TreeParams = field(default_factory=TreeParams)
    dt_params: TreeParams = field(default_factory=TreeParams)
    methods: Tuple[str, ...] = METHODS
    out_dir: str = "results"
    formats: Tuple[str, ...] = ("json", "csv", "text")
    parallel: int = 1
    dataset_name: Optional[str] = None

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigurationError(f"repeats must be at least 1, got {self.repeats}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigurationError(f"train fraction must lie in (0, 1), got {self.train_fraction}")
        if self.holdout_fraction is not None and not 0.0 < self.holdout_fraction < 1.0:
            raise ConfigurationError(f"holdout fraction must lie in (0, 1), got {self.holdout_fraction}")
        if self.noise_sigma < 0:
            raise ConfigurationError(f"noise sigma must be nonnegative, got {self.noise_sigma}")
        if self.parallel < 1:
            raise ConfigurationError(f"parallel must be at least 1, got {self.parallel}")
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise ConfigurationError(f"methods must be a nonempty subset of {', '.join(METHODS)}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")

    def params_for(self, method):
        return self.cortex_params if method == "cortex" else self.dt_params

    def to_dict(self):
        return {
            "data_path": self.data_path,
            "target": self.target,
            "predictor": self.predictor.describe() if self.predictor else None,
            "predictions_column": getattr(self.predictor, "column", None),
            "oracle_cwd": getattr(self.predictor, "cwd", None),
            "oracle_timeout": getattr(self.predictor, "timeout", None),
            "cost_matrix": self.cost_matrix,
            "minority_cost": self.minority_cost,
            "train_fraction": self.train_fraction,
            "repeats": self.repeats,
            "seed": self.seed,
            "noise_sigma": self.noise_sigma,
            "stratified": self.stratified,
            "holdout_fraction": self.holdout_fraction,
            "alpha": self.alpha,
            "cortex_params": self.cortex_params.to_dict(),
            "dt_params": self.dt_params.to_dict(),
            "methods": list(self.methods),
            "out_dir": self.out_dir,
            "formats": list(self.formats),
            "parallel": self.parallel,
            "dataset_name": self.dataset_name,
        }


@dataclass
class RunResult:
    run: int
    seed: int
    records: list
    rulesets: dict


@dataclass
class EvaluationReport:
    """Per-run records plus everything derived from them"""

    config: dict
    dataset: str
    methods: Tuple[str, ...]
    records: List
    summary: Dict
    friedman: Dict
    wilcoxon: Dict
    ranks: Dict
    overall_rank: Dict
    comparison: Dict
    cost_matrix: List
    predictor: str
    rulesets: Dict = field(default_factory=dict, repr=False)
    generated_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def values(self, metric, method):
        return [r.metric(metric) for r in self.records if r.method == method]

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "methods": list(self.methods),
            "config": self.config,
            "predictor": self.predictor,
            "cost_matrix": self.cost_matrix,
            "records": [r.to_dict() for r in self.records],
            "summary": self.summary,
            "friedman": self.friedman,
            "wilcoxon": self.wilcoxon,
            "ranks": self.ranks,
            "overall_rank": self.overall_rank,
            "comparison": self.comparison,
            "generated_at": self.generated_at,
        }


def noise_seed(run_seed):
    """Robustness noise seed derived from the run seed"""
    return int(np.random.SeedSequence([int(run_seed), NOISE_STREAM]).generate_state(1)[0])


def resolve_cost_matrix(data, source="default", minority_cost=None):
    """
    Cost matrix from a source name: 'default', 'unit' or a CSV path

    The default matrix is built from the true-label counts of the whole
    dataset, so it is the same in every run.
    """
    names = data.schema.class_names
    if minority_cost is not None:
        return cm.binary_from_minority_cost(data.class_counts, minority_cost, names)
    if source == "default":
        return cm.default_from_counts(data.class_counts, names)
    if source == "unit":
        return cm.unit(data.n_classes, names)
    return cm.load(source, data.n_classes, names)


def fit_surrogate(method, data, matrix, params):
    """Fit one surrogate method; returns the fitted tree"""
    if method == "cortex":
        return fit(data, matrix, params)
    if method == "dt":
        return fit_weighted(data, params)
    raise ConfigurationError(f"unknown method '{method}'")


def _mean_std(values):
    values = np.asarray(values, dtype=np.float64)
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return {"mean": float(values.mean()), "std": std}


class ExperimentRunner:
    """
    Executes the repeated runs of one experiment

    Args:
        config (RunConfig): Resolved settings
        data (Dataset): Encoded dataset; loaded from config.data_path if None
        progress (callable): Optional progress(completed, total) callback
    """

    def __init__(self, config, data=None, progress: Optional[Callable[[int, int], None]] = None):
        if config.predictor is None:
            raise ConfigurationError("a prediction file or an oracle command is required")
        if data is None:
            if not config.data_path:
                raise ConfigurationError("a data file is required")
            data = encode(load_csv(config.data_path, config.target, config.dataset_name))
        self.config = config
        self.data = data
        self.dataset_name = config.dataset_name or data.name or "dataset"
        self.matrix = resolve_cost_matrix(data, config.cost_matrix, config.minority_cost)
        self.progress = progress

    def run_once(self, run):
        """One complete run: split, label, fit, extract, score"""
        config = self.config
        run_seed = config.seed + run
        train, test = split(self.data, config.train_fraction, run_seed, config.stratified)
        scales = feature_scales(train)
        blackbox = get_predictions(config.predictor, test)

        fit_rows = eval_rows = np.arange(test.n_samples)
        if config.holdout_fraction is not None:
            fit_rows, eval_rows = split_indices(
                test, 1.0 - config.holdout_fraction, run_seed, stratified=False)

        surrogate_train = test.subset(fit_rows).with_labels(blackbox[fit_rows])
        eval_samples = test.subset(eval_rows)
        seed_for_noise = noise_seed(run_seed)

        records = []
        rulesets = {}
        for method in config.methods:
            tree = fit_surrogate(method, surrogate_train, self.matrix, config.params_for(method))
            ruleset = extract(tree)
            rulesets[method] = ruleset
            records.append(evaluate(
                ruleset, eval_samples, blackbox[eval_rows], config.noise_sigma, scales,
                seed_for_noise, method, run=run, seed=run_seed, dataset_name=self.dataset_name))

        return RunResult(run, run_seed, records, rulesets)

    def _guarded(self, run):
        try:
            return self.run_once(run)
        except Exception as e:
            raise with_context(e, f"run {run}")

    def run(self):
        """
        Execute every run and assemble the report

        Returns:
            EvaluationReport: Records, summaries and test results
        """
        config = self.config
        logger.info(f"Experiment on '{self.dataset_name}': {config.repeats} run(s), "
                    f"methods {', '.join(config.methods)}, {config.parallel} worker(s)")

        results = []
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            futures = [pool.submit(self._guarded, run) for run in range(config.repeats)]
            try:
                for completed, future in enumerate(futures, start=1):
                    results.append(future.result())
                    logger.info(f"Run {completed - 1} finished ({completed}/{config.repeats})")
                    if self.progress:
                        self.progress(completed, config.repeats)
            except CortexError:
                for future in futures:
                    future.cancel()
                raise

        report = self.assemble(results)
        logger.info(f"Experiment on '{self.dataset_name}' finished: {len(report.records)} records")
        return report

    def assemble(self, results):
        """Reduce run results (in run order) into an EvaluationReport"""
        config = self.config
        methods = tuple(config.methods)
        results = sorted(results, key=lambda r: r.run)
        records = [record for result in results for record in result.records]

        expected = config.repeats * len(methods)
        if len(records) != expected:
            raise DataError(f"expected {expected} metric records, got {len(records)}")

        def column(metric, method):
            return [r.metric(metric) for r in records if r.method == method]

        summary = {metric: {m: _mean_std(column(metric, m)) for m in methods}
                   for metric in METRIC_NAMES}

        friedman_results = {}
        wilcoxon_results = {}
        ranks = {}
        comparison = {}
        for metric in METRIC_NAMES:
            higher = METRIC_DIRECTIONS[metric]
            values = {m: column(metric, m) for m in methods}
            friedman_results[metric] = self._friedman(values, higher)
            wilcoxon_results[metric] = self._wilcoxon(values)
            if len(methods) >= 2:
                ranks[metric] = rank_and_normalize(values, higher)
                comparison[metric] = self._compare(metric, values, ranks[metric], wilcoxon_results[metric])

        overall = {}
        if ranks:
            overall = {m: float(np.mean([ranks[metric][m] for metric in METRIC_NAMES])) for m in methods}

        return EvaluationReport(
            config=config.to_dict(),
            dataset=self.dataset_name,
            methods=methods,
            records=records,
            summary=summary,
            friedman=friedman_results,
            wilcoxon=wilcoxon_results,
            ranks=ranks,
            overall_rank=overall,
            comparison=comparison,
            cost_matrix=self.matrix.to_rows(),
            predictor=config.predictor.describe(),
            rulesets={(result.run, m): rs for result in results for m, rs in result.rulesets.items()},
        )

    def _friedman(self, values, higher):
        if len(values) < 2:
            return {"status": INSUFFICIENT_METHODS, "n_methods": len(values)}
        if self.config.repeats < 2:
            return {"status": INSUFFICIENT_BLOCKS, "n_blocks": self.config.repeats}
        table = RankTable.from_columns(values, higher)
        return {"status": "ok", **friedman(table, self.config.alpha).to_dict()}

    def _wilcoxon(self, values):
        pairs = {}
        for a, b in itertools.combinations(values, 2):
            key = f"{a}_vs_{b}"
            if self.config.repeats < 2:
                pairs[key] = {"status": INSUFFICIENT_BLOCKS, "n_blocks": self.config.repeats}
            else:
                pairs[key] = {"status": "ok", **wilcoxon(values[a], values[b], self.config.alpha).to_dict()}
        return pairs

    @staticmethod
    def _compare(metric, values, normalized, pairs):
        """Best/worst method, mean within-run rank of cortex and the cortex-vs-dt verdict"""
        higher = METRIC_DIRECTIONS[metric]
        methods = list(values)
        table = RankTable.from_columns(values, higher)
        mean_ranks = dict(zip(methods, table.ranks().mean(axis=0)))

        entry = {
            "best": min(methods, key=lambda m: normalized[m]),
            "worst": max(methods, key=lambda m: normalized[m]),
            "mean_ranks": {m: float(r) for m, r in mean_ranks.items()},
        }
        if "cortex" in values:
            entry["cortex_mean_rank"] = float(mean_ranks["cortex"])
        if "cortex" in values and "dt" in values:
            difference = float(np.mean(values["cortex"]) - np.mean(values["dt"]))
            if not higher:
                difference = -difference
            winner = "tie" if difference == 0 else ("cortex" if difference > 0 else "dt")
            test = pairs.get("cortex_vs_dt", {})
            entry["cortex_vs_dt"] = {
                "winner": winner,
                "significant": bool(test.get("reject", False)),
                "p_value": test.get("p_value"),
            }
        return entry


def run_experiment(config, data=None, progress=None):
    """
    Run the full experiment described by a configuration

    Args:
        config (RunConfig): Resolved settings
        data (Dataset): Pre-encoded dataset (otherwise read from config.data_path)

    Returns:
        EvaluationReport: Complete report
    """
    return ExperimentRunner(config, data, progress).run()
