"""
Metrics - Agreement, coverage and robustness of extracted rule sets

Uncovered samples count against correctness and fidelity: every proportion
is taken over the full sample set.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np

from core.dataset import Dataset, imbalance_ratio, perturb
from core.errors import DataError
from core.rules import apply_batch, raw_average_length, size_metrics

logger = logging.getLogger(__name__)

METRIC_NAMES = (
    "completeness",
    "correctness",
    "fidelity",
    "robustness",
    "n_rules",
    "avg_rule_length",
)


@dataclass(frozen=True)
class MetricRecord:
    """One method evaluated in one run"""

    method: str
    dataset: str
    run: int
    seed: int

    completeness: float
    correctness: float
    fidelity: float
    robustness: float
    n_rules: int
    avg_rule_length: float

    raw_avg_rule_length: float = 0.0
    noise_sigma: float = 0.0
    blackbox_accuracy: float = 0.0
    imbalance_ratio: float = 1.0

    def __post_init__(self):
        for name in ("completeness", "correctness", "fidelity", "robustness", "blackbox_accuracy"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DataError(f"{name} must lie in [0, 1], got {value}")

    def metric(self, name):
        return getattr(self, name)

    def to_dict(self):
        return asdict(self)


def _features(samples):
    X = samples.features if isinstance(samples, Dataset) else np.asarray(samples, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("metrics need a nonempty 2-dimensional sample set")
    return X


def _aligned(reference, labels, what):
    labels = np.asarray(labels)
    if labels.shape != (reference.shape[0],):
        raise DataError(f"{what}: expected {reference.shape[0]} labels, got {labels.size}")
    return labels


def completeness(ruleset, samples):
    """Fraction of samples covered by at least one rule"""
    predictions = apply_batch(ruleset, _features(samples))
    return float(np.mean(predictions >= 0))


def correctness(ruleset, samples, true_labels):
    """Fraction of samples the rules assign to their true class"""
    predictions = apply_batch(ruleset, _features(samples))
    true_labels = _aligned(predictions, true_labels, "correctness")
    return float(np.mean(predictions == true_labels))


def fidelity(ruleset, samples, blackbox_labels):
    """Fraction of samples where rules and black box agree"""
    predictions = apply_batch(ruleset, _features(samples))
    blackbox_labels = _aligned(predictions, blackbox_labels, "fidelity")
    return float(np.mean(predictions == blackbox_labels))


def robustness(ruleset, samples, sigma, feature_scales, seed):
    """
    Fraction of samples whose rule outcome survives Gaussian input noise

    An uncovered sample that stays uncovered counts as unchanged.

    Args:
        ruleset (RuleSet): Rules under test
        samples (Dataset): Clean samples
        sigma (float): Noise magnitude relative to each feature's scale
        feature_scales (sequence): Per-feature standard deviations
        seed (int): Noise generator seed

    Returns:
        float: Proportion of unchanged predictions
    """
    if not isinstance(samples, Dataset):
        raise DataError("robustness needs a Dataset of samples")
    clean = apply_batch(ruleset, _features(samples))
    noisy = apply_batch(ruleset, perturb(samples, sigma, feature_scales, seed).features)
    return float(np.mean(clean == noisy))


def evaluate(ruleset, samples, blackbox_labels, sigma, feature_scales, noise_seed,
             method, run=0, seed=0, dataset_name=None):
    """
    Compute every metric of one rule set in one pass

    Args:
        ruleset (RuleSet): Extracted rules
        samples (Dataset): Evaluation samples carrying the TRUE labels
        blackbox_labels (sequence): Black-box predictions on the same samples
        sigma (float): Robustness noise magnitude
        feature_scales (sequence): Robustness noise scales
        noise_seed (int): Robustness noise seed
        method (str): Method name recorded in the row
        run (int): Run index
        seed (int): Run seed

    Returns:
        MetricRecord: Complete row
    """
    X = _features(samples)
    blackbox_labels = _aligned(X, blackbox_labels, "fidelity")
    predictions = apply_batch(ruleset, X)
    noisy = apply_batch(ruleset, perturb(samples, sigma, feature_scales, noise_seed).features)
    n_rules, avg_length = size_metrics(ruleset)

    counts = np.bincount(blackbox_labels, minlength=samples.n_classes)
    record = MetricRecord(
        method=method,
        dataset=dataset_name if dataset_name is not None else samples.name,
        run=int(run),
        seed=int(seed),
        completeness=float(np.mean(predictions >= 0)),
        correctness=float(np.mean(predictions == samples.labels)),
        fidelity=float(np.mean(predictions == blackbox_labels)),
        robustness=float(np.mean(predictions == noisy)),
        n_rules=n_rules,
        avg_rule_length=avg_length,
        raw_avg_rule_length=raw_average_length(ruleset),
        noise_sigma=float(sigma),
        blackbox_accuracy=float(np.mean(blackbox_labels == samples.labels)),
        imbalance_ratio=imbalance_ratio(counts),
    )
    logger.debug(f"run {run} {method}: fidelity {record.fidelity:.4f}, {n_rules} rules")
    return record
