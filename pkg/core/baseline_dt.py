"""
Baseline DT - Class-weighted Gini decision tree

Class weights are inversely proportional to class frequencies,
w_i = n / (K * N_i). The tree is grown by the same engine as CORTEX with a
weighted Gini criterion swapped in, so the split criterion and leaf labeling
are the only differences between the two methods.
"""

import logging
from dataclasses import dataclass
from typing import ClassVar, Tuple

import numpy as np

from core.cortex_tree import FittedTree, SplitCriterion, TreeParams, grow
from core.errors import DataError

logger = logging.getLogger(__name__)


def class_weights(counts):
    """
    Balanced class weights

    Args:
        counts (sequence): Per-class counts, all >= 1

    Returns:
        np.ndarray: w_i = n / (K * N_i)
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size < 1:
        raise DataError("class weights need at least one class")
    if np.any(counts < 1):
        empty = int(np.flatnonzero(counts < 1)[0])
        raise DataError(f"empty class: class {empty} has no samples")
    return counts.sum() / (counts.size * counts)


def _present_class_weights(counts):
    """Balanced weights over the classes present; absent classes get 0"""
    counts = np.asarray(counts)
    weights = np.zeros(counts.size)
    present = counts > 0
    weights[present] = class_weights(counts[present])
    return weights


def weighted_gini(counts, weights):
    """
    Gini impurity of weighted class proportions q_i = w_i N_i / sum_j w_j N_j

    Accepts a single count vector or a batch of them; an empty node scores 0.
    """
    mass = np.asarray(counts, dtype=np.float64) * weights
    total = mass.sum(axis=-1)
    safe = np.where(total > 0, total, 1.0)
    proportions = mass / safe[..., None]
    return np.where(total > 0, 1.0 - (proportions ** 2).sum(axis=-1), 0.0)


class WeightedGiniCriterion(SplitCriterion):
    """Node score = weighted mass times weighted Gini impurity"""

    def __init__(self, weights):
        self.weights = np.asarray(weights, dtype=np.float64)

    def node_score(self, counts):
        mass = (np.asarray(counts, dtype=np.float64) * self.weights).sum(axis=-1)
        return mass * weighted_gini(counts, self.weights)

    def leaf(self, counts):
        mass = np.asarray(counts, dtype=np.float64) * self.weights
        label = int(np.argmax(mass))
        total = mass.sum()
        if total <= 0:
            return label, tuple([1.0 / mass.size] * mass.size)
        return label, tuple(float(q) for q in mass / total)


@dataclass(frozen=True, eq=False)
class WeightedTree(FittedTree):
    class_weights: Tuple[float, ...] = ()

    method: ClassVar[str] = "dt"


def fit_weighted(train, params=None, weights=None):
    """
    Fit the class-weighted Gini tree

    Args:
        train (Dataset): Training samples
        params (TreeParams): Same hyperparameters as CORTEX
        weights (sequence): Explicit class weights; balanced weights by default

    Returns:
        WeightedTree: Fitted tree
    """
    params = params or TreeParams()
    if train.n_samples < 1:
        raise DataError("cannot fit a tree on an empty training set")

    if weights is None:
        weights = _present_class_weights(train.class_counts)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (train.n_classes,):
        raise DataError(f"expected {train.n_classes} class weights, got {weights.size}")

    root = grow(train, WeightedGiniCriterion(weights), params)
    tree = WeightedTree(root, train.schema, params, class_weights=tuple(float(w) for w in weights))
    logger.debug(f"Weighted DT fitted: {tree.n_leaves} leaves, depth {tree.depth}")
    return tree
