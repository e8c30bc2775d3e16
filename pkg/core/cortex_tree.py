"""
CORTEX Tree - Multi-class cost-sensitive decision tree induction

Leaves are labeled with the least costly class under a class-dependent cost
matrix and carry cost-sensitive probability vectors. Splits are chosen
greedily by direct cost reduction.

Leaf probabilities are normalized costs:
    a_k = cost(k) / sum_j cost(j),   p_k = (1 - a_k) / (K - 1)
so that they sum to 1 and argmax p = argmin cost. A node whose label costs
are all zero gets the uniform vector.
"""

import itertools
import logging
import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar, Optional, Tuple, Union

import numpy as np

from core.cost_matrix import CostMatrix
from core.dataset import FeatureSchema
from core.errors import ConfigurationError, ConsistencyError, DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitRule:
    """x[feature] <= threshold goes left, otherwise right"""

    feature: int
    threshold: float

    def __post_init__(self):
        if not math.isfinite(self.threshold):
            raise ConsistencyError(f"split threshold must be finite, got {self.threshold}")


@dataclass(frozen=True)
class Leaf:
    counts: Tuple[int, ...]
    label: int
    probabilities: Tuple[float, ...]
    node_id: int = 0

    @property
    def n_samples(self):
        return sum(self.counts)


@dataclass(frozen=True)
class Internal:
    split: SplitRule
    left: "Node"
    right: "Node"
    node_id: int = 0


Node = Union[Leaf, Internal]


@dataclass(frozen=True)
class TreeParams:
    """
    Growth hyperparameters

    Attributes:
        max_depth: Longest allowed root-to-leaf path (0 = single leaf)
        min_samples_leaf: Smallest allowed child size
        min_gain: A split is taken only if its gain is strictly above this
        max_thresholds: Cap on candidate thresholds per feature (None = all midpoints)
    """

    max_depth: int = 20
    min_samples_leaf: int = 1
    min_gain: float = 1e-12
    max_thresholds: Optional[int] = None

    def __post_init__(self):
        if self.max_depth < 0:
            raise ConfigurationError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ConfigurationError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if not self.min_gain >= 0:
            raise ConfigurationError(f"min_gain must be >= 0, got {self.min_gain}")
        if self.max_thresholds is not None and self.max_thresholds < 1:
            raise ConfigurationError(f"max_thresholds must be >= 1, got {self.max_thresholds}")

    def to_dict(self):
        return {
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "min_gain": self.min_gain,
            "max_thresholds": self.max_thresholds,
        }


class SplitCriterion(ABC):
    """Scores nodes from class counts; lower scores are better"""

    @abstractmethod
    def node_score(self, counts):
        """Score of one count vector (shape K) or a batch (shape m x K)"""

    @abstractmethod
    def leaf(self, counts):
        """(label, probabilities) for a leaf with the given counts"""


class CostCriterion(SplitCriterion):
    """Node score = cost of the least costly label"""

    def __init__(self, matrix):
        self.matrix = matrix

    def node_score(self, counts):
        return (np.asarray(counts) @ self.matrix.costs).min(axis=-1)

    def leaf(self, counts):
        label, _ = label_node(counts, self.matrix)
        return label, soft_probabilities(counts, self.matrix)


@dataclass(frozen=True, eq=False)
class FittedTree:
    """Binary tree of split nodes and labeled leaves"""

    root: Node
    schema: FeatureSchema
    params: TreeParams

    method: ClassVar[str] = "tree"

    @property
    def n_classes(self):
        return self.schema.n_classes

    def leaves(self):
        """Leaves in depth-first, left-to-right order"""
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Leaf):
                yield node
            else:
                stack.append(node.right)
                stack.append(node.left)

    @property
    def n_leaves(self):
        return sum(1 for _ in self.leaves())

    @property
    def depth(self):
        def walk(node):
            if isinstance(node, Leaf):
                return 0
            return 1 + max(walk(node.left), walk(node.right))
        return walk(self.root)

    def predict(self, x):
        return predict(self, x)

    def predict_batch(self, X):
        return predict_batch(self, X)


@dataclass(frozen=True, eq=False)
class CortexTree(FittedTree):
    cost_matrix: Optional[CostMatrix] = None

    method: ClassVar[str] = "cortex"


def _as_counts(counts, n_classes):
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != (n_classes,):
        raise DataError(f"expected {n_classes} class counts, got {counts.size}")
    return counts


def node_cost(counts, matrix, k):
    """
    Misclassification cost of labeling a node with class k

    Returns:
        float: sum_i counts[i] * C[i][k]
    """
    counts = _as_counts(counts, matrix.n_classes)
    if not 0 <= k < matrix.n_classes:
        raise DataError(f"class index {k} out of range")
    return float(counts @ matrix.costs[:, k])


def label_node(counts, matrix):
    """
    Least costly class of a node; ties go to the lowest class index

    Returns:
        tuple: (class index, cost)
    """
    counts = _as_counts(counts, matrix.n_classes)
    if counts.sum() < 1:
        raise DataError("cannot label an empty node")
    costs = counts @ matrix.costs
    label = int(np.argmin(costs))
    return label, float(costs[label])


def soft_probabilities(counts, matrix):
    """
    Cost-sensitive class probabilities of a node

    Returns:
        tuple: K probabilities summing to 1, maximal at the label_node class
    """
    counts = _as_counts(counts, matrix.n_classes)
    if counts.sum() < 1:
        raise DataError("cannot compute probabilities of an empty node")
    K = matrix.n_classes
    if K < 2:
        raise DataError("soft probabilities need at least 2 classes")

    costs = counts @ matrix.costs
    total = costs.sum()
    if total <= 0:
        return tuple([1.0 / K] * K)
    probabilities = (1.0 - costs / total) / (K - 1)
    return tuple(float(p) for p in probabilities)


def _midpoint(lo, hi):
    threshold = lo / 2.0 + hi / 2.0
    # Adjacent floats can round the midpoint onto hi
    if not lo <= threshold < hi:
        threshold = lo
    return float(threshold)


def find_split(X, y, n_classes, criterion, params):
    """
    Exhaustive threshold search shared by every criterion

    Candidates are midpoints between consecutive distinct sorted values of
    each feature. Ties go to the lowest feature index, then the lowest
    threshold.

    Returns:
        tuple or None: (SplitRule, gain) for the best split with gain > min_gain
    """
    n, p = X.shape
    if n < 2:
        return None
    total = np.bincount(y, minlength=n_classes)
    if np.count_nonzero(total) < 2:
        return None

    parent = float(criterion.node_score(total))
    onehot = np.eye(n_classes, dtype=np.int64)[y]
    sizes = np.arange(1, n)
    size_ok = (sizes >= params.min_samples_leaf) & (n - sizes >= params.min_samples_leaf)

    best = None
    best_gain = params.min_gain
    for feature in range(p):
        order = np.argsort(X[:, feature], kind="stable")
        values = X[order, feature]
        positions = np.flatnonzero((values[1:] > values[:-1]) & size_ok)
        if positions.size == 0:
            continue
        if params.max_thresholds is not None and positions.size > params.max_thresholds:
            picks = np.linspace(0, positions.size - 1, params.max_thresholds)
            positions = positions[np.unique(np.round(picks).astype(np.int64))]

        left = np.cumsum(onehot[order], axis=0)[positions]
        right = total - left
        gains = parent - (criterion.node_score(left) + criterion.node_score(right))
        i = int(np.argmax(gains))
        if gains[i] > best_gain:
            best_gain = float(gains[i])
            lo, hi = values[positions[i]], values[positions[i] + 1]
            best = (SplitRule(feature, _midpoint(lo, hi)), best_gain)

    return best


def best_split(X, y, matrix, params=None):
    """
    Best cost-reduction split of a node

    gain = parent label cost - (left label cost + right label cost)

    Args:
        X (np.ndarray): Node feature rows
        y (np.ndarray): Node labels
        matrix (CostMatrix): Misclassification costs
        params (TreeParams): Hyperparameters

    Returns:
        tuple or None: (SplitRule, gain)
    """
    params = params or TreeParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    return find_split(X, y, matrix.n_classes, CostCriterion(matrix), params)


def grow(data, criterion, params):
    """
    Recursive top-down greedy growth

    Stops at max depth, when a node is smaller than 2 * min_samples_leaf,
    when it is pure, or when no split beats min_gain.

    Returns:
        Node: Root of the grown tree, node ids in preorder
    """
    X, y, K = data.features, data.labels, data.n_classes
    ids = itertools.count()

    def build(indices, depth):
        node_id = next(ids)
        node_labels = y[indices]
        counts = np.bincount(node_labels, minlength=K)

        found = None
        if depth >= params.max_depth:
            reason = "max depth"
        elif indices.size < 2 * params.min_samples_leaf:
            reason = "too few samples"
        elif np.count_nonzero(counts) < 2:
            reason = "pure"
        else:
            found = find_split(X[indices], node_labels, K, criterion, params)
            reason = "no gain"

        if found is None:
            logger.debug(f"leaf {node_id} at depth {depth}: {reason}")
            label, probabilities = criterion.leaf(counts)
            return Leaf(tuple(int(c) for c in counts), int(label),
                        tuple(float(q) for q in probabilities), node_id)

        rule, _ = found
        goes_left = X[indices, rule.feature] <= rule.threshold
        left = build(indices[goes_left], depth + 1)
        right = build(indices[~goes_left], depth + 1)
        return Internal(rule, left, right, node_id)

    return build(np.arange(data.n_samples), 0)


def fit(train, matrix, params=None):
    """
    Induce a CORTEX tree

    Args:
        train (Dataset): Training samples
        matrix (CostMatrix): Costs with the same K as the dataset
        params (TreeParams): Hyperparameters

    Returns:
        CortexTree: Fitted tree
    """
    params = params or TreeParams()
    if train.n_samples < 1:
        raise DataError("cannot fit a tree on an empty training set")
    if train.n_classes != matrix.n_classes:
        raise DataError(
            f"dataset has {train.n_classes} classes but the cost matrix has {matrix.n_classes}")

    root = grow(train, CostCriterion(matrix), params)
    tree = CortexTree(root, train.schema, params, cost_matrix=matrix)
    logger.debug(f"CORTEX tree fitted: {tree.n_leaves} leaves, depth {tree.depth}")
    return tree


def _check_vector(tree, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (tree.schema.n_features,):
        raise DataError(f"expected a vector of {tree.schema.n_features} features, got {x.size}")
    return x


def predict(tree, x):
    """
    Route one vector to its leaf (<= goes left)

    Returns:
        tuple: (class index, probabilities)
    """
    x = _check_vector(tree, x)
    node = tree.root
    while isinstance(node, Internal):
        node = node.left if x[node.split.feature] <= node.split.threshold else node.right
    return node.label, node.probabilities


def predict_batch(tree, X):
    """
    Route every row of X

    Returns:
        tuple: (labels array (n,), probabilities array (n, K))
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != tree.schema.n_features:
        raise DataError(f"expected rows of {tree.schema.n_features} features, got shape {X.shape}")

    labels = np.full(X.shape[0], -1, dtype=np.int64)
    probabilities = np.zeros((X.shape[0], tree.n_classes))

    def route(node, index):
        if isinstance(node, Leaf):
            labels[index] = node.label
            probabilities[index] = node.probabilities
            return
        goes_left = X[index, node.split.feature] <= node.split.threshold
        route(node.left, index[goes_left])
        route(node.right, index[~goes_left])

    route(tree.root, np.arange(X.shape[0]))
    return labels, probabilities


def dumps_tree(tree):
    """
    Plain-text serialization, one node per line, two spaces per depth level

    Internal lines read `feature_name <= threshold` and are followed by the
    left then the right subtree; leaf lines read
    `class=<name> counts=[...] p=[...]`.
    """
    names = tree.schema.feature_names
    classes = tree.schema.class_names
    lines = []

    def write(node, depth):
        indent = "  " * depth
        if isinstance(node, Leaf):
            counts = ", ".join(str(c) for c in node.counts)
            probabilities = ", ".join(repr(float(q)) for q in node.probabilities)
            lines.append(f"{indent}class={classes[node.label]} counts=[{counts}] p=[{probabilities}]")
        else:
            lines.append(f"{indent}{names[node.split.feature]} <= {node.split.threshold!r}")
            write(node.left, depth + 1)
            write(node.right, depth + 1)

    write(tree.root, 0)
    return "\n".join(lines) + "\n"


_LEAF_LINE = re.compile(r"^class=(.*) counts=\[(.*)\] p=\[(.*)\]$")


def loads_tree(text, schema, params=None, cost_matrix=None):
    """
    Parse the format written by dumps_tree

    Returns:
        CortexTree: Tree over the given schema
    """
    feature_index = {name: j for j, name in enumerate(schema.feature_names)}
    class_index = schema.class_index
    lines = [line for line in text.splitlines() if line.strip()]
    position = 0
    ids = itertools.count()

    def parse(depth):
        nonlocal position
        if position >= len(lines):
            raise DataError("tree text ends before every subtree is complete")
        line = lines[position]
        indent = len(line) - len(line.lstrip(" "))
        if indent != 2 * depth:
            raise DataError(f"line {position + 1}: expected indentation {2 * depth}, got {indent}")
        body = line.strip()
        position += 1
        node_id = next(ids)

        match = _LEAF_LINE.match(body)
        if match:
            name, counts, probabilities = match.groups()
            if name not in class_index:
                raise DataError(f"line {position}: unknown class '{name}'")
            return Leaf(tuple(int(c) for c in counts.split(",")), class_index[name],
                        tuple(float(q) for q in probabilities.split(",")), node_id)

        if " <= " not in body:
            raise DataError(f"line {position}: cannot parse '{body}'")
        name, threshold = body.rsplit(" <= ", 1)
        if name not in feature_index:
            raise DataError(f"line {position}: unknown feature '{name}'")
        rule = SplitRule(feature_index[name], float(threshold))
        left = parse(depth + 1)
        right = parse(depth + 1)
        return Internal(rule, left, right, node_id)

    root = parse(0)
    if position != len(lines):
        raise DataError(f"unexpected content after the tree at line {position + 1}")
    return CortexTree(root, schema, params or TreeParams(), cost_matrix=cost_matrix)
