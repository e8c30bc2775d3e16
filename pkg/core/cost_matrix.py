"""
Cost Matrix - Class-dependent misclassification costs

Convention: C[i][j] is the cost of classifying a sample whose ACTUAL class is
i into PREDICTED class j (row = actual, column = predicted). User matrices
are never transposed.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from core.errors import ConfigurationError, DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """K x K misclassification cost table"""

    costs: np.ndarray
    class_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        costs = np.array(self.costs, dtype=np.float64)
        if costs.ndim != 2 or costs.shape[0] != costs.shape[1]:
            raise DataError(f"cost matrix must be square, got shape {costs.shape}")
        if costs.shape[0] < 2:
            raise DataError("cost matrix needs at least 2 classes")
        if not np.all(np.isfinite(costs)):
            raise DataError("cost matrix entries must be finite")
        if self.class_names is not None and len(self.class_names) != costs.shape[0]:
            raise DataError(
                f"{len(self.class_names)} class names given for a {costs.shape[0]}-class matrix")
        costs.setflags(write=False)
        object.__setattr__(self, "costs", costs)

    @property
    def n_classes(self):
        return self.costs.shape[0]

    def __getitem__(self, index):
        return self.costs[index]

    def scaled(self, factor):
        """Positively scaled copy; label decisions are unchanged"""
        if not factor > 0:
            raise ConfigurationError(f"scale factor must be positive, got {factor}")
        return CostMatrix(self.costs * factor, self.class_names)

    def to_rows(self):
        return [list(map(float, row)) for row in self.costs]


@dataclass
class ValidationReport:
    """Outcome of checking the 'reasonable' conditions"""

    violations: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def is_valid(self):
        return not self.violations

    @property
    def message(self):
        if self.violations:
            return "; ".join(self.violations)
        if self.warnings:
            return "valid with warnings: " + "; ".join(self.warnings)
        return "valid"


def default_from_counts(counts, class_names=None):
    """
    Default class-imbalance cost matrix

    Off-diagonal C[i][j] = (N_i + N_j) / N_i, diagonal 0.

    Args:
        counts (sequence): Per-class sample counts, all >= 1

    Returns:
        CostMatrix: Matrix that always satisfies the reasonable conditions
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 1 or counts.size < 2:
        raise DataError("default cost matrix needs counts for at least 2 classes")
    if np.any(counts < 1):
        empty = int(np.flatnonzero(counts < 1)[0])
        raise DataError(f"empty class: class {empty} has no samples")

    costs = (counts[:, None] + counts[None, :]) / counts[:, None]
    np.fill_diagonal(costs, 0.0)
    return CostMatrix(costs, class_names)


def unit(n_classes, class_names=None):
    """0/1 cost matrix: every misclassification costs 1"""
    return CostMatrix(1.0 - np.eye(n_classes), class_names)


def binary_from_minority_cost(counts, minority_cost, class_names=None):
    """
    Binary matrix with a user-chosen cost for misclassifying the minority class

    Correct predictions cost 0, a misclassified majority sample costs 1 and a
    misclassified minority sample costs `minority_cost`.
    """
    counts = np.asarray(counts)
    if counts.size != 2:
        raise ConfigurationError("a minority cost only applies to 2-class problems")
    if not minority_cost > 0:
        raise ConfigurationError(f"minority cost must be positive, got {minority_cost}")

    minority = int(np.argmin(counts))
    majority = 1 - minority
    costs = np.zeros((2, 2))
    costs[majority, minority] = 1.0
    costs[minority, majority] = float(minority_cost)
    return CostMatrix(costs, class_names)


def validate(matrix):
    """
    Check the reasonable conditions

    Hard violations: C[i][i] >= C[i][j] for some j != i, or negative entries.
    Warnings: a column k dominating another column k' (C[i][k] >= C[i][k'] for
    every i, strictly somewhere), which makes predicting k never optimal.

    Args:
        matrix (CostMatrix): Matrix to check

    Returns:
        ValidationReport: Violations and warnings
    """
    costs = matrix.costs
    K = matrix.n_classes
    report = ValidationReport()

    if np.any(costs < 0):
        report.violations.append("cost matrix has negative entries")

    for i in range(K):
        for j in range(K):
            if j != i and costs[i, i] >= costs[i, j]:
                report.violations.append(
                    f"row {i}: correct cost C[{i}][{i}]={costs[i, i]:g} is not below "
                    f"C[{i}][{j}]={costs[i, j]:g}")

    for k in range(K):
        for other in range(K):
            if other == k:
                continue
            column, rival = costs[:, k], costs[:, other]
            if np.all(column >= rival) and np.any(column > rival):
                report.warnings.append(
                    f"column {k} dominates column {other}: predicting class {other} is always cheaper")

    return report


def load(path, n_classes=None, class_names=None):
    """
    Read a header-less CSV matrix, rows = actual class in lexicographic order

    Args:
        path (str): Path to the CSV file
        n_classes (int): Expected class count of the dataset, if known

    Returns:
        CostMatrix: Validated matrix (warnings are logged)
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"cost matrix file does not exist: {path}")

    rows = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for line_no, row in enumerate(csv.reader(handle), start=1):
            if not row:
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise DataError(f"{path.name}: non-numeric cell on line {line_no}")

    if not rows or any(len(row) != len(rows) for row in rows):
        raise DataError(f"{path.name}: cost matrix must have K rows of K values")
    if n_classes is not None and len(rows) != n_classes:
        raise DataError(
            f"{path.name}: {len(rows)}x{len(rows)} cost matrix given for a {n_classes}-class dataset")

    matrix = CostMatrix(np.array(rows), class_names)
    report = validate(matrix)
    if not report.is_valid:
        raise DataError(f"{path.name}: cost matrix rejected: {report.message}")
    for warning in report.warnings:
        logger.warning(f"{path.name}: {warning}")

    logger.info(f"Loaded {matrix.n_classes}x{matrix.n_classes} cost matrix from {path.name}")
    return matrix
