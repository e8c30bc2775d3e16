"""
Dataset - CSV ingestion, one-hot encoding, reproducible splits and noise perturbation
"""

import csv
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from core.errors import ConfigurationError, DataError
from utils.validators import CSVValidator

logger = logging.getLogger(__name__)

NUMERIC = "numeric"
ONE_HOT = "one_hot"

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")

# Guards floor(n * f) against binary rounding, e.g. 90 * 0.7 == 62.999...
_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class RawTable:
    """Header plus text cells of a CSV file, with the target column identified"""

    columns: Tuple[str, ...]
    rows: Tuple[Tuple[str, ...], ...]
    target: str
    name: str = ""

    def __post_init__(self):
        width = len(self.columns)
        for line_no, row in enumerate(self.rows, start=2):
            if len(row) != width:
                raise DataError(
                    f"ragged row at line {line_no}: expected {width} cells, got {len(row)}")
        if self.target not in self.columns:
            raise DataError(f"target column not found: '{self.target}'")
        if len({cell.strip() for cell in self.column(self.target)}) < 2:
            raise DataError(f"target column '{self.target}' needs at least 2 distinct values")

    def column(self, name):
        index = self.columns.index(name)
        return [row[index] for row in self.rows]


@dataclass(frozen=True)
class FeatureSpec:
    """One encoded feature column"""

    name: str
    kind: str
    source: str
    category: Optional[str] = None

    @property
    def is_one_hot(self):
        return self.kind == ONE_HOT


@dataclass(frozen=True)
class FeatureSchema:
    """Encoding bookkeeping: feature descriptors and the class label map"""

    features: Tuple[FeatureSpec, ...]
    class_names: Tuple[str, ...]
    target: str = "class"

    def __post_init__(self):
        if len(set(self.class_names)) != len(self.class_names):
            raise DataError("class names must be distinct")

    @property
    def feature_names(self):
        return [spec.name for spec in self.features]

    @property
    def n_features(self):
        return len(self.features)

    @property
    def n_classes(self):
        return len(self.class_names)

    @property
    def class_index(self):
        return {name: index for index, name in enumerate(self.class_names)}

    @classmethod
    def numeric(cls, n_features, class_names, target="class"):
        """Schema for an all-numeric table with features x0..x{p-1}"""
        features = tuple(FeatureSpec(f"x{j}", NUMERIC, f"x{j}") for j in range(n_features))
        return cls(features, tuple(class_names), target)


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Encoded numeric feature table with class labels

    `row_ids` maps every row back to its position in the table the dataset
    was encoded from (`source_rows` rows), which keeps prediction files
    aligned after splitting.
    """

    features: np.ndarray
    labels: np.ndarray
    schema: FeatureSchema
    row_ids: Optional[np.ndarray] = None
    source_rows: Optional[int] = None
    name: str = ""
    _counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)

        if features.ndim != 2:
            raise DataError(f"feature matrix must be 2-dimensional, got shape {features.shape}")
        n, p = features.shape
        if n < 1 or p < 1:
            raise DataError(f"dataset needs at least one row and one feature, got {n} x {p}")
        if p != self.schema.n_features:
            raise DataError(f"schema describes {self.schema.n_features} features, matrix has {p}")
        if labels.shape != (n,):
            raise DataError(f"expected {n} labels, got {labels.shape[0]}")
        K = self.schema.n_classes
        if labels.min() < 0 or labels.max() >= K:
            raise DataError(f"labels must lie in 0..{K - 1}")

        row_ids = np.arange(n) if self.row_ids is None else np.array(self.row_ids, dtype=np.int64)
        if row_ids.shape != (n,):
            raise DataError("row_ids must have one entry per row")
        source_rows = n if self.source_rows is None else int(self.source_rows)

        for array in (features, labels, row_ids):
            array.setflags(write=False)
        counts = np.bincount(labels, minlength=K)
        counts.setflags(write=False)

        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "row_ids", row_ids)
        object.__setattr__(self, "source_rows", source_rows)
        object.__setattr__(self, "_counts", counts)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def n_classes(self):
        return self.schema.n_classes

    @property
    def class_counts(self):
        """Per-class sample counts N_i, i = 0..K-1"""
        return self._counts

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.schema,
                       self.row_ids[indices], self.source_rows, self.name)

    def with_labels(self, labels):
        return Dataset(self.features, labels, self.schema, self.row_ids, self.source_rows, self.name)

    def with_features(self, features):
        return Dataset(features, self.labels, self.schema, self.row_ids, self.source_rows, self.name)


def load_csv(path, target, name=None):
    """
    Read a UTF-8, comma-separated CSV file with a header row

    Args:
        path (str): Path to the CSV file
        target (str): Name of the class column

    Returns:
        RawTable: Parsed table with at least 2 data rows
    """
    is_valid, message = CSVValidator().validate_csv(path)
    if not is_valid:
        raise DataError(f"{path}: {message}")

    path = Path(path)
    with open(path, "r", encoding="utf-8-sig", newline="") as handle:
        rows = [row for row in csv.reader(handle) if row]

    if not rows:
        raise DataError(f"{path}: empty table")
    header, body = rows[0], rows[1:]
    if target not in header:
        raise DataError(f"{path}: target column not found: '{target}'")
    if not body:
        raise DataError(f"{path}: empty table")
    if len(body) < 2:
        raise DataError(f"{path}: table needs at least 2 data rows, got {len(body)}")

    table = RawTable(tuple(header), tuple(tuple(row) for row in body), target,
                     name or path.stem)
    logger.info(f"Loaded {len(body)} rows x {len(header)} columns from {path.name}")
    return table


def _parses(cell):
    return bool(_DECIMAL.match(cell))


def encode(raw):
    """
    One-hot encode non-numeric columns and map class names to indices

    Categories and class names are ordered lexicographically by their text.

    Args:
        raw (RawTable): Parsed input table

    Returns:
        Dataset: Encoded dataset
    """
    n = len(raw.rows)
    specs = []
    blocks = []

    for j, column in enumerate(raw.columns):
        cells = [row[j].strip() for row in raw.rows]
        missing = [i for i, cell in enumerate(cells) if cell == ""]
        if missing:
            raise DataError(f"missing value in column '{column}' at data row {missing[0] + 1}")
        if column == raw.target:
            continue

        parsed = [_parses(cell) for cell in cells]
        if all(parsed):
            specs.append(FeatureSpec(column, NUMERIC, column))
            blocks.append(np.array([float(cell) for cell in cells]).reshape(n, 1))
        elif not any(parsed):
            categories = sorted(set(cells))
            values = np.array(cells, dtype=object)
            block = np.zeros((n, len(categories)))
            for k, category in enumerate(categories):
                specs.append(FeatureSpec(f"{column}={category}", ONE_HOT, column, category))
                block[:, k] = values == category
            blocks.append(block)
            logger.debug(f"Column '{column}' one-hot encoded into {len(categories)} columns")
        else:
            bad = cells[parsed.index(False)]
            raise DataError(f"mixed column '{column}': non-numeric cell '{bad}' among numeric values")

    if not blocks:
        raise DataError("table has no feature columns besides the target")

    target_cells = [cell.strip() for cell in raw.column(raw.target)]
    class_names = tuple(sorted(set(target_cells)))
    index = {name: k for k, name in enumerate(class_names)}
    labels = np.array([index[cell] for cell in target_cells], dtype=np.int64)

    schema = FeatureSchema(tuple(specs), class_names, raw.target)
    return Dataset(np.hstack(blocks), labels, schema, name=raw.name)


def _floor(value):
    return int(math.floor(value + _FLOOR_EPS))


def _stratified_quotas(counts, fraction):
    """Per-class train sizes summing to floor(n * f) before clipping"""
    raw = counts * fraction
    quotas = np.array([_floor(q) for q in raw], dtype=np.int64)
    remainders = np.clip(raw - quotas, 0.0, None)
    short = _floor(counts.sum() * fraction) - int(quotas.sum())
    order = sorted((c for c in range(len(counts)) if counts[c] > 0),
                   key=lambda c: (-remainders[c], c))
    for c in order[:max(short, 0)]:
        quotas[c] += 1
    for c in range(len(counts)):
        if counts[c] >= 2:
            quotas[c] = min(max(quotas[c], 1), counts[c] - 1)
    return quotas


def split_indices(data, train_fraction=0.7, seed=0, stratified=True):
    """
    Row positions of the train and test parts of a dataset

    Args:
        data (Dataset): Dataset to split
        train_fraction (float): Fraction of rows that go to the train part
        seed (int): Seed of the permutation generator
        stratified (bool): Keep every class in both parts when possible

    Returns:
        tuple: (train positions, test positions), both ascending
    """
    if not 0.0 < train_fraction < 1.0:
        raise ConfigurationError(f"train fraction must lie in (0, 1), got {train_fraction}")

    rng = np.random.default_rng(seed)
    counts = data.class_counts

    if stratified:
        for c, count in enumerate(counts):
            if count == 1:
                raise DataError(
                    f"class '{data.schema.class_names[c]}' has only 1 sample; "
                    "a stratified split needs at least 2 per class")
        quotas = _stratified_quotas(counts, train_fraction)
        train_parts = []
        for c in range(len(counts)):
            members = rng.permutation(np.flatnonzero(data.labels == c))
            train_parts.append(members[:quotas[c]])
        train_index = np.sort(np.concatenate(train_parts))
    else:
        n_train = _floor(data.n_samples * train_fraction)
        train_index = np.sort(rng.permutation(data.n_samples)[:n_train])

    test_mask = np.ones(data.n_samples, dtype=bool)
    test_mask[train_index] = False
    test_index = np.flatnonzero(test_mask)
    if len(train_index) == 0 or len(test_index) == 0:
        raise DataError(
            f"split of {data.n_samples} rows at fraction {train_fraction} leaves an empty partition")

    return train_index, test_index


def split(data, train_fraction=0.7, seed=0, stratified=True):
    """
    Partition a dataset into train and test parts

    Returns:
        tuple: (train Dataset, test Dataset), rows in ascending original order
    """
    train_index, test_index = split_indices(data, train_fraction, seed, stratified)
    return data.subset(train_index), data.subset(test_index)


def feature_scales(data):
    """Population standard deviation of every feature column"""
    return data.features.std(axis=0)


def perturb(data, sigma, feature_scales, seed):
    """
    Add zero-mean Gaussian noise with per-feature standard deviation sigma * scale

    Args:
        data (Dataset): Samples to perturb (labels are kept)
        sigma (float): Unit-free noise magnitude
        feature_scales (sequence): One nonnegative scale per feature
        seed (int): Noise generator seed

    Returns:
        Dataset: Perturbed copy
    """
    scales = np.asarray(feature_scales, dtype=np.float64)
    if scales.shape != (data.n_features,):
        raise DataError(f"expected {data.n_features} feature scales, got {scales.size}")
    if sigma < 0 or not np.isfinite(sigma):
        raise DataError(f"noise sigma must be a nonnegative number, got {sigma}")
    if np.any(scales < 0) or not np.all(np.isfinite(scales)):
        raise DataError("feature scales must be finite and nonnegative")

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(data.features.shape) * (sigma * scales)
    return data.with_features(data.features + noise)


def imbalance_ratio(counts):
    """Majority over minority class count, ignoring empty classes"""
    present = np.asarray(counts)[np.asarray(counts) > 0]
    return float(present.max() / present.min())


def dump_encoded(data, path):
    """
    Write the encoded table with synthesized `source=category` column names

    Args:
        data (Dataset): Encoded dataset
        path (str): Output CSV path
    """
    frame = pd.DataFrame(data.features, columns=data.schema.feature_names)
    frame[data.schema.target] = [data.schema.class_names[k] for k in data.labels]
    frame.to_csv(path, index=False)
    logger.info(f"Encoded table written to {path}")
