"""
Synthetic - Seeded toy datasets for demos and tests

All generators are deterministic in their seed and draw continuous features,
so rows are duplicate-free with probability one.
"""

import logging

import numpy as np

from core.dataset import Dataset, FeatureSchema, RawTable
from core.errors import ConfigurationError

logger = logging.getLogger(__name__)


def _class_sizes(n_samples, weights):
    """Largest-remainder apportionment of n_samples over class weights"""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 1 or weights.size < 2 or np.any(weights <= 0):
        raise ConfigurationError("class weights must be at least 2 positive numbers")
    shares = n_samples * weights / weights.sum()
    sizes = np.floor(shares).astype(np.int64)
    order = np.argsort(-(shares - sizes), kind="stable")
    sizes[order[:n_samples - sizes.sum()]] += 1
    if np.any(sizes < 2):
        raise ConfigurationError(f"{n_samples} samples leave a class with fewer than 2 rows")
    return sizes


def _numeric(features, labels, class_names, name):
    schema = FeatureSchema.numeric(features.shape[1], class_names)
    return Dataset(features, labels, schema, name=name)


def _shuffled(rng, features, labels):
    order = rng.permutation(labels.size)
    return features[order], labels[order]


def make_imbalanced_blobs(n_samples=400, weights=(0.9, 0.1), n_features=2, separation=2.5, seed=0):
    """
    Gaussian blobs, one per class, with imbalanced class sizes

    Class c is centered at separation * c on every feature.
    """
    rng = np.random.default_rng(seed)
    sizes = _class_sizes(n_samples, weights)
    features = np.vstack([
        rng.normal(loc=separation * c, scale=1.0, size=(size, n_features))
        for c, size in enumerate(sizes)
    ])
    labels = np.repeat(np.arange(sizes.size), sizes)
    features, labels = _shuffled(rng, features, labels)
    return _numeric(features, labels, [f"c{c}" for c in range(sizes.size)], "imbalanced_blobs")


def make_axis_separable(n_samples=200, minority_fraction=0.05, n_features=2, threshold=0.9, seed=0):
    """
    Binary data where the minority class is exactly x0 > threshold

    Classes are named 'majority' (index 0) and 'minority' (index 1).
    """
    if not 0.0 < threshold < 1.0:
        raise ConfigurationError(f"threshold must lie in (0, 1), got {threshold}")
    rng = np.random.default_rng(seed)
    sizes = _class_sizes(n_samples, (1.0 - minority_fraction, minority_fraction))

    majority = rng.random((sizes[0], n_features))
    majority[:, 0] *= threshold
    minority = rng.random((sizes[1], n_features))
    minority[:, 0] = threshold + (1.0 - threshold) * (0.05 + 0.95 * minority[:, 0])

    features = np.vstack([majority, minority])
    labels = np.repeat([0, 1], sizes)
    features, labels = _shuffled(rng, features, labels)
    return _numeric(features, labels, ["majority", "minority"], "axis_separable")


def make_staircase(n_samples=300, weights=(0.6, 0.3, 0.1), n_features=2, seed=0):
    """
    Classes are consecutive intervals of x0: class c iff c <= x0 < c + 1

    Every impure node of such data has a cost-reducing split, so fitted
    trees reach pure leaves.
    """
    rng = np.random.default_rng(seed)
    sizes = _class_sizes(n_samples, weights)
    blocks = []
    for c, size in enumerate(sizes):
        block = rng.random((size, n_features))
        block[:, 0] += c
        blocks.append(block)
    features = np.vstack(blocks)
    labels = np.repeat(np.arange(sizes.size), sizes)
    features, labels = _shuffled(rng, features, labels)
    return _numeric(features, labels, [f"c{c}" for c in range(sizes.size)], "staircase")


def make_credit_like(n_samples=300, bad_rate=0.3, noise=0.05, seed=0):
    """
    Mixed categorical/numeric table in the shape of a credit-scoring file

    Returns:
        RawTable: String cells with a 'class' column of good/bad
    """
    rng = np.random.default_rng(seed)
    duration = rng.integers(4, 72, size=n_samples) + rng.random(n_samples).round(2)
    amount = np.round(rng.lognormal(mean=8.0, sigma=0.7, size=n_samples), 2)
    age = rng.integers(19, 75, size=n_samples)
    housing = rng.choice(["own", "rent", "free"], size=n_samples, p=[0.6, 0.3, 0.1])
    purpose = rng.choice(["car", "education", "furniture", "business"], size=n_samples)

    risk = (duration / 72.0 + amount / 15000.0 + (housing == "free") * 0.5
            + (purpose == "business") * 0.2 - (age - 19) / 200.0)
    cut = np.quantile(risk, 1.0 - bad_rate)
    bad = risk > cut
    flips = rng.random(n_samples) < noise
    bad = np.where(flips, ~bad, bad)

    columns = ["duration", "amount", "age", "housing", "purpose", "class"]
    rows = [
        [f"{duration[i]:g}", f"{amount[i]:.2f}", str(age[i]), housing[i], purpose[i],
         "bad" if bad[i] else "good"]
        for i in range(n_samples)
    ]
    return RawTable(tuple(columns), tuple(tuple(row) for row in rows), "class", name="credit_like")
