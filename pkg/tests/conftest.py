"""
Shared fixtures: small datasets, cost matrices and oracle helpers
"""

import shlex
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from core import cost_matrix as cm
from core.dataset import Dataset, FeatureSchema
from core.synthetic import make_axis_separable, make_imbalanced_blobs, make_staircase

ROOT = Path(__file__).resolve().parent.parent
ORACLE_SCRIPT = ROOT / "oracles" / "linear_oracle.py"


def numeric_dataset(features, labels, class_names=("A", "B"), name="toy"):
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(-1, 1)
    schema = FeatureSchema.numeric(features.shape[1], class_names)
    return Dataset(features, labels, schema, name=name)


def oracle_command(*args):
    """Command line running the bundled linear oracle with this interpreter"""
    parts = [sys.executable, str(ORACLE_SCRIPT), *args]
    return " ".join(shlex.quote(p) for p in parts)


def write_predictions(path, data, labels=None, column="prediction"):
    """Prediction file with one class name per row of the dataset"""
    labels = data.labels if labels is None else labels
    frame = pd.DataFrame({column: [data.schema.class_names[k] for k in labels]})
    frame.to_csv(path, index=False)
    return str(path)


@pytest.fixture
def separable_1d():
    """values [1,2,3,4], labels [0,0,1,1]"""
    return numeric_dataset([1.0, 2.0, 3.0, 4.0], [0, 0, 1, 1])


@pytest.fixture
def asymmetric_matrix():
    return cm.CostMatrix([[0.0, 10.0], [1.0, 0.0]])


@pytest.fixture
def staircase():
    return make_staircase(n_samples=120, seed=3)


@pytest.fixture
def axis_separable():
    return make_axis_separable(n_samples=200, minority_fraction=0.05, seed=7)


@pytest.fixture
def blobs():
    return make_imbalanced_blobs(n_samples=150, weights=(0.8, 0.2), seed=11)
