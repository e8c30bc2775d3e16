"""
Black Box - Prediction sources for surrogate training

The underlying model is never embedded. Its predictions come either from a
precomputed file aligned with the input table or from an external command
speaking a line-oriented protocol:

    parent -> child stdin:  UTF-8 CSV, header of feature names, '\\n' endings
    child -> parent stdout: one class name per data row, '\\n'-terminated
"""

import csv
import io
import logging
import shlex
import subprocess
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from core.errors import OracleError

logger = logging.getLogger(__name__)

DEFAULT_PREDICTION_COLUMN = "prediction"


class PredictorSource(ABC):
    """Anything that maps evaluation samples to black-box class indices"""

    @abstractmethod
    def predict(self, samples):
        """
        Args:
            samples (Dataset): Samples to label

        Returns:
            np.ndarray: One class index per sample, in sample order
        """

    @abstractmethod
    def describe(self):
        """Short description recorded in reports"""


def _to_indices(names, schema, origin):
    class_index = schema.class_index
    indices = np.empty(len(names), dtype=np.int64)
    for row, name in enumerate(names):
        if name not in class_index:
            raise OracleError(
                f"{origin}: unknown class '{name}' on row {row + 1}; "
                f"known classes: {', '.join(schema.class_names)}")
        indices[row] = class_index[name]
    return indices


@dataclass(frozen=True)
class PredictionFile(PredictorSource):
    """
    CSV of predicted class names, one row per row of the input table

    Rows are matched to samples through the samples' row ids, so the same
    file serves every split of every run.
    """

    path: str
    column: Optional[str] = None

    def _read_column(self):
        path = Path(self.path)
        if not path.is_file():
            raise OracleError(f"prediction file does not exist: {path}")
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
            raise OracleError(f"{path.name}: cannot read predictions: {e}")

        column = self.column
        if column is None:
            if len(frame.columns) == 1:
                column = frame.columns[0]
            elif DEFAULT_PREDICTION_COLUMN in frame.columns:
                column = DEFAULT_PREDICTION_COLUMN
            else:
                raise OracleError(
                    f"{path.name}: several columns and none named '{DEFAULT_PREDICTION_COLUMN}'; "
                    "name the prediction column explicitly")
        if column not in frame.columns:
            raise OracleError(f"{path.name}: prediction column '{column}' not found")
        return [cell.strip() for cell in frame[column].tolist()]

    def predict(self, samples):
        names = self._read_column()
        if len(names) != samples.source_rows:
            raise OracleError(
                f"{Path(self.path).name}: {len(names)} prediction rows for a table of "
                f"{samples.source_rows} rows")
        labels = _to_indices(names, samples.schema, Path(self.path).name)
        return labels[samples.row_ids]

    def describe(self):
        return f"file:{self.path}"


@dataclass(frozen=True)
class SubprocessOracle(PredictorSource):
    """External command answering class names for CSV rows on stdin"""

    command: str
    cwd: Optional[str] = None
    timeout: float = 60.0

    def _argv(self):
        argv = shlex.split(self.command)
        if not argv:
            raise OracleError("oracle command is empty")
        return argv

    @staticmethod
    def encode_samples(samples):
        """Wire form of the samples: header row, then one row per sample"""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(samples.schema.feature_names)
        for row in samples.features:
            writer.writerow([repr(float(v)) for v in row])
        return buffer.getvalue()

    def predict(self, samples):
        argv = self._argv()
        logger.debug(f"Running oracle: {' '.join(argv)} on {samples.n_samples} rows")
        try:
            completed = subprocess.run(
                argv,
                input=self.encode_samples(samples).encode("utf-8"),
                capture_output=True,
                timeout=self.timeout,
                cwd=self.cwd,
            )
        except subprocess.TimeoutExpired:
            raise OracleError(f"oracle timed out after {self.timeout:g} s: {self.command}")
        except OSError as e:
            raise OracleError(f"cannot start oracle '{self.command}': {e}")

        if completed.returncode != 0:
            stderr = completed.stderr.decode("utf-8", errors="replace").strip()
            raise OracleError(
                f"oracle exited with status {completed.returncode}"
                + (f": {stderr.splitlines()[-1]}" if stderr else ""))

        try:
            output = completed.stdout.decode("utf-8")
        except UnicodeDecodeError:
            raise OracleError("oracle output is not UTF-8")
        if samples.n_samples and not output.endswith("\n"):
            raise OracleError("oracle output must end with a newline")

        names = output.split("\n")[:-1]
        if len(names) != samples.n_samples:
            raise OracleError(f"oracle answered {len(names)} rows for {samples.n_samples} samples")
        return _to_indices(names, samples.schema, "oracle")

    def describe(self):
        return f"oracle:{self.command}"


def get_predictions(source, samples):
    """
    Black-box class indices for a set of samples

    Args:
        source (PredictorSource): Prediction file or oracle command
        samples (Dataset): Samples to label

    Returns:
        np.ndarray: One class index per sample
    """
    labels = np.asarray(source.predict(samples), dtype=np.int64)
    if labels.shape != (samples.n_samples,):
        raise OracleError(f"expected {samples.n_samples} predictions, got {labels.size}")
    return labels
