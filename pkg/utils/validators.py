"""
Validators - Input validation and file checking utilities
"""

import json
import os
from pathlib import Path

KNOWN_METHODS = ("cortex", "dt")
KNOWN_FORMATS = ("json", "csv", "text")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class CSVValidator:
    """Input file validation utilities"""

    def __init__(self, max_file_size_mb=500):
        self.max_file_size = max_file_size_mb * 1024 * 1024

    def validate_csv(self, file_path):
        """
        Check that a data file can be read as UTF-8 text

        Args:
            file_path (str): Path to CSV file

        Returns:
            tuple: (is_valid: bool, message: str)
        """
        is_valid, message = self._validate_file(file_path)
        if not is_valid:
            return is_valid, message

        try:
            with open(file_path, "r", encoding="utf-8") as handle:
                handle.read(64 * 1024)
        except UnicodeDecodeError:
            return False, "File is not UTF-8 encoded"

        return True, "CSV file is readable"

    def validate_report(self, file_path):
        """
        Check that a file holds an evaluation report written by `run`

        Args:
            file_path (str): Path to report JSON

        Returns:
            tuple: (is_valid: bool, message: str)
        """
        is_valid, message = self._validate_file(file_path)
        if not is_valid:
            return is_valid, message

        try:
            with open(file_path, "r", encoding="utf-8") as handle:
                document = json.load(handle)
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            return False, f"Not a JSON document: {e}"

        if not isinstance(document, dict) or "records" not in document:
            return False, "JSON document has no 'records' section"

        return True, "Report is valid"

    def validate_batch(self, file_paths):
        """
        Validate several report files

        Args:
            file_paths (list): List of file paths

        Returns:
            dict: Validation results for each file
        """
        results = {}

        for file_path in file_paths:
            is_valid, message = self.validate_report(file_path)
            results[file_path] = {
                'valid': is_valid,
                'message': message,
                'size': Path(file_path).stat().st_size if Path(file_path).exists() else 0
            }

        return results

    def _validate_file(self, file_path):
        file_path = Path(file_path)

        if not file_path.exists():
            return False, "File does not exist"

        if not file_path.is_file():
            return False, "Path is not a regular file"

        if not os.access(file_path, os.R_OK):
            return False, "File is not readable (permission denied)"

        file_size = file_path.stat().st_size
        if file_size > self.max_file_size:
            size_mb = file_size / (1024 * 1024)
            return False, f"File too large ({size_mb:.1f}MB). Maximum size: {self.max_file_size // (1024*1024)}MB"

        if file_size == 0:
            return False, "empty table"

        return True, "File is readable"


class SettingsValidator:
    """Settings and input validation"""

    @staticmethod
    def validate_fraction(value, name="train_fraction"):
        """
        Validate a fraction in the open interval (0, 1)

        Returns:
            tuple: (is_valid: bool, normalized_value, message: str)
        """
        try:
            fraction = float(value)
        except (TypeError, ValueError):
            return False, 0.7, f"{name} must be a number"

        if not 0.0 < fraction < 1.0:
            return False, 0.7, f"{name} must lie in (0, 1), got {fraction}"

        return True, fraction, f"Valid {name}"

    @staticmethod
    def validate_count(value, name, minimum=1):
        """
        Validate an integer setting with a lower bound

        Returns:
            tuple: (is_valid: bool, normalized_value, message: str)
        """
        try:
            as_float = float(value)
            count = int(as_float)
        except (TypeError, ValueError):
            return False, minimum, f"{name} must be an integer"

        if count != as_float:
            return False, minimum, f"{name} must be an integer, got {value}"

        if count < minimum:
            return False, minimum, f"{name} must be at least {minimum}, got {count}"

        return True, count, f"Valid {name}"

    @staticmethod
    def validate_optional_count(value, name, minimum=1):
        """Like validate_count, but empty / None / 'none' means unset"""
        if value is None or str(value).strip().lower() in ("", "none"):
            return True, None, f"{name} unset"
        return SettingsValidator.validate_count(value, name, minimum)

    @staticmethod
    def validate_nonnegative(value, name):
        """
        Validate a finite nonnegative real

        Returns:
            tuple: (is_valid: bool, normalized_value, message: str)
        """
        try:
            number = float(value)
        except (TypeError, ValueError):
            return False, 0.0, f"{name} must be a number"

        if not number >= 0 or number == float("inf"):
            return False, 0.0, f"{name} must be finite and nonnegative, got {value}"

        return True, number, f"Valid {name}"

    @staticmethod
    def validate_methods(value):
        """
        Validate the list of surrogate methods to run

        Returns:
            tuple: (is_valid: bool, normalized_value, message: str)
        """
        methods = _as_list(value)
        if not methods:
            return False, KNOWN_METHODS, "At least one method is required"

        unknown = [m for m in methods if m not in KNOWN_METHODS]
        if unknown:
            return False, KNOWN_METHODS, f"Unknown method(s): {', '.join(unknown)}"

        # Keep canonical order so report columns are stable
        ordered = tuple(m for m in KNOWN_METHODS if m in methods)
        return True, ordered, "Valid methods"

    @staticmethod
    def validate_formats(value):
        """
        Validate report output formats

        Returns:
            tuple: (is_valid: bool, normalized_value, message: str)
        """
        formats = _as_list(value)
        if not formats:
            return False, KNOWN_FORMATS, "At least one output format is required"

        unknown = [f for f in formats if f not in KNOWN_FORMATS]
        if unknown:
            return False, KNOWN_FORMATS, f"Unknown format(s): {', '.join(unknown)}"

        return True, tuple(f for f in KNOWN_FORMATS if f in formats), "Valid formats"

    @staticmethod
    def validate_cost_matrix(value):
        """
        Validate the cost matrix source: 'default', 'unit' or a CSV file path

        Returns:
            tuple: (is_valid: bool, normalized_value, message: str)
        """
        source = str(value).strip() if value is not None else "default"
        if source.lower() in ("", "default"):
            return True, "default", "Default class-imbalance cost matrix"
        if source.lower() == "unit":
            return True, "unit", "Unit cost matrix"
        if not Path(source).is_file():
            return False, "default", f"Cost matrix file does not exist: {source}"
        return True, source, "Cost matrix file"

    @staticmethod
    def validate_log_level(value):
        level = str(value).strip().upper()
        if level not in LOG_LEVELS:
            return False, "INFO", f"Unknown log level: {value}"
        return True, level, "Valid log level"

    @staticmethod
    def validate_output_directory(directory):
        """
        Validate output directory

        Args:
            directory: Directory path

        Returns:
            tuple: (is_valid: bool, normalized_path, message: str)
        """
        if not directory:
            return False, "", "Output directory is required"

        try:
            dir_path = Path(directory)

            if not dir_path.exists():
                try:
                    dir_path.mkdir(parents=True, exist_ok=True)
                    return True, str(dir_path), "Created output directory"
                except Exception as e:
                    return False, "", f"Cannot create directory: {str(e)}"

            if not dir_path.is_dir():
                return False, "", "Output path exists and is not a directory"

            if not os.access(dir_path, os.W_OK):
                return False, "", "Directory is not writable"

            return True, str(dir_path), "Valid output directory"

        except Exception as e:
            return False, "", f"Invalid directory path: {str(e)}"


def _as_list(value):
    if value is None:
        return []
    if isinstance(value, str):
        items = value.split(",")
    else:
        items = list(value)
    return [str(item).strip().lower() for item in items if str(item).strip()]
