"""
Report Writer - JSON, CSV and text renderings of an evaluation report
"""

import json
import logging
from pathlib import Path

import pandas as pd

from core.errors import ConfigurationError
from core.metrics import METRIC_NAMES
from utils.validators import KNOWN_FORMATS, SettingsValidator

logger = logging.getLogger(__name__)

METRIC_LABELS = {
    "completeness": "Completeness",
    "correctness": "Correctness",
    "fidelity": "Fidelity",
    "robustness": "Robustness",
    "n_rules": "Number of rules",
    "avg_rule_length": "Average rule length",
}


def format_cell(mean, std):
    """Mean with the standard deviation in parentheses, e.g. 0.695 (0.033)"""
    return f"{mean:.3f} ({std:.3f})"


def report_frame(report):
    """
    One tidy table: a 'record' row per method and run, then 'summary' rows

    Summary rows carry statistic 'mean' or 'std' per method.
    """
    record_rows = [{"row_type": "record", "statistic": "value", **r.to_dict()} for r in report.records]
    summary_rows = []
    for method in report.methods:
        for statistic in ("mean", "std"):
            row = {"row_type": "summary", "statistic": statistic, "method": method,
                   "dataset": report.dataset}
            for metric in METRIC_NAMES:
                row[metric] = report.summary[metric][method][statistic]
            summary_rows.append(row)

    frame = pd.DataFrame(record_rows + summary_rows)
    leading = ["row_type", "statistic", "method", "dataset", "run", "seed", *METRIC_NAMES]
    return frame[leading + [c for c in frame.columns if c not in leading]]


def _test_line(entry):
    if entry.get("status") != "ok":
        return entry.get("status", "n/a")
    marker = "reject" if entry["reject"] else "no difference"
    return f"stat={entry['statistic']:.4f} p={entry['p_value']:.4g} ({marker} at {entry['alpha']:g})"


def render_text(report):
    """Mean (std) grid per metric and method, then tests and the comparison summary"""
    methods = list(report.methods)
    label_width = max(len(label) for label in METRIC_LABELS.values()) + 2
    cell_width = 18

    lines = [f"Dataset: {report.dataset}",
             f"Runs: {report.config.get('repeats')}   Predictor: {report.predictor}",
             "",
             "Metric".ljust(label_width) + "".join(m.upper().rjust(cell_width) for m in methods)]
    for metric in METRIC_NAMES:
        cells = "".join(
            format_cell(report.summary[metric][m]["mean"], report.summary[metric][m]["std"]).rjust(cell_width)
            for m in methods)
        lines.append(METRIC_LABELS[metric].ljust(label_width) + cells)

    lines += ["", "Friedman test"]
    for metric in METRIC_NAMES:
        lines.append(f"  {METRIC_LABELS[metric].ljust(label_width)}{_test_line(report.friedman[metric])}")

    if any(report.wilcoxon[metric] for metric in METRIC_NAMES):
        lines += ["", "Wilcoxon signed-rank tests"]
        for metric in METRIC_NAMES:
            for pair, entry in report.wilcoxon[metric].items():
                lines.append(f"  {METRIC_LABELS[metric].ljust(label_width)}{pair}: {_test_line(entry)}")

    if report.comparison:
        lines += ["", "Comparison".ljust(label_width) + "best".rjust(10) + "worst".rjust(10)
                  + "cortex rank".rjust(14) + "cortex vs dt".rjust(16)]
        for metric in METRIC_NAMES:
            entry = report.comparison[metric]
            rank = entry.get("cortex_mean_rank")
            verdict = ""
            if "cortex_vs_dt" in entry:
                verdict = entry["cortex_vs_dt"]["winner"] + ("*" if entry["cortex_vs_dt"]["significant"] else "")
            lines.append(METRIC_LABELS[metric].ljust(label_width) + entry["best"].rjust(10)
                         + entry["worst"].rjust(10)
                         + (f"{rank:.2f}" if rank is not None else "-").rjust(14) + verdict.rjust(16))
        lines.append("(* Wilcoxon significant)")

    if report.overall_rank:
        lines += ["", "Normalized overall rank (0 = best)"]
        for method in methods:
            lines.append(f"  {method.ljust(10)}{report.overall_rank[method]:.3f}")

    return "\n".join(lines) + "\n"


def write_rulesets(report, out_dir):
    """rules/run_<r>_<method>.txt and .json for every run and method"""
    rules_dir = Path(out_dir) / "rules"
    rules_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for (run, method), ruleset in sorted(report.rulesets.items()):
        stem = rules_dir / f"run_{run}_{method}"
        stem.with_suffix(".txt").write_text(ruleset.to_text(), encoding="utf-8")
        stem.with_suffix(".json").write_text(ruleset.to_json(), encoding="utf-8")
        written += [stem.with_suffix(".txt"), stem.with_suffix(".json")]
    return written


def render_report(report, out_dir, formats=KNOWN_FORMATS):
    """
    Write the report in the requested formats plus the per-run rule files

    Args:
        report (EvaluationReport): Complete report
        out_dir (str): Output directory (created if missing)
        formats (sequence): Any of 'json', 'csv', 'text'

    Returns:
        list: Paths of the written files
    """
    ok, formats, message = SettingsValidator.validate_formats(formats)
    if not ok:
        raise ConfigurationError(message)
    ok, directory, message = SettingsValidator.validate_output_directory(out_dir)
    if not ok:
        raise ConfigurationError(f"{out_dir}: {message}")

    out = Path(directory)
    written = []
    try:
        if "json" in formats:
            path = out / "report.json"
            with open(path, "w", encoding="utf-8") as handle:
                json.dump(report.to_dict(), handle, indent=2)
            written.append(path)
        if "csv" in formats:
            path = out / "report.csv"
            report_frame(report).to_csv(path, index=False)
            written.append(path)
        if "text" in formats:
            path = out / "report.txt"
            path.write_text(render_text(report), encoding="utf-8")
            written.append(path)
        written += write_rulesets(report, out)
    except OSError as e:
        raise ConfigurationError(f"cannot write report to {out}: {e}")

    logger.info(f"Wrote {len(written)} file(s) to {out}")
    return written
