"""
Main Command - Command-line interface of the surrogate toolkit

    cortex-surrogates run   --data credit.csv --target class --oracle-cmd "..." --out results/
    cortex-surrogates fit   --data credit.csv --target class --method cortex --out tree/
    cortex-surrogates score --data credit.csv --rules tree/rules.json --predictions pred.csv
    cortex-surrogates rank  results/*/report.json

`run` is implied when the first argument is a flag.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from cli.report_writer import render_report, render_text
from core.dataset import dump_encoded, encode, feature_scales, load_csv
from core.errors import ConfigurationError, CortexError, DataError
from core.experiment import ExperimentRunner, fit_surrogate, noise_seed, resolve_cost_matrix
from core.blackbox import get_predictions
from core.cortex_tree import dumps_tree, loads_tree
from core.metrics import METRIC_NAMES, evaluate
from core.rules import extract, from_json
from core.stats import RANK_SCALES, aggregate_reports
from utils.config import Config, setting_key
from utils.log import configure_logging
from utils.validators import CSVValidator, SettingsValidator

logger = logging.getLogger(__name__)

COMMANDS = ("run", "fit", "score", "rank")

RUN_FLAGS = (
    "data", "target", "dataset_name",
    "predictions", "predictions_column", "oracle_cmd", "oracle_timeout", "oracle_cwd",
    "cost_matrix", "minority_cost", "train_fraction", "stratified",
    "repeats", "seed", "noise_sigma", "alpha",
    "max_depth", "min_leaf", "min_gain", "max_thresholds",
    "holdout_fraction", "methods", "out", "parallel", "format", "log_level",
)

# flag dest -> settings key
RUN_SETTINGS = {dest: setting_key(dest) for dest in RUN_FLAGS}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigurationError"""

    def error(self, message):
        raise ConfigurationError(f"{self.prog}: {message}")


def _add_source_flags(parser):
    parser.add_argument("--predictions", metavar="FILE", help="CSV of black-box predictions, one row per data row")
    parser.add_argument("--predictions-column", metavar="NAME", help="Prediction column in the file")
    parser.add_argument("--oracle-cmd", metavar="CMD", help="Command answering class names for CSV rows on stdin")
    parser.add_argument("--oracle-timeout", type=float, metavar="SECONDS")
    parser.add_argument("--oracle-cwd", metavar="DIR")


def _add_tree_flags(parser):
    parser.add_argument("--cost-matrix", metavar="default|unit|FILE")
    parser.add_argument("--minority-cost", type=float, metavar="COST",
                        help="Binary problems: cost of misclassifying the minority class")
    parser.add_argument("--max-depth", type=int)
    parser.add_argument("--min-leaf", type=int)
    parser.add_argument("--min-gain", type=float)
    parser.add_argument("--max-thresholds", type=int)


def build_parser():
    parser = _Parser(prog="cortex-surrogates",
                     description="Cost-sensitive surrogate trees, rule extraction and evaluation")
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)

    run = commands.add_parser("run", help="Repeated surrogate evaluation experiment")
    run.add_argument("--config", metavar="FILE", help="Settings file (.json or .ini)")
    run.add_argument("--data", metavar="CSV")
    run.add_argument("--target", metavar="COLUMN")
    run.add_argument("--dataset-name")
    _add_source_flags(run)
    _add_tree_flags(run)
    run.add_argument("--train-fraction", type=float)
    run.add_argument("--no-stratify", dest="stratified", action="store_const", const=False, default=None)
    run.add_argument("--repeats", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--noise-sigma", type=float)
    run.add_argument("--alpha", type=float)
    run.add_argument("--holdout-fraction", type=float,
                     help="Score surrogates on this share of the black-box labeled part, fit on the rest")
    run.add_argument("--methods", metavar="cortex,dt")
    run.add_argument("--out", metavar="DIR")
    run.add_argument("--parallel", type=int, metavar="N")
    run.add_argument("--format", metavar="json,csv,text")
    run.add_argument("--log-level")

    fit = commands.add_parser("fit", help="Fit one surrogate and write its tree and rules")
    fit.add_argument("--data", metavar="CSV", required=True)
    fit.add_argument("--target", metavar="COLUMN", default="class")
    fit.add_argument("--method", choices=("cortex", "dt"), default="cortex")
    _add_source_flags(fit)
    _add_tree_flags(fit)
    fit.add_argument("--out", metavar="DIR", required=True)
    fit.add_argument("--log-level", default="INFO")

    score = commands.add_parser("score", help="Score an imported rule set or tree on a CSV")
    score.add_argument("--data", metavar="CSV", required=True)
    score.add_argument("--target", metavar="COLUMN", default="class")
    imported = score.add_mutually_exclusive_group(required=True)
    imported.add_argument("--rules", metavar="FILE", help="rules.json written by fit")
    imported.add_argument("--tree", metavar="FILE", help="tree.txt written by fit")
    _add_source_flags(score)
    score.add_argument("--noise-sigma", type=float, default=0.1)
    score.add_argument("--seed", type=int, default=0)
    score.add_argument("--out", metavar="FILE", help="Write the metric record as JSON")
    score.add_argument("--log-level", default="INFO")

    rank = commands.add_parser("rank", help="Rank methods across several report.json files")
    rank.add_argument("reports", nargs="+", metavar="REPORT")
    rank.add_argument("--scale", choices=RANK_SCALES, default="achievable")
    rank.add_argument("--out", metavar="FILE", help="Write the ranking as JSON")
    rank.add_argument("--log-level", default="INFO")

    return parser


def _normalize_argv(argv):
    if argv and argv[0].startswith("-") and argv[0] not in ("-h", "--help"):
        return ["run"] + argv
    return argv


def _log_level(value):
    ok, level, message = SettingsValidator.validate_log_level(value)
    if not ok:
        raise ConfigurationError(message)
    return level


def command_run(args, out=None):
    configure_logging(_log_level(args.log_level or "INFO"))
    config = Config(args.config)
    config.apply_flags({key: getattr(args, dest) for dest, key in RUN_SETTINGS.items()})
    configure_logging(_log_level(config.get_setting("log_level")))

    run_config = config.to_run_config()
    report = ExperimentRunner(run_config).run()
    render_report(report, run_config.out_dir, run_config.formats)
    config.export_settings(str(Path(run_config.out_dir) / "settings.json"))
    (out or sys.stdout).write(render_text(report))
    return 0


def command_fit(args, out=None):
    configure_logging(_log_level(args.log_level))
    config = Config()
    config.update({key: getattr(args, dest, None) for dest, key in RUN_SETTINGS.items()
                   if dest not in ("log_level", "out")})

    data = encode(load_csv(args.data, args.target))
    target = data
    if args.predictions or args.oracle_cmd:
        target = data.with_labels(get_predictions(config.predictor(), data))

    ok, source, message = SettingsValidator.validate_cost_matrix(config.get_setting("cost_matrix"))
    if not ok:
        raise ConfigurationError(message)
    matrix = resolve_cost_matrix(data, source, config.get_setting("minority_cost"))
    tree = fit_surrogate(args.method, target, matrix, config.tree_params(args.method))
    ruleset = extract(tree)

    ok, directory, message = SettingsValidator.validate_output_directory(args.out)
    if not ok:
        raise ConfigurationError(f"{args.out}: {message}")
    directory = Path(directory)
    (directory / "tree.txt").write_text(dumps_tree(tree), encoding="utf-8")
    (directory / "rules.txt").write_text(ruleset.to_text(), encoding="utf-8")
    (directory / "rules.json").write_text(ruleset.to_json(), encoding="utf-8")
    dump_encoded(target, str(directory / "encoded.csv"))
    logger.info(f"{args.method}: {tree.n_leaves} leaves, depth {tree.depth}; files in {directory}")

    (out or sys.stdout).write(ruleset.to_text())
    return 0


def _read_text(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f"{path}: cannot read: {e}")


def command_score(args, out=None):
    configure_logging(_log_level(args.log_level))
    config = Config()
    config.update({key: getattr(args, dest, None) for dest, key in RUN_SETTINGS.items()
                   if dest not in ("log_level", "out", "seed", "noise_sigma")})
    ok, sigma, message = SettingsValidator.validate_nonnegative(args.noise_sigma, "noise_sigma")
    if not ok:
        raise ConfigurationError(message)

    data = encode(load_csv(args.data, args.target))
    if args.tree:
        ruleset = extract(loads_tree(_read_text(args.tree), data.schema))
    else:
        ruleset = from_json(_read_text(args.rules), data.schema)

    labels = data.labels
    if args.predictions or args.oracle_cmd:
        labels = get_predictions(config.predictor(), data)

    record = evaluate(ruleset, data, labels, sigma, feature_scales(data), noise_seed(args.seed),
                      method="imported", seed=args.seed)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(record.to_dict(), handle, indent=2)
        logger.info(f"Scores written to {args.out}")

    lines = [f"{metric.ljust(22)}{record.metric(metric):.3f}" for metric in METRIC_NAMES]
    (out or sys.stdout).write("\n".join(lines) + "\n")
    return 0


def command_rank(args, out=None):
    configure_logging(_log_level(args.log_level))
    results = CSVValidator().validate_batch(args.reports)
    invalid = [f"{path}: {r['message']}" for path, r in results.items() if not r["valid"]]
    if invalid:
        raise DataError("; ".join(invalid))

    reports = []
    for path in args.reports:
        with open(path, "r", encoding="utf-8") as handle:
            reports.append(json.load(handle))
    ranking = aggregate_reports(reports, args.scale)

    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(ranking, handle, indent=2)
        logger.info(f"Ranking written to {args.out}")

    methods = ranking["methods"]
    lines = ["Metric".ljust(22) + "".join(m.upper().rjust(10) for m in methods)]
    for metric in METRIC_NAMES:
        lines.append(metric.ljust(22) + "".join(f"{ranking['metrics'][metric][m]:.3f}".rjust(10) for m in methods))
    lines.append("overall".ljust(22) + "".join(f"{ranking['overall'][m]:.3f}".rjust(10) for m in methods))
    (out or sys.stdout).write("\n".join(lines) + "\n")
    return 0


def main(argv=None):
    """
    Entry point

    Returns:
        int: 0 success, 1 usage/config, 2 data, 3 oracle, 4 internal error
    """
    argv = _normalize_argv(list(sys.argv[1:] if argv is None else argv))
    handlers = {"run": command_run, "fit": command_fit, "score": command_score, "rank": command_rank}
    try:
        args = build_parser().parse_args(argv)
        if args.command not in handlers:
            raise ConfigurationError(f"a command is required: {', '.join(COMMANDS)}")
        return handlers[args.command](args)
    except CortexError as e:
        logger.error(str(e))
        sys.stderr.write(f"error: {e}\n")
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        sys.stderr.write(f"internal error: {e}\n")
        return 4
