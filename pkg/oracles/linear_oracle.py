#!/usr/bin/env python3
"""
Linear Oracle - Toy black box speaking the oracle protocol

Reads a feature CSV (with header) on stdin and writes one class name per
row to stdout. The score of a row is `weights . x + bias`; its class is the
number of cut points below the score, so `--cuts 0` gives a thresholded
linear classifier with two classes.

    python oracles/linear_oracle.py --classes neg,pos --weights 1,0 --cuts 0.5
"""

import argparse
import sys

import numpy as np
import pandas as pd


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser():
    parser = argparse.ArgumentParser(description="Thresholded linear scorer")
    parser.add_argument("--classes", required=True, help="Class names, lowest score band first")
    parser.add_argument("--weights", default="", help="Feature weights (default: 1 on the first feature)")
    parser.add_argument("--bias", type=float, default=0.0)
    parser.add_argument("--cuts", default="0", help="Ascending score cut points, one fewer than classes")
    parser.add_argument("--constant", help="Answer this class for every row")
    parser.add_argument("--flip-rate", type=float, default=0.0,
                        help="Fraction of answers replaced by a random other class")
    parser.add_argument("--seed", type=int, default=0)
    return parser


def label_rows(features, classes, weights, bias, cuts):
    if not weights:
        weights = [1.0] + [0.0] * (features.shape[1] - 1)
    if len(weights) != features.shape[1]:
        raise ValueError(f"{len(weights)} weights for {features.shape[1]} features")
    if len(cuts) != len(classes) - 1:
        raise ValueError(f"{len(classes)} classes need {len(classes) - 1} cut points")
    scores = features @ np.asarray(weights) + bias
    return np.searchsorted(np.sort(cuts), scores, side="left")


def main(argv=None):
    args = build_parser().parse_args(argv)
    classes = [c.strip() for c in args.classes.split(",") if c.strip()]
    frame = pd.read_csv(sys.stdin)

    if args.constant is not None:
        answers = [args.constant] * len(frame)
    else:
        labels = label_rows(frame.to_numpy(dtype=np.float64), classes,
                            _floats(args.weights), args.bias, _floats(args.cuts))
        if args.flip_rate > 0:
            rng = np.random.default_rng(args.seed)
            flips = rng.random(labels.size) < args.flip_rate
            offsets = rng.integers(1, len(classes), size=labels.size)
            labels = np.where(flips, (labels + offsets) % len(classes), labels)
        answers = [classes[i] for i in labels]

    sys.stdout.write("".join(f"{name}\n" for name in answers))
    return 0


if __name__ == "__main__":
    sys.exit(main())
