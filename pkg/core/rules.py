"""
Rules - IF-THEN rule sets extracted from fitted trees
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.cortex_tree import Leaf
from core.errors import ConsistencyError, DataError

logger = logging.getLogger(__name__)

LE = "<="
GT = ">"


@dataclass(frozen=True)
class Antecedent:
    feature: int
    name: str
    op: str
    threshold: float

    def __post_init__(self):
        if self.op not in (LE, GT):
            raise DataError(f"unknown operator '{self.op}'")
        if not math.isfinite(self.threshold):
            raise DataError(f"antecedent threshold must be finite, got {self.threshold}")

    def holds(self, x):
        value = x[self.feature]
        return value <= self.threshold if self.op == LE else value > self.threshold

    def mask(self, X):
        column = X[:, self.feature]
        return column <= self.threshold if self.op == LE else column > self.threshold


@dataclass(frozen=True)
class Rule:
    """
    Conjunction of antecedents with a class consequent

    `raw_length` is the number of conditions on the root-to-leaf path before
    simplification (equal to the antecedent count for imported rules).
    """

    antecedents: Tuple[Antecedent, ...]
    consequent: int
    consequent_name: str
    leaf_id: Optional[int] = None
    raw_length: Optional[int] = None

    @property
    def length(self):
        return len(self.antecedents)

    def fires(self, x):
        return all(a.holds(x) for a in self.antecedents)


@dataclass(frozen=True, eq=False)
class RuleSet:
    rules: Tuple[Rule, ...]
    schema: object

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def to_text(self):
        return render_text(self)

    def to_json(self):
        return to_json(self)


def simplify(antecedents):
    """
    Tighten path conditions into at most one bound per side per feature

    Keeps the largest '>' threshold and the smallest '<=' threshold of every
    feature and orders the result by feature index, lower bound first.
    """
    lower = {}
    upper = {}
    names = {}
    for a in antecedents:
        names[a.feature] = a.name
        if a.op == GT:
            lower[a.feature] = max(lower.get(a.feature, -math.inf), a.threshold)
        else:
            upper[a.feature] = min(upper.get(a.feature, math.inf), a.threshold)

    simplified = []
    for feature in sorted(names):
        if feature in lower and feature in upper and lower[feature] >= upper[feature]:
            raise ConsistencyError(
                f"contradictory conditions on {names[feature]}: "
                f"> {lower[feature]} and <= {upper[feature]}")
        if feature in lower:
            simplified.append(Antecedent(feature, names[feature], GT, lower[feature]))
        if feature in upper:
            simplified.append(Antecedent(feature, names[feature], LE, upper[feature]))
    return simplified


def extract(tree):
    """
    One rule per leaf, depth-first left-to-right

    Left edges contribute (feature <= t), right edges (feature > t).

    Args:
        tree (FittedTree): CORTEX or weighted tree

    Returns:
        RuleSet: Mutually exclusive, exhaustive rules
    """
    names = tree.schema.feature_names
    classes = tree.schema.class_names
    rules = []

    def walk(node, path):
        if isinstance(node, Leaf):
            rules.append(Rule(tuple(simplify(path)), node.label, classes[node.label],
                              node.node_id, len(path)))
            return
        feature, threshold = node.split.feature, node.split.threshold
        walk(node.left, path + [Antecedent(feature, names[feature], LE, threshold)])
        walk(node.right, path + [Antecedent(feature, names[feature], GT, threshold)])

    walk(tree.root, [])
    return RuleSet(tuple(rules), tree.schema)


def _check_width(ruleset, width):
    expected = ruleset.schema.n_features
    if width != expected:
        raise DataError(f"expected {expected} features, got {width}")


def apply(ruleset, x):
    """
    Consequent of the first rule that fires, or None

    Returns:
        int or None: Class index
    """
    x = np.asarray(x, dtype=np.float64)
    _check_width(ruleset, x.size if x.ndim == 1 else -1)
    for rule in ruleset.rules:
        if rule.fires(x):
            return rule.consequent
    return None


def apply_batch(ruleset, X):
    """
    First-match application to every row

    Returns:
        np.ndarray: Class index per row, -1 where no rule fires
    """
    X = np.asarray(X, dtype=np.float64)
    _check_width(ruleset, X.shape[1] if X.ndim == 2 else -1)
    predictions = np.full(X.shape[0], -1, dtype=np.int64)
    open_rows = np.ones(X.shape[0], dtype=bool)

    for rule in ruleset.rules:
        fires = open_rows.copy()
        for antecedent in rule.antecedents:
            fires &= antecedent.mask(X)
        predictions[fires] = rule.consequent
        open_rows &= ~fires
        if not open_rows.any():
            break

    return predictions


def size_metrics(ruleset):
    """
    Number of rules and average (simplified) rule length

    Returns:
        tuple: (number of rules, average rule length)
    """
    if not ruleset.rules:
        raise DataError("size metrics need a nonempty rule set")
    lengths = [rule.length for rule in ruleset.rules]
    return len(lengths), float(np.mean(lengths))


def raw_average_length(ruleset):
    """Average path-condition count before simplification"""
    if not ruleset.rules:
        raise DataError("size metrics need a nonempty rule set")
    lengths = [rule.length if rule.raw_length is None else rule.raw_length
               for rule in ruleset.rules]
    return float(np.mean(lengths))


def format_threshold(value):
    text = f"{value:.4f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def format_antecedent(antecedent, schema):
    spec = schema.features[antecedent.feature]
    if spec.is_one_hot and 0.0 < antecedent.threshold < 1.0:
        op = "!=" if antecedent.op == LE else "="
        return f"({spec.source} {op} {spec.category})"
    return f"({antecedent.name} {antecedent.op} {format_threshold(antecedent.threshold)})"


def format_rule(rule, schema):
    consequent = f"THEN {schema.target} = {rule.consequent_name}"
    if not rule.antecedents:
        return f"IF TRUE {consequent}"
    conditions = " AND ".join(format_antecedent(a, schema) for a in rule.antecedents)
    return f"IF {conditions} {consequent}"


def render_text(ruleset):
    """One rule per line, e.g. IF (duration > 11.5) AND (amount <= 7491.5) THEN class = good"""
    return "\n".join(format_rule(rule, ruleset.schema) for rule in ruleset.rules) + "\n"


def to_json(ruleset):
    """Structured export: antecedent triples plus consequent per rule"""
    document = {
        "target": ruleset.schema.target,
        "classes": list(ruleset.schema.class_names),
        "features": ruleset.schema.feature_names,
        "rules": [
            {
                "antecedents": [
                    {"feature": a.name, "op": a.op, "threshold": a.threshold}
                    for a in rule.antecedents
                ],
                "consequent": rule.consequent_name,
                "leaf": rule.leaf_id,
            }
            for rule in ruleset.rules
        ],
    }
    return json.dumps(document, indent=2)


def from_json(text, schema):
    """
    Import a rule set written by to_json (or by hand) against a schema

    Returns:
        RuleSet: Rules in file order; coverage is not guaranteed
    """
    try:
        document = json.loads(text)
        entries = document["rules"]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise DataError(f"not a rule set document: {e}")

    feature_index = {name: j for j, name in enumerate(schema.feature_names)}
    class_index = schema.class_index
    rules = []
    for number, entry in enumerate(entries, start=1):
        antecedents = []
        for item in entry.get("antecedents", []):
            name = item["feature"]
            if name not in feature_index:
                raise DataError(f"rule {number}: unknown feature '{name}'")
            antecedents.append(Antecedent(feature_index[name], name, item["op"], float(item["threshold"])))
        consequent = entry["consequent"]
        if consequent not in class_index:
            raise DataError(f"rule {number}: unknown class '{consequent}'")
        rules.append(Rule(tuple(antecedents), class_index[consequent], consequent,
                          entry.get("leaf")))
    return RuleSet(tuple(rules), schema)
