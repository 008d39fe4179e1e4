from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import MISSING, Dataset


@dataclass(frozen=True, eq=False)
class OneRModel:
    """Single-attribute rule table.

    ``rule[v]`` is the class predicted for value ``v`` of the chosen
    attribute; the last entry is the missing-as-value bucket. With no
    predictors, ``chosen_attribute`` is None and every row gets
    ``default_class``.
    """

    chosen_attribute: int | None
    rule: tuple[int, ...]
    default_class: int
    training_errors: int
    n_classes: int
    n_columns: int

    def predict(self, rows) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows))
        if rows.shape[1] != self.n_columns:
            raise ValueError(f"expected rows with {self.n_columns} columns, got {rows.shape[1]}")
        if self.chosen_attribute is None:
            return np.full(rows.shape[0], self.default_class)
        col = rows[:, self.chosen_attribute]
        missing_bucket = len(self.rule) - 1
        col = np.where((col == MISSING) | (col >= missing_bucket), missing_bucket, col)
        return np.asarray(self.rule)[col]

    def predict_proba(self, rows) -> np.ndarray:
        pred = self.predict(rows)
        out = np.zeros((len(pred), self.n_classes))
        out[np.arange(len(pred)), pred] = 1.0
        return out


def _majority(counts: np.ndarray) -> int:
    # argmax returns the lowest index among ties
    return int(np.argmax(counts))


def oner_rule(d: Dataset, attr: int, default_class: int) -> tuple[tuple[int, ...], int]:
    """Rule table (values + missing bucket) for one attribute and its training error count."""
    arity = d.schema[attr].arity
    col = np.where(d.rows[:, attr] == MISSING, arity, d.rows[:, attr])
    c = d.n_classes
    counts = np.bincount(col * c + d.y, minlength=(arity + 1) * c).reshape(arity + 1, c)
    rule = []
    errors = 0
    for row in counts:
        top = row.max()
        winners = np.flatnonzero(row == top)
        choice = default_class if default_class in winners else int(winners[0])
        rule.append(choice)
        errors += int(row.sum() - row[choice])
    return tuple(rule), errors


def oner_train(d: Dataset) -> OneRModel:
    if d.n_rows < 1:
        raise ValueError("cannot train on an empty dataset")
    default = _majority(d.class_counts())
    best = None
    for p in d.predictors:
        rule, errors = oner_rule(d, p, default)
        if best is None or errors < best[2]:
            best = (p, rule, errors)
    if best is None:
        errors = int(d.n_rows - d.class_counts()[default])
        return OneRModel(None, (), default, errors, d.n_classes, len(d.schema))
    return OneRModel(best[0], best[1], default, best[2], d.n_classes, len(d.schema))


def describe(m: OneRModel, d: Dataset) -> str:
    classes = d.class_attribute.values
    if m.chosen_attribute is None:
        return f"OneR: -> {classes[m.default_class]}"
    a = d.schema[m.chosen_attribute]
    lines = [f"OneR on {a.name} ({m.training_errors}/{d.n_rows} training errors)"]
    for label, cls in zip(list(a.values) + ["?"], m.rule):
        lines.append(f"  {label} -> {classes[cls]}")
    return "\n".join(lines)
