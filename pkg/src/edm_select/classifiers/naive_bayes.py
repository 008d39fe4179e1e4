from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import MISSING, Dataset


@dataclass(frozen=True, eq=False)
class NaiveBayesModel:
    """Count tables for a Laplace-smoothed naive Bayes over nominal predictors.

    ``cond_counts[i]`` belongs to ``predictors[i]`` and has one row per schema
    value, plus a trailing missing-as-value row when the training data had
    missing cells for that predictor.
    """

    class_prior_counts: np.ndarray
    cond_counts: tuple[np.ndarray, ...]
    predictors: tuple[int, ...]
    arities: tuple[int, ...]
    n_columns: int

    @property
    def n_classes(self) -> int:
        return len(self.class_prior_counts)

    def log_tables(self) -> list[np.ndarray]:
        tables = []
        for counts in self.cond_counts:
            n_values = counts.shape[0]
            class_totals = counts.sum(axis=0)
            tables.append(np.log((counts + 1.0) / (class_totals + n_values)))
        return tables

    def predict_proba(self, rows) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows))
        if rows.shape[1] != self.n_columns:
            raise ValueError(f"expected rows with {self.n_columns} columns, got {rows.shape[1]}")
        n_prior = self.class_prior_counts.sum()
        prior = np.log((self.class_prior_counts + 1.0) / (n_prior + self.n_classes))
        scores = np.tile(prior, (rows.shape[0], 1))
        for p, arity, table in zip(self.predictors, self.arities, self.log_tables()):
            col = rows[:, p]
            bucket = np.where((col == MISSING) | (col >= arity), arity, col)
            if table.shape[0] > arity:
                scores += table[bucket]
            else:
                # no missing bucket was trained: missing or unseen cells carry no evidence
                known = bucket < arity
                scores[known] += table[bucket[known]]
        scores -= scores.max(axis=1, keepdims=True)
        probs = np.exp(scores)
        return probs / probs.sum(axis=1, keepdims=True)


def nb_train(d: Dataset) -> NaiveBayesModel:
    if d.n_rows < 1:
        raise ValueError("cannot train on an empty dataset")
    y = d.y
    c = d.n_classes
    tables = []
    arities = []
    for p in d.predictors:
        arity = d.schema[p].arity
        col = d.rows[:, p]
        has_missing = bool(np.any(col == MISSING))
        n_values = arity + has_missing
        bucket = np.where(col == MISSING, arity, col)
        counts = np.bincount(bucket * c + y, minlength=n_values * c).reshape(n_values, c)
        tables.append(counts)
        arities.append(arity)
    return NaiveBayesModel(
        class_prior_counts=np.bincount(y, minlength=c),
        cond_counts=tuple(tables),
        predictors=tuple(d.predictors),
        arities=tuple(arities),
        n_columns=len(d.schema),
    )


def nb_predict(m: NaiveBayesModel, row) -> np.ndarray:
    return m.predict_proba(np.asarray(row)[None, :])[0]


def describe(m: NaiveBayesModel, d: Dataset) -> str:
    classes = d.class_attribute.values
    lines = ["NaiveBayes", "class counts: " + ", ".join(
        f"{v}={n}" for v, n in zip(classes, m.class_prior_counts))]
    for p, counts in zip(m.predictors, m.cond_counts):
        a = d.schema[p]
        lines.append(f"{a.name}:")
        labels = list(a.values) + ["?"] * (counts.shape[0] - a.arity)
        for label, row in zip(labels, counts):
            lines.append(f"  {label:<16}" + " ".join(f"{n:>6}" for n in row))
    return "\n".join(lines)
