from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import AttributeSchema, Dataset, EncodedMatrix, encode_predictors, one_hot_encode


@dataclass(frozen=True, eq=False)
class VotedPerceptronModel:
    """Perceptron prototypes with survival counts.

    Row ``i`` of ``weights``/``biases`` is prototype ``i``; ``counts[i]`` is
    how many training steps it survived. A prototype replaced on its very
    first step has count 0 and is dropped, except that an untrained model
    keeps its single zero prototype (count 0, which votes neutral).
    """

    weights: np.ndarray
    biases: np.ndarray
    counts: np.ndarray
    epochs: int

    def vote(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.weights.shape[1]:
            raise ValueError(f"expected {self.weights.shape[1]} columns, got {x.shape[1]}")
        signs = np.where(x @ self.weights.T + self.biases >= 0, 1.0, -1.0)
        return signs @ self.counts

    def positive_probability(self, x) -> np.ndarray:
        total = self.counts.sum()
        s = self.vote(x)
        if total == 0:
            return np.full(len(s), 0.5)
        return (1.0 + s / total) / 2.0


def vp_train(m: EncodedMatrix, epochs: int = 10, seed: int = 0,
             shuffle: bool = False) -> VotedPerceptronModel:
    """Freund and Schapire's voted perceptron with a linear kernel.

    Instances are visited in training order each epoch unless ``shuffle``.
    """
    x = np.asarray(m.rows, dtype=float)
    y = np.asarray(m.labels)
    if x.shape[0] == 0:
        raise ValueError("cannot train a voted perceptron on zero rows")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be +1/-1")
    rng = np.random.default_rng(seed)
    w = np.zeros(x.shape[1])
    b = 0.0
    c = 0
    protos_w, protos_b, protos_c = [], [], []
    for _ in range(epochs):
        order = rng.permutation(len(y)) if shuffle else range(len(y))
        for i in order:
            pred = 1 if x[i] @ w + b >= 0 else -1
            if pred == y[i]:
                c += 1
            else:
                if c > 0:
                    protos_w.append(w.copy())
                    protos_b.append(b)
                    protos_c.append(c)
                w = w + y[i] * x[i]
                b = b + y[i]
                c = 1
    if c > 0 or not protos_c:
        protos_w.append(w.copy())
        protos_b.append(b)
        protos_c.append(c)
    return VotedPerceptronModel(np.array(protos_w), np.array(protos_b, dtype=float),
                                np.array(protos_c, dtype=float), epochs)


def vp_predict(m: VotedPerceptronModel, x) -> np.ndarray:
    """[p(positive), p(negative)] from the normalised vote."""
    p = float(m.positive_probability(np.asarray(x)[None, :])[0])
    return np.array([p, 1.0 - p])


@dataclass(frozen=True, eq=False)
class VotedPerceptronClassifier:
    """A voted perceptron wrapped to consume nominal rows directly."""

    model: VotedPerceptronModel
    schema: tuple[AttributeSchema, ...]
    predictors: tuple[int, ...]
    positive_class: int

    def predict_proba(self, rows) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows))
        if rows.shape[1] != len(self.schema):
            raise ValueError(f"expected rows with {len(self.schema)} columns, got {rows.shape[1]}")
        x = encode_predictors(self.schema, self.predictors, rows)
        p = self.model.positive_probability(x)
        out = np.empty((len(p), 2))
        out[:, self.positive_class] = p
        out[:, 1 - self.positive_class] = 1.0 - p
        return out


def train_voted_perceptron(d: Dataset, epochs: int = 10, seed: int = 0) -> VotedPerceptronClassifier:
    model = vp_train(one_hot_encode(d), epochs=epochs, seed=seed)
    return VotedPerceptronClassifier(model, d.schema, tuple(d.predictors), d.positive_class)


def describe(clf: VotedPerceptronClassifier) -> str:
    m = clf.model
    return (f"VotedPerceptron: {len(m.counts)} prototypes over {m.weights.shape[1]} columns, "
            f"{m.epochs} epochs, total votes {int(m.counts.sum())}")
