"""The four benchmark learners.

A learner is any callable ``Dataset -> model`` whose model exposes
``predict_proba(rows) -> (n_rows, n_classes) array``; rows use the full
training schema (the class column is ignored).
"""

from __future__ import annotations

from functools import partial
from typing import Callable, Protocol

import numpy as np

from ..dataset import Dataset
from .naive_bayes import NaiveBayesModel, nb_predict, nb_train
from .oner import OneRModel, oner_train
from .part import PartModel, Rule, part_predict, part_train
from .voted_perceptron import (
    VotedPerceptronClassifier,
    VotedPerceptronModel,
    train_voted_perceptron,
    vp_predict,
    vp_train,
)

CLASSIFIERS = ("NB", "VP", "OneR", "PART")


class Model(Protocol):
    def predict_proba(self, rows: np.ndarray) -> np.ndarray: ...


Learner = Callable[[Dataset], Model]


def make_learner(name: str, params: dict | None = None) -> Learner:
    """Learner for one of ``CLASSIFIERS``.

    ``params`` keys: ``vp_epochs``, ``vp_seed``, ``part_min_leaf``, ``part_cf``;
    unrelated keys are ignored so one dict can configure all four.
    """
    params = params or {}
    if name == "NB":
        return nb_train
    if name == "VP":
        return partial(train_voted_perceptron, epochs=params.get("vp_epochs", 10),
                       seed=params.get("vp_seed", 0))
    if name == "OneR":
        return oner_train
    if name == "PART":
        return partial(part_train, min_leaf=params.get("part_min_leaf", 2),
                       cf=params.get("part_cf", 0.25))
    raise ValueError(f"unknown classifier {name!r}; valid: {', '.join(CLASSIFIERS)}")


def oner_predict(m: OneRModel, row) -> np.ndarray:
    return m.predict_proba(np.asarray(row)[None, :])[0]


__all__ = [
    "CLASSIFIERS", "Learner", "Model", "make_learner",
    "NaiveBayesModel", "nb_train", "nb_predict",
    "VotedPerceptronModel", "VotedPerceptronClassifier", "vp_train", "vp_predict",
    "train_voted_perceptron",
    "OneRModel", "oner_train", "oner_predict",
    "PartModel", "Rule", "part_train", "part_predict",
]
