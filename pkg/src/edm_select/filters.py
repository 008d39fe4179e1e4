"""Filter attribute evaluators and rankings.

Six evaluators score predictors from data statistics alone:

* ``IG``  information gain
* ``GR``  gain ratio
* ``SU``  symmetrical uncertainty
* ``CH``  chi-square statistic
* ``RF``  ReliefF weight
* ``CB``  correlation-based (CFS) subset merit, ranked by greedy forward search

All entropies are in bits.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import MISSING, ContingencyTable, Dataset, contingency, cross_tabulate

METHODS = ("CB", "CH", "GR", "IG", "RF", "SU")


def entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float).ravel()
    if np.any(counts < 0):
        raise ValueError("entropy of negative counts")
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log2(p)))


def _conditional_entropy(t: ContingencyTable) -> float:
    n = t.total
    if n == 0:
        return 0.0
    return sum(rs / n * entropy(row) for rs, row in zip(t.row_sums, t.counts) if rs > 0)


def info_gain(t: ContingencyTable) -> float:
    if t.total == 0:
        return 0.0
    ig = entropy(t.col_sums) - _conditional_entropy(t)
    return max(ig, 0.0)


def gain_ratio(t: ContingencyTable) -> float:
    h_attr = entropy(t.row_sums)
    if h_attr == 0:
        return 0.0
    return min(info_gain(t) / h_attr, 1.0)


def symmetrical_uncertainty(t: ContingencyTable) -> float:
    denom = entropy(t.col_sums) + entropy(t.row_sums)
    if denom == 0:
        return 0.0
    return min(2.0 * info_gain(t) / denom, 1.0)


def chi_square(t: ContingencyTable) -> float:
    n = t.total
    if n == 0:
        return 0.0
    observed = t.counts.astype(float)
    expected = np.outer(t.row_sums, t.col_sums) / n
    nz = expected > 0
    return float(np.sum((observed[nz] - expected[nz]) ** 2 / expected[nz]))


TABLE_EVALUATORS = {
    "IG": info_gain,
    "GR": gain_ratio,
    "SU": symmetrical_uncertainty,
    "CH": chi_square,
}


@dataclass(frozen=True)
class FeatureScore:
    attribute: int
    merit: float
    method: str


def relief_f(d: Dataset, n_neighbors: int = 10, sample: int | None = None,
             seed: int = 0) -> list[FeatureScore]:
    """ReliefF weights for every predictor under Hamming distance.

    ``sample=None`` uses every instance in order (no randomness); otherwise
    ``sample`` instances are drawn without replacement with ``seed``.
    Neighbour ties are broken by row order.
    """
    if d.n_rows < 2:
        raise ValueError("ReliefF needs at least 2 instances")
    preds = d.predictors
    x = d.rows[:, preds]
    y = d.y
    n = d.n_rows
    if sample is None or sample >= n:
        picks = np.arange(n)
    else:
        if sample < 1:
            raise ValueError("sample size must be positive")
        picks = np.sort(np.random.default_rng(seed).choice(n, size=sample, replace=False))
    prior = np.bincount(y, minlength=d.n_classes) / n
    by_class = [np.flatnonzero(y == c) for c in range(d.n_classes)]
    missing = x == MISSING
    weights = np.zeros(len(preds))

    for r in picks:
        # diff is 1 unless both values are present and equal
        diff = ((x != x[r]) | missing | missing[r]).astype(float)
        dist = diff.sum(axis=1)
        cr = y[r]

        hits = by_class[cr][by_class[cr] != r]
        if len(hits):
            near = hits[np.argsort(dist[hits], kind="stable")[:n_neighbors]]
            weights -= diff[near].mean(axis=0)

        others = [c for c in range(d.n_classes) if c != cr and len(by_class[c])]
        norm = sum(prior[c] for c in others)
        for c in others:
            members = by_class[c]
            near = members[np.argsort(dist[members], kind="stable")[:n_neighbors]]
            weights += prior[c] / norm * diff[near].mean(axis=0)

    weights /= len(picks)
    return [FeatureScore(a, float(w), "RF") for a, w in zip(preds, weights)]


@dataclass(frozen=True, eq=False)
class CorrelationCache:
    """SU of each predictor with the class and between predictor pairs.

    Both are indexed by position in ``attributes``.
    """

    attributes: tuple[int, ...]
    su_with_class: np.ndarray
    su_pairwise: np.ndarray

    @classmethod
    def build(cls, d: Dataset) -> CorrelationCache:
        preds = d.predictors
        k = len(preds)
        su_c = np.array([symmetrical_uncertainty(contingency(d, a)) for a in preds])
        su_ff = np.zeros((k, k))
        for i, a in enumerate(preds):
            col_a = d.rows[:, a]
            if entropy(np.bincount(np.where(col_a == MISSING, d.schema[a].arity, col_a))) > 0:
                su_ff[i, i] = 1.0
            for j in range(i + 1, k):
                b = preds[j]
                counts = cross_tabulate(col_a, d.schema[a].arity, d.rows[:, b], d.schema[b].arity)
                su_ff[i, j] = su_ff[j, i] = symmetrical_uncertainty(ContingencyTable(counts))
        return cls(tuple(preds), su_c, su_ff)

    def position(self, attribute: int) -> int:
        return self.attributes.index(attribute)


def cfs_merit(subset: Sequence[int], cache: CorrelationCache) -> float:
    """k * mean(r_cf) / sqrt(k + k(k-1) * mean(r_ff)) over attribute indices."""
    if len(subset) == 0:
        raise ValueError("CFS merit of an empty subset")
    pos = [cache.position(a) for a in subset]
    k = len(pos)
    r_cf = float(np.mean(cache.su_with_class[pos]))
    if k > 1:
        block = cache.su_pairwise[np.ix_(pos, pos)]
        r_ff = float((block.sum() - np.trace(block)) / (k * (k - 1)))
    else:
        r_ff = 0.0
    denom = k + k * (k - 1) * r_ff
    if denom <= 0:
        return 0.0
    return k * r_cf / math.sqrt(denom)


def _cfs_forward(cache: CorrelationCache) -> tuple[list[int], list[float]]:
    k = len(cache.attributes)
    rcf = cache.su_with_class
    ff = cache.su_pairwise
    chosen: list[int] = []
    merits: list[float] = []
    remaining = list(range(k))
    sum_cf = 0.0
    sum_ff = 0.0  # sum over ordered pairs i != j within chosen
    while remaining:
        m = len(chosen) + 1
        best, best_merit = None, -math.inf
        for i in remaining:  # ascending position == ascending attribute index
            s_cf = sum_cf + rcf[i]
            s_ff = sum_ff + 2.0 * ff[i, chosen].sum()
            denom = m + s_ff  # m + m(m-1) * mean_ff
            merit = s_cf / math.sqrt(denom) if denom > 0 else 0.0
            if merit > best_merit:
                best, best_merit = i, merit
        sum_ff += 2.0 * ff[best, chosen].sum()
        sum_cf += rcf[best]
        chosen.append(best)
        remaining.remove(best)
        merits.append(best_merit)
    return [cache.attributes[i] for i in chosen], merits


@dataclass(frozen=True)
class Ranking:
    """Predictors best-first.

    For CB, ``merits[i]`` is the CFS merit of the prefix ``ordered[:i+1]`` and
    may rise before it falls; for the other methods it is the attribute's own
    score and never increases along the list.
    """

    method: str
    ordered: tuple[int, ...]
    merits: tuple[float, ...]

    def top(self, k: int) -> tuple[int, ...]:
        return self.ordered[:k]


def _order(scores: dict[int, float]) -> tuple[tuple[int, ...], tuple[float, ...]]:
    ordered = sorted(scores, key=lambda a: (-scores[a], a))
    return tuple(ordered), tuple(scores[a] for a in ordered)


def score_attributes(d: Dataset, method: str, n_neighbors: int = 10,
                     sample: int | None = None, seed: int = 0) -> list[FeatureScore]:
    """Per-predictor scores for the single-attribute methods."""
    if method == "RF":
        return relief_f(d, n_neighbors, sample, seed)
    fn = TABLE_EVALUATORS[method]
    return [FeatureScore(a, fn(contingency(d, a)), method) for a in d.predictors]


def rank_attributes(d: Dataset, method: str, n_neighbors: int = 10,
                    sample: int | None = None, seed: int = 0) -> Ranking:
    method = method.upper()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; valid: {', '.join(METHODS)}")
    if not d.predictors:
        raise ValueError("dataset has no predictors")
    if method == "CB":
        ordered, merits = _cfs_forward(CorrelationCache.build(d))
        return Ranking("CB", tuple(ordered), tuple(merits))
    scores = score_attributes(d, method, n_neighbors, sample, seed)
    ordered, merits = _order({s.attribute: s.merit for s in scores})
    return Ranking(method, ordered, merits)


def ranking_csv(r: Ranking, d: Dataset) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["rank", "attribute_index", "attribute_name", "merit"])
    for pos, (a, m) in enumerate(zip(r.ordered, r.merits), start=1):
        w.writerow([pos, a, d.schema[a].name, f"{m:.4f}"])
    return out.getvalue()
