"""PART decision lists built from partial C4.5 trees.

Each round grows a partial tree on the instances not yet covered, turns its
largest leaf into a rule and removes the instances that rule covers. Splits
are multiway over nominal values (missing is its own value) and chosen by
gain ratio among attributes with at least average information gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from ..dataset import MISSING, Dataset


def pessimistic_extra_errors(n: float, e: float, cf: float) -> float:
    """Extra errors added by C4.5's upper confidence bound on a leaf's error rate."""
    if cf > 0.5:
        raise ValueError("confidence factor must be at most 0.5")
    if e < 1:
        base = n * (1.0 - cf ** (1.0 / n))
        if e == 0:
            return base
        return base + e * (pessimistic_extra_errors(n, 1.0, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1.0 - cf)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log2(p)))


@dataclass(frozen=True)
class Rule:
    tests: tuple[tuple[int, int], ...]  # (attribute, value); value MISSING matches a missing cell
    class_counts: tuple[int, ...]

    def matches(self, rows: np.ndarray) -> np.ndarray:
        ok = np.ones(rows.shape[0], dtype=bool)
        for attr, value in self.tests:
            ok &= rows[:, attr] == value
        return ok

    def distribution(self) -> np.ndarray:
        counts = np.asarray(self.class_counts, dtype=float)
        return (counts + 1.0) / (counts.sum() + len(counts))


@dataclass(frozen=True, eq=False)
class PartModel:
    """Ordered rules; the last one has no tests and matches everything."""

    rules: tuple[Rule, ...]
    n_columns: int

    @property
    def default_rule(self) -> Rule:
        return self.rules[-1]

    def first_match(self, rows) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows))
        if rows.shape[1] != self.n_columns:
            raise ValueError(f"expected rows with {self.n_columns} columns, got {rows.shape[1]}")
        which = np.full(rows.shape[0], len(self.rules) - 1)
        open_ = np.ones(rows.shape[0], dtype=bool)
        for i, rule in enumerate(self.rules[:-1]):
            hit = open_ & rule.matches(rows)
            which[hit] = i
            open_ &= ~hit
        return which

    def predict_proba(self, rows) -> np.ndarray:
        dists = np.array([r.distribution() for r in self.rules])
        return dists[self.first_match(rows)]


@dataclass
class _Node:
    idx: np.ndarray
    counts: np.ndarray
    attr: int | None = None
    children: dict = field(default_factory=dict)  # value -> _Node, expanded only
    n_branches: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.attr is None

    def make_leaf(self):
        self.attr = None
        self.children = {}
        self.n_branches = 0


class _PartialTreeBuilder:
    def __init__(self, rows: np.ndarray, y: np.ndarray, predictors, arities,
                 n_classes: int, min_leaf: int, cf: float):
        self.rows = rows
        self.y = y
        self.predictors = list(predictors)
        self.arities = dict(zip(predictors, arities))
        self.n_classes = n_classes
        self.min_leaf = min_leaf
        self.cf = cf

    def _buckets(self, attr: int, idx: np.ndarray) -> np.ndarray:
        col = self.rows[idx, attr]
        return np.where(col == MISSING, self.arities[attr], col)

    def choose_split(self, idx: np.ndarray, counts: np.ndarray) -> int | None:
        c = self.n_classes
        h_class = _entropy(counts)
        n = len(idx)
        candidates = []
        for a in self.predictors:
            nv = self.arities[a] + 1
            b = self._buckets(a, idx)
            table = np.bincount(b * c + self.y[idx], minlength=nv * c).reshape(nv, c)
            sizes = table.sum(axis=1)
            if np.count_nonzero(sizes >= self.min_leaf) < 2:
                continue
            cond = sum(s / n * _entropy(row) for s, row in zip(sizes, table) if s > 0)
            gain = h_class - cond
            if gain <= 1e-12:
                continue
            split_info = _entropy(sizes)
            candidates.append((a, gain, gain / split_info if split_info > 0 else 0.0))
        if not candidates:
            return None
        avg_gain = sum(g for _, g, _ in candidates) / len(candidates)
        best, best_ratio = None, -1.0
        for a, gain, ratio in candidates:
            if gain >= avg_gain - 1e-3 and ratio > best_ratio:
                best, best_ratio = a, ratio
        return best

    def leaf_errors(self, node: _Node) -> float:
        n = float(len(node.idx))
        e = n - node.counts.max()
        return e + pessimistic_extra_errors(n, e, self.cf)

    def expand(self, idx: np.ndarray) -> _Node:
        counts = np.bincount(self.y[idx], minlength=self.n_classes)
        node = _Node(idx, counts)
        if np.count_nonzero(counts) <= 1 or len(idx) < self.min_leaf:
            return node
        attr = self.choose_split(idx, counts)
        if attr is None:
            return node
        buckets = self._buckets(attr, idx)
        subsets = []
        for v in np.unique(buckets):
            sub = idx[buckets == v]
            sub_counts = np.bincount(self.y[sub], minlength=self.n_classes)
            subsets.append((_entropy(sub_counts), int(v), sub))
        subsets.sort(key=lambda s: (s[0], s[1]))
        node.attr = attr
        node.n_branches = len(subsets)
        for _, v, sub in subsets:
            child = self.expand(sub)
            node.children[v] = child
            if not child.is_leaf:
                break
        if len(node.children) == node.n_branches and all(ch.is_leaf for ch in node.children.values()):
            subtree = sum(self.leaf_errors(ch) for ch in node.children.values())
            if self.leaf_errors(node) <= subtree:
                node.make_leaf()
        return node

    def best_leaf(self, root: _Node):
        """(tests, node) of the expanded leaf covering the most instances."""
        best = None
        stack = [((), root)]
        while stack:
            tests, node = stack.pop(0)
            if node.is_leaf:
                if best is None or len(node.idx) > len(best[1].idx):
                    best = (tests, node)
                continue
            for v, child in node.children.items():
                value = MISSING if v == self.arities[node.attr] else v
                stack.append((tests + ((node.attr, value),), child))
        return best


def part_train(d: Dataset, min_leaf: int = 2, cf: float = 0.25) -> PartModel:
    if d.n_rows < 1:
        raise ValueError("cannot train on an empty dataset")
    preds = d.predictors
    builder = _PartialTreeBuilder(d.rows, d.y, preds, [d.schema[p].arity for p in preds],
                                  d.n_classes, min_leaf, cf)
    residual = np.arange(d.n_rows)
    rules = []
    while len(residual):
        root = builder.expand(residual)
        if root.is_leaf:
            break
        tests, leaf = builder.best_leaf(root)
        rule = Rule(tests, tuple(int(c) for c in leaf.counts))
        rules.append(rule)
        residual = residual[~rule.matches(d.rows[residual])]
    source = residual if len(residual) else np.arange(d.n_rows)
    default_counts = np.bincount(d.y[source], minlength=d.n_classes)
    rules.append(Rule((), tuple(int(c) for c in default_counts)))
    return PartModel(tuple(rules), len(d.schema))


def part_predict(m: PartModel, row) -> np.ndarray:
    return m.predict_proba(np.asarray(row)[None, :])[0]


def describe(m: PartModel, d: Dataset) -> str:
    classes = d.class_attribute.values
    lines = [f"PART decision list ({len(m.rules)} rules)"]
    for rule in m.rules:
        cls = classes[int(np.argmax(rule.class_counts))]
        if rule.tests:
            cond = " AND ".join(
                f"{d.schema[a].name} = {'?' if v == MISSING else d.schema[a].values[v]}"
                for a, v in rule.tests)
        else:
            cond = "otherwise"
        lines.append(f"  {cond}: {cls} {list(rule.class_counts)}")
    return "\n".join(lines)
