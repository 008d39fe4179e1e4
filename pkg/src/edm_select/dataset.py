"""Nominal datasets: parsing, projection, folds, one-hot encoding and synthesis.

Every cell is a category index into its attribute's value list; ``MISSING``
(-1) marks a missing response. Datasets are immutable once built.
"""

from __future__ import annotations

import csv
import io
import os
import re
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Sequence

import numpy as np

MISSING = -1
MISSING_TOKEN = "?"


class DatasetError(ValueError):
    """Base class for dataset construction and parsing problems."""


class ParseError(DatasetError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class UnsupportedFeatureError(DatasetError):
    pass


class EmptyDatasetError(DatasetError):
    pass


@dataclass(frozen=True)
class AttributeSchema:
    name: str
    values: tuple[str, ...]
    index: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise DatasetError(f"attribute {self.name!r} has no values")
        if len(set(self.values)) != len(self.values):
            raise DatasetError(f"attribute {self.name!r} has duplicate values")
        if MISSING_TOKEN in self.values or "" in self.values:
            raise DatasetError(f"attribute {self.name!r} declares a reserved value")

    @property
    def arity(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Nominal instances plus the schema that decodes them.

    ``rows`` is an ``(n_rows, n_attributes)`` integer array; ``MISSING`` marks
    missing predictor cells. ``positive_class`` is the class value index used
    as the positive label for ROC scoring.
    """

    schema: tuple[AttributeSchema, ...]
    rows: np.ndarray
    class_index: int
    positive_class: int = 0
    relation: str = "data"

    def __post_init__(self):
        schema = tuple(self.schema)
        object.__setattr__(self, "schema", schema)
        rows = np.array(self.rows, dtype=np.int32, copy=True)
        if rows.size == 0:
            rows = rows.reshape(0, len(schema))
        if rows.ndim != 2 or rows.shape[1] != len(schema):
            raise DatasetError(f"rows must have {len(schema)} columns")
        if not 0 <= self.class_index < len(schema):
            raise DatasetError(f"class index {self.class_index} out of range")
        for a in schema:
            col = rows[:, a.index]
            if np.any(col >= a.arity) or np.any(col < MISSING):
                raise DatasetError(f"attribute {a.name!r} has an out-of-range cell")
        if [a.index for a in schema] != list(range(len(schema))):
            raise DatasetError("schema indices must be 0..n-1 in order")
        cls = schema[self.class_index]
        if cls.arity < 2:
            raise DatasetError("class attribute needs at least 2 values")
        if np.any(rows[:, self.class_index] == MISSING):
            raise DatasetError("class attribute cells may not be missing")
        if not 0 <= self.positive_class < cls.arity:
            raise DatasetError("positive class index out of range")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.schema == other.schema
            and self.class_index == other.class_index
            and self.positive_class == other.positive_class
            and np.array_equal(self.rows, other.rows)
        )

    __hash__ = None

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def predictors(self) -> list[int]:
        return [a.index for a in self.schema if a.index != self.class_index]

    @property
    def class_attribute(self) -> AttributeSchema:
        return self.schema[self.class_index]

    @property
    def n_classes(self) -> int:
        return self.class_attribute.arity

    @property
    def y(self) -> np.ndarray:
        return self.rows[:, self.class_index]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)

    def attribute_index(self, name: str) -> int:
        for a in self.schema:
            if a.name == name:
                return a.index
        raise KeyError(name)

    def subset(self, row_indices) -> Dataset:
        return Dataset(self.schema, self.rows[row_indices], self.class_index,
                       self.positive_class, self.relation)

    def with_class(self, name: str | None = None, positive: str | None = None) -> Dataset:
        """Re-designate the class attribute and/or the positive class label."""
        class_index = self.class_index if name is None else self.attribute_index(name)
        if positive is None:
            pos = 0 if class_index != self.class_index else self.positive_class
        else:
            values = self.schema[class_index].values
            if positive not in values:
                raise KeyError(positive)
            pos = values.index(positive)
        return Dataset(self.schema, self.rows, class_index, pos, self.relation)


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Attribute-value by class-value counts."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.ndim != 2:
            raise ValueError("contingency counts must be a matrix")
        if np.any(counts < 0):
            raise ValueError("contingency counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def transpose(self) -> ContingencyTable:
        return ContingencyTable(self.counts.T)


def cross_tabulate(a: np.ndarray, a_arity: int, b: np.ndarray, b_arity: int) -> np.ndarray:
    """Count matrix of two nominal columns; missing gets an extra row/column
    only when it actually occurs."""
    a = np.where(a == MISSING, a_arity, a)
    b = np.where(b == MISSING, b_arity, b)
    n_a = a_arity + int(np.any(a == a_arity))
    n_b = b_arity + int(np.any(b == b_arity))
    flat = np.bincount(a * n_b + b, minlength=n_a * n_b)
    return flat.reshape(n_a, n_b)


def contingency(d: Dataset, attr: int) -> ContingencyTable:
    if attr == d.class_index:
        raise ValueError("cannot tabulate the class attribute against itself")
    if not 0 <= attr < len(d.schema):
        raise ValueError(f"attribute index {attr} out of range")
    counts = cross_tabulate(d.rows[:, attr], d.schema[attr].arity, d.y, d.n_classes)
    return ContingencyTable(counts)


# --------------------------------------------------------------------------
# parsing

def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    return data.decode("utf-8-sig")


def _build(names: Sequence[str], declared: Sequence[Sequence[str]] | None,
           records: Sequence[tuple[int, list[str]]], class_attr: str | None,
           positive: str | None, relation: str) -> Dataset:
    if not records:
        raise EmptyDatasetError("dataset has no rows")
    n = len(names)
    if declared is None:
        seen: list[dict[str, int]] = [{} for _ in range(n)]
        for _, cells in records:
            for j, c in enumerate(cells):
                if c != MISSING_TOKEN and c not in seen[j]:
                    seen[j][c] = len(seen[j])
        declared = [list(s) for s in seen]
    lookup = [{v: i for i, v in enumerate(vals)} for vals in declared]
    rows = np.empty((len(records), n), dtype=np.int32)
    for r, (lineno, cells) in enumerate(records):
        for j, c in enumerate(cells):
            if c == MISSING_TOKEN:
                rows[r, j] = MISSING
            else:
                try:
                    rows[r, j] = lookup[j][c]
                except KeyError:
                    raise ParseError(f"undeclared value {c!r} for {names[j]!r}", lineno) from None
    schema = []
    for j, (name, vals) in enumerate(zip(names, declared)):
        if not vals:
            raise ParseError(f"attribute {name!r} has only missing cells")
        schema.append(AttributeSchema(name, tuple(vals), j))
    class_index = n - 1 if class_attr is None else list(names).index(class_attr)
    if np.any(rows[:, class_index] == MISSING):
        bad = int(np.flatnonzero(rows[:, class_index] == MISSING)[0])
        raise ParseError("class value is missing", records[bad][0])
    pos = 0
    if positive is not None:
        pos = list(declared[class_index]).index(positive)
    return Dataset(tuple(schema), rows, class_index, pos, relation)


def _parse_csv(text: str) -> tuple[list[str], list[tuple[int, list[str]]]]:
    reader = csv.reader(io.StringIO(text))
    header = None
    records = []
    for lineno, cells in enumerate(reader, start=1):
        if not cells or all(not c.strip() for c in cells):
            continue
        cells = [c.strip() for c in cells]
        if header is None:
            header = cells
            continue
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(cells)}", lineno)
        if any(c == "" for c in cells):
            raise ParseError("empty field", lineno)
        records.append((lineno, cells))
    if header is None:
        raise EmptyDatasetError("input is empty")
    return header, records


_ATTR_RE = re.compile(r"""^@attribute\s+('[^']*'|"[^"]*"|\S+)\s+(.*)$""", re.IGNORECASE)


def _unquote(s: str) -> str:
    s = s.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "'\"":
        return s[1:-1]
    return s


def _parse_arff(text: str):
    relation = "data"
    names: list[str] = []
    declared: list[list[str]] = []
    records = []
    in_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            if line.startswith("{"):
                raise UnsupportedFeatureError("sparse ARFF data is not supported")
            cells = [_unquote(c) for c in next(csv.reader([line], skipinitialspace=True))]
            if len(cells) != len(names):
                raise ParseError(f"expected {len(names)} fields, got {len(cells)}", lineno)
            records.append((lineno, cells))
            continue
        keyword = line.split(None, 1)[0].lower()
        if keyword == "@relation":
            parts = line.split(None, 1)
            relation = _unquote(parts[1]) if len(parts) > 1 else relation
        elif keyword == "@attribute":
            m = _ATTR_RE.match(line)
            if m is None:
                raise ParseError("malformed @attribute line", lineno)
            kind = m.group(2).strip()
            if not (kind.startswith("{") and kind.endswith("}")):
                raise UnsupportedFeatureError(
                    f"attribute {_unquote(m.group(1))!r}: only nominal attributes are supported")
            vals = [_unquote(v) for v in next(csv.reader([kind[1:-1]], skipinitialspace=True))]
            names.append(_unquote(m.group(1)))
            declared.append(vals)
        elif keyword == "@data":
            in_data = True
        else:
            raise UnsupportedFeatureError(f"unsupported ARFF section {keyword!r} (line {lineno})")
    if not names:
        raise EmptyDatasetError("no attribute declarations")
    return relation, names, declared, records


def parse_table(source: bytes | BinaryIO | str | os.PathLike, format: str = "csv",
                class_attr: str | None = None, positive: str | None = None) -> Dataset:
    """Parse a CSV or nominal-ARFF table.

    ``source`` may be raw bytes, a binary stream or a path. The class defaults
    to the last column and the positive class to its first value.
    """
    text = _read_text(source)
    if not text.strip():
        raise EmptyDatasetError("input is empty")
    fmt = format.lower()
    if fmt == "csv":
        names, records = _parse_csv(text)
        declared, relation = None, "data"
    elif fmt in ("arff", "arff-subset"):
        relation, names, declared, records = _parse_arff(text)
    else:
        raise UnsupportedFeatureError(f"unknown format {format!r}")
    if class_attr is not None and class_attr not in names:
        raise DatasetError(f"class attribute {class_attr!r} not in header")
    if len(set(names)) != len(names):
        raise ParseError("duplicate attribute names")
    try:
        return _build(names, declared, records, class_attr, positive, relation)
    except ValueError as e:
        if isinstance(e, DatasetError):
            raise
        raise DatasetError(f"positive class {positive!r} not among class values") from None


def load_table(path: str | os.PathLike, class_attr: str | None = None,
               positive: str | None = None) -> Dataset:
    fmt = "arff" if str(path).lower().endswith(".arff") else "csv"
    return parse_table(path, fmt, class_attr, positive)


def to_csv(d: Dataset) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([a.name for a in d.schema])
    for row in d.rows:
        writer.writerow([MISSING_TOKEN if v == MISSING else a.values[v]
                         for a, v in zip(d.schema, row)])
    return out.getvalue()


# --------------------------------------------------------------------------
# projection, folds, encoding

def project(d: Dataset, predictors: Iterable[int]) -> Dataset:
    """Keep only ``predictors`` plus the class.

    Predictors come out in ascending original order, class last, so equal
    index sets always produce identical datasets.
    """
    chosen = list(predictors)
    if len(set(chosen)) != len(chosen):
        raise ValueError("duplicate predictor indices")
    for i in chosen:
        if i == d.class_index:
            raise ValueError("the class attribute cannot be projected as a predictor")
        if not 0 <= i < len(d.schema):
            raise ValueError(f"attribute index {i} out of range")
    keep = sorted(chosen) + [d.class_index]
    schema = tuple(AttributeSchema(d.schema[j].name, d.schema[j].values, new)
                   for new, j in enumerate(keep))
    return Dataset(schema, d.rows[:, keep], len(keep) - 1, d.positive_class, d.relation)


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    n_folds: int
    labels: np.ndarray

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int32, copy=True)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """(train row indices, test row indices) for one fold."""
        test = self.labels == fold
        return np.flatnonzero(~test), np.flatnonzero(test)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_folds)


def stratified_folds(d: Dataset, n_folds: int, seed: int) -> FoldAssignment:
    """Shuffle each class, then deal its rows round-robin into the folds.

    The dealing position carries over from one class to the next, which keeps
    fold sizes within one of each other.
    """
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    if n_folds > d.n_rows:
        raise ValueError(f"{n_folds} folds requested for {d.n_rows} rows")
    rng = np.random.default_rng(seed)
    labels = np.empty(d.n_rows, dtype=np.int32)
    y = d.y
    offset = 0
    for c in range(d.n_classes):
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(len(members))]
        labels[members] = (offset + np.arange(len(members))) % n_folds
        offset = (offset + len(members)) % n_folds
    return FoldAssignment(n_folds, labels)


@dataclass(frozen=True, eq=False)
class EncodedMatrix:
    rows: np.ndarray
    labels: np.ndarray
    column_map: dict = field(default_factory=dict)

    @property
    def n_columns(self) -> int:
        return self.rows.shape[1]


def encode_predictors(schema: Sequence[AttributeSchema], predictors: Sequence[int],
                      rows: np.ndarray) -> np.ndarray:
    """One-hot expand the predictor columns of ``rows``; missing -> zero block."""
    rows = np.asarray(rows)
    width = sum(schema[p].arity for p in predictors)
    out = np.zeros((rows.shape[0], width))
    start = 0
    for p in predictors:
        col = rows[:, p]
        hit = (col >= 0) & (col < schema[p].arity)
        out[np.flatnonzero(hit), start + col[hit]] = 1.0
        start += schema[p].arity
    return out


def one_hot_encode(d: Dataset) -> EncodedMatrix:
    if d.n_classes != 2:
        raise UnsupportedFeatureError("one-hot encoding needs a binary class")
    preds = d.predictors
    column_map = {}
    col = 0
    for p in preds:
        for v in range(d.schema[p].arity):
            column_map[(p, v)] = col
            col += 1
    x = encode_predictors(d.schema, preds, d.rows)
    labels = np.where(d.y == d.positive_class, 1, -1)
    return EncodedMatrix(x, labels, column_map)


# --------------------------------------------------------------------------
# synthetic student survey

STUDENT_ATTRIBUTES: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("SEX", ("male", "female")),
    ("ESight", ("normal", "defective")),
    ("Comm", ("OC", "BC", "MBC", "SC", "ST")),
    ("PHD", ("no", "yes")),
    ("FHBT", ("veg", "nonveg")),
    ("FAM-Size", ("small", "medium", "large")),
    ("LArea", ("rural", "town", "urban")),
    ("No-EB", ("0", "1", "2", "3+")),
    ("No-ES", ("0", "1", "2", "3+")),
    ("No-YB", ("0", "1", "2", "3+")),
    ("No-YS", ("0", "1", "2", "3+")),
    ("JIFamily", ("joint", "individual")),
    ("TransSchool", ("walk", "cycle", "bus", "private")),
    ("Veh-Home", ("none", "cycle", "twowheeler", "car")),
    ("PSEdu", ("yes", "no")),
    ("ESEdu", ("government", "aided", "private")),
    ("StMe", ("state", "matriculation", "cbse", "anglo-indian")),
    ("XMark-Grade", ("distinction", "first", "second", "third")),
    ("TYP-SCH", ("boys", "girls", "coed")),
    ("LOC-SCH", ("rural", "urban")),
    ("MED", ("tamil", "english")),
    ("PTution", ("0", "1", "2", "3", "4+")),
    ("SPerson", ("yes", "no")),
    ("SpIndoor", ("none", "chess", "carrom", "other")),
    ("SpOutdoor", ("none", "cricket", "kabaddi", "volleyball", "other")),
    ("Cstudy", ("none", "parents", "siblings", "tutor")),
    ("FEDU", ("illiterate", "elementary", "secondary", "hsc", "degree", "pg")),
    ("FOCC", ("agriculture", "labour", "business", "private", "government", "none")),
    ("FSAL", ("low", "lower-middle", "middle", "high")),
    ("MEDU", ("illiterate", "elementary", "secondary", "hsc", "degree", "pg")),
    ("MOCC", ("housewife", "agriculture", "labour", "business", "employed")),
    ("MSAL", ("none", "low", "middle", "high")),
)
CLASS_ATTRIBUTE = ("HSCGrade", ("pass", "fail"))

# 1-based attribute numbers, in the order they are planted as informative.
INFORMATIVE_ORDER = (18, 17, 28, 21, 20, 13, 1, 7, 19, 27, 32, 22)


@dataclass(frozen=True)
class SyntheticConfig:
    n_rows: int = 1969
    n_informative: int = 7
    signal: float = 0.3
    pass_rate: float = 0.8
    seed: int = 42
    taper: float = 0.5

    def __post_init__(self):
        if self.n_rows < 1:
            raise ValueError("n_rows must be positive")
        if not 0 <= self.n_informative <= len(STUDENT_ATTRIBUTES):
            raise ValueError(f"n_informative must be in [0, {len(STUDENT_ATTRIBUTES)}]")
        if not 0.0 <= self.signal <= 1.0:
            raise ValueError("signal must be in [0, 1]")
        if not 0.0 < self.pass_rate < 1.0:
            raise ValueError("pass_rate must be in (0, 1)")
        if not 0.0 <= self.taper <= 1.0:
            raise ValueError("taper must be in [0, 1]")

    def strengths(self) -> list[float]:
        """Signal of each planted attribute, tapering linearly in planting order."""
        n = self.n_informative
        if n <= 1:
            return [self.signal] * n
        return [self.signal * (1.0 - self.taper * i / (n - 1)) for i in range(n)]


def informative_attributes(n_informative: int) -> list[int]:
    """0-based indices of the attributes planted as informative."""
    order = [n - 1 for n in INFORMATIVE_ORDER]
    order += [i for i in range(len(STUDENT_ATTRIBUTES)) if i not in order]
    return order[:n_informative]


def student_schema() -> tuple[AttributeSchema, ...]:
    attrs = STUDENT_ATTRIBUTES + (CLASS_ATTRIBUTE,)
    return tuple(AttributeSchema(name, vals, i) for i, (name, vals) in enumerate(attrs))


def generate_synthetic(cfg: SyntheticConfig) -> Dataset:
    """Sample a student-survey-shaped dataset.

    Every predictor has a base distribution drawn from a flat Dirichlet.
    Informative predictors mix that base with a point mass on a class-specific
    mode: ``(1 - s) * base + s * onehot(mode_c)``. The two class modes differ,
    so the class-conditionals are ``s`` apart in total variation. ``s`` is
    ``signal`` for the first planted attribute and falls linearly to
    ``signal * (1 - taper)`` for the last; ``taper=0`` plants equal strengths.
    """
    rng = np.random.default_rng(cfg.seed)
    schema = student_schema()
    n = cfg.n_rows
    y = (rng.random(n) >= cfg.pass_rate).astype(np.int32)  # 0 = pass, 1 = fail
    strength = dict(zip(informative_attributes(cfg.n_informative), cfg.strengths()))
    rows = np.empty((n, len(schema)), dtype=np.int32)
    rows[:, -1] = y
    for a in schema[:-1]:
        base = rng.dirichlet(np.ones(a.arity))
        modes = rng.choice(a.arity, size=2, replace=False)
        u = rng.random(n)
        if a.index in strength:
            sig = strength[a.index]
            cols = np.empty(n, dtype=np.int32)
            for c in (0, 1):
                p = (1.0 - sig) * base
                p[modes[c]] += sig
                mask = y == c
                cols[mask] = _inverse_cdf(p, u[mask])
        else:
            cols = _inverse_cdf(base, u)
        rows[:, a.index] = cols
    return Dataset(schema, rows, len(schema) - 1, 0, "hsc-students")


def _inverse_cdf(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, u, side="right").astype(np.int32)
