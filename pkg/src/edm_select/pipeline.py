"""Rank -> top-k sweep under naive Bayes -> peak detection -> four-classifier benchmark."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .classifiers import CLASSIFIERS, make_learner, nb_train
from .dataset import Dataset, FoldAssignment, project
from .evaluation import MetricBundle, cross_validate
from .filters import METHODS, Ranking, rank_attributes

log = logging.getLogger(__name__)

METRICS = ("roc", "macro_f1")
_METRIC_FIELD = {"roc": "roc_value", "macro_f1": "macro_f1"}


@dataclass(frozen=True)
class SubsetEvaluation:
    method: str
    k: int
    attributes: tuple[int, ...]
    metrics: MetricBundle
    skipped_folds: tuple[int, ...] = ()


@dataclass(frozen=True)
class PeakResult:
    method: str
    metric: str
    k: int
    value: float


@dataclass(frozen=True)
class NamedSubset:
    name: str
    method: str
    k: int
    attributes: tuple[int, ...]


@dataclass(frozen=True)
class GridCell:
    classifier: str
    subset: str
    k: int
    metrics: MetricBundle | None
    status: str = "ok"  # ok | skipped-folds | failed
    reason: str = ""


@dataclass
class BenchmarkReport:
    subsets: list[NamedSubset]
    grid: list[GridCell]
    curves: dict[str, list[SubsetEvaluation]] = field(default_factory=dict)
    peaks: list[PeakResult] = field(default_factory=list)
    rankings: dict[str, Ranking] = field(default_factory=dict)

    @property
    def incomplete(self) -> bool:
        """True when some cell failed or some fold was skipped."""
        if any(c.status != "ok" for c in self.grid):
            return True
        return any(e.skipped_folds for evals in self.curves.values() for e in evals)


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _evaluate_k(k: int, d: Dataset, ranking: Ranking, folds: FoldAssignment,
                learner) -> SubsetEvaluation:
    attrs = tuple(ranking.top(k))
    res = cross_validate(project(d, attrs), learner, folds)
    return SubsetEvaluation(ranking.method, k, attrs, res.metrics, res.skipped_folds)


def sweep(d: Dataset, ranking: Ranking, folds: FoldAssignment, k_min: int = 2,
          k_max: int | None = None, learner=nb_train, jobs: int = 1) -> list[SubsetEvaluation]:
    """Cross-validate the top-k prefix of ``ranking`` for k = k_min..k_max."""
    n = len(d.predictors)
    if n < 2:
        raise ValueError("a sweep needs at least 2 predictors")
    if sorted(ranking.ordered) != sorted(d.predictors):
        raise ValueError("ranking does not cover the dataset's predictors")
    k_max = n if k_max is None else k_max
    if not 1 <= k_min <= k_max <= n:
        raise ValueError(f"invalid sweep range {k_min}..{k_max} for {n} predictors")
    fn = partial(_evaluate_k, d=d, ranking=ranking, folds=folds, learner=learner)
    return _map(fn, list(range(k_min, k_max + 1)), jobs)


def metric_value(e: SubsetEvaluation, metric: str) -> float | None:
    return getattr(e.metrics, _METRIC_FIELD[metric])


def find_peak(evals: Iterable[SubsetEvaluation], metric: str = "roc") -> PeakResult:
    """Maximum of ``metric`` over a sweep; the smallest k wins ties."""
    if metric not in _METRIC_FIELD:
        raise ValueError(f"unknown metric {metric!r}; valid: {', '.join(METRICS)}")
    scored = [(metric_value(e, metric), e.k, e.method) for e in evals]
    scored = [s for s in scored if s[0] is not None and not math.isnan(s[0])]
    if not scored:
        raise ValueError("no evaluations to take a peak over")
    value, k, method = min(scored, key=lambda s: (-s[0], s[1]))
    return PeakResult(method, metric, k, value)


def default_subsets(rankings: dict[str, Ranking], peaks: Sequence[PeakResult]) -> list[NamedSubset]:
    """ROC-peak then F1-peak subset of every method, dropping repeated attribute sets."""
    out: list[NamedSubset] = []
    seen: set[frozenset] = set()
    for metric in METRICS:
        for method in METHODS:
            for p in peaks:
                if p.method == method and p.metric == metric and method in rankings:
                    attrs = rankings[method].top(p.k)
                    if frozenset(attrs) in seen:
                        continue
                    seen.add(frozenset(attrs))
                    out.append(NamedSubset(f"{method}-{p.k}", method, p.k, tuple(attrs)))
    return out


def parse_subset_spec(spec: str) -> list[tuple[str, int]]:
    """``"IG:7,CB:9"`` -> ``[("IG", 7), ("CB", 9)]``."""
    out = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        method, sep, k = part.partition(":")
        if not sep:
            method, sep, k = part.partition("-")
        method = method.strip().upper()
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r} in subset {part!r}; valid: {', '.join(METHODS)}")
        try:
            k_int = int(k)
        except ValueError:
            raise ValueError(f"bad subset size in {part!r}") from None
        if k_int < 1:
            raise ValueError(f"subset size must be positive in {part!r}")
        out.append((method, k_int))
    if not out:
        raise ValueError("empty subset list")
    return out


def _benchmark_cell(cell: tuple[str, NamedSubset], d: Dataset, folds: FoldAssignment,
                    params: dict) -> GridCell:
    name, subset = cell
    try:
        res = cross_validate(project(d, subset.attributes), make_learner(name, params), folds)
    except (ValueError, ArithmeticError) as e:
        return GridCell(name, subset.name, subset.k, None, "failed", str(e))
    if res.skipped_folds:
        reason = "skipped folds " + ",".join(map(str, res.skipped_folds))
        return GridCell(name, subset.name, subset.k, res.metrics, "skipped-folds", reason)
    return GridCell(name, subset.name, subset.k, res.metrics)


def benchmark(d: Dataset, subsets: Sequence[NamedSubset], classifiers: Sequence[str],
              folds: FoldAssignment, params: dict | None = None, jobs: int = 1) -> BenchmarkReport:
    """Cross-validate every (classifier, subset) pair on the shared folds."""
    for c in classifiers:
        if c not in CLASSIFIERS:
            raise ValueError(f"unknown classifier {c!r}; valid: {', '.join(CLASSIFIERS)}")
    cells = [(c, s) for c in classifiers for s in subsets]
    fn = partial(_benchmark_cell, d=d, folds=folds, params=params or {})
    return BenchmarkReport(list(subsets), _map(fn, cells, jobs))


def run_experiment(d: Dataset, folds: FoldAssignment, methods: Sequence[str] = METHODS,
                   classifiers: Sequence[str] = CLASSIFIERS,
                   subsets: Sequence[tuple[str, int]] | None = None,
                   k_min: int = 2, k_max: int | None = None, params: dict | None = None,
                   jobs: int = 1, do_benchmark: bool = True) -> BenchmarkReport:
    """The whole experiment: rankings, sweeps, peaks, then the benchmark grid."""
    params = params or {}
    rankings = {}
    for m in methods:
        rankings[m] = rank_attributes(d, m, n_neighbors=params.get("relief_neighbors", 10),
                                      sample=params.get("relief_sample"),
                                      seed=params.get("relief_seed", 0))
    curves = {m: sweep(d, rankings[m], folds, k_min, k_max, jobs=jobs) for m in methods}
    peaks = [find_peak(curves[m], metric) for metric in METRICS for m in methods]
    if subsets is None:
        chosen = default_subsets(rankings, peaks)
    else:
        for m, _ in subsets:
            if m not in rankings:
                rankings[m] = rank_attributes(d, m, n_neighbors=params.get("relief_neighbors", 10),
                                              sample=params.get("relief_sample"),
                                              seed=params.get("relief_seed", 0))
        chosen = [NamedSubset(f"{m}-{k}", m, k, rankings[m].top(k)) for m, k in subsets]
    if do_benchmark:
        report = benchmark(d, chosen, classifiers, folds, params, jobs)
    else:
        report = BenchmarkReport(chosen, [])
    report.curves = curves
    report.peaks = peaks
    report.rankings = rankings
    return report


# --------------------------------------------------------------------------
# report files

def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return out.getvalue()


def curves_csv(curves: dict[str, list[SubsetEvaluation]]) -> str:
    rows = []
    for method in sorted(curves, key=_method_order):
        for e in curves[method]:
            m = e.metrics
            rows.append([method, e.k, _fmt(m.roc_value), _fmt(m.macro_f1), _fmt(m.accuracy), _fmt(m.rmse)])
    return _csv(["method", "k", "roc", "macro_f1", "accuracy", "rmse"], rows)


def peaks_csv(peaks: Sequence[PeakResult]) -> str:
    return _csv(["method", "metric", "k", "value"],
                [[p.method, p.metric, p.k, _fmt(p.value)] for p in peaks])


def grid_csv(grid: Sequence[GridCell]) -> str:
    rows = []
    for c in grid:
        m = c.metrics
        vals = [None] * 4 if m is None else [m.accuracy, m.rmse, m.roc_value, m.macro_f1]
        rows.append([c.classifier, c.subset, c.k, *map(_fmt, vals), c.status, c.reason])
    return _csv(["classifier", "subset", "k", "accuracy", "rmse", "roc", "macro_f1", "status", "reason"], rows)


def _method_order(m: str) -> int:
    return METHODS.index(m) if m in METHODS else len(METHODS)


def report_dict(r: BenchmarkReport, d: Dataset | None = None) -> dict:
    def names(attrs):
        return [d.schema[a].name for a in attrs] if d is not None else None

    return {
        "rankings": {
            m: {"ordered": list(rk.ordered), "names": names(rk.ordered),
                "merits": [round(x, 4) for x in rk.merits]}
            for m, rk in sorted(r.rankings.items(), key=lambda kv: _method_order(kv[0]))
        },
        "curves": {
            m: [{"k": e.k, "attributes": list(e.attributes), **e.metrics.as_dict(),
                 "skipped_folds": list(e.skipped_folds)} for e in evals]
            for m, evals in sorted(r.curves.items(), key=lambda kv: _method_order(kv[0]))
        },
        "peaks": [vars(p) for p in r.peaks],
        "subsets": [{"name": s.name, "method": s.method, "k": s.k,
                     "attributes": list(s.attributes), "names": names(s.attributes)}
                    for s in r.subsets],
        "grid": [{"classifier": c.classifier, "subset": c.subset, "k": c.k,
                  "metrics": None if c.metrics is None else c.metrics.as_dict(),
                  "status": c.status, "reason": c.reason} for c in r.grid],
    }


def _write(path: Path, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e


def emit_report(r: BenchmarkReport, out_dir: str | os.PathLike, run_config: dict | None = None,
                d: Dataset | None = None) -> list[Path]:
    """Write sweep_curves.csv, peaks.csv, benchmark_grid.csv, report.json, run_config.json."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create {out}: {e.strerror or e}") from e
    files = {
        "sweep_curves.csv": curves_csv(r.curves),
        "peaks.csv": peaks_csv(r.peaks),
        "benchmark_grid.csv": grid_csv(r.grid),
        "report.json": json.dumps(report_dict(r, d), indent=2, sort_keys=True) + "\n",
        "run_config.json": json.dumps(run_config or {}, indent=2, sort_keys=True) + "\n",
    }
    written = []
    for name, text in files.items():
        _write(out / name, text)
        written.append(out / name)
    return written
