"""Command-line runner: generate, rank, sweep, peaks, benchmark, report.

Settings come from built-in defaults, then an optional ``--config`` file
(flat ``key=value`` lines or a ``run_config.json`` from an earlier run),
then command-line flags. Everything is validated before any work starts.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure,
3 finished but some folds or grid cells were skipped.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import CLASSIFIERS, make_learner
from .classifiers import naive_bayes, oner, part, voted_perceptron
from .dataset import (
    DatasetError,
    SyntheticConfig,
    generate_synthetic,
    load_table,
    project,
    stratified_folds,
    to_csv,
)
from .filters import METHODS, rank_attributes, ranking_csv
from .pipeline import (
    METRICS,
    NamedSubset,
    benchmark,
    curves_csv,
    emit_report,
    find_peak,
    grid_csv,
    parse_subset_spec,
    peaks_csv,
    run_experiment,
    sweep,
)

log = logging.getLogger("edm_select")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_INCOMPLETE = 0, 1, 2, 3

DEFAULTS = {
    "input": None,
    "class_attr": None,
    "positive": None,
    "rows": 1969,
    "informative": 7,
    "signal": SyntheticConfig.signal,
    "pass_rate": SyntheticConfig.pass_rate,
    "taper": SyntheticConfig.taper,
    "data_seed": 42,
    "methods": list(METHODS),
    "classifiers": list(CLASSIFIERS),
    "folds": 10,
    "seed": 42,
    "k_min": 2,
    "k_max": None,
    "subsets": None,
    "vp_epochs": 10,
    "vp_seed": 0,
    "part_min_leaf": 2,
    "part_cf": 0.25,
    "relief_neighbors": 10,
    "relief_sample": None,
    "relief_seed": 0,
}

_INT_KEYS = {"rows", "informative", "data_seed", "folds", "seed", "k_min", "k_max", "vp_epochs",
             "vp_seed", "part_min_leaf", "relief_neighbors", "relief_sample", "relief_seed"}
_FLOAT_KEYS = {"signal", "pass_rate", "taper", "part_cf"}
_OPTIONAL_KEYS = {"input", "class_attr", "positive", "k_max", "subsets", "relief_sample"}
# present in run_config.json for the record, not settings
_RECORD_KEYS = {"command", "versions", "input_sha256"}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# configuration

def read_config_file(path: str) -> dict:
    """Settings from a JSON run_config or a flat key=value file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror or e}") from None
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from None
        return {k: v for k, v in raw.items() if k not in _RECORD_KEYS or k == "input_sha256"}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _split_list(value) -> list[str]:
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return [str(v) for v in value]


def _coerce(key: str, value):
    if value is None or (key in _OPTIONAL_KEYS and isinstance(value, str)
                         and value.lower() in ("", "none", "null")):
        return None
    try:
        if key in _INT_KEYS:
            if isinstance(value, float) or isinstance(value, bool):
                raise ValueError
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except (TypeError, ValueError):
        kind = "an integer" if key in _INT_KEYS else "a number"
        raise ConfigError(f"{key} must be {kind}, got {value!r}") from None
    if key == "methods":
        names = [v.upper() for v in _split_list(value)]
        if names == ["ALL"]:
            return list(METHODS)
        bad = [n for n in names if n not in METHODS]
        if bad or not names:
            raise ConfigError(f"unknown method {', '.join(bad) or '(none)'}; valid: {', '.join(METHODS)}")
        return names
    if key == "classifiers":
        names = _split_list(value)
        if [n.lower() for n in names] == ["all"]:
            return list(CLASSIFIERS)
        lookup = {c.lower(): c for c in CLASSIFIERS}
        bad = [n for n in names if n.lower() not in lookup]
        if bad or not names:
            raise ConfigError(f"unknown classifier {', '.join(bad) or '(none)'}; "
                              f"valid: {', '.join(CLASSIFIERS)}")
        return [lookup[n.lower()] for n in names]
    if key == "subsets":
        spec = value if isinstance(value, str) else ",".join(value)
        try:
            return ",".join(f"{m}:{k}" for m, k in parse_subset_spec(spec))
        except ValueError as e:
            raise ConfigError(str(e)) from None
    return str(value)


def resolve_config(file_values: dict, flag_values: dict) -> dict:
    """Defaults, overridden by the config file, overridden by flags; all coerced."""
    merged = dict(DEFAULTS)
    for source in (file_values, flag_values):
        for key, value in source.items():
            if key == "input_sha256":
                continue
            if key not in DEFAULTS:
                raise ConfigError(f"unknown setting {key!r}")
            merged[key] = value
    cfg = {key: _coerce(key, value) for key, value in merged.items()}
    _check_ranges(cfg)
    return cfg


def _check_ranges(cfg: dict):
    checks = [
        (cfg["folds"] >= 2, "folds must be at least 2"),
        (cfg["k_min"] >= 1, "k_min must be at least 1"),
        (cfg["k_max"] is None or cfg["k_max"] >= cfg["k_min"], "k_max must not be below k_min"),
        (cfg["vp_epochs"] >= 0, "vp_epochs must be non-negative"),
        (cfg["part_min_leaf"] >= 1, "part_min_leaf must be at least 1"),
        (0.0 < cfg["part_cf"] <= 0.5, "part_cf must be in (0, 0.5]"),
        (cfg["relief_neighbors"] >= 1, "relief_neighbors must be at least 1"),
        (cfg["relief_sample"] is None or cfg["relief_sample"] >= 1, "relief_sample must be at least 1"),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)
    if cfg["input"] is None:
        _synthetic_config(cfg)


def _synthetic_config(cfg: dict) -> SyntheticConfig:
    try:
        return SyntheticConfig(cfg["rows"], cfg["informative"], cfg["signal"],
                               cfg["pass_rate"], cfg["data_seed"], cfg["taper"])
    except ValueError as e:
        raise ConfigError(str(e)) from None


def load_dataset(cfg: dict):
    """Dataset named by the config, with class and positive label applied."""
    if cfg["input"] is None:
        d = generate_synthetic(_synthetic_config(cfg))
    else:
        path = Path(cfg["input"])
        if not path.is_file():
            raise ConfigError(f"input file not found: {path}")
        d = load_table(path)
    try:
        return d.with_class(cfg["class_attr"], cfg["positive"])
    except KeyError:
        if cfg["class_attr"] is not None and cfg["class_attr"] not in [a.name for a in d.schema]:
            raise ConfigError(f"class attribute {cfg['class_attr']!r} not in the data") from None
        raise ConfigError(f"positive class {cfg['positive']!r} is not a value of the class attribute") from None


def check_against_data(cfg: dict, d, command: str):
    n_pred = len(d.predictors)
    if cfg["folds"] > d.n_rows:
        raise ConfigError(f"{cfg['folds']} folds requested for {d.n_rows} rows")
    if command in ("sweep", "peaks", "report") or (command == "benchmark" and cfg["subsets"] is None):
        if n_pred < 2:
            raise ConfigError("a sweep needs at least 2 predictors")
        if cfg["k_max"] is not None and cfg["k_max"] > n_pred:
            raise ConfigError(f"k_max {cfg['k_max']} exceeds the {n_pred} predictors")
        if cfg["k_min"] > n_pred:
            raise ConfigError(f"k_min {cfg['k_min']} exceeds the {n_pred} predictors")
    if cfg["subsets"] is not None:
        for method, k in parse_subset_spec(cfg["subsets"]):
            if k > n_pred:
                raise ConfigError(f"subset {method}:{k} asks for more than the {n_pred} predictors")
    if command in ("benchmark", "report") and "VP" in cfg["classifiers"] and d.n_classes != 2:
        raise ConfigError("the voted perceptron needs a two-valued class attribute")


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_config_record(cfg: dict, command: str) -> dict:
    record = dict(cfg)
    record["command"] = command
    record["versions"] = {"edm_select": __version__, "numpy": np.__version__,
                          "python": platform.python_version()}
    if cfg["input"] is not None:
        record["input_sha256"] = _sha256(cfg["input"])
    return record


def _params(cfg: dict) -> dict:
    keys = ("vp_epochs", "vp_seed", "part_min_leaf", "part_cf",
            "relief_neighbors", "relief_sample", "relief_seed")
    return {k: cfg[k] for k in keys}


# --------------------------------------------------------------------------
# argument parsing

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("input", nargs="?", help="CSV or ARFF file; synthetic data when omitted")
    p.add_argument("--config", help="key=value file or run_config.json from an earlier run")
    p.add_argument("-o", "--out", default="edm_select_out", help="output directory")
    p.add_argument("--class-attr", dest="class_attr")
    p.add_argument("--positive", help="class label scored as positive for the ROC value")
    p.add_argument("--methods", "--method", dest="methods",
                   help="comma-separated subset of CB,CH,GR,IG,RF,SU, or 'all'")
    p.add_argument("--folds")
    p.add_argument("--seed", help="fold assignment seed")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: $EDM_SELECT_JOBS or 1)")
    p.add_argument("--relief-neighbors", dest="relief_neighbors")
    p.add_argument("--relief-sample", dest="relief_sample")
    p.add_argument("--relief-seed", dest="relief_seed")
    g = p.add_argument_group("synthetic input")
    g.add_argument("--rows")
    g.add_argument("--informative")
    g.add_argument("--signal")
    g.add_argument("--pass-rate", dest="pass_rate")
    g.add_argument("--taper", help="fraction by which the last planted attribute's signal is reduced")
    g.add_argument("--data-seed", dest="data_seed")


def _add_sweep_range(p):
    p.add_argument("--k-min", dest="k_min")
    p.add_argument("--k-max", dest="k_max")


def _add_benchmark(p):
    p.add_argument("--classifiers", help="comma-separated subset of NB,VP,OneR,PART, or 'all'")
    p.add_argument("--subsets", help='subsets to benchmark, e.g. "IG:7,CB:9"')
    p.add_argument("--vp-epochs", dest="vp_epochs")
    p.add_argument("--vp-seed", dest="vp_seed")
    p.add_argument("--part-min-leaf", dest="part_min_leaf")
    p.add_argument("--part-cf", dest="part_cf")
    p.add_argument("--dump-models", action="store_true", default=None,
                   help="also write each benchmark model trained on all rows")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="edm-select", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic student dataset as CSV")
    g.add_argument("-o", "--out", required=True, help="output CSV path")
    g.add_argument("--rows", type=int, default=1969)
    g.add_argument("--informative", type=int, default=7)
    g.add_argument("--signal", type=float, default=SyntheticConfig.signal)
    g.add_argument("--pass-rate", type=float, default=SyntheticConfig.pass_rate)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--taper", type=float, default=SyntheticConfig.taper)

    r = sub.add_parser("rank", help="rank attributes with each filter method")
    _add_common(r)

    s = sub.add_parser("sweep", help="naive Bayes sweep over top-k subsets")
    _add_common(s)
    _add_sweep_range(s)

    pk = sub.add_parser("peaks", help="sweep, then report the peak of each curve")
    _add_common(pk)
    _add_sweep_range(pk)

    b = sub.add_parser("benchmark", help="cross-validate classifiers on chosen subsets")
    _add_common(b)
    _add_sweep_range(b)
    _add_benchmark(b)

    rep = sub.add_parser("report", help="run everything and write the full report")
    _add_common(rep)
    _add_sweep_range(rep)
    _add_benchmark(rep)
    return parser


_NOT_SETTINGS = {"command", "verbose", "config", "out", "jobs", "dump_models"}


def _flag_values(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in _NOT_SETTINGS and v is not None}


def _jobs(args) -> int:
    if args.jobs is not None:
        jobs = args.jobs
    else:
        env = os.environ.get("EDM_SELECT_JOBS", "1")
        try:
            jobs = int(env)
        except ValueError:
            raise ConfigError(f"EDM_SELECT_JOBS must be an integer, got {env!r}") from None
    if jobs < 1:
        raise ConfigError("jobs must be at least 1")
    return jobs


# --------------------------------------------------------------------------
# commands

def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_generate(args) -> int:
    try:
        cfg = SyntheticConfig(args.rows, args.informative, args.signal, args.pass_rate, args.seed,
                              args.taper)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    d = generate_synthetic(cfg)
    _write_text(Path(args.out), to_csv(d))
    counts = d.class_counts()
    balance = ", ".join(f"{v}={n}" for v, n in zip(d.class_attribute.values, counts))
    print(f"wrote {args.out}: {d.n_rows} rows, {len(d.schema)} columns; "
          f"{d.class_attribute.name}: {balance}")
    return EXIT_OK


def _rankings(d, cfg):
    out = {}
    for m in cfg["methods"]:
        log.info("ranking with %s", m)
        out[m] = rank_attributes(d, m, n_neighbors=cfg["relief_neighbors"],
                                 sample=cfg["relief_sample"], seed=cfg["relief_seed"])
    return out


def _sweeps(d, rankings, folds, cfg, jobs):
    curves = {}
    for m, ranking in rankings.items():
        log.info("sweeping %s", m)
        curves[m] = sweep(d, ranking, folds, cfg["k_min"], cfg["k_max"], jobs=jobs)
    return curves


def _dump_models(d, subsets, classifiers, params, out: Path):
    describers = {
        "NB": naive_bayes.describe, "OneR": oner.describe, "PART": part.describe,
    }
    for c in classifiers:
        for s in subsets:
            sub = project(d, s.attributes)
            model = make_learner(c, params)(sub)
            text = voted_perceptron.describe(model) if c == "VP" else describers[c](model, sub)
            _write_text(out / "models" / f"{c}_{s.name}.txt", text + "\n")


def run_command(command: str, cfg: dict, out: Path, jobs: int, dump_models: bool = False) -> int:
    d = load_dataset(cfg)
    check_against_data(cfg, d, command)
    record = run_config_record(cfg, command)
    folds = stratified_folds(d, cfg["folds"], cfg["seed"])
    incomplete = False

    if command == "rank":
        for m, ranking in _rankings(d, cfg).items():
            _write_text(out / f"ranking_{m}.csv", ranking_csv(ranking, d))
    elif command in ("sweep", "peaks"):
        curves = _sweeps(d, _rankings(d, cfg), folds, cfg, jobs)
        _write_text(out / "sweep_curves.csv", curves_csv(curves))
        if command == "peaks":
            peaks = [find_peak(curves[m], metric) for metric in METRICS for m in curves]
            _write_text(out / "peaks.csv", peaks_csv(peaks))
        incomplete = any(e.skipped_folds for evals in curves.values() for e in evals)
    elif command in ("benchmark", "report"):
        subsets = None if cfg["subsets"] is None else parse_subset_spec(cfg["subsets"])
        if command == "report" or subsets is None:
            report = run_experiment(d, folds, cfg["methods"], cfg["classifiers"], subsets,
                                    cfg["k_min"], cfg["k_max"], _params(cfg), jobs)
        else:
            ranks = _rankings_for(d, cfg, subsets)
            chosen = [NamedSubset(f"{m}-{k}", m, k, ranks[m].top(k)) for m, k in subsets]
            report = benchmark(d, chosen, cfg["classifiers"], folds, _params(cfg), jobs)
        if command == "report":
            emit_report(report, out, record, d)
        else:
            _write_text(out / "benchmark_grid.csv", grid_csv(report.grid))
        if dump_models:
            _dump_models(d, report.subsets, cfg["classifiers"], _params(cfg), out)
        incomplete = report.incomplete
    if command != "report":
        _write_text(out / "run_config.json", json.dumps(record, indent=2, sort_keys=True) + "\n")
    print(f"{command}: wrote results to {out}")
    if incomplete:
        print(f"{command}: some folds or grid cells were skipped; see the outputs", file=sys.stderr)
        return EXIT_INCOMPLETE
    return EXIT_OK


def _rankings_for(d, cfg, subsets):
    methods = sorted({m for m, _ in subsets}, key=METHODS.index)
    return _rankings(d, {**cfg, "methods": methods})


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "generate":
            return cmd_generate(args)
        file_values = read_config_file(args.config) if args.config else {}
        cfg = resolve_config(file_values, _flag_values(args))
        expected = file_values.get("input_sha256")
        if expected and cfg["input"] and Path(cfg["input"]).is_file() and _sha256(cfg["input"]) != expected:
            log.warning("input %s differs from the file recorded in %s", cfg["input"], args.config)
        jobs = _jobs(args)
        return run_command(args.command, cfg, Path(args.out), jobs, bool(getattr(args, "dump_models", False)))
    except ConfigError as e:
        print(f"edm-select: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, OSError, ValueError, ArithmeticError) as e:
        print(f"edm-select: failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
