"""Filter feature selection and classifier benchmarking for nominal survey data."""

from .dataset import Dataset, SyntheticConfig, generate_synthetic, load_table, parse_table, project
from .evaluation import MetricBundle, cross_validate
from .filters import METHODS, rank_attributes
from .pipeline import emit_report, run_experiment

__version__ = "0.1.0"

__all__ = [
    "Dataset", "SyntheticConfig", "generate_synthetic", "load_table", "parse_table", "project",
    "MetricBundle", "cross_validate", "METHODS", "rank_attributes", "emit_report", "run_experiment",
    "__version__",
]
