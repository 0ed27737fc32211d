"""Simulation campaigns, CSV input/output and figures."""

from .config import ExperimentConfig, load_config, parse_estimator
from .csvio import CsvParseError, ingest_csv, read_edges, write_edges
from .experiment import CampaignResult, run_experiment, run_replicate
from .plots import emit_plots

__all__ = [
    "ExperimentConfig", "load_config", "parse_estimator", "CsvParseError", "ingest_csv",
    "read_edges", "write_edges", "CampaignResult", "run_experiment", "run_replicate",
    "emit_plots",
]
