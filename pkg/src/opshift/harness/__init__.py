"""Configuration, instance generation, the check suite and reports."""

from .config import DEFAULT_TOLERANCES, MODES, ConfigError, ExperimentConfig, load_config
from .instances import Instance, counterexample_function, counterexample_path, generate_instance
from .report import REPORT_SCHEMA, ReportError, build_report, digest, emit_report, exit_code
from .suite import ALL_ANCHORS, CheckReport, SuiteResult, run_suite

__all__ = [
    "ALL_ANCHORS",
    "CheckReport",
    "ConfigError",
    "DEFAULT_TOLERANCES",
    "ExperimentConfig",
    "Instance",
    "MODES",
    "REPORT_SCHEMA",
    "ReportError",
    "SuiteResult",
    "build_report",
    "counterexample_function",
    "counterexample_path",
    "digest",
    "emit_report",
    "exit_code",
    "generate_instance",
    "load_config",
    "run_suite",
]
