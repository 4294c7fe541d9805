"""Scenario orchestration: initial data, runs, bootstrap checks, thresholds, sweeps."""

from ..diagnostics import COLUMNS, DiagnosticsRecord
from .bootstrap import BootstrapReport, PairCheck, bootstrap_monitor
from .config import RunConfig, load_run_config, read_config, validate
from .initial import SeededRandom, SingleMode, make_initial_data, probe_field
from .scenario import ScenarioResult, bootstrap_lambda, run_scenario, tail_fit
from .sweep_map import SweepRow, monotonicity_violations, sweep, sweep_csv, write_sweep
from .thresholds import ThresholdInputs, ThresholdReport, threshold_report

__all__ = [
    "COLUMNS", "DiagnosticsRecord", "BootstrapReport", "PairCheck", "bootstrap_monitor",
    "RunConfig", "load_run_config", "read_config", "validate", "SeededRandom", "SingleMode",
    "make_initial_data", "probe_field", "ScenarioResult", "bootstrap_lambda", "run_scenario",
    "tail_fit", "SweepRow", "monotonicity_violations", "sweep", "sweep_csv", "write_sweep",
    "ThresholdInputs", "ThresholdReport", "threshold_report",
]
