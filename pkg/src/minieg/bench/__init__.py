"""Benchmark harness: experiment specs, runners, and exporters."""

from .export import (
    RANK_CSV_HEADER,
    SWEEP_CSV_HEADER,
    TRIAL_CSV_HEADER,
    load_results_schema,
    render_table,
    result_to_jsonable,
    sweep_to_jsonable,
    trial_csv_lines,
    write_rank_csv,
    write_result_json,
    write_sweep_csv,
    write_sweep_json,
    write_trials_csv,
)
from .runner import (
    AffineSource,
    ExperimentResult,
    ExperimentSpec,
    FixedProblemSource,
    InstanceFileSource,
    LibsvmSource,
    MethodAggregate,
    RankPoint,
    SweepResult,
    SyntheticCSSource,
    TrialRow,
    rank_trace,
    run_experiment,
    sweep_rho,
)

__all__ = [
    "AffineSource",
    "ExperimentResult",
    "ExperimentSpec",
    "FixedProblemSource",
    "InstanceFileSource",
    "LibsvmSource",
    "MethodAggregate",
    "RankPoint",
    "SweepResult",
    "SyntheticCSSource",
    "TrialRow",
    "rank_trace",
    "run_experiment",
    "sweep_rho",
    "RANK_CSV_HEADER",
    "SWEEP_CSV_HEADER",
    "TRIAL_CSV_HEADER",
    "load_results_schema",
    "render_table",
    "result_to_jsonable",
    "sweep_to_jsonable",
    "trial_csv_lines",
    "write_rank_csv",
    "write_result_json",
    "write_sweep_csv",
    "write_sweep_json",
    "write_trials_csv",
]
