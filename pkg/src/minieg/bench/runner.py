"""Experiment harness: problem sources, trial loops, aggregation.

An :class:`ExperimentSpec` pins everything that defines a benchmark run:
where problem instances come from, which solvers compete, the shared solver
configuration, how many trials to run and how iterates are initialized.
Running it produces per-trial rows plus per-method aggregates; trials are
paired (every method sees the same instance and start point within a trial)
and sequential, and all seeds are derived as ``base + trial_index`` so the
whole run is reproducible from the spec alone.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Protocol

import numpy as np

from ..core import ConfigurationError, MonotoneMapping, STREAM_X0, seeded_generator
from ..problems import (
    CSProblem,
    build_cs_instance,
    load_instance,
    load_libsvm,
    random_spd_affine,
    skew_rotation_problem,
)
from ..problems.logreg import LogRegProblem
from ..solvers import (
    METHOD_IDS,
    RunStatus,
    SolverConfig,
    TraceLevel,
    method_display_name,
    run_solver,
)

__all__ = [
    "ProblemSource",
    "SyntheticCSSource",
    "AffineSource",
    "LibsvmSource",
    "InstanceFileSource",
    "FixedProblemSource",
    "ExperimentSpec",
    "TrialRow",
    "MethodAggregate",
    "ExperimentResult",
    "run_experiment",
    "SweepResult",
    "sweep_rho",
    "RankPoint",
    "rank_trace",
]


class ProblemSource(Protocol):
    """Anything that can produce problem instances for a benchmark."""

    fresh_per_trial: bool

    def build(self, seed: int) -> MonotoneMapping: ...

    def describe(self) -> dict: ...


@dataclass(frozen=True)
class SyntheticCSSource:
    """Synthetic sparse-recovery instances, regenerated per trial."""

    n: int
    n_measurements: int
    sparsity: int
    snr_db: float = 20.0
    seed: int = 0
    reg_scale: float = 0.1
    fresh_per_trial: bool = field(default=True, init=False)

    def build(self, seed: int) -> MonotoneMapping:
        return build_cs_instance(
            self.n,
            self.n_measurements,
            self.sparsity,
            snr_db=self.snr_db,
            seed=self.seed + seed,
            reg_scale=self.reg_scale,
        )

    def describe(self) -> dict:
        return {
            "kind": "synthetic-cs",
            "n": self.n,
            "n_measurements": self.n_measurements,
            "sparsity": self.sparsity,
            "snr_db": self.snr_db,
            "seed": self.seed,
            "reg_scale": self.reg_scale,
        }


@dataclass(frozen=True)
class AffineSource:
    """Random SPD or fixed skew-rotation affine instances."""

    dim: int
    flavor: str = "spd"  # "spd" | "skew"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.flavor not in ("spd", "skew"):
            raise ConfigurationError(f"unknown affine flavor {self.flavor!r}")

    @property
    def fresh_per_trial(self) -> bool:
        return self.flavor == "spd"

    def build(self, seed: int) -> MonotoneMapping:
        if self.flavor == "spd":
            return random_spd_affine(self.dim, self.seed + seed)
        return skew_rotation_problem(self.dim)

    def describe(self) -> dict:
        return {"kind": "affine", "dim": self.dim, "flavor": self.flavor, "seed": self.seed}


@dataclass(frozen=True)
class LibsvmSource:
    """A fixed classification dataset on disk (logistic regression map)."""

    path: str
    reg: float = 0.1
    n_features: int | None = None
    fresh_per_trial: bool = field(default=False, init=False)

    def build(self, seed: int) -> MonotoneMapping:
        X, y = load_libsvm(self.path, n_features=self.n_features)
        return LogRegProblem(X, y, reg=self.reg)

    def describe(self) -> dict:
        return {"kind": "libsvm", "path": str(self.path), "reg": self.reg}


@dataclass(frozen=True)
class InstanceFileSource:
    """A sparse-recovery instance saved in the NPZ container format."""

    path: str
    fresh_per_trial: bool = field(default=False, init=False)

    def build(self, seed: int) -> MonotoneMapping:
        return load_instance(self.path)

    def describe(self) -> dict:
        return {"kind": "instance-file", "path": str(self.path)}


class FixedProblemSource:
    """Wrap an already-built problem (library use and tests)."""

    fresh_per_trial = False

    def __init__(self, problem: MonotoneMapping, label: str = "fixed") -> None:
        self.problem = problem
        self.label = label

    def build(self, seed: int) -> MonotoneMapping:
        return self.problem

    def describe(self) -> dict:
        return {"kind": "fixed", "label": self.label, "dim": self.problem.dim}


@dataclass(frozen=True)
class ExperimentSpec:
    """Complete, reproducible description of one benchmark run."""

    source: ProblemSource
    methods: tuple[str, ...] = ("eg", "gmini", "rmini", "wmax")
    config: SolverConfig = field(default_factory=SolverConfig)
    trials: int = 100
    x0_policy: str = "zeros"  # "zeros" | "gaussian"
    x0_scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.methods:
            raise ConfigurationError("at least one method is required")
        object.__setattr__(self, "methods", tuple(self.methods))
        for m in self.methods:
            if m not in METHOD_IDS:
                raise ConfigurationError(
                    f"unknown method {m!r}; choose from {', '.join(METHOD_IDS)}"
                )
        if len(set(self.methods)) != len(self.methods):
            raise ConfigurationError("methods must be unique")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be at least 1, got {self.trials}")
        if self.x0_policy not in ("zeros", "gaussian"):
            raise ConfigurationError(f"unknown x0 policy {self.x0_policy!r}")


@dataclass
class TrialRow:
    """One (method, trial) cell of a benchmark run."""

    method: str
    trial: int
    seed: int
    itr: int
    nf: float
    tcpu_s: float
    final_residual: float
    status: str
    recovery_error: float | None = None


@dataclass
class MethodAggregate:
    """Per-method summary over the non-failed trials of a run."""

    method: str
    display_name: str
    trials: int
    converged: int
    capped: int
    failed: int
    mean_itr: float
    std_itr: float
    mean_nf: float
    std_nf: float
    mean_tcpu_s: float
    std_tcpu_s: float
    mean_final_residual: float
    speedup_vs_reference: float | None = None
    mean_recovery_error: float | None = None


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list[TrialRow]
    aggregates: dict[str, MethodAggregate]
    metadata: dict


def _make_x0(spec: ExperimentSpec, problem: MonotoneMapping, trial: int) -> np.ndarray:
    if spec.x0_policy == "zeros":
        return np.zeros(problem.dim)
    gen = seeded_generator(spec.config.seed + trial, STREAM_X0)
    raw = spec.x0_scale * gen.standard_normal(problem.dim)
    # Keep the start inside the feasible region.
    return np.asarray(problem.projection(raw), dtype=float)


def run_experiment(spec: ExperimentSpec, *, progress=None) -> ExperimentResult:
    """Run every method over every trial and aggregate the outcome.

    ``progress`` is an optional callable receiving ``(trial, method)`` before
    each run (the CLI uses it for a lightweight ticker). Within a trial all
    methods share one problem instance and one start point; any spectral
    setup (needed by the full-vector method) happens before the trial's
    timed runs and its total cost is reported separately in the metadata.
    """
    source = spec.source
    shared = None if source.fresh_per_trial else source.build(0)
    rows: list[TrialRow] = []
    lambda_setup_seconds = 0.0

    for trial in range(spec.trials):
        problem = source.build(trial) if source.fresh_per_trial else shared
        x0 = _make_x0(spec, problem, trial)
        if "eg" in spec.methods and problem.global_lipschitz is None:
            t0 = time.perf_counter()
            problem.ensure_global_lipschitz()
            lambda_setup_seconds += time.perf_counter() - t0
        trial_config = replace(spec.config, seed=spec.config.seed + trial)
        for method in spec.methods:
            if progress is not None:
                progress(trial, method)
            result = run_solver(problem, method, trial_config, x0=x0)
            recovery = None
            if isinstance(problem, CSProblem) and problem.x_true is not None:
                recovery = problem.recovery_error(result.final_point)
            rows.append(
                TrialRow(
                    method=method,
                    trial=trial,
                    seed=trial_config.seed,
                    itr=result.iterations,
                    nf=result.nf,
                    tcpu_s=result.wall_time_seconds,
                    final_residual=result.final_residual,
                    status=result.status.value,
                    recovery_error=recovery,
                )
            )

    reference = "eg" if "eg" in spec.methods else spec.methods[0]
    aggregates = _aggregate(spec, rows, reference)
    metadata = {
        "source": source.describe(),
        "reference_method": reference,
        "parallel": False,
        "lambda_setup_seconds": lambda_setup_seconds,
    }
    return ExperimentResult(spec=spec, rows=rows, aggregates=aggregates, metadata=metadata)


def _aggregate(
    spec: ExperimentSpec, rows: list[TrialRow], reference: str
) -> dict[str, MethodAggregate]:
    aggregates: dict[str, MethodAggregate] = {}
    for method in spec.methods:
        mine = [r for r in rows if r.method == method]
        kept = [r for r in mine if r.status != RunStatus.STEPSIZE_FAILURE.value]
        failed = len(mine) - len(kept)

        def stats(values: list[float]) -> tuple[float, float]:
            if not values:
                return float("nan"), float("nan")
            arr = np.asarray(values, dtype=float)
            return float(arr.mean()), float(arr.std())

        mean_itr, std_itr = stats([r.itr for r in kept])
        mean_nf, std_nf = stats([r.nf for r in kept])
        mean_tcpu, std_tcpu = stats([r.tcpu_s for r in kept])
        mean_res, _ = stats([r.final_residual for r in kept])
        recoveries = [r.recovery_error for r in kept if r.recovery_error is not None]
        mean_recovery = float(np.mean(recoveries)) if recoveries else None

        aggregates[method] = MethodAggregate(
            method=method,
            display_name=method_display_name(method),
            trials=len(mine),
            converged=sum(r.status == RunStatus.CONVERGED.value for r in mine),
            capped=sum(r.status == RunStatus.ITERATION_CAP.value for r in mine),
            failed=failed,
            mean_itr=mean_itr,
            std_itr=std_itr,
            mean_nf=mean_nf,
            std_nf=std_nf,
            mean_tcpu_s=mean_tcpu,
            std_tcpu_s=std_tcpu,
            mean_final_residual=mean_res,
            mean_recovery_error=mean_recovery,
        )

    ref_mean = aggregates[reference].mean_tcpu_s
    for agg in aggregates.values():
        if np.isfinite(ref_mean) and np.isfinite(agg.mean_tcpu_s) and agg.mean_tcpu_s > 0:
            agg.speedup_vs_reference = ref_mean / agg.mean_tcpu_s
    return aggregates


# ---------------------------------------------------------------------------
# Parameter sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    """Long-format sweep table: one row per (method, rho, metric)."""

    spec: ExperimentSpec
    grid: tuple[float, ...]
    rows: list[tuple[str, float, str, float, float]]  # method, rho, metric, mean, std
    metadata: dict


_SWEEP_METRICS = ("itr", "nf", "tcpu_s", "final_residual")


def sweep_rho(spec: ExperimentSpec, grid) -> SweepResult:
    """Re-run the experiment for each probe-step fraction in ``grid``."""
    grid = tuple(float(r) for r in grid)
    if not grid:
        raise ConfigurationError("rho grid must not be empty")
    rows: list[tuple[str, float, str, float, float]] = []
    for rho in grid:
        sub = replace(spec, config=replace(spec.config, rho=rho))
        outcome = run_experiment(sub)
        for method in spec.methods:
            agg = outcome.aggregates[method]
            rows.append((method, rho, "itr", agg.mean_itr, agg.std_itr))
            rows.append((method, rho, "nf", agg.mean_nf, agg.std_nf))
            rows.append((method, rho, "tcpu_s", agg.mean_tcpu_s, agg.std_tcpu_s))
            rows.append(
                (method, rho, "final_residual", agg.mean_final_residual, float("nan"))
            )
    metadata = {"source": spec.source.describe(), "grid": list(grid)}
    return SweepResult(spec=spec, grid=grid, rows=rows, metadata=metadata)


# ---------------------------------------------------------------------------
# Rank tracing
# ---------------------------------------------------------------------------


@dataclass
class RankPoint:
    """Normalized rank of the selected coordinate at one iteration."""

    k: int
    normalized_rank: float
    reset: bool | None


def rank_trace(
    problem: MonotoneMapping,
    method: str = "wmax",
    config: SolverConfig | None = None,
    *,
    x0: np.ndarray | None = None,
):
    """Instrumented run recording where each selected coordinate ranks.

    Returns ``(result, points)``. The rank of the selected coordinate within
    ``|F(x_k)|`` (1 = largest magnitude) is normalized by the dimension, so
    ``normalized_rank`` lies in ``(0, 1]`` and small values mean near-greedy
    picks. The instrumentation pays one additional (separately tallied) full
    evaluation per iteration, so this is strictly a diagnostic mode, never a
    timing mode.
    """
    if method == "eg":
        raise ConfigurationError("rank tracing needs a coordinate-selecting method")
    cfg = config if config is not None else SolverConfig()
    if cfg.trace is TraceLevel.NONE:
        cfg = replace(cfg, trace=TraceLevel.FULL)
    result = run_solver(problem, method, cfg, x0=x0, diagnostics=True)
    points = [
        RankPoint(
            k=rec.k,
            normalized_rank=rec.selected_rank / problem.dim,
            reset=rec.reset,
        )
        for rec in result.trace
        if rec.selected_rank is not None
    ]
    return result, points
