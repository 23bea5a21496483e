"""Extragradient-family solvers for monotone nonlinear systems.

Four iteration schemes share one driver (:func:`run_solver`):

``eg``
    Classic two-step extragradient with a short probe step ``rho/L`` and an
    adaptive projection step.
``gmini``
    Greedy single-coordinate variant: probes only the coordinate with the
    largest map magnitude, scaled by that coordinate's own Lipschitz bound.
``rmini``
    Randomized variant: the probed coordinate is drawn with probability
    proportional to ``l_i**gamma``.
``wmax``
    Randomized variant with a watchdog: a remembered reference coordinate is
    defended against a random challenger each iteration, so the probe always
    uses the larger of the two magnitudes without any full argmax scan.

Evaluation costs are charged to a :class:`~minieg.core.CostLedger` in units
of full map evaluations (a coordinate read costs ``1/n``), giving the exact
ledger identities::

    eg:     nf == 2 * iterations
    gmini:  nf == 2 * iterations
    rmini:  nf == iterations * (1 + 1/n)
    wmax:   nf == 1 + iterations * (1 + 2/n)

Iterations run until the Euclidean norm of the map at the probe point drops
to the tolerance (the probe point is then returned as the solution), the
iteration cap is reached, or a step-size sign test fails.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .core import (
    ConfigurationError,
    CostLedger,
    EvaluationSession,
    MonotoneMapping,
    Projection,
    STREAM_SOLVER,
    seeded_generator,
)

__all__ = [
    "SolutionFound",
    "StepsizeFailure",
    "RunStatus",
    "TraceLevel",
    "SolverConfig",
    "IterationRecord",
    "StepObservation",
    "RunResult",
    "beta_full",
    "beta_component",
    "lipschitz_power_sampler",
    "METHOD_IDS",
    "method_display_name",
    "run_solver",
]

IndexSampler = Callable[[int, np.random.Generator, EvaluationSession], int]


class SolutionFound(Exception):
    """The map vanished at the probe point: it is an exact solution.

    Raised by the step-size rules when ``||F(y)|| = 0`` so that callers using
    them outside the solver loop cannot divide by zero. The driver never
    triggers it (the residual test fires first).
    """

    def __init__(self, point: np.ndarray | None = None) -> None:
        super().__init__("the probe point solves the system exactly")
        self.point = point


class StepsizeFailure(RuntimeError):
    """The component sign test failed: ``F_i(y) * F_i(x) < 0``.

    A negative product would make the projection step size negative and
    break the Fejer-monotonicity of the iterates, which indicates that the
    componentwise Lipschitz constants underestimate the true slopes.
    """

    def __init__(
        self,
        product: float,
        *,
        iteration: int | None = None,
        coordinate: int | None = None,
        point: np.ndarray | None = None,
    ) -> None:
        where = "" if iteration is None else f" at iteration {iteration}"
        which = "" if coordinate is None else f", coordinate {coordinate}"
        super().__init__(
            f"component sign test failed{where}{which}: "
            f"F_i(y) * F_i(x) = {product:.6e} < 0 "
            "(componentwise Lipschitz constants are too small)"
        )
        self.product = product
        self.iteration = iteration
        self.coordinate = coordinate
        self.point = point


class RunStatus(str, Enum):
    CONVERGED = "converged"
    ITERATION_CAP = "iteration_cap_reached"
    STEPSIZE_FAILURE = "stepsize_failure"


class TraceLevel(str, Enum):
    NONE = "none"
    SUMMARY = "summary"  # every 100th iteration plus the final one
    FULL = "full"


@dataclass(frozen=True)
class SolverConfig:
    """Shared solver knobs.

    ``rho`` is the probe-step fraction in (0, 1); ``gamma`` shapes the
    randomized coordinate distribution ``p_i ~ l_i**gamma`` (0 = uniform);
    ``seed`` drives every random draw the solver makes.
    """

    rho: float = 0.999
    gamma: float = 0.0
    tolerance: float = 1e-8
    max_iterations: int = 500_000
    seed: int = 0
    trace: TraceLevel = TraceLevel.NONE

    def __post_init__(self) -> None:
        if not 0.0 < self.rho < 1.0:
            raise ConfigurationError(f"rho must lie strictly in (0, 1), got {self.rho}")
        if self.gamma < 0:
            raise ConfigurationError(f"gamma must be nonnegative, got {self.gamma}")
        if self.tolerance <= 0:
            raise ConfigurationError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ConfigurationError(
                f"max_iterations must be at least 1, got {self.max_iterations}"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError(f"seed must be in [0, 2**64), got {self.seed}")
        if not isinstance(self.trace, TraceLevel):
            object.__setattr__(self, "trace", TraceLevel(self.trace))


@dataclass
class IterationRecord:
    """One completed iteration, as stored in a run trace.

    ``beta`` is 0.0 on iterations that converge at the probe point (the
    projection step is never formed there). ``selected_index`` is None for
    the full-vector method. ``selected_rank`` is the rank of the selected
    coordinate's magnitude within ``|F(x_k)|`` (1 = largest, so it lies in
    ``[1, n]``), populated only when rank diagnostics are requested;
    ``reset`` flags watchdog iterations whose challenger strictly beat the
    reference.
    """

    k: int
    selected_index: int | None
    residual_y: float
    beta: float
    nf_so_far: float
    selected_rank: int | None = None
    reset: bool | None = None


@dataclass
class StepObservation:
    """Full per-iteration state handed to callbacks (arrays are copies).

    ``f_x`` is only populated by methods that actually compute the full map
    at ``x_k`` (eg, gmini); the coordinate methods never see it, and
    observers that need it can evaluate the problem directly. ``x_next`` is
    None on the converging iteration.
    """

    k: int
    x: np.ndarray
    y: np.ndarray
    x_next: np.ndarray | None
    f_y: np.ndarray
    f_x: np.ndarray | None
    selected_index: int | None
    selected_value: float | None
    beta: float
    residual_y: float
    converged: bool
    challenger_index: int | None = None
    challenger_value: float | None = None
    reference_value: float | None = None
    reset: bool | None = None


@dataclass
class RunResult:
    """Outcome of one solver run.

    ``final_point`` is the accepted probe point on convergence or the last
    probe point when the iteration cap is hit, and ``final_residual`` is the
    map norm measured at that point -- so the status is ``CONVERGED`` exactly
    when ``final_residual <= tolerance``. After a step-size failure the pair
    reports the iterate the failing step started from.
    """

    method: str
    status: RunStatus
    final_point: np.ndarray
    final_residual: float
    iterations: int
    nf: float
    wall_time_seconds: float
    trace: list[IterationRecord]
    ledger: CostLedger
    config: SolverConfig
    diagnostic_ledger: CostLedger | None = None
    failure: StepsizeFailure | None = None

    @property
    def converged(self) -> bool:
        return self.status is RunStatus.CONVERGED


# ---------------------------------------------------------------------------
# Step-size rules
# ---------------------------------------------------------------------------


def beta_full(f_y: np.ndarray, x: np.ndarray, y: np.ndarray, *, norm_sq: float | None = None) -> float:
    """Projection step size for the full-vector method.

    ``beta = <F(y), x - y> / ||F(y)||^2``. Raises :class:`SolutionFound`
    when ``F(y)`` vanishes -- the probe point is then an exact solution and
    no step is needed.
    """
    if norm_sq is None:
        norm_sq = float(np.dot(f_y, f_y))
    if norm_sq == 0.0:
        raise SolutionFound(np.array(y, dtype=float, copy=True))
    return float(np.dot(f_y, x - y)) / norm_sq


def beta_component(
    f_y: np.ndarray,
    i: int,
    f_x_i: float,
    l_i: float,
    rho: float,
    *,
    norm_sq: float | None = None,
    iteration: int | None = None,
) -> float:
    """Projection step size for the single-coordinate methods.

    ``beta = rho * F_i(y) * F_i(x) / (l_i * ||F(y)||^2)``. A zero product
    gives the legal degenerate step ``beta = 0``; a strictly negative one
    raises :class:`StepsizeFailure` since it would break Fejer monotonicity.
    """
    product = float(f_y[i]) * float(f_x_i)
    if product < 0.0:
        raise StepsizeFailure(product, iteration=iteration, coordinate=int(i))
    if norm_sq is None:
        norm_sq = float(np.dot(f_y, f_y))
    if norm_sq == 0.0:
        raise SolutionFound()
    return rho * product / (l_i * norm_sq)


def lipschitz_power_sampler(
    componentwise_lipschitz: np.ndarray, gamma: float
) -> IndexSampler:
    """Sampler drawing index ``i`` with probability proportional to ``l_i**gamma``.

    Uses an inverse-CDF lookup over a precomputed cumulative table;
    ``gamma = 0`` reduces to the uniform distribution.
    """
    weights = np.asarray(componentwise_lipschitz, dtype=float) ** gamma
    total = float(weights.sum())
    if not np.isfinite(total) or total <= 0:
        raise ConfigurationError("index weights must have a positive finite sum")
    cumulative = np.cumsum(weights / total)
    top = len(weights) - 1

    def sampler(k: int, gen: np.random.Generator, session: EvaluationSession) -> int:
        u = gen.random()
        return min(int(np.searchsorted(cumulative, u, side="right")), top)

    return sampler


# ---------------------------------------------------------------------------
# Steppers
# ---------------------------------------------------------------------------


@dataclass
class _StepOutcome:
    converged: bool
    residual_y: float
    beta: float
    selected_index: int | None
    final_point: np.ndarray | None = None
    reset: bool | None = None
    observation: StepObservation | None = None


class _StepperBase:
    uses_rng = False

    def __init__(
        self,
        problem: MonotoneMapping,
        projection: Projection,
        config: SolverConfig,
        *,
        capture: bool,
        sampler: IndexSampler | None,
    ) -> None:
        self.problem = problem
        self.projection = projection
        self.config = config
        self.capture = capture
        l = np.asarray(problem.componentwise_lipschitz, dtype=float)
        if l.shape != (problem.dim,) or np.any(l <= 0) or not np.all(np.isfinite(l)):
            raise ConfigurationError(
                "problem must provide positive finite componentwise Lipschitz constants"
            )
        self.l = l
        self.sampler = sampler

    def start(self, session: EvaluationSession, gen: np.random.Generator):
        """Pre-loop work. Returns a (point, residual) pair to finish early."""
        return None

    def step(
        self,
        k: int,
        session: EvaluationSession,
        gen: np.random.Generator,
        final_iteration: bool = False,
    ) -> _StepOutcome:
        """One iteration. ``final_iteration`` asks the stepper to hand back
        the probe point even when it does not converge, so a capped run can
        report the point its residual was actually measured at."""
        raise NotImplementedError


class _ExtragradientStepper(_StepperBase):
    def __init__(self, problem, projection, config, *, capture, sampler) -> None:
        super().__init__(problem, projection, config, capture=capture, sampler=sampler)
        L = problem.ensure_global_lipschitz()
        if L is None or L <= 0 or not np.isfinite(L):
            raise ConfigurationError(f"global Lipschitz bound must be positive, got {L}")
        self.scale = config.rho / L

    def step(self, k, session, gen, final_iteration=False):
        cfg = self.config
        x = session.point.copy()
        f_x = session.eval_full()
        y = x - self.scale * f_x
        session.set_point(y)
        f_y = session.eval_full()
        norm_sq = float(np.dot(f_y, f_y))
        residual = float(np.sqrt(norm_sq))

        if residual <= cfg.tolerance:
            outcome = _StepOutcome(True, residual, 0.0, None, final_point=y.copy())
            if self.capture:
                outcome.observation = StepObservation(
                    k=k, x=x, y=y, x_next=None, f_y=f_y, f_x=f_x,
                    selected_index=None, selected_value=None,
                    beta=0.0, residual_y=residual, converged=True,
                )
            return outcome

        beta = beta_full(f_y, x, y, norm_sq=norm_sq)
        x_next = self.projection(x - beta * f_y)
        session.set_point(x_next)
        outcome = _StepOutcome(
            False, residual, beta, None,
            final_point=y if final_iteration else None,
        )
        if self.capture:
            outcome.observation = StepObservation(
                k=k, x=x, y=y, x_next=np.array(x_next, dtype=float, copy=True),
                f_y=f_y, f_x=f_x, selected_index=None, selected_value=None,
                beta=beta, residual_y=residual, converged=False,
            )
        return outcome


class _GreedyMiniStepper(_StepperBase):
    def step(self, k, session, gen, final_iteration=False):
        cfg = self.config
        x = session.point.copy()
        f_x = session.eval_full()
        magnitudes = np.abs(f_x)
        peak = float(magnitudes.max())

        if peak == 0.0:
            # x is an exact root; probe in place so the residual rule fires.
            f_y = session.eval_full()
            outcome = _StepOutcome(True, 0.0, 0.0, None, final_point=x.copy())
            if self.capture:
                outcome.observation = StepObservation(
                    k=k, x=x, y=x.copy(), x_next=None, f_y=f_y, f_x=f_x,
                    selected_index=None, selected_value=None,
                    beta=0.0, residual_y=0.0, converged=True,
                )
            return outcome

        i = int(np.argmax(magnitudes))  # ties resolve to the smallest index
        f_x_i = float(f_x[i])
        session.shift_coordinate(i, -(cfg.rho / self.l[i]) * f_x_i)
        f_y = session.eval_full()
        norm_sq = float(np.dot(f_y, f_y))
        residual = float(np.sqrt(norm_sq))

        if residual <= cfg.tolerance:
            final = session.point.copy()
            outcome = _StepOutcome(True, residual, 0.0, i, final_point=final)
            if self.capture:
                outcome.observation = StepObservation(
                    k=k, x=x, y=final.copy(), x_next=None, f_y=f_y, f_x=f_x,
                    selected_index=i, selected_value=f_x_i,
                    beta=0.0, residual_y=residual, converged=True,
                )
            return outcome

        try:
            beta = beta_component(
                f_y, i, f_x_i, self.l[i], cfg.rho, norm_sq=norm_sq, iteration=k
            )
        except StepsizeFailure as exc:
            exc.point = x  # report the iterate the failing step started from
            raise
        y_obs = session.point.copy() if (self.capture or final_iteration) else None
        x_next = self.projection(x - beta * f_y)
        session.set_point(x_next)
        outcome = _StepOutcome(
            False, residual, beta, i,
            final_point=y_obs if final_iteration else None,
        )
        if self.capture:
            outcome.observation = StepObservation(
                k=k, x=x, y=y_obs, x_next=np.array(x_next, dtype=float, copy=True),
                f_y=f_y, f_x=f_x, selected_index=i, selected_value=f_x_i,
                beta=beta, residual_y=residual, converged=False,
            )
        return outcome


class _RandomMiniStepper(_StepperBase):
    uses_rng = True

    def __init__(self, problem, projection, config, *, capture, sampler) -> None:
        super().__init__(problem, projection, config, capture=capture, sampler=sampler)
        if self.sampler is None:
            self.sampler = lipschitz_power_sampler(self.l, config.gamma)

    def step(self, k, session, gen, final_iteration=False):
        cfg = self.config
        x = session.point.copy()
        i = int(self.sampler(k, gen, session))
        f_x_i = session.eval_component(i)
        delta = -(cfg.rho / self.l[i]) * f_x_i
        if delta != 0.0:
            session.shift_coordinate(i, delta)
        f_y = session.eval_full()
        norm_sq = float(np.dot(f_y, f_y))
        residual = float(np.sqrt(norm_sq))

        if residual <= cfg.tolerance:
            final = session.point.copy()
            outcome = _StepOutcome(True, residual, 0.0, i, final_point=final)
            if self.capture:
                outcome.observation = StepObservation(
                    k=k, x=x, y=final.copy(), x_next=None, f_y=f_y, f_x=None,
                    selected_index=i, selected_value=f_x_i,
                    beta=0.0, residual_y=residual, converged=True,
                )
            return outcome

        try:
            beta = beta_component(
                f_y, i, f_x_i, self.l[i], cfg.rho, norm_sq=norm_sq, iteration=k
            )
        except StepsizeFailure as exc:
            exc.point = x  # report the iterate the failing step started from
            raise
        y_obs = session.point.copy() if (self.capture or final_iteration) else None
        x_next = self.projection(x - beta * f_y)
        session.set_point(x_next)
        outcome = _StepOutcome(
            False, residual, beta, i,
            final_point=y_obs if final_iteration else None,
        )
        if self.capture:
            outcome.observation = StepObservation(
                k=k, x=x, y=y_obs, x_next=np.array(x_next, dtype=float, copy=True),
                f_y=f_y, f_x=None, selected_index=i, selected_value=f_x_i,
                beta=beta, residual_y=residual, converged=False,
            )
        return outcome


class _WatchdogMaxStepper(_StepperBase):
    """Randomized probing guarded by a remembered reference coordinate.

    Each iteration charges exactly two coordinate reads (reference and
    challenger -- even when the draw lands on the reference itself) and one
    full evaluation, after a single full evaluation at start-up to seed the
    reference. The probed coordinate always carries the larger magnitude of
    the two, so its magnitude dominates the challenger's by construction.
    """

    uses_rng = True

    def __init__(self, problem, projection, config, *, capture, sampler) -> None:
        super().__init__(problem, projection, config, capture=capture, sampler=sampler)
        if self.sampler is None:
            self.sampler = lipschitz_power_sampler(self.l, config.gamma)
        self.reference: int | None = None

    def start(self, session, gen):
        f0 = session.eval_full()
        if float(np.abs(f0).max()) == 0.0:
            return session.point.copy(), 0.0
        self.reference = int(np.argmax(np.abs(f0)))
        return None

    def step(self, k, session, gen, final_iteration=False):
        cfg = self.config
        x = session.point.copy()
        ref = self.reference
        challenger = int(self.sampler(k, gen, session))
        f_ref = session.eval_component(ref)
        f_ch = session.eval_component(challenger)  # charged even when it is the reference

        if abs(f_ch) > abs(f_ref):
            i, f_x_i, reset = challenger, f_ch, True
        else:
            i, f_x_i, reset = ref, f_ref, False  # ties keep the reference

        delta = -(cfg.rho / self.l[i]) * f_x_i
        if delta != 0.0:
            session.shift_coordinate(i, delta)
        f_y = session.eval_full()
        norm_sq = float(np.dot(f_y, f_y))
        residual = float(np.sqrt(norm_sq))

        if residual <= cfg.tolerance:
            final = session.point.copy()
            outcome = _StepOutcome(True, residual, 0.0, i, final_point=final, reset=reset)
            if self.capture:
                outcome.observation = StepObservation(
                    k=k, x=x, y=final.copy(), x_next=None, f_y=f_y, f_x=None,
                    selected_index=i, selected_value=f_x_i,
                    beta=0.0, residual_y=residual, converged=True,
                    challenger_index=challenger, challenger_value=f_ch,
                    reference_value=f_ref, reset=reset,
                )
            self.reference = i
            return outcome

        try:
            beta = beta_component(
                f_y, i, f_x_i, self.l[i], cfg.rho, norm_sq=norm_sq, iteration=k
            )
        except StepsizeFailure as exc:
            exc.point = x  # report the iterate the failing step started from
            raise
        y_obs = session.point.copy() if (self.capture or final_iteration) else None
        x_next = self.projection(x - beta * f_y)
        session.set_point(x_next)
        self.reference = i
        outcome = _StepOutcome(
            False, residual, beta, i, reset=reset,
            final_point=y_obs if final_iteration else None,
        )
        if self.capture:
            outcome.observation = StepObservation(
                k=k, x=x, y=y_obs, x_next=np.array(x_next, dtype=float, copy=True),
                f_y=f_y, f_x=None, selected_index=i, selected_value=f_x_i,
                beta=beta, residual_y=residual, converged=False,
                challenger_index=challenger, challenger_value=f_ch,
                reference_value=f_ref, reset=reset,
            )
        return outcome


_METHODS: dict[str, tuple[str, type[_StepperBase]]] = {
    "eg": ("EG", _ExtragradientStepper),
    "gmini": ("G-Mini-EG", _GreedyMiniStepper),
    "rmini": ("R-Mini-EG", _RandomMiniStepper),
    "wmax": ("Watchdog-Max", _WatchdogMaxStepper),
}

METHOD_IDS = tuple(_METHODS)


def method_display_name(method: str) -> str:
    if method not in _METHODS:
        raise ConfigurationError(
            f"unknown method {method!r}; choose from {', '.join(METHOD_IDS)}"
        )
    return _METHODS[method][0]


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def run_solver(
    problem: MonotoneMapping,
    method: str,
    config: SolverConfig | None = None,
    *,
    x0: np.ndarray | None = None,
    projection: Projection | None = None,
    callback: Callable[[StepObservation], None] | None = None,
    diagnostics: bool = False,
    index_sampler: IndexSampler | None = None,
) -> RunResult:
    """Run one solver on one problem instance.

    ``x0`` defaults to the origin and is projected onto the feasible region
    before the run starts; ``projection`` defaults to the problem's feasible
    region. ``callback`` receives a :class:`StepObservation` after every
    iteration (this forces per-iteration array copies; leave it None for
    timed runs). ``diagnostics`` additionally records the rank of each
    selected coordinate's magnitude within ``|F(x_k)|`` (1 = largest), at
    the cost of one full (uncharged) map evaluation per iteration, tallied
    in a separate ledger. ``index_sampler`` overrides the coordinate draw of
    the randomized methods -- chiefly a testing hook.

    Wall time covers the solve loop only; any spectral setup the method
    needs is performed (and cached on the problem) before the clock starts.
    """
    if method not in _METHODS:
        raise ConfigurationError(
            f"unknown method {method!r}; choose from {', '.join(METHOD_IDS)}"
        )
    cfg = config if config is not None else SolverConfig()
    proj = projection if projection is not None else problem.projection
    if x0 is None:
        x0 = np.zeros(problem.dim)
    x0 = np.asarray(proj(np.asarray(x0, dtype=float)), dtype=float)

    if method == "eg":
        problem.ensure_global_lipschitz()  # outside the timed section

    capture = callback is not None or diagnostics
    _, stepper_cls = _METHODS[method]
    stepper = stepper_cls(problem, proj, cfg, capture=capture, sampler=index_sampler)
    ledger = CostLedger(problem.dim)
    session = problem.open_session(x0, ledger)
    gen = seeded_generator(cfg.seed, STREAM_SOLVER)
    diag_ledger = CostLedger(problem.dim) if diagnostics else None

    trace: list[IterationRecord] = []
    want_all = cfg.trace is TraceLevel.FULL
    want_summary = cfg.trace is TraceLevel.SUMMARY

    t0 = time.perf_counter()
    early = stepper.start(session, gen)
    if early is not None:
        point, residual = early
        return RunResult(
            method=method,
            status=RunStatus.CONVERGED,
            final_point=point,
            final_residual=residual,
            iterations=0,
            nf=ledger.nf,
            wall_time_seconds=time.perf_counter() - t0,
            trace=trace,
            ledger=ledger,
            config=cfg,
            diagnostic_ledger=diag_ledger,
        )

    status = RunStatus.ITERATION_CAP
    final_point: np.ndarray | None = None
    final_residual: float | None = None
    iterations = cfg.max_iterations
    failure: StepsizeFailure | None = None

    for k in range(cfg.max_iterations):
        try:
            outcome = stepper.step(
                k, session, gen, final_iteration=(k == cfg.max_iterations - 1)
            )
        except StepsizeFailure as exc:
            status = RunStatus.STEPSIZE_FAILURE
            failure = exc
            iterations = k
            final_point = (
                exc.point.copy() if exc.point is not None else session.point.copy()
            )
            break

        rank = None
        if diagnostics and outcome.selected_index is not None:
            f_ref = problem.eval_full(outcome.observation.x)
            diag_ledger.charge_full()
            chosen = abs(f_ref[outcome.selected_index])
            rank = 1 + int(np.count_nonzero(np.abs(f_ref) > chosen))

        terminal = outcome.converged or k == cfg.max_iterations - 1
        if want_all or (want_summary and (k % 100 == 0 or terminal)):
            trace.append(
                IterationRecord(
                    k=k,
                    selected_index=outcome.selected_index,
                    residual_y=outcome.residual_y,
                    beta=outcome.beta,
                    nf_so_far=ledger.nf,
                    selected_rank=rank,
                    reset=outcome.reset,
                )
            )
        if callback is not None:
            callback(outcome.observation)

        if outcome.converged:
            status = RunStatus.CONVERGED
            final_point = outcome.final_point
            final_residual = outcome.residual_y
            iterations = k + 1
            break

    wall = time.perf_counter() - t0

    if final_point is None and status is RunStatus.ITERATION_CAP:
        # Report the last probe point with the residual measured there, so
        # the status/residual relationship stays exact.
        final_point = outcome.final_point
        final_residual = outcome.residual_y
    if final_point is None:
        final_point = session.point.copy()
    if final_residual is None:
        # Reporting-only evaluation; deliberately not charged to the ledger.
        final_residual = float(np.linalg.norm(problem.eval_full(final_point)))

    return RunResult(
        method=method,
        status=status,
        final_point=final_point,
        final_residual=final_residual,
        iterations=iterations,
        nf=ledger.nf,
        wall_time_seconds=wall,
        trace=trace,
        ledger=ledger,
        config=cfg,
        diagnostic_ledger=diag_ledger,
        failure=failure,
    )
