"""Sparse recovery (LASSO) as a nonlinear complementarity system.

The l1-regularized least-squares problem

    min_x  0.5 * ||A x - b||^2 + reg * ||x||_1

is rewritten with the positive/negative split ``x = u - v``, ``u, v >= 0``,
whose KKT conditions form the complementarity system

    z >= 0,   H z + c >= 0,   z . (H z + c) = 0,       z = [u; v],

with ``H = [[B, -B], [-B, B]]``, ``B = A^T A`` and
``c = reg * 1 + [-A^T b; +A^T b]``. Solving it is equivalent to finding a
root of the monotone, nonsmooth map

    F(z) = min(z, H z + c)

over the nonnegative orthant, which is what the solvers here consume.

Sessions exploit the rank structure: ``H z = [g; -g]`` with ``g = B (u - v)``,
so a full evaluation needs two sensing-matrix products, a coordinate read is
O(1), and a coordinate shift updates ``g`` with a single cached Gram column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import (
    ConfigurationError,
    CostLedger,
    EvaluationSession,
    MonotoneMapping,
    NonnegativeProjection,
    Projection,
    STREAM_INSTANCE,
    seeded_generator,
)
from .spectral import estimate_lambda_max

__all__ = [
    "CSProblem",
    "CSInstanceMeta",
    "build_cs_instance",
    "save_instance",
    "load_instance",
]

_SPECTRAL_SAFETY = 1.01
_FORMAT_TAG = "minieg-cs-v1"


@dataclass(frozen=True)
class CSInstanceMeta:
    """Generation record for a synthetic instance (None fields for real data)."""

    n: int
    n_measurements: int
    sparsity: int | None
    snr_db: float | None
    realized_snr_db: float | None
    seed: int | None


class CSProblem(MonotoneMapping):
    """Complementarity form of l1-regularized least squares.

    The ambient dimension is ``2n`` (positive and negative parts); the
    feasible region is the nonnegative orthant. Componentwise Lipschitz
    constants are ``max(diag(A^T A), 1)`` duplicated across both halves --
    the slope of ``min(z_i, (Hz+c)_i)`` along ``e_i`` is either 1 or
    ``H_ii``. The global constant scales the estimated spectral norm of
    ``H`` by ``sqrt(2n)`` to cover the nonsmooth min().
    """

    def __init__(
        self,
        sensing,
        measurements,
        *,
        reg: float | None = None,
        x_true: np.ndarray | None = None,
        meta: CSInstanceMeta | None = None,
        spectral_seed: int = 0,
    ) -> None:
        A = np.array(sensing, dtype=float)
        b = np.array(measurements, dtype=float).ravel()
        if A.ndim != 2:
            raise ConfigurationError(f"sensing matrix must be 2-d, got shape {A.shape}")
        if A.shape[0] != b.shape[0]:
            raise ConfigurationError(
                f"sensing matrix has {A.shape[0]} rows but rhs has {b.shape[0]} entries"
            )
        n = A.shape[1]
        if n == 0:
            raise ConfigurationError("sensing matrix needs at least one column")

        self._A = A
        self._b = b
        self._n_signal = n
        self._G = A.T @ A                      # Gram matrix, cached for column shifts
        atb = A.T @ b
        if reg is None:
            reg = 0.1 * float(np.abs(atb).max())
        if reg <= 0:
            raise ConfigurationError(f"reg must be positive, got {reg}")
        self._reg = float(reg)
        self._c_top = self._reg - atb          # (Hz+c) upper half offset
        self._c_bot = self._reg + atb          # lower half offset

        h = np.maximum(np.diag(self._G), 1.0)
        self._l = np.concatenate([h, h])
        self._spectral_seed = spectral_seed
        self._global_lipschitz: float | None = None
        self.lambda_setup = None

        self.x_true = None if x_true is None else np.array(x_true, dtype=float)
        self.meta = meta

    # -- contract ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return 2 * self._n_signal

    @property
    def n_signal(self) -> int:
        return self._n_signal

    @property
    def sensing(self) -> np.ndarray:
        return self._A

    @property
    def measurements(self) -> np.ndarray:
        return self._b

    @property
    def reg(self) -> float:
        return self._reg

    @property
    def componentwise_lipschitz(self) -> np.ndarray:
        return self._l

    @property
    def projection(self) -> Projection:
        return NonnegativeProjection()

    def ensure_global_lipschitz(self) -> float:
        if self._global_lipschitz is None:
            est = estimate_lambda_max(
                lambda v: self._G @ v, self._n_signal, seed=self._spectral_seed
            )
            self.lambda_setup = est
            lambda_h = 2.0 * est.value  # spectrum of H is {0} U 2*spec(B)
            self._global_lipschitz = float(
                np.sqrt(self.dim) * max(_SPECTRAL_SAFETY * lambda_h, 1.0)
            )
        return self._global_lipschitz

    def eval_full(self, z: np.ndarray) -> np.ndarray:
        z = self._check_point(z)
        n = self._n_signal
        g = self._A.T @ (self._A @ (z[:n] - z[n:]))
        q = np.concatenate([g + self._c_top, self._c_bot - g])
        return np.minimum(z, q)

    def open_session(self, x0: np.ndarray, ledger: CostLedger) -> "CSSession":
        return CSSession(self, x0, ledger)

    # -- LASSO-side views ---------------------------------------------------

    def signal_estimate(self, z: np.ndarray) -> np.ndarray:
        """Recover the signal ``x = u - v`` from a point of the split system."""
        z = self._check_point(z)
        n = self._n_signal
        return z[:n] - z[n:]

    def kkt_residual(self, z: np.ndarray, *, support_threshold: float = 1e-8) -> float:
        """Max violation of the LASSO optimality conditions at ``x = u - v``.

        Coordinates with ``|x_i| <= support_threshold`` are treated as zeros
        (requiring ``|grad_i| <= reg``), the others as active (requiring
        ``grad_i = -reg * sign(x_i)``).
        """
        x = self.signal_estimate(z)
        grad = self._A.T @ (self._A @ x - self._b)
        off = np.maximum(np.abs(grad) - self._reg, 0.0)
        on = np.abs(grad + self._reg * np.sign(x))
        return float(np.max(np.where(np.abs(x) <= support_threshold, off, on)))

    def recovery_error(self, z: np.ndarray) -> float:
        """Relative l2 error of the recovered signal against the planted one."""
        if self.x_true is None:
            raise ConfigurationError("instance has no planted signal")
        x = self.signal_estimate(z)
        denom = max(float(np.linalg.norm(self.x_true)), 1e-30)
        return float(np.linalg.norm(x - self.x_true)) / denom


class CSSession(EvaluationSession):
    """Caches ``g = A^T A (u - v)``; shifts add one Gram column."""

    _problem: CSProblem

    def _rebuild(self) -> None:
        p = self._problem
        n = p._n_signal
        d = self._x[:n] - self._x[n:]
        # Two sensing products rather than one Gram product: cheaper when
        # measurements are few, and identical in structure to eval_full.
        self._g = p._A.T @ (p._A @ d)

    def _shift(self, i: int, delta: float) -> None:
        p = self._problem
        n = p._n_signal
        if i < n:
            self._g += delta * p._G[:, i]
        else:
            self._g -= delta * p._G[:, i - n]

    def _compute_full(self) -> np.ndarray:
        p = self._problem
        q = np.concatenate([self._g + p._c_top, p._c_bot - self._g])
        return np.minimum(self._x, q)

    def _compute_component(self, i: int) -> float:
        p = self._problem
        n = p._n_signal
        if i < n:
            q = self._g[i] + p._c_top[i]
        else:
            q = p._c_bot[i - n] - self._g[i - n]
        return float(min(self._x[i], q))


def build_cs_instance(
    n: int,
    n_measurements: int,
    sparsity: int,
    *,
    snr_db: float = 20.0,
    seed: int = 0,
    reg_scale: float = 0.1,
) -> CSProblem:
    """Generate a synthetic sparse-recovery instance.

    The sensing matrix has i.i.d. Gaussian entries with variance ``1/N``
    (unit expected column norms), the planted signal has ``sparsity``
    Gaussian spikes on a random support, and Gaussian measurement noise is
    scaled to the requested SNR. The regularization weight follows the usual
    ``reg_scale * ||A^T b||_inf`` rule.
    """
    if not 0 < sparsity <= n:
        raise ConfigurationError(f"sparsity must be in [1, {n}], got {sparsity}")
    if n_measurements < 1:
        raise ConfigurationError("need at least one measurement")
    gen = seeded_generator(seed, STREAM_INSTANCE)
    A = gen.standard_normal((n_measurements, n)) / np.sqrt(n_measurements)
    support = gen.choice(n, size=sparsity, replace=False)
    x_true = np.zeros(n)
    x_true[support] = gen.standard_normal(sparsity)
    clean = A @ x_true
    noise = gen.standard_normal(n_measurements)
    target = float(np.linalg.norm(clean)) / 10.0 ** (snr_db / 20.0)
    norm_noise = float(np.linalg.norm(noise))
    if norm_noise > 0 and target > 0:
        noise *= target / norm_noise
    else:
        noise[:] = 0.0
    b = clean + noise
    realized = (
        20.0 * np.log10(np.linalg.norm(clean) / np.linalg.norm(noise))
        if np.linalg.norm(noise) > 0
        else np.inf
    )
    atb = A.T @ b
    meta = CSInstanceMeta(
        n=n,
        n_measurements=n_measurements,
        sparsity=sparsity,
        snr_db=snr_db,
        realized_snr_db=float(realized),
        seed=seed,
    )
    return CSProblem(
        A,
        b,
        reg=reg_scale * float(np.abs(atb).max()),
        x_true=x_true,
        meta=meta,
        spectral_seed=seed,
    )


def save_instance(path, problem: CSProblem) -> None:
    """Write an instance to an NPZ container (bit-exact round trip)."""
    meta = problem.meta
    np.savez(
        path,
        format=_FORMAT_TAG,
        sensing=problem.sensing,
        measurements=problem.measurements,
        reg=problem.reg,
        x_true=problem.x_true if problem.x_true is not None else np.zeros(0),
        sparsity=-1 if meta is None or meta.sparsity is None else meta.sparsity,
        snr_db=np.nan if meta is None or meta.snr_db is None else meta.snr_db,
        realized_snr_db=(
            np.nan if meta is None or meta.realized_snr_db is None else meta.realized_snr_db
        ),
        seed=-1 if meta is None or meta.seed is None else meta.seed,
    )


def load_instance(path, *, spectral_seed: int = 0) -> CSProblem:
    """Read an instance written by :func:`save_instance`."""
    with np.load(path, allow_pickle=False) as data:
        tag = str(data["format"])
        if tag != _FORMAT_TAG:
            raise ConfigurationError(f"unrecognized instance container format {tag!r}")
        A = data["sensing"]
        b = data["measurements"]
        reg = float(data["reg"])
        x_true = data["x_true"]
        sparsity = int(data["sparsity"])
        snr_db = float(data["snr_db"])
        realized = float(data["realized_snr_db"])
        seed = int(data["seed"])
    meta = CSInstanceMeta(
        n=A.shape[1],
        n_measurements=A.shape[0],
        sparsity=None if sparsity < 0 else sparsity,
        snr_db=None if np.isnan(snr_db) else snr_db,
        realized_snr_db=None if np.isnan(realized) else realized,
        seed=None if seed < 0 else seed,
    )
    return CSProblem(
        A,
        b,
        reg=reg,
        x_true=None if x_true.size == 0 else x_true,
        meta=meta,
        spectral_seed=spectral_seed,
    )
