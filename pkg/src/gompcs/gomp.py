"""Generalized Orthogonal Matching Pursuit.

Each iteration picks the ``group_size`` atoms best correlated with the
residual, solves least squares over every atom picked so far, keeps the
``kappa`` largest coefficients, re-solves over those, and updates the
residual. The loop stops once two consecutive residuals differ by less
than ``epsilon`` in l2 norm.
"""
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .linalg import (
    ContractViolation,
    RankDeficientError,
    argmax_k,
    l2_norm,
    least_squares_solve,
)
from .sensing import Dictionary
from .sparsify import SparseVector

__all__ = [
    "GompConfig",
    "GompState",
    "GompResult",
    "IterationRecord",
    "SupportOverflowError",
    "gomp_recover",
    "step_identify",
    "step_estimate",
    "step_prune",
    "step_residual",
]


class SupportOverflowError(RuntimeError):
    """The accumulated support outgrew the number of measurements.

    Raised instead of solving an underdetermined least-squares problem.
    ``iterations`` counts the iterations completed before the overflow.
    """

    def __init__(self, support_size, rows, iterations):
        self.support_size = support_size
        self.rows = rows
        self.iterations = iterations
        super().__init__(
            f"support of {support_size} atoms exceeds {rows} measurements "
            f"after {iterations} iterations"
        )


@dataclass(frozen=True)
class GompConfig:
    kappa: int
    group_size: int = 2
    epsilon: float = 1e-6
    relative_epsilon: bool = True
    max_iterations: Optional[int] = None
    zero_input_tol: float = 1e-12

    def __post_init__(self):
        if self.kappa < 1:
            raise ContractViolation(f"kappa must be >= 1, got {self.kappa}")
        if not 1 <= self.group_size <= self.kappa:
            raise ContractViolation(
                f"group_size must lie in [1, kappa={self.kappa}], got {self.group_size}"
            )
        if not self.epsilon > 0:
            raise ContractViolation(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ContractViolation(f"max_iterations must be >= 1, got {self.max_iterations}")

    @property
    def iteration_cap(self):
        if self.max_iterations is not None:
            return self.max_iterations
        return math.ceil(self.kappa / self.group_size) + 20

    def stopping_threshold(self, y_norm):
        return self.epsilon * y_norm if self.relative_epsilon else self.epsilon


@dataclass
class GompState:
    iteration: int
    residual: np.ndarray
    prev_residual: np.ndarray
    support: list
    delta: float


@dataclass(frozen=True)
class IterationRecord:
    """Snapshot handed to the ``callback`` of :func:`gomp_recover`."""
    iteration: int
    selected: np.ndarray      # Theta, new atoms this iteration
    support: np.ndarray       # c, all atoms selected so far
    support_coefs: np.ndarray  # LS solution over c
    pruned: np.ndarray        # q, kappa strongest atoms of c
    pruned_coefs: np.ndarray  # LS solution over q
    residual: np.ndarray
    delta: float


@dataclass
class GompResult:
    x_hat: SparseVector
    iterations: int
    converged: bool
    final_delta: float
    residual_norm_history: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def residual_norm(self):
        return self.residual_norm_history[-1] if self.residual_norm_history else 0.0


def _matrix(a):
    return a.matrix if isinstance(a, Dictionary) else np.asarray(a, dtype=complex)


def step_identify(a, r, G, exclude=()):
    """Indices of the ``G`` atoms most correlated with ``r``, skipping ``exclude``."""
    mat = _matrix(a)
    r = np.asarray(r, dtype=complex)
    if r.shape != (mat.shape[0],):
        raise ContractViolation(f"residual length {r.shape} does not match {mat.shape[0]} rows")
    candidates = np.setdiff1d(np.arange(mat.shape[1]), np.asarray(list(exclude), dtype=int))
    if candidates.size == 0:
        return np.empty(0, dtype=int)
    p = mat[:, candidates].conj().T @ r
    picked = argmax_k(np.abs(p), min(G, candidates.size))
    return candidates[picked]


def step_estimate(a, support, y):
    mat = _matrix(a)
    support = np.asarray(support, dtype=int)
    if support.size == 0:
        raise ContractViolation("step_estimate needs a nonempty support")
    if support.size > mat.shape[0]:
        raise ContractViolation(
            f"support of {support.size} atoms exceeds {mat.shape[0]} measurements"
        )
    if np.unique(support).size != support.size:
        raise ContractViolation("support indices must be distinct")
    try:
        return least_squares_solve(mat[:, support], y)
    except RankDeficientError as exc:
        raise RankDeficientError(exc.rank, exc.cols, support.tolist()) from None


def step_prune(x_candidate, kappa):
    """Indices of the ``kappa`` largest-modulus entries (all nonzeros if fewer)."""
    mod = np.abs(np.asarray(x_candidate))
    nnz = np.flatnonzero(mod)
    if nnz.size <= kappa:
        return nnz
    return argmax_k(mod, kappa)


def step_residual(y, a, x, prev_r):
    mat = _matrix(a)
    x = np.asarray(x, dtype=complex)
    if x.shape != (mat.shape[1],) or np.shape(y) != (mat.shape[0],) or np.shape(prev_r) != (mat.shape[0],):
        raise ContractViolation("step_residual dimension mismatch")
    r = np.asarray(y, dtype=complex) - mat @ x
    return r, l2_norm(r - prev_r)


def gomp_recover(y, a, config, callback: Optional[Callable[[IterationRecord], None]] = None):
    """Recover a ``config.kappa``-sparse ``x`` with ``a @ x ~= y``.

    ``a`` is a :class:`Dictionary` or a plain matrix. ``callback`` (if
    given) receives an :class:`IterationRecord` after every iteration.
    Raises :class:`SupportOverflowError` if the accumulated support would
    need more atoms than there are measurements.
    """
    t0 = time.perf_counter()
    mat = _matrix(a)
    rows, cols = mat.shape
    y = np.asarray(y)
    if y.shape != (rows,):
        raise ContractViolation(f"measurement length {y.shape} does not match {rows} rows")
    if not np.all(np.isfinite(y)):
        raise ContractViolation("measurement has non-finite values")
    if cols < config.kappa:
        raise ContractViolation(f"dictionary has {cols} atoms but kappa={config.kappa}")
    y = y.astype(complex)

    y_norm = l2_norm(y)
    x = np.zeros(cols, dtype=complex)
    if y_norm <= config.zero_input_tol:
        return GompResult(SparseVector(x, 0), 0, True, 0.0, [], time.perf_counter() - t0)

    eps = config.stopping_threshold(y_norm)
    state = GompState(0, y, y, [], 1.0)
    history = []
    cap = config.iteration_cap
    # always enter the loop once, even when eps exceeds the initial delta
    while state.iteration == 0 or (state.delta >= eps and state.iteration < cap):
        theta = step_identify(mat, state.residual, config.group_size, state.support)
        support = state.support + theta.tolist()
        if len(support) > rows:
            raise SupportOverflowError(len(support), rows, state.iteration)

        s = step_estimate(mat, support, y)
        x = np.zeros(cols, dtype=complex)
        x[support] = s
        q = step_prune(x, config.kappa)
        if q.size:
            s_q = step_estimate(mat, q, y)
        else:
            s_q = np.empty(0, dtype=complex)
        x = np.zeros(cols, dtype=complex)
        x[q] = s_q

        r, delta = step_residual(y, mat, x, state.residual)
        state = GompState(state.iteration + 1, r, state.residual, support, delta)
        history.append(l2_norm(r))
        if callback is not None:
            callback(IterationRecord(
                state.iteration, theta, np.asarray(support), s, q, s_q, r, delta,
            ))

    return GompResult(
        SparseVector(x, int(np.count_nonzero(x))),
        state.iteration,
        state.delta < eps,
        state.delta,
        history,
        time.perf_counter() - t0,
    )
