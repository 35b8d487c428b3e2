"""Problem instance, solver configuration and trace types shared by all solvers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
import scipy.sparse as sp


class InstanceError(ValueError):
    """Base class for rejected classification instances."""


class EmptyInstanceError(InstanceError):
    pass


class LabelError(InstanceError):
    pass


class NonFiniteError(InstanceError):
    pass


Matrix = Union[np.ndarray, sp.csr_matrix]


@dataclass(frozen=True, eq=False)
class ClassificationInstance:
    """Design matrix with the +/-1 labels already folded into its rows.

    After folding every target is +1, so row i is classified correctly by x
    exactly when ``(A @ x)[i] > 0``. ``rows`` is either a dense float64 array
    or a CSR matrix; use :meth:`matvec` / :meth:`rmatvec` rather than touching
    it directly.
    """

    rows: Matrix
    m: int
    n: int
    entry_bound_M: float

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise EmptyInstanceError(f"instance must be non-empty, got {self.m}x{self.n}")
        data = self.rows.data if sp.issparse(self.rows) else self.rows
        if not np.all(np.isfinite(data)):
            raise NonFiniteError("matrix contains non-finite entries")
        bound = float(np.max(np.abs(data))) if data.size else 0.0
        object.__setattr__(self, "entry_bound_M", bound)
        if bound <= 0.0:
            raise EmptyInstanceError("matrix has no nonzero entry")
        if not sp.issparse(self.rows):
            self.rows.setflags(write=False)

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.rows)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.rows @ x, dtype=np.float64).ravel()

    def rmatvec(self, r: np.ndarray) -> np.ndarray:
        return np.asarray(self.rows.T @ r, dtype=np.float64).ravel()

    def column(self, j: int) -> np.ndarray:
        if self.is_sparse:
            return self.rows[:, [j]].toarray().ravel()
        return np.asarray(self.rows[:, j])

    def dense(self) -> np.ndarray:
        return self.rows.toarray() if self.is_sparse else np.array(self.rows)

    def subset_rows(self, keep: np.ndarray) -> "ClassificationInstance":
        idx = np.flatnonzero(keep) if np.asarray(keep).dtype == bool else np.asarray(keep)
        if idx.size == 0:
            raise EmptyInstanceError("no rows selected")
        sub = self.rows[idx]
        if not self.is_sparse:
            sub = np.ascontiguousarray(sub)
        return _from_folded(sub)

    def subset_columns(self, cols) -> "ClassificationInstance":
        cols = np.asarray(cols, dtype=np.intp)
        sub = self.rows[:, cols]
        if self.is_sparse:
            sub = sp.csr_matrix(sub)
        else:
            sub = np.ascontiguousarray(sub)
        return _from_folded(sub)


def _from_folded(rows: Matrix) -> ClassificationInstance:
    m, n = rows.shape
    return ClassificationInstance(rows=rows, m=int(m), n=int(n), entry_bound_M=0.0)


def new_instance(matrix, labels) -> ClassificationInstance:
    """Fold ``labels`` into ``matrix`` row by row.

    ``matrix`` may be any array-like or scipy sparse matrix; sparse inputs are
    stored as CSR. Raises EmptyInstanceError, LabelError or NonFiniteError.
    """
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if sp.issparse(matrix):
        rows = sp.csr_matrix(matrix, dtype=np.float64)
    else:
        rows = np.array(matrix, dtype=np.float64, ndmin=2)
        if rows.ndim != 2:
            raise EmptyInstanceError(f"expected a 2-d matrix, got shape {rows.shape}")
    m, n = rows.shape
    if m == 0 or n == 0:
        raise EmptyInstanceError(f"instance must be non-empty, got {m}x{n}")
    if labels.shape[0] != m:
        raise LabelError(f"got {labels.shape[0]} labels for {m} rows")
    if not np.all((labels == 1.0) | (labels == -1.0)):
        bad = labels[(labels != 1.0) & (labels != -1.0)][0]
        raise LabelError(f"labels must be +1 or -1, got {bad!r}")
    data = rows.data if sp.issparse(rows) else rows
    if not np.all(np.isfinite(data)):
        raise NonFiniteError("matrix contains non-finite entries")
    if sp.issparse(rows):
        rows = sp.csr_matrix(sp.diags(labels) @ rows)
        rows.sort_indices()
    else:
        rows = rows * labels[:, None]
    return _from_folded(rows)


class LambdaPolicy(str, enum.Enum):
    ADAPTIVE = "adaptive"
    CONSTANT = "constant"


class Termination(str, enum.Enum):
    BUDGET_EXHAUSTED = "budget_exhausted"
    LOSS_TARGET_REACHED = "loss_target_reached"
    GRAD_TARGET_REACHED = "grad_target_reached"


STEP_POLICIES = ("coordinate", "variable_gd", "fixed_gd", "heuristic_gd")


@dataclass
class SolverConfig:
    """Knobs shared by the coordinate and gradient solvers.

    The loss target is ``(1 + delta) * reference_loss + epsilon`` when a
    reference loss is known (for example the loss of a planted solution)
    and plain ``epsilon`` otherwise. ``lambda_constant`` is only read when
    ``lambda_policy`` is CONSTANT.
    """

    max_iters: int
    box_bound_B: Optional[float] = None
    l1_estimate_B1: Optional[float] = None
    delta: float = 0.1
    epsilon: Optional[float] = None
    lambda_policy: LambdaPolicy = LambdaPolicy.ADAPTIVE
    lambda_constant: float = 1.0
    step_policy: str = "coordinate"
    tol_grad: Optional[float] = None
    reference_loss: Optional[float] = None

    def __post_init__(self):
        self.lambda_policy = LambdaPolicy(self.lambda_policy)
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be a positive integer")
        self.max_iters = int(self.max_iters)
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.box_bound_B is not None and not self.box_bound_B > 0:
            raise ValueError("B must be positive")
        if self.l1_estimate_B1 is not None and not self.l1_estimate_B1 > 0:
            raise ValueError("B1 must be positive")
        if not 0.0 < self.lambda_constant <= 1.0:
            raise ValueError("constant lambda must lie in (0, 1]")
        if self.step_policy not in STEP_POLICIES:
            raise ValueError(f"unknown step policy {self.step_policy!r}")
        if self.tol_grad is not None and not self.tol_grad > 0:
            raise ValueError("tol_grad must be positive")

    @property
    def B1(self) -> Optional[float]:
        # B approximates ||x*||_1 when no better estimate is supplied
        return self.l1_estimate_B1 if self.l1_estimate_B1 is not None else self.box_bound_B

    def loss_target(self) -> Optional[float]:
        eps = self.epsilon if self.epsilon is not None else 0.0
        if self.reference_loss is not None:
            return (1.0 + self.delta) * self.reference_loss + eps
        return self.epsilon

    def check_epsilon_range(self, m: int) -> None:
        """Reject epsilon outside (0, m/2), the range the convergence guarantees assume."""
        if self.epsilon is None or not 0.0 < self.epsilon < m / 2:
            raise ValueError(f"guarantee range needs 0 < epsilon < m/2 = {m / 2}")


@dataclass
class IterateRecord:
    iter: int
    loss: float
    grad_inf: float
    grad_l2: float
    step_size: float
    nnz: int
    chosen_coord: Optional[int] = None
    wall_ns: int = 0


TRACE_FIELDS = ("iter", "loss", "grad_inf", "grad_l2", "step_size", "nnz", "chosen_coord", "wall_ns")


@dataclass
class SolveResult:
    """Final iterate plus one record per executed iteration.

    Record ``t`` describes the iterate *after* step ``t`` (t = 1..T); the
    starting loss is kept separately in ``initial_loss``.
    """

    solution: np.ndarray
    trace: List[IterateRecord]
    termination: Termination
    initial_loss: float
    notes: dict = field(default_factory=dict)

    @property
    def final_loss(self) -> float:
        return self.trace[-1].loss if self.trace else self.initial_loss

    @property
    def losses(self) -> np.ndarray:
        return np.array([self.initial_loss] + [r.loss for r in self.trace])


class ConstantsMode(str, enum.Enum):
    EMPIRICAL = "empirical"
    CONSERVATIVE = "conservative"


@dataclass(frozen=True)
class SmoothnessConstants:
    """beta = ||A||_2^2 and the multiplicative-smoothness / robustness constants
    derived from it.

    empirical:    mu = beta / m,  gamma = 2 sqrt(beta)
    conservative: mu = beta,      gamma = 2 sqrt(beta)
    """

    beta: float
    mu: float
    gamma: float
    mode: ConstantsMode

    @classmethod
    def from_beta(cls, beta: float, m: int, mode) -> "SmoothnessConstants":
        mode = ConstantsMode(mode)
        mu = beta / m if mode is ConstantsMode.EMPIRICAL else beta
        return cls(beta=beta, mu=mu, gamma=2.0 * math.sqrt(beta), mode=mode)
