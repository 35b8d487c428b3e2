"""Greedy coordinate descent with a loss-inverse step, and its fully
corrective variant.

Coordinates are 0-based throughout; argmax ties go to the smallest index.
"""

from __future__ import annotations

import logging
import math
import time
from typing import Optional, Sequence

import numpy as np

from . import logistic
from .dense_gd import Callback, TINY_LOSS, solve_gd, variable_policy
from .model import (
    ClassificationInstance,
    IterateRecord,
    LambdaPolicy,
    SolveResult,
    SolverConfig,
    Termination,
)

logger = logging.getLogger(__name__)

STATIONARY_RTOL = 1e-14


class Stationary(ArithmeticError):
    """Every weighted gradient entry is numerically zero."""


class SubproblemNotConverged(RuntimeError):
    """The support-restricted solve ran out of budget; ``x`` is its best iterate."""

    def __init__(self, x: np.ndarray, grad_inf: float, tol: float):
        super().__init__(f"restricted gradient {grad_inf:.3g} above tolerance {tol:.3g}")
        self.x = x
        self.grad_inf = grad_inf


def lambda_schedule(x, B1: float) -> float:
    """min{B1 / ||x||_1, 1}, taken as 1 at x = 0."""
    if not B1 > 0:
        raise ValueError("B1 must be positive")
    l1 = float(np.sum(np.abs(x)))
    if l1 == 0.0:
        return 1.0
    return min(B1 / l1, 1.0)


def zeta_weights(x, grad, lambda_t: float, B: float) -> np.ndarray:
    """Selection weights: lambda_t on zero coordinates, 0 on coordinates at the
    box bound whose gradient step would push them further out, 1 elsewhere."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    frozen = (np.abs(x) >= B) & (grad * x < 0)
    zeta = np.where(frozen, 0.0, 1.0)
    zeta[x == 0] = lambda_t
    return zeta


def coordinate_update(x, grad, zeta, loss: float, M: float):
    """Move the coordinate maximising zeta_i |grad_i| by -grad_i / (2 M^2 f).

    Returns ``(x_next, coord, eta)``; raises Stationary when the best weighted
    entry is below ``1e-14 * M * f``.
    """
    if not loss > 0:
        raise ValueError("loss must be positive")
    scores = np.asarray(zeta) * np.abs(grad)
    coord = int(np.argmax(scores))
    if scores[coord] <= STATIONARY_RTOL * M * loss:
        raise Stationary(f"max weighted gradient {scores[coord]:.3g}")
    eta = 1.0 / (2.0 * M * M * loss)
    x_next = np.array(x, dtype=np.float64)
    x_next[coord] -= eta * grad[coord]
    return x_next, coord, eta


def greedy_cd_step(instance: ClassificationInstance, state: logistic.LossState, x, zeta, grad=None):
    if grad is None:
        grad = logistic.gradient(instance, state)
    return coordinate_update(x, grad, zeta, state.loss, instance.entry_bound_M)


def _record(t, state, grad, eta, x, coord, start):
    return IterateRecord(
        iter=t,
        loss=state.loss,
        grad_inf=float(np.max(np.abs(grad))),
        grad_l2=float(np.linalg.norm(grad)),
        step_size=eta,
        nnz=int(np.count_nonzero(x)),
        chosen_coord=coord,
        wall_ns=time.perf_counter_ns() - start,
    )


def greedy_cd(instance: ClassificationInstance, x0, config: SolverConfig,
              callback: Optional[Callback] = None) -> SolveResult:
    """Greedy coordinate descent with step 1/(2 M^2 f(x)).

    ``config.box_bound_B`` is required. With the adaptive lambda policy zero
    coordinates are discounted by min{B1/||x||_1, 1}; a constant lambda of 1
    gives the dense variant.
    """
    if config.box_bound_B is None:
        raise ValueError("greedy coordinate descent needs the box bound B")
    if config.reference_loss is not None and config.epsilon is not None:
        config.check_epsilon_range(instance.m)
    B = config.box_bound_B
    M = instance.entry_bound_M
    target = config.loss_target()
    x = np.array(x0, dtype=np.float64)
    state = logistic.evaluate(instance, x)
    grad = logistic.gradient(instance, state)
    f0 = state.loss
    trace = []
    start = time.perf_counter_ns()
    if callback is not None:
        callback(0, x, state, grad)

    termination = None
    for t in range(1, config.max_iters + 1):
        if state.loss < TINY_LOSS or (target is not None and state.loss <= target):
            termination = Termination.LOSS_TARGET_REACHED
            break
        if config.lambda_policy is LambdaPolicy.ADAPTIVE:
            lam = lambda_schedule(x, config.B1)
        else:
            lam = config.lambda_constant
        zeta = zeta_weights(x, grad, lam, B)
        try:
            x, coord, eta = coordinate_update(x, grad, zeta, state.loss, M)
        except Stationary:
            termination = Termination.GRAD_TARGET_REACHED
            break
        state = logistic.evaluate(instance, x)
        grad = logistic.gradient(instance, state)
        trace.append(_record(t, state, grad, eta, x, coord, start))
        if callback is not None:
            callback(t, x, state, grad)
    if termination is None:
        if state.loss < TINY_LOSS or (target is not None and state.loss <= target):
            termination = Termination.LOSS_TARGET_REACHED
        else:
            termination = Termination.BUDGET_EXHAUSTED
    return SolveResult(solution=x, trace=trace, termination=termination, initial_loss=f0)


def default_tol_grad(instance: ClassificationInstance) -> float:
    return 1e-10 * instance.m


def _newton_restricted(sub: ClassificationInstance, z0: np.ndarray, tol_grad: float,
                       max_iters: int) -> np.ndarray:
    """Damped Newton with Armijo backtracking on a (small) column submatrix."""
    A = sub.dense()
    z = z0.copy()
    state = logistic.evaluate(sub, z)
    for _ in range(max_iters):
        grad = logistic.gradient(sub, state)
        if np.max(np.abs(grad)) <= tol_grad or state.loss < TINY_LOSS:
            break
        H = A.T @ (state.weights[:, None] * A)
        ridge = 1e-12 * max(float(np.max(np.diag(H))), 1e-300)
        try:
            d = -np.linalg.solve(H + ridge * np.eye(sub.n), grad)
        except np.linalg.LinAlgError:
            d = -grad
        slope = float(grad @ d)
        if not slope < 0:
            d, slope = -grad, -float(grad @ grad)
        t = 1.0
        while t > 1e-20:
            trial = logistic.evaluate(sub, z + t * d)
            if trial.loss <= state.loss + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            break
        z = z + t * d
        state = trial
    return z


def restricted_minimize(instance: ClassificationInstance, support: Sequence[int], x_init,
                        tol_grad: Optional[float] = None,
                        max_inner: Optional[int] = None,
                        method: str = "newton") -> np.ndarray:
    """Minimise f over vectors supported on ``support``, starting from ``x_init``.

    Iterates until the restricted gradient is within ``tol_grad`` in the max
    norm. ``method="newton"`` (default, budget 200) uses damped Newton on the
    column submatrix; ``method="gd"`` runs variable-step gradient descent with
    the submatrix's empirical constants (budget 10 |S|^2), which is cheap per
    step but slow on nearly separable supports. Running out of budget raises
    SubproblemNotConverged carrying the best iterate.
    """
    x_init = np.asarray(x_init, dtype=np.float64)
    support = np.array(sorted(set(int(i) for i in support)), dtype=np.intp)
    outside = np.ones(instance.n, dtype=bool)
    outside[support] = False
    if np.any(x_init[outside] != 0):
        raise ValueError("x_init has nonzeros outside the support")
    if support.size == 0:
        return np.zeros(instance.n)
    if tol_grad is None:
        tol_grad = default_tol_grad(instance)

    sub = instance.subset_columns(support)
    if method == "newton":
        z = _newton_restricted(sub, x_init[support], tol_grad, 200 if max_inner is None else max_inner)
    elif method == "gd":
        budget = 10 * support.size ** 2 if max_inner is None else max_inner
        z = solve_gd(sub, x_init[support], variable_policy(sub),
                     SolverConfig(max_iters=budget, tol_grad=tol_grad)).solution
    else:
        raise ValueError(f"unknown method {method!r}")
    x = np.zeros(instance.n)
    x[support] = z
    grad_inf = float(np.max(np.abs(logistic.gradient(sub, logistic.evaluate(sub, z)))))
    if grad_inf > tol_grad:
        raise SubproblemNotConverged(x, grad_inf, tol_grad)
    return x


def fully_corrective_cd(instance: ClassificationInstance, x0, T: int,
                        tol_grad: Optional[float] = None, *,
                        max_inner: Optional[int] = None,
                        method: str = "newton",
                        loss_target: Optional[float] = None,
                        callback: Optional[Callback] = None) -> SolveResult:
    """Greedy coordinate selection by max |grad_i|, each followed by a full
    re-optimisation over the grown support.

    ``notes["support_grad_inf"]`` holds the restricted gradient max-norm after
    every correction and ``notes["unconverged"]`` counts corrections that hit
    the inner budget.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if tol_grad is None:
        tol_grad = default_tol_grad(instance)
    M = instance.entry_bound_M
    x = np.array(x0, dtype=np.float64)
    support = set(np.flatnonzero(x).tolist())
    state = logistic.evaluate(instance, x)
    grad = logistic.gradient(instance, state)
    f0 = state.loss
    trace = []
    support_grad, sizes = [], []
    unconverged = 0
    start = time.perf_counter_ns()
    if callback is not None:
        callback(0, x, state, grad)

    termination = None
    for t in range(1, T + 1):
        if state.loss < TINY_LOSS or (loss_target is not None and state.loss <= loss_target):
            termination = Termination.LOSS_TARGET_REACHED
            break
        coord = int(np.argmax(np.abs(grad)))
        if abs(grad[coord]) <= STATIONARY_RTOL * M * state.loss:
            termination = Termination.GRAD_TARGET_REACHED
            break
        support.add(coord)
        try:
            x = restricted_minimize(instance, sorted(support), x, tol_grad, max_inner, method)
        except SubproblemNotConverged as exc:
            logger.info("correction %d not converged: %s", t, exc)
            unconverged += 1
            x = exc.x
        state = logistic.evaluate(instance, x)
        grad = logistic.gradient(instance, state)
        idx = sorted(support)
        support_grad.append(float(np.max(np.abs(grad[idx]))))
        sizes.append(len(idx))
        trace.append(_record(t, state, grad, math.nan, x, coord, start))
        if callback is not None:
            callback(t, x, state, grad)
    if termination is None:
        if state.loss < TINY_LOSS or (loss_target is not None and state.loss <= loss_target):
            termination = Termination.LOSS_TARGET_REACHED
        else:
            termination = Termination.BUDGET_EXHAUSTED
    return SolveResult(
        solution=x,
        trace=trace,
        termination=termination,
        initial_loss=f0,
        notes={"support_grad_inf": support_grad, "support_sizes": sizes, "unconverged": unconverged},
    )
