"""Full-gradient solvers: loss-adaptive variable step, fixed step, and the
increasing step ``beta^-1 f(x0) / f(xt)``."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import logistic
from .diagnostics import spectral_norm_sq
from .model import (
    ClassificationInstance,
    ConstantsMode,
    IterateRecord,
    SmoothnessConstants,
    SolveResult,
    SolverConfig,
    Termination,
)

logger = logging.getLogger(__name__)

MAX_HALVINGS = 30
TINY_LOSS = 1e-300


@dataclass(frozen=True)
class StepPolicy:
    kind: str
    mu: float = 0.0
    gamma: float = 0.0
    eta: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind == "variable":
            ok = self.mu > 0 and self.gamma > 0
        elif self.kind == "fixed":
            ok = self.eta > 0
        elif self.kind == "heuristic":
            ok = self.beta > 0
        else:
            raise ValueError(f"unknown step policy kind {self.kind!r}")
        if not ok:
            raise ValueError(f"invalid parameters for {self.kind} policy: {self}")

    @classmethod
    def variable(cls, mu: float, gamma: float) -> "StepPolicy":
        return cls("variable", mu=mu, gamma=gamma)

    @classmethod
    def fixed(cls, eta: float) -> "StepPolicy":
        return cls("fixed", eta=eta)

    @classmethod
    def heuristic(cls, beta: float) -> "StepPolicy":
        return cls("heuristic", beta=beta)

    @classmethod
    def from_constants(cls, constants: SmoothnessConstants) -> "StepPolicy":
        return cls.variable(constants.mu, constants.gamma)

    def conservative(self) -> "StepPolicy":
        # gamma = 2 sqrt(beta) in both modes, so beta is recoverable from gamma
        beta = (self.gamma / 2.0) ** 2
        return StepPolicy.variable(beta, self.gamma)


def step_size(policy: StepPolicy, f0: float, f_t: float, grad_l2: float) -> float:
    if policy.kind == "variable":
        by_loss = 1.0 / (2.0 * policy.mu * f_t)
        by_grad = math.inf if grad_l2 == 0.0 else 1.0 / (policy.gamma * grad_l2)
        return min(by_loss, by_grad)
    if policy.kind == "fixed":
        return policy.eta
    return f0 / (policy.beta * f_t)


def gd_step(instance: ClassificationInstance, state: logistic.LossState, x, eta: float, grad=None):
    if not eta > 0:
        raise ValueError("step size must be positive")
    if grad is None:
        grad = logistic.gradient(instance, state)
    return np.asarray(x, dtype=np.float64) - eta * grad


def default_constants(instance: ClassificationInstance, mode="empirical") -> SmoothnessConstants:
    beta = spectral_norm_sq(instance)
    return SmoothnessConstants.from_beta(beta, instance.m, mode)


def _progress_ok(f_old: float, f_new: float, eta: float, grad_sq: float) -> bool:
    return f_old - f_new >= 0.5 * eta * grad_sq


def _safeguarded_step(instance, state, x, grad, grad_l2, policy, f0):
    """Variable-policy step that enforces f(x) - f(x') >= (eta/2) ||g||^2.

    The step is halved on violation; after MAX_HALVINGS failures the
    conservative constants are used instead. Returns (x', state', eta, info)
    or None when no trial step achieves the bound (progress below rounding).
    """
    grad_sq = grad_l2 * grad_l2
    eta = step_size(policy, f0, state.loss, grad_l2)
    for _ in range(MAX_HALVINGS + 1):
        x_new = x - eta * grad
        new_state = logistic.evaluate(instance, x_new)
        if _progress_ok(state.loss, new_state.loss, eta, grad_sq):
            return x_new, new_state, eta, None
        eta *= 0.5
    logger.debug("progress check failed %d times, using conservative constants", MAX_HALVINGS)
    fallback = policy.conservative()
    eta = step_size(fallback, f0, state.loss, grad_l2)
    for _ in range(MAX_HALVINGS + 1):
        x_new = x - eta * grad
        new_state = logistic.evaluate(instance, x_new)
        if _progress_ok(state.loss, new_state.loss, eta, grad_sq):
            return x_new, new_state, eta, "conservative"
        eta *= 0.5
    return None


Callback = Callable[[int, np.ndarray, logistic.LossState, np.ndarray], None]


def solve_gd(
    instance: ClassificationInstance,
    x0,
    policy: StepPolicy,
    config: SolverConfig,
    callback: Optional[Callback] = None,
) -> SolveResult:
    """Gradient descent ``x <- x - eta_t grad f(x)`` with ``eta_t`` from ``policy``.

    Stops after ``config.max_iters`` steps, when the loss reaches
    ``config.loss_target()``, or (if ``config.tol_grad`` is set) when
    ``||grad f||_inf <= tol_grad``. ``callback(t, x, state, grad)`` sees every
    iterate, including the starting point.
    """
    x = np.array(x0, dtype=np.float64)
    state = logistic.evaluate(instance, x)
    grad = logistic.gradient(instance, state)
    f0 = state.loss
    target = config.loss_target()
    trace = []
    fallbacks = 0
    start = time.perf_counter_ns()

    def stop_reason(state, grad):
        if state.loss < TINY_LOSS or (target is not None and state.loss <= target):
            return Termination.LOSS_TARGET_REACHED
        if config.tol_grad is not None and np.max(np.abs(grad)) <= config.tol_grad:
            return Termination.GRAD_TARGET_REACHED
        return None

    if callback is not None:
        callback(0, x, state, grad)
    termination = stop_reason(state, grad)
    t = 0
    while termination is None and t < config.max_iters:
        grad_l2 = float(np.linalg.norm(grad))
        if policy.kind == "variable":
            if grad_l2 == 0.0:
                termination = Termination.GRAD_TARGET_REACHED
                break
            stepped = _safeguarded_step(instance, state, x, grad, grad_l2, policy, f0)
            if stepped is None:
                # no step size yields measurable progress at this precision
                termination = Termination.GRAD_TARGET_REACHED
                break
            x, state, eta, info = stepped
            fallbacks += info is not None
        else:
            eta = step_size(policy, f0, state.loss, grad_l2)
            x = gd_step(instance, state, x, eta, grad)
            state = logistic.evaluate(instance, x)
        if not math.isfinite(state.loss):
            raise FloatingPointError(f"loss became non-finite at iteration {t + 1}")
        grad = logistic.gradient(instance, state)
        t += 1
        trace.append(
            IterateRecord(
                iter=t,
                loss=state.loss,
                grad_inf=float(np.max(np.abs(grad))),
                grad_l2=float(np.linalg.norm(grad)),
                step_size=eta,
                nnz=int(np.count_nonzero(x)),
                chosen_coord=None,
                wall_ns=time.perf_counter_ns() - start,
            )
        )
        if callback is not None:
            callback(t, x, state, grad)
        termination = stop_reason(state, grad)
    if termination is None:
        termination = Termination.BUDGET_EXHAUSTED
    return SolveResult(
        solution=x,
        trace=trace,
        termination=termination,
        initial_loss=f0,
        notes={"conservative_fallbacks": fallbacks},
    )


def make_policy(kind: str, constants: SmoothnessConstants) -> StepPolicy:
    """Build one of the three policies compared in the experiments from beta."""
    if kind == "variable":
        return StepPolicy.from_constants(constants)
    if kind == "fixed":
        return StepPolicy.fixed(1.0 / constants.beta)
    if kind == "heuristic":
        return StepPolicy.heuristic(constants.beta)
    raise ValueError(f"unknown policy {kind!r}")


def variable_policy(instance: ClassificationInstance, mode=ConstantsMode.EMPIRICAL) -> StepPolicy:
    return StepPolicy.from_constants(default_constants(instance, mode))
