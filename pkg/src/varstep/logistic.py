"""Numerically stable logistic loss, gradient and curvature quantities.

All functions work on a folded :class:`ClassificationInstance`, so the loss is
``f(x) = sum_i log(1 + exp(-(A x)_i))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ClassificationInstance


class DegenerateDirection(ArithmeticError):
    """The sampled direction has (numerically) zero image under A."""


def softplus_neg(z: np.ndarray) -> np.ndarray:
    """log(1 + exp(-z)), branch-wise so that neither side overflows."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = np.log1p(np.exp(-z[pos]))
    neg = ~pos
    out[neg] = -z[neg] + np.log1p(np.exp(z[neg]))
    return out


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_curvature(z: np.ndarray) -> np.ndarray:
    """log w(z) = log sigma(z) + log(1 - sigma(z)), finite for every finite z."""
    z = np.asarray(z, dtype=np.float64)
    return -(softplus_neg(z) + softplus_neg(-z))


@dataclass(frozen=True)
class LossState:
    margins: np.ndarray
    loss: float
    residuals: np.ndarray
    weights: np.ndarray


def _check_x(instance: ClassificationInstance, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (instance.n,):
        raise ValueError(f"expected a vector of length {instance.n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains non-finite entries")
    return x


def state_from_margins(margins: np.ndarray) -> LossState:
    margins = np.asarray(margins, dtype=np.float64)
    residuals = sigmoid(-margins)  # 1 - sigma(z) without cancellation
    weights = np.maximum(sigmoid(margins) * residuals, 0.0)
    loss = float(np.sum(softplus_neg(margins)))
    for arr in (margins, residuals, weights):
        arr.setflags(write=False)
    return LossState(margins=margins, loss=loss, residuals=residuals, weights=weights)


def evaluate(instance: ClassificationInstance, x) -> LossState:
    x = _check_x(instance, x)
    return state_from_margins(instance.matvec(x))


def gradient(instance: ClassificationInstance, state: LossState) -> np.ndarray:
    if state.residuals.shape != (instance.m,):
        raise ValueError("loss state does not belong to this instance")
    return -instance.rmatvec(state.residuals)


def hessian_quadratic_form(instance: ClassificationInstance, state: LossState, d) -> float:
    """d^T H(x) d = sum_i w_i (A d)_i^2."""
    d = _check_x(instance, d)
    if state.weights.shape != (instance.m,):
        raise ValueError("loss state does not belong to this instance")
    ad = instance.matvec(d)
    return float(np.dot(state.weights, ad * ad))


def l2_smoothness_ratio(instance: ClassificationInstance, state: LossState, grad=None) -> float:
    """<w, (A g)^2> / (f m^-1 ||A g||^2) with g the gradient at ``state``.

    Values below 1 mean the loss is locally (beta/m)-multiplicatively smooth
    along the gradient direction.
    """
    if grad is None:
        grad = gradient(instance, state)
    ag = instance.matvec(grad)
    denom = float(np.dot(ag, ag))
    if denom < 1e-300 or state.loss <= 0.0:
        raise DegenerateDirection("||A grad f||^2 is numerically zero")
    num = float(np.dot(state.weights, ag * ag))
    return num * instance.m / (state.loss * denom)


def hessian_stability_check(instance: ClassificationInstance, x, x_prime) -> bool:
    """True iff every curvature weight changes by at most a factor 2 between x and x'.

    Only defined inside the l1 ball of radius 1/(2M) around x, where the
    answer is guaranteed to be True; points outside are rejected.
    """
    x = _check_x(instance, x)
    x_prime = _check_x(instance, x_prime)
    radius = 1.0 / (2.0 * instance.entry_bound_M)
    dist = float(np.sum(np.abs(x_prime - x)))
    # relative slack absorbs rounding when the perturbation is scaled onto the sphere
    if dist > radius * (1.0 + 1e-12):
        raise ValueError(f"||x' - x||_1 = {dist:g} exceeds the stability radius {radius:g}")
    lw = log_curvature(instance.matvec(x))
    lw_prime = log_curvature(instance.matvec(x_prime))
    return bool(np.all(np.abs(lw_prime - lw) <= np.log(2.0)))
