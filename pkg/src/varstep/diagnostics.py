"""Spectral norm estimation, the max-ratio smoothness experiment, estimator
error and separability checks."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from . import logistic
from .model import ClassificationInstance, SolverConfig

logger = logging.getLogger(__name__)

POWER_SEED = 20230
POWER_MAX_ITERS = 10_000


def spectral_norm_sq(instance: ClassificationInstance, tol: float = 1e-8,
                     max_iters: int = POWER_MAX_ITERS, seed: int = POWER_SEED) -> float:
    """beta = ||A||_2^2 by power iteration on A^T A.

    Stops once the Rayleigh quotient has changed by less than ``tol``
    (relative) on three consecutive iterations.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    v = np.random.default_rng(seed).standard_normal(instance.n)
    v /= np.linalg.norm(v)
    rayleigh = 0.0
    calm = 0
    for _ in range(max_iters):
        w = instance.rmatvec(instance.matvec(v))
        new = float(np.dot(v, w))
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        if abs(new - rayleigh) <= tol * abs(new):
            calm += 1
            if calm >= 3:
                return new
        else:
            calm = 0
        rayleigh = new
        v = w / norm_w
    logger.warning("power iteration hit %d iterations without settling", max_iters)
    return rayleigh


@dataclass
class RatioReport:
    dataset_name: str
    iterations: int
    max_ratio: float
    ratio_trace: List[float]
    skipped: int = 0
    sample_iters: List[int] = field(default_factory=list)


def max_ratio_experiment(instance: ClassificationInstance, iters: int = 1000, policy=None,
                         dataset_name: str = "") -> RatioReport:
    """Largest l2 smoothness ratio over the first ``iters`` gradient descent
    iterates from zero (the starting point counts as the first).

    ``policy`` defaults to the variable step with empirical constants.
    """
    from .dense_gd import solve_gd, variable_policy

    if iters < 1:
        raise ValueError("iters must be >= 1")
    if policy is None:
        policy = variable_policy(instance)
    ratios: List[float] = []
    at: List[int] = []
    skipped = 0

    def sample(t, x, state, grad):
        nonlocal skipped
        if t >= iters:
            return
        try:
            ratios.append(logistic.l2_smoothness_ratio(instance, state, grad))
            at.append(t)
        except logistic.DegenerateDirection:
            skipped += 1

    solve_gd(instance, np.zeros(instance.n), policy, SolverConfig(max_iters=max(iters - 1, 1)),
             callback=sample)
    max_ratio = max(ratios) if ratios else float("nan")
    return RatioReport(dataset_name, iters, max_ratio, ratios, skipped, at)


def estimator_error(x, x_star) -> float:
    """|| x/||x|| - x*/||x*|| ||_2, the distance between directions (in [0, 2])."""
    x = np.asarray(x, dtype=np.float64)
    x_star = np.asarray(x_star, dtype=np.float64)
    nx, ns = np.linalg.norm(x), np.linalg.norm(x_star)
    if nx == 0.0 or ns == 0.0:
        raise ValueError("direction of a zero vector is undefined")
    return float(np.linalg.norm(x / nx - x_star / ns))


def separability_check(instance: ClassificationInstance, x) -> Tuple[bool, float]:
    margins = instance.matvec(np.asarray(x, dtype=np.float64))
    min_margin = float(np.min(margins))
    return min_margin > 0.0, min_margin

