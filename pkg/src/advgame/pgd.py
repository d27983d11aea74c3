"""Projected gradient descent on the weighted attack objective.

First-order best response for models where region enumeration is unavailable
(networks) or relaxed losses are wanted. Minimizes the mixture's
still-correct surrogate loss over the budget ball with normalized-gradient
steps, optionally keeping the perturbed point inside the pixel box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import as_vector, check_label
from .classifiers import ClassifierSet
from .geometry import AttackBudget
from .losses import LossKind, weighted_objective


@dataclass(frozen=True)
class PgdConfig:
    """Iteration budget and projection behavior.

    The step length is fixed at 1.25 * epsilon / iterations: large enough to
    cross the ball, small enough to land near its boundary.
    """

    budget: AttackBudget
    iterations: int = 40
    pixel_box: bool = False
    early_stop_at_zero: bool = True

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")

    @property
    def step_size(self) -> float:
        return 1.25 * self.budget.epsilon / self.iterations


def iterations_for_accuracy(epsilon: float, delta: float, cap: int = 100_000) -> int:
    """Iteration count sufficient for the final objective to be within delta
    of the in-ball optimum: ceil(epsilon^2 / delta^2), capped."""
    if not epsilon > 0 or not delta > 0:
        raise ValueError("epsilon and delta must be positive")
    need = math.ceil(epsilon**2 / delta**2)
    return int(min(need, cap))


def project(v, budget: AttackBudget) -> np.ndarray:
    """Euclidean projection onto the budget ball."""
    v = np.asarray(v, dtype=float)
    if budget.norm == "l2":
        norm = float(np.linalg.norm(v))
        if norm > budget.epsilon:
            return v * (budget.epsilon / norm)
        return v
    return np.clip(v, -budget.epsilon, budget.epsilon)


def clip_to_pixel_box(x, v) -> np.ndarray:
    """Pull v back so that x + v stays in [0, 1] per coordinate.

    For x already inside the box this never increases any |v_i|, so ball
    membership survives the clip.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("x must lie inside the unit box")
    return np.clip(x + v, 0.0, 1.0) - x


def pgd_best_response(p, cset: ClassifierSet, x, y, cfg: PgdConfig,
                      kind: LossKind) -> tuple[np.ndarray, float, np.ndarray]:
    """Minimize the weighted surrogate loss over the budget ball from v = 0.

    Returns the best iterate by objective value, that objective, and the
    per-iterate objective trace (one entry per evaluation; a zero gradient at
    the start yields a single entry).
    """
    x = as_vector(x, cset.dim)
    y = check_label(y, cset.num_classes)
    v = np.zeros(cset.dim)
    value, grad = weighted_objective(p, cset, x, v, y, kind)
    trace = [value]
    best_v, best_value = v, value
    for t in range(cfg.iterations):
        gnorm = float(np.linalg.norm(grad))
        if gnorm == 0.0:
            if cfg.early_stop_at_zero:
                break
            # Nothing moves from here on; the objective just repeats.
            trace.extend([value] * (cfg.iterations - t))
            break
        v = v - (cfg.step_size / gnorm) * grad
        v = project(v, cfg.budget)
        if cfg.pixel_box:
            v = clip_to_pixel_box(x, v)
            assert cfg.budget.contains(v), "pixel clip left the budget ball"
        value, grad = weighted_objective(p, cset, x, v, y, kind)
        trace.append(value)
        if value < best_value:
            best_v, best_value = v, value
    return best_v, float(best_value), np.asarray(trace)
