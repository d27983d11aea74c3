"""Attack losses and the weighted objective driving first-order attacks.

All losses measure "still correctly classified": they are positive while the
classifier resists the perturbation and zero once it is fooled, so an
attacker minimizes them. ``zero_one_loss`` is the exception, using the usual
misclassification convention (1 when fooled); payoff code reconciles the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ._util import as_distribution, as_vector, check_label
from .classifiers import ClassifierSet, LinearClassifier

ZERO_ONE = "zero_one"
REVERSE_HINGE = "reverse_hinge_normalized"
UNTARGETED = "untargeted_reverse_hinge"


@dataclass(frozen=True)
class LossKind:
    """Loss selector. The normalized hinge carries the budget radius used in
    its denominator; the other kinds take no parameter."""

    kind: str
    epsilon: float | None = None

    def __post_init__(self):
        if self.kind not in (ZERO_ONE, REVERSE_HINGE, UNTARGETED):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == REVERSE_HINGE:
            if self.epsilon is None or not self.epsilon > 0:
                raise ValueError("normalized reverse hinge needs epsilon > 0")
        elif self.epsilon is not None:
            raise ValueError(f"{self.kind} takes no epsilon")

    @classmethod
    def zero_one(cls) -> "LossKind":
        return cls(ZERO_ONE)

    @classmethod
    def reverse_hinge(cls, epsilon: float) -> "LossKind":
        return cls(REVERSE_HINGE, float(epsilon))

    @classmethod
    def untargeted(cls) -> "LossKind":
        return cls(UNTARGETED)


def zero_one_loss(c, x, v, y) -> float:
    """1.0 if the perturbed point is misclassified, else 0.0."""
    x = as_vector(x, c.dim)
    v = as_vector(v, c.dim, "v")
    y = check_label(y, c.num_classes)
    return float(c.predict(x + v) != y)


def _binary_sign_form(c) -> tuple[np.ndarray, float]:
    if not isinstance(c, LinearClassifier):
        raise ValueError("reverse hinge applies to binary linear classifiers only")
    return c.binary_form()


def reverse_hinge(c, x, v, y, normalize: bool = False, epsilon: float | None = None) -> float:
    """Hinge on remaining correct: max{y (<w, x+v> + b), 0} for y in {+1, -1}.

    With ``normalize`` the value is divided by its maximum over the
    epsilon-ball, max{y (<w, x> + b), 0} + epsilon * ||w||, which bounds it to
    [0, 1] whenever ||v|| <= epsilon.
    """
    if y not in (1, -1):
        raise ValueError("reverse hinge takes y in {+1, -1}")
    w, b = _binary_sign_form(c)
    x = as_vector(x, c.dim)
    v = as_vector(v, c.dim, "v")
    raw = max(y * (w @ (x + v) + b), 0.0)
    if not normalize:
        return raw
    if epsilon is None or not epsilon > 0:
        raise ValueError("normalization needs epsilon > 0")
    w_norm = float(np.linalg.norm(w))
    if w_norm == 0.0:
        raise ValueError("degenerate classifier: zero weight vector")
    denom = max(y * (w @ x + b), 0.0) + epsilon * w_norm
    return raw / denom


def _top_rival(logits: np.ndarray, y: int) -> int:
    scores = logits.copy()
    scores[y] = -np.inf
    return int(np.argmax(scores))


def untargeted_reverse_hinge(c, x, v, y) -> float:
    """Sigmoid-squashed logit gap: max{2 (sigma(z) - 1/2), 0} with
    z = c_y(x+v) - max_{j != y} c_j(x+v). Zero exactly when fooled."""
    x = as_vector(x, c.dim)
    v = as_vector(v, c.dim, "v")
    y = check_label(y, c.num_classes)
    logits = c.logits(x + v)
    z = logits[y] - logits[_top_rival(logits, y)]
    return max(2.0 * (float(expit(z)) - 0.5), 0.0)


def pointwise_loss(c, x, v, y, kind: LossKind) -> float:
    """Evaluate one classifier under one noise vector, label given as a class
    index for every kind. Always in [0, 1] for in-budget v."""
    if kind.kind == ZERO_ONE:
        return zero_one_loss(c, x, v, y)
    if kind.kind == REVERSE_HINGE:
        y = check_label(y, c.num_classes)
        if c.num_classes != 2:
            raise ValueError("normalized reverse hinge needs a binary classifier")
        sign = 1 if y == 0 else -1
        return reverse_hinge(c, x, v, sign, normalize=True, epsilon=kind.epsilon)
    return untargeted_reverse_hinge(c, x, v, y)


def weighted_objective(p, cset: ClassifierSet, x, v, y, kind: LossKind):
    """Mixture loss sum_i p_i * loss(c_i, x+v, y) and its gradient in v.

    The attack objective for first-order best responses; rejects the 0-1 kind,
    which has no usable gradient.
    """
    if kind.kind == ZERO_ONE:
        raise ValueError("0-1 loss is not differentiable; use a surrogate kind")
    probs = as_distribution(p, len(cset))
    x = as_vector(x, cset.dim)
    v = as_vector(v, cset.dim, "v")
    y = check_label(y, cset.num_classes)
    total = 0.0
    grad = np.zeros(cset.dim)

    if kind.kind == REVERSE_HINGE:
        sign = 1 if y == 0 else -1
        for prob, c in zip(probs, cset.members):
            w, b = _binary_sign_form(c)
            w_norm = float(np.linalg.norm(w))
            if w_norm == 0.0:
                raise ValueError("degenerate classifier: zero weight vector")
            denom = max(sign * (w @ x + b), 0.0) + kind.epsilon * w_norm
            s = sign * (w @ (x + v) + b)
            if s > 0.0:
                total += prob * s / denom
                grad += (prob * sign / denom) * w
        return total, grad

    for prob, c in zip(probs, cset.members):
        logits = c.logits(x + v)
        rival = _top_rival(logits, y)
        z = logits[y] - logits[rival]
        if z > 0.0:
            sig = float(expit(z))
            total += prob * 2.0 * (sig - 0.5)
            scale = prob * 2.0 * sig * (1.0 - sig)
            grad += scale * (c.logit_gradient(x + v, y) - c.logit_gradient(x + v, rival))
    return total, grad
