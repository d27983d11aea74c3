"""Zero-sum game between a classifier mixture and a noise adversary.

The learner randomizes over the set's members, the adversary picks noise
vectors from the budget ball, and the payoff (to the adversary) is the
expected attack success. Multiplicative weights over best responses converge
to an approximate equilibrium: the averaged mixture certifies a defense and
the uniform distribution over the played responses is a randomized attack no
single classifier resists much better than the game value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._util import as_distribution, as_vector, check_label
from .classifiers import Classifier, ClassifierSet
from .geometry import AttackBudget, ExactOracle, GeometryConfig
from .losses import REVERSE_HINGE, ZERO_ONE, LossKind, pointwise_loss
from .pgd import PgdConfig, pgd_best_response


@dataclass(frozen=True)
class MixedStrategy:
    """Probability distribution over a classifier set's members."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", as_distribution(self.probs, name="probs"))

    @classmethod
    def uniform(cls, n: int) -> "MixedStrategy":
        return cls(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class RandomizedAttack:
    """Distribution over noise vectors, all inside the stated budget."""

    vectors: np.ndarray
    probs: np.ndarray
    budget: AttackBudget

    def __post_init__(self):
        vectors = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if not np.all(np.isfinite(vectors)):
            raise ValueError("attack vectors contain non-finite entries")
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "probs",
                           as_distribution(self.probs, vectors.shape[0], "probs"))
        for v in vectors:
            if not self.budget.contains(v):
                raise ValueError("attack vector violates the stated budget")

    @classmethod
    def uniform(cls, vectors, budget: AttackBudget) -> "RandomizedAttack":
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        return cls(vectors, np.full(vectors.shape[0], 1.0 / vectors.shape[0]), budget)

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class MwuConfig:
    """Multiplicative-weights run parameters.

    beta = None selects sqrt(ln n / rounds), clipped into (0, 1/2]. The exact
    oracle plays the 0-1 payoff; the pgd oracle plays a surrogate payoff,
    chosen automatically when ``payoff`` is None (normalized reverse hinge for
    binary linear sets, untargeted otherwise).
    """

    budget: AttackBudget
    rounds: int = 30
    beta: float | None = None
    oracle: str = "exact"
    payoff: LossKind | None = None
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    pgd_iterations: int = 40
    pixel_box: bool = False

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be positive")
        if self.beta is not None and not 0.0 < self.beta <= 0.5:
            raise ValueError("beta must lie in (0, 1/2]")
        if self.oracle not in ("exact", "pgd"):
            raise ValueError(f"unknown oracle {self.oracle!r}")
        if self.payoff is not None:
            if self.oracle == "exact" and self.payoff.kind != ZERO_ONE:
                raise ValueError("the exact oracle plays the 0-1 payoff")
            if self.oracle == "pgd" and self.payoff.kind == ZERO_ONE:
                raise ValueError("the pgd oracle needs a differentiable payoff")
        if self.pgd_iterations < 1:
            raise ValueError("pgd_iterations must be positive")

    def effective_beta(self, n: int) -> float:
        if self.beta is not None:
            return self.beta
        guess = math.sqrt(math.log(n) / self.rounds) if n > 1 else 0.0
        return float(min(max(guess, 1e-3), 0.5))


@dataclass(frozen=True)
class GameTrace:
    """Full record of one multiplicative-weights run on a single point.

    strategies[t] is the mixture played in round t, attacks[t] the oracle's
    response, round_payoffs[t] the payoff it achieved against that mixture.
    value_estimate averages the round payoffs and approximates the game value
    from above (within the regret bound).
    """

    strategies: np.ndarray
    attacks: np.ndarray
    round_payoffs: np.ndarray
    p_star: MixedStrategy
    q_star: RandomizedAttack
    value_estimate: float


def _resolve_payoff_kind(cfg: MwuConfig, cset: ClassifierSet) -> LossKind:
    if cfg.oracle == "exact":
        return LossKind.zero_one()
    if cfg.payoff is not None:
        return cfg.payoff
    if cset.all_linear and cset.num_classes == 2:
        return LossKind.reverse_hinge(cfg.budget.epsilon)
    return LossKind.untargeted()


def _adversary_payoff(c: Classifier, x, v, y, kind: LossKind) -> float:
    """Attack success against one classifier, in [0, 1] for in-budget v."""
    loss = pointwise_loss(c, x, v, y, kind)
    return loss if kind.kind == ZERO_ONE else 1.0 - loss


def payoff(learner, adversary, cset: ClassifierSet, x, y,
           kind: LossKind | None = None) -> float:
    """Bilinear game payoff to the adversary.

    ``learner`` is a mixture (MixedStrategy or probability vector) or a pure
    member index; ``adversary`` a RandomizedAttack or a single noise vector.
    """
    kind = kind or LossKind.zero_one()
    x = as_vector(x, cset.dim)
    y = check_label(y, cset.num_classes)
    if isinstance(learner, (int, np.integer)):
        probs = np.zeros(len(cset))
        probs[int(learner)] = 1.0
    else:
        probs = as_distribution(learner, len(cset), "learner")
    if isinstance(adversary, RandomizedAttack):
        atoms = list(zip(adversary.probs, adversary.vectors))
    else:
        atoms = [(1.0, as_vector(adversary, cset.dim, "v"))]
    total = 0.0
    for weight, c in zip(probs, cset.members):
        if weight == 0.0:
            continue
        for q, v in atoms:
            total += weight * q * _adversary_payoff(c, x, v, y, kind)
    return float(total)


class _PgdOracle:
    def __init__(self, cset, x, y, cfg: MwuConfig, kind: LossKind):
        self.cset, self.x, self.y, self.kind = cset, x, y, kind
        self.pgd_cfg = PgdConfig(budget=cfg.budget, iterations=cfg.pgd_iterations,
                                 pixel_box=cfg.pixel_box)

    def best_response(self, p):
        v, value, _ = pgd_best_response(p, self.cset, self.x, self.y,
                                        self.pgd_cfg, self.kind)
        return v, 1.0 - value


def _make_oracle(cset, x, y, cfg: MwuConfig, kind: LossKind):
    if cfg.oracle == "exact":
        return ExactOracle(cset, x, y, cfg.budget, cfg.geometry)
    return _PgdOracle(cset, x, y, cfg, kind)


def mwu_attack(cset: ClassifierSet, x, y, cfg: MwuConfig) -> GameTrace:
    """Run multiplicative weights against the best-response oracle.

    Each round the current mixture is published, the oracle answers with a
    noise vector, and every member's weight decays by (1 - beta) raised to
    the payoff that vector achieves against it. Returns the averaged mixture,
    the uniform distribution over the played responses, and the payoff
    average estimating the game value.
    """
    x = as_vector(x, cset.dim)
    y = check_label(y, cset.num_classes)
    n = len(cset)
    kind = _resolve_payoff_kind(cfg, cset)
    oracle = _make_oracle(cset, x, y, cfg, kind)
    beta = cfg.effective_beta(n)

    weights = np.ones(n)
    strategies = np.empty((cfg.rounds, n))
    attacks = np.empty((cfg.rounds, cset.dim))
    round_payoffs = np.empty(cfg.rounds)
    for t in range(cfg.rounds):
        p_t = weights / weights.sum()
        try:
            v_t, achieved = oracle.best_response(p_t)
        except Exception as err:
            raise RuntimeError(f"best-response oracle failed at round {t}") from err
        strategies[t] = p_t
        attacks[t] = v_t
        round_payoffs[t] = achieved
        member_payoffs = np.array([
            _adversary_payoff(c, x, v_t, y, kind) for c in cset.members
        ])
        weights = weights * (1.0 - beta) ** member_payoffs

    p_star = MixedStrategy(strategies.mean(axis=0))
    q_star = RandomizedAttack.uniform(attacks, cfg.budget)
    return GameTrace(strategies=strategies, attacks=attacks,
                     round_payoffs=round_payoffs, p_star=p_star, q_star=q_star,
                     value_estimate=float(round_payoffs.mean()))


def equilibrium_gap(cset: ClassifierSet, x, y, trace: GameTrace,
                    cfg: MwuConfig) -> tuple[float, float]:
    """How far the returned pair sits from equilibrium.

    adversary_gap = value_estimate - min_i payoff(c_i, q_star): what the best
    pure defense recovers against the randomized attack (nonnegative, at most
    the regret bound). learner_gap = payoff(p_star, best response) -
    value_estimate: what the adversary gains by re-optimizing against the
    averaged mixture. Both use the oracle and payoff the trace was played
    with, so the pgd variant reports estimates rather than exact maxima.
    """
    x = as_vector(x, cset.dim)
    y = check_label(y, cset.num_classes)
    kind = _resolve_payoff_kind(cfg, cset)
    worst = min(payoff(i, trace.q_star, cset, x, y, kind) for i in range(len(cset)))
    adversary_gap = trace.value_estimate - worst
    oracle = _make_oracle(cset, x, y, cfg, kind)
    _, best_reply = oracle.best_response(trace.p_star)
    learner_gap = best_reply - trace.value_estimate
    return float(adversary_gap), float(learner_gap)
