"""Baseline attacks, brute-force verification, and benchmark instances.

Baselines mirror the standard deterministic playbook: attack one model and
hope the noise transfers, attack the parameter average, or attack each member
and keep the best single candidate. Brute force samples the budget ball
directly, giving the exact oracle an independent check that shares none of
its geometry code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import as_distribution, as_vector, check_label
from .classifiers import (ClassifierSet, LinearClassifier, MLPClassifier,
                          average_ensemble)
from .geometry import (AttackBudget, ExactOracle, GeometryConfig, Region,
                       enumerate_regions, margin, min_norm_to_region)
from .losses import LossKind
from .pgd import PgdConfig, clip_to_pixel_box, pgd_best_response


class GenerationError(RuntimeError):
    """A benchmark instance could not be produced within the retry budget."""


@dataclass(frozen=True)
class AttackReport:
    """Accuracy summary of a classifier set under per-point attacks.

    per_point_losses[p] is the minimum expected 0-1 loss over the members at
    point p: the damage guaranteed against even the most resistant member.
    """

    method: str
    budget: AttackBudget
    per_classifier_accuracy: tuple[float, ...]
    mean_accuracy: float
    max_accuracy: float
    per_point_losses: tuple[float, ...]


def evaluate_attack(cset: ClassifierSet, attacks, dataset,
                    budget: AttackBudget, method: str = "") -> AttackReport:
    """Score per-point attacks (noise vectors or randomized attacks, one per
    dataset point) by each member's expected 0-1 accuracy.

    Every attack atom is re-checked against the budget; violations raise.
    """
    dataset = list(dataset)
    attacks = list(attacks)
    if len(attacks) != len(dataset):
        raise ValueError("need exactly one attack per dataset point")
    if not dataset:
        raise ValueError("dataset is empty")
    n = len(cset)
    losses = np.zeros((len(dataset), n))
    for row, ((x, y), attack) in enumerate(zip(dataset, attacks)):
        x = as_vector(x, cset.dim)
        y = check_label(y, cset.num_classes)
        if hasattr(attack, "vectors"):
            atoms = list(zip(attack.probs, attack.vectors))
        else:
            atoms = [(1.0, as_vector(attack, cset.dim, "attack"))]
        for weight, v in atoms:
            if not budget.contains(v):
                raise ValueError(f"attack at point {row} violates the budget")
            for i, c in enumerate(cset.members):
                if c.predict(x + v) != y:
                    losses[row, i] += weight
    # Atom probabilities sum to 1 only up to float error; clip so expected
    # losses and accuracies stay in [0, 1] instead of drifting by 1e-16.
    losses = np.clip(losses, 0.0, 1.0)
    acc = 1.0 - losses.mean(axis=0)
    return AttackReport(
        method=method,
        budget=budget,
        per_classifier_accuracy=tuple(float(a) for a in acc),
        mean_accuracy=float(acc.mean()),
        max_accuracy=float(acc.max()),
        per_point_losses=tuple(float(l) for l in losses.min(axis=1)),
    )


def _scale_to_budget(v: np.ndarray, budget: AttackBudget) -> np.ndarray:
    norm = budget.norm_of(v)
    if norm < 1e-12:
        return np.zeros_like(v)
    return v * (budget.epsilon / norm)


def single_model_attack(c, x, y, budget: AttackBudget,
                        cfg: GeometryConfig | None = None) -> np.ndarray:
    """Shortest misclassifying direction for one linear model, rescaled to
    use the whole budget. Returned even when the model's margin exceeds the
    budget, in which case the attack simply fails."""
    if not isinstance(c, LinearClassifier):
        raise ValueError("single-model attack requires a linear classifier")
    cfg = cfg or GeometryConfig()
    x = as_vector(x, c.dim)
    y = check_label(y, c.num_classes)
    solo = ClassifierSet([c])
    best = None
    best_norm = np.inf
    for wrong in range(c.num_classes):
        if wrong == y:
            continue
        v = min_norm_to_region(solo, x, Region((wrong,), 1.0), cfg)
        if v is None:
            continue
        norm = float(np.linalg.norm(v))
        if norm < best_norm:
            best, best_norm = v, norm
    if best is None:
        raise ValueError("no misclassification region is nonempty")
    v = _scale_to_budget(best, budget)
    if cfg.box == (0.0, 1.0):
        v = clip_to_pixel_box(x, v)
    return v


def _singleton_pgd(model, x, y, budget: AttackBudget, cfg: GeometryConfig,
                   pgd_iterations: int) -> np.ndarray:
    wrapped = ClassifierSet([model])
    kind = (LossKind.reverse_hinge(budget.epsilon)
            if wrapped.all_linear and wrapped.num_classes == 2
            else LossKind.untargeted())
    pgd_cfg = PgdConfig(budget=budget, iterations=pgd_iterations,
                        pixel_box=cfg.box == (0.0, 1.0))
    v, _, _ = pgd_best_response([1.0], wrapped, x, y, pgd_cfg, kind)
    return v


def ensemble_attack(cset: ClassifierSet, x, y, budget: AttackBudget,
                    cfg: GeometryConfig | None = None,
                    pgd_iterations: int = 40) -> np.ndarray:
    """Attack the uniform average of the set as if it were one model: exact
    direction for all-linear sets, gradient descent otherwise."""
    cfg = cfg or GeometryConfig()
    ens = average_ensemble(cset)
    if isinstance(ens, LinearClassifier):
        return single_model_attack(ens, x, y, budget, cfg)
    return _singleton_pgd(ens, x, y, budget, cfg, pgd_iterations)


def best_individual_attack(cset: ClassifierSet, x, y, budget: AttackBudget,
                           cfg: GeometryConfig | None = None,
                           pgd_iterations: int = 40) -> np.ndarray:
    """Attack each member separately and keep the single candidate that
    drags the set's weakest accuracy lowest (ties toward the earliest
    member's candidate)."""
    cfg = cfg or GeometryConfig()
    x = as_vector(x, cset.dim)
    y = check_label(y, cset.num_classes)
    best_v = None
    best_score = np.inf
    for member in cset.members:
        if isinstance(member, LinearClassifier):
            v = single_model_attack(member, x, y, budget, cfg)
        else:
            v = _singleton_pgd(member, x, y, budget, cfg, pgd_iterations)
        score = min(float(c.predict(x + v) == y) for c in cset.members)
        if score < best_score:
            best_v, best_score = v, score
    return best_v


def oracle_attack(cset: ClassifierSet, x, y, budget: AttackBudget,
                  cfg: GeometryConfig | None = None, oracle: str = "exact",
                  pgd_iterations: int = 40) -> np.ndarray:
    """Single best response to the uniform mixture: what an adversary who
    knows the whole set but must commit to one vector plays."""
    p = np.full(len(cset), 1.0 / len(cset))
    if oracle == "exact":
        v, _ = ExactOracle(cset, x, y, budget, cfg).best_response(p)
        return v
    if oracle == "pgd":
        cfg = cfg or GeometryConfig()
        kind = (LossKind.reverse_hinge(budget.epsilon)
                if cset.all_linear and cset.num_classes == 2
                else LossKind.untargeted())
        pgd_cfg = PgdConfig(budget=budget, iterations=pgd_iterations,
                            pixel_box=cfg.box == (0.0, 1.0))
        v, _, _ = pgd_best_response(p, cset, x, y, pgd_cfg, kind)
        return v
    raise ValueError(f"unknown oracle {oracle!r}")


def _batch_logits(c, X: np.ndarray) -> np.ndarray:
    if isinstance(c, LinearClassifier):
        return X @ c.weights.T + c.biases
    if isinstance(c, MLPClassifier):
        A = X
        for layer in c.layers:
            Z = A @ layer.weights.T + layer.biases
            A = np.maximum(Z, 0.0) if layer.activation == "relu" else Z
        return A
    return np.stack([c.logits(row) for row in X])


def brute_force_best_response(p, cset: ClassifierSet, x, y,
                              budget: AttackBudget, samples: int = 100_000,
                              seed: int = 0) -> tuple[np.ndarray, float]:
    """Best mixture 0-1 loss over uniform ball samples plus the origin.

    A randomized lower bound on the exact best response that shares no code
    with the region walk. Deterministic given the seed; ties go to the
    earliest sample.
    """
    probs = as_distribution(p, len(cset))
    x = as_vector(x, cset.dim)
    y = check_label(y, cset.num_classes)
    rng = np.random.default_rng(seed)
    d = cset.dim
    if budget.norm == "l2":
        raw = rng.standard_normal((samples, d))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        radii = budget.epsilon * rng.random(samples) ** (1.0 / d)
        V = raw * radii[:, None]
    else:
        V = rng.uniform(-budget.epsilon, budget.epsilon, size=(samples, d))
    V = np.vstack([np.zeros(d), V])
    total = np.zeros(len(V))
    for prob, c in zip(probs, cset.members):
        predictions = np.argmax(_batch_logits(c, x + V), axis=1)
        total += prob * (predictions != y)
    best = int(np.argmax(total))
    return V[best], float(total[best])


def margin_budget(cset: ClassifierSet, dataset, fraction: float = 0.5) -> float:
    """Budget radius interpolated between the smallest and largest margin
    over all (point, member) pairs: 0 buys nothing, 1 covers everything."""
    margins = [margin(c, x, y) for x, y in dataset for c in cset.members]
    if not margins:
        raise ValueError("dataset is empty")
    lo, hi = min(margins), max(margins)
    return float(lo + fraction * (hi - lo))


@dataclass(frozen=True)
class SyntheticSpec:
    """Sparse-ensemble benchmark instance: two Gaussian clusters in the unit
    box, each member trained on its own random fraction of the coordinates so
    single-model attacks transfer poorly."""

    dim: int = 20
    num_classes: int = 2
    num_classifiers: int = 5
    sparsity: float = 0.75
    points: int = 100
    seed: int = 0
    separation: float = 1.4
    noise: float = 0.06
    train_points: int = 200

    def __post_init__(self):
        if self.dim < 2 or self.num_classes < 2 or self.num_classifiers < 1:
            raise ValueError("degenerate instance shape")
        if not 0.0 <= self.sparsity < 1.0:
            raise ValueError("sparsity must lie in [0, 1)")
        if self.points < 1 or self.train_points < self.num_classes:
            raise ValueError("not enough points")


def _cluster_centers(spec: SyntheticSpec, rng) -> np.ndarray:
    if spec.num_classes == 2:
        # Diagonal separation keeps every coordinate equally informative, so
        # members trained on disjoint coordinate subsets end up with
        # comparable margins.
        half = 0.5 * spec.separation / np.sqrt(spec.dim) * np.ones(spec.dim)
        return np.clip(np.stack([0.5 - half, 0.5 + half]), 0.05, 0.95)
    for _ in range(200):
        centers = rng.uniform(0.2, 0.8, size=(spec.num_classes, spec.dim))
        gaps = [np.linalg.norm(a - b) for i, a in enumerate(centers)
                for b in centers[i + 1:]]
        if min(gaps) >= spec.separation:
            return centers
    raise GenerationError("could not place well-separated cluster centers")


def _sample_cluster_points(centers, noise, count, rng):
    k = centers.shape[0]
    labels = rng.integers(0, k, size=count)
    X = centers[labels] + noise * rng.standard_normal((count, centers.shape[1]))
    return np.clip(X, 0.0, 1.0), labels


def generate_synthetic_sparse_set(spec: SyntheticSpec):
    """Train the sparse members and draw evaluation points every member gets
    right. Returns (classifier set, list of (x, y)); raises GenerationError
    when the instance refuses to materialize."""
    rng = np.random.default_rng(spec.seed)
    centers = _cluster_centers(spec, rng)
    X, labels = _sample_cluster_points(centers, spec.noise, spec.train_points, rng)
    onehot = np.eye(spec.num_classes)[labels]

    zero_count = round(spec.sparsity * spec.dim)
    members = []
    for _ in range(spec.num_classifiers):
        zeroed = rng.choice(spec.dim, size=zero_count, replace=False)
        kept = np.setdiff1d(np.arange(spec.dim), zeroed)
        design = np.hstack([X[:, kept], np.ones((len(X), 1))])
        coef, *_ = np.linalg.lstsq(design, onehot, rcond=None)
        weights = np.zeros((spec.num_classes, spec.dim))
        weights[:, kept] = coef[:-1].T
        members.append(LinearClassifier(weights, coef[-1]))
    cset = ClassifierSet(members)

    dataset = []
    for _ in range(200):
        X_eval, y_eval = _sample_cluster_points(centers, spec.noise,
                                                4 * spec.points, rng)
        for x, y in zip(X_eval, y_eval):
            if all(c.predict(x) == y for c in cset.members):
                dataset.append((x, int(y)))
                if len(dataset) == spec.points:
                    return cset, dataset
    raise GenerationError("members never agreed on enough evaluation points")


def _train_masked_mlp(X, labels, num_classes, hidden, rng, steps, lr,
                      zero_columns) -> MLPClassifier:
    """Full-batch gradient descent on softmax cross-entropy. The listed input
    columns start at zero and their gradients are zeroed each step, so the
    trained first layer ignores those coordinates entirely."""
    d = X.shape[1]
    W1 = 0.5 * rng.standard_normal((hidden, d))
    W1[:, zero_columns] = 0.0
    b1 = 0.1 * rng.standard_normal(hidden)
    W2 = 0.5 * rng.standard_normal((num_classes, hidden))
    b2 = np.zeros(num_classes)
    onehot = np.eye(num_classes)[labels]
    m = len(X)
    for _ in range(steps):
        Z1 = X @ W1.T + b1
        A1 = np.maximum(Z1, 0.0)
        Z2 = A1 @ W2.T + b2
        shifted = Z2 - Z2.max(axis=1, keepdims=True)
        P = np.exp(shifted)
        P /= P.sum(axis=1, keepdims=True)
        dZ2 = (P - onehot) / m
        dW2 = dZ2.T @ A1
        dA1 = dZ2 @ W2
        dZ1 = dA1 * (Z1 > 0.0)
        dW1 = dZ1.T @ X
        dW1[:, zero_columns] = 0.0
        W1 -= lr * dW1
        b1 -= lr * dZ1.sum(axis=0)
        W2 -= lr * dW2
        b2 -= lr * dZ2.sum(axis=0)
    from .classifiers import MLPLayer

    return MLPClassifier([MLPLayer(W1, b1, "relu"),
                          MLPLayer(W2, b2, "identity")])


def generate_orthogonal_mlp_pair(seed: int = 0, points: int = 40,
                                 noise: float = 0.08, hidden: int = 8,
                                 steps: int = 300, lr: float = 1.0):
    """Two tiny networks on a 2-D diagonal two-cluster task, each blind to a
    different coordinate. Their decision boundaries are axis-aligned and
    orthogonal, so single-model attacks do not transfer. Returns (set,
    dataset of points both members classify correctly)."""
    rng = np.random.default_rng(seed)
    centers = np.array([[0.25, 0.25], [0.75, 0.75]])
    X, labels = _sample_cluster_points(centers, noise, 400, rng)
    members = [
        _train_masked_mlp(X, labels, 2, hidden, rng, steps, lr, [1]),
        _train_masked_mlp(X, labels, 2, hidden, rng, steps, lr, [0]),
    ]
    cset = ClassifierSet(members)
    dataset = []
    for _ in range(200):
        X_eval, y_eval = _sample_cluster_points(centers, noise, 4 * points, rng)
        for x, y in zip(X_eval, y_eval):
            if all(c.predict(x) == y for c in cset.members):
                dataset.append((x, int(y)))
                if len(dataset) == points:
                    return cset, dataset
    raise GenerationError("members never agreed on enough evaluation points")
