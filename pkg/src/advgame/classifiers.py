"""Classifier representations attacked by this package.

Everything reduces to the same small surface: ``logits(x)`` returning one
score per class, ``predict(x)`` as argmax with ties broken toward the lowest
class index, and ``logit_gradient(x, j)`` for first-order attacks. Binary
models are stored in canonical two-row one-vs-all form so multiclass code
paths apply unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import as_vector


class Classifier:
    """Base for classifiers: subclasses provide logits / logit_gradient."""

    num_classes: int
    dim: int

    def logits(self, x) -> np.ndarray:
        raise NotImplementedError

    def logit_gradient(self, x, j: int) -> np.ndarray:
        raise NotImplementedError

    def predict(self, x) -> int:
        # np.argmax returns the first maximizer, i.e. the lowest class index.
        return int(np.argmax(self.logits(x)))


def _check_matrix(w, name: str) -> np.ndarray:
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


class LinearClassifier(Classifier):
    """One-vs-all linear model: class scores are ``weights @ x + biases``.

    ``weights`` has shape (num_classes, dim), ``biases`` shape (num_classes,).
    """

    def __init__(self, weights, biases):
        self.weights = _check_matrix(weights, "weights")
        self.biases = as_vector(biases, self.weights.shape[0], "biases")
        if self.weights.shape[0] < 2:
            raise ValueError("a classifier needs at least 2 classes")
        self.num_classes = self.weights.shape[0]
        self.dim = self.weights.shape[1]

    @classmethod
    def from_binary(cls, weights, bias: float) -> "LinearClassifier":
        """Canonicalize a sign model (+1 <-> class 0) to two-row form."""
        w = as_vector(weights, None, "weights")
        b = float(bias)
        return cls(np.stack([w, -w]), np.array([b, -b]))

    def binary_form(self) -> tuple[np.ndarray, float]:
        """Recover the (w, b) sign form of a two-class model.

        Inverse of ``from_binary`` on canonical models; for general two-row
        models returns the half-difference, which predicts identically.
        """
        if self.num_classes != 2:
            raise ValueError("binary_form requires exactly 2 classes")
        w = (self.weights[0] - self.weights[1]) / 2.0
        b = (self.biases[0] - self.biases[1]) / 2.0
        return w, b

    def logits(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        return self.weights @ x + self.biases

    def logit_gradient(self, x, j: int) -> np.ndarray:
        if not 0 <= j < self.num_classes:
            raise ValueError(f"class index {j} out of range")
        return self.weights[j].copy()


_ACTIVATIONS = ("relu", "identity")


@dataclass
class MLPLayer:
    """Dense layer ``act(weights @ a + biases)`` with act in {relu, identity}."""

    weights: np.ndarray
    biases: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        self.weights = _check_matrix(self.weights, "layer weights")
        self.biases = as_vector(self.biases, self.weights.shape[0], "layer biases")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


class MLPClassifier(Classifier):
    """Feedforward network; logits are the final layer's output.

    Gradients use reverse accumulation with relu'(0) = 0.
    """

    def __init__(self, layers):
        layers = list(layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if b.weights.shape[1] != a.weights.shape[0]:
                raise ValueError("layer width mismatch")
        if layers[-1].weights.shape[0] < 2:
            raise ValueError("a classifier needs at least 2 classes")
        self.layers = layers
        self.num_classes = layers[-1].weights.shape[0]
        self.dim = layers[0].weights.shape[1]

    def _forward(self, x: np.ndarray) -> list[np.ndarray]:
        """Pre-activations per layer, input first."""
        pre = []
        a = x
        for layer in self.layers:
            z = layer.weights @ a + layer.biases
            pre.append(z)
            a = np.maximum(z, 0.0) if layer.activation == "relu" else z
        return pre

    def logits(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        pre = self._forward(x)
        z = pre[-1]
        return np.maximum(z, 0.0) if self.layers[-1].activation == "relu" else z

    def logit_gradient(self, x, j: int) -> np.ndarray:
        if not 0 <= j < self.num_classes:
            raise ValueError(f"class index {j} out of range")
        x = as_vector(x, self.dim)
        pre = self._forward(x)
        g = np.zeros(self.num_classes)
        g[j] = 1.0
        for layer, z in zip(reversed(self.layers), reversed(pre)):
            if layer.activation == "relu":
                g = g * (z > 0.0)  # subgradient 0 at the kink
            g = layer.weights.T @ g
        return g


class AllPairsClassifier(Classifier):
    """All-pairs voting model: ``num_classes * (num_classes - 1) / 2`` binary
    predictors, one per unordered class pair.

    ``predictors[(i, j)] = (w, b)`` with i < j scores positively for class i.
    Class scores sum the signed pairwise scores, so predictions match the
    one-vs-all conversion exactly.
    """

    def __init__(self, num_classes: int, dim: int, predictors: dict):
        if num_classes < 2:
            raise ValueError("a classifier needs at least 2 classes")
        expected = {(i, j) for i in range(num_classes) for j in range(i + 1, num_classes)}
        if set(predictors) != expected:
            raise ValueError("predictors must cover every pair (i, j) with i < j")
        self.num_classes = num_classes
        self.dim = dim
        self.predictors = {
            pair: (as_vector(w, dim, f"weights{pair}"), float(b))
            for pair, (w, b) in predictors.items()
        }

    def logits(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        scores = np.zeros(self.num_classes)
        for (i, j), (w, b) in self.predictors.items():
            s = w @ x + b
            scores[i] += s
            scores[j] -= s
        return scores

    def logit_gradient(self, x, j: int) -> np.ndarray:
        return convert_all_pairs(self).logit_gradient(x, j)


def convert_all_pairs(model: AllPairsClassifier) -> LinearClassifier:
    """Collapse an all-pairs model to the equivalent one-vs-all linear model."""
    k, d = model.num_classes, model.dim
    weights = np.zeros((k, d))
    biases = np.zeros(k)
    for (i, j), (w, b) in model.predictors.items():
        weights[i] += w
        biases[i] += b
        weights[j] -= w
        biases[j] -= b
    return LinearClassifier(weights, biases)


def convert_multivector(coefficients, num_classes: int, dim: int) -> LinearClassifier:
    """Unpack a flat coefficient vector into a one-vs-all linear model.

    Class i owns the slice ``[i * (dim + 1), (i + 1) * (dim + 1))``: dim
    weights followed by the bias.
    """
    coeff = as_vector(coefficients, num_classes * (dim + 1), "coefficients")
    blocks = coeff.reshape(num_classes, dim + 1)
    return LinearClassifier(blocks[:, :dim], blocks[:, dim])


class ClassifierSet:
    """Fixed collection of classifiers over a shared input space."""

    def __init__(self, members, labels=None):
        members = list(members)
        if not members:
            raise ValueError("classifier set is empty")
        dim = members[0].dim
        k = members[0].num_classes
        for m in members[1:]:
            if m.dim != dim or m.num_classes != k:
                raise ValueError("members disagree on input dim or class count")
        if labels is None:
            labels = [f"c{i}" for i in range(len(members))]
        labels = [str(s) for s in labels]
        if len(labels) != len(members):
            raise ValueError("labels must match members one-to-one")
        self.members = tuple(members)
        self.labels = tuple(labels)
        self.dim = dim
        self.num_classes = k

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i) -> Classifier:
        return self.members[i]

    @property
    def all_linear(self) -> bool:
        return all(isinstance(m, LinearClassifier) for m in self.members)


class LogitAverageEnsemble(Classifier):
    """Convex combination of member logits; gradients combine the same way."""

    def __init__(self, members, weights=None):
        members = list(members)
        if not members:
            raise ValueError("ensemble is empty")
        if weights is None:
            weights = np.full(len(members), 1.0 / len(members))
        from ._util import as_distribution

        self.coeffs = as_distribution(weights, len(members), "ensemble weights")
        self.members = tuple(members)
        self.num_classes = members[0].num_classes
        self.dim = members[0].dim

    def logits(self, x) -> np.ndarray:
        out = np.zeros(self.num_classes)
        for a, m in zip(self.coeffs, self.members):
            out += a * m.logits(x)
        return out

    def logit_gradient(self, x, j: int) -> np.ndarray:
        out = np.zeros(self.dim)
        for a, m in zip(self.coeffs, self.members):
            out += a * m.logit_gradient(x, j)
        return out


def average_ensemble(cset: ClassifierSet, weights=None):
    """Average a classifier set into a single model.

    All-linear sets collapse to one LinearClassifier (weights and biases
    average directly); mixed sets get a logit-averaging wrapper.
    """
    from ._util import as_distribution

    if weights is None:
        weights = np.full(len(cset), 1.0 / len(cset))
    coeffs = as_distribution(weights, len(cset), "ensemble weights")
    if cset.all_linear:
        w = sum(a * m.weights for a, m in zip(coeffs, cset.members))
        b = sum(a * m.biases for a, m in zip(coeffs, cset.members))
        return LinearClassifier(w, b)
    return LogitAverageEnsemble(cset.members, coeffs)
