"""Decision-region geometry behind exact best responses.

A set of n k-class linear classifiers partitions input space into at most k^n
convex regions, one per joint label vector. Each region is an intersection of
halfspaces in the noise vector v, its 0-1 mixture loss depends only on which
classifiers it fools, and the nearest point of a region is a tiny quadratic
program. Walking regions in descending-loss order and returning the first one
reachable within the budget is therefore an exact best response.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from cvxopt import matrix as _cvxmat
from cvxopt import solvers as _cvxsolvers
from scipy.optimize import linprog, minimize

from ._util import as_distribution, as_vector, check_label
from .classifiers import ClassifierSet

_QP_OPTIONS = {
    "show_progress": False,
    "abstol": 1e-10,
    "reltol": 1e-10,
    "feastol": 1e-10,
    "maxiters": 200,
}

# Feasibility margin, in geometric units (constraint rows are unit-norm).
_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class AttackBudget:
    """Norm ball constraint on noise vectors: ||v||_norm <= epsilon."""

    norm: str
    epsilon: float

    def __post_init__(self):
        if self.norm not in ("l2", "linf"):
            raise ValueError(f"unknown norm {self.norm!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def norm_of(self, v) -> float:
        v = np.asarray(v, dtype=float)
        if self.norm == "l2":
            return float(np.linalg.norm(v))
        return float(np.max(np.abs(v))) if v.size else 0.0

    def contains(self, v, tol: float = 1e-9) -> bool:
        return self.norm_of(v) <= self.epsilon * (1.0 + tol) + 1e-12


@dataclass(frozen=True)
class GeometryConfig:
    """Knobs for region construction and the projection subproblem.

    strict_slack replaces the open-set strict inequalities defining a region
    with closed ones shifted by a small positive constant, so returned points
    classify strictly as targeted. box, when set, additionally constrains
    x + v to [box[0], box[1]] per coordinate.
    """

    strict_slack: float = 1e-6
    qp_tolerance: float = 1e-8
    max_regions: int = 60000
    box: tuple[float, float] | None = None

    def __post_init__(self):
        if self.strict_slack < 0:
            raise ValueError("strict_slack must be nonnegative")
        if not self.qp_tolerance > 0:
            raise ValueError("qp_tolerance must be positive")
        if self.max_regions < 1:
            raise ValueError("max_regions must be positive")
        if self.box is not None and not self.box[0] < self.box[1]:
            raise ValueError("box must satisfy lo < hi")


@dataclass(frozen=True)
class Region:
    """Joint label assignment, one label per classifier, with its 0-1 mixture
    loss sum_{i: labels[i] != y} p[i]."""

    labels: tuple[int, ...]
    loss: float


class EnumerationCapError(ValueError):
    """Raised when a set induces more regions than the configured cap."""

    def __init__(self, count: int, cap: int):
        super().__init__(f"{count} regions exceed the cap of {cap}")
        self.count = count
        self.cap = cap


def enumerate_regions(k: int, n: int, y: int, p, max_regions: int = 60000):
    """Yield all k^n regions in descending-loss order.

    Wrong-classifier subsets are ordered by descending probability mass, ties
    by subset lexicographic order; within a subset, wrong-label assignments
    run lexicographically. Lazy after an eager cap check.
    """
    if k < 2 or n < 1:
        raise ValueError("need k >= 2 classes and n >= 1 classifiers")
    y = check_label(y, k)
    probs = as_distribution(p, n)
    total = k**n
    if total > max_regions:
        raise EnumerationCapError(total, max_regions)

    subsets = []
    for mask in range(1 << n):
        idx = tuple(i for i in range(n) if mask >> i & 1)
        subsets.append((sum(probs[i] for i in idx), idx))
    subsets.sort(key=lambda t: (-t[0], t[1]))
    wrong_labels = [lab for lab in range(k) if lab != y]

    def _iterate():
        for loss, idx in subsets:
            for assign in itertools.product(wrong_labels, repeat=len(idx)):
                labels = [y] * n
                for pos, i in enumerate(idx):
                    labels[i] = assign[pos]
                yield Region(tuple(labels), loss)

    return _iterate()


def _region_inequalities(cset: ClassifierSet, x: np.ndarray, labels, slack: float,
                         box: tuple[float, float] | None):
    """Halfspace system G v <= h pinning each classifier to its target label.

    Rows are normalized to unit length so tolerances read as distances.
    Returns None when a constant constraint is already violated (region empty).
    """
    rows, rhs = [], []
    for c, target in zip(cset.members, labels):
        w = c.weights
        b = c.biases
        for j in range(cset.num_classes):
            if j == target:
                continue
            g = w[j] - w[target]
            h = (w[target] - w[j]) @ x + (b[target] - b[j]) - slack
            scale = float(np.linalg.norm(g))
            if scale < 1e-12:
                if h < 0.0:
                    return None
                continue
            rows.append(g / scale)
            rhs.append(h / scale)
    if box is not None:
        lo, hi = box
        d = cset.dim
        eye = np.eye(d)
        rows.extend(eye)
        rhs.extend(hi - x)
        rows.extend(-eye)
        rhs.extend(x - lo)
    if not rows:
        return np.zeros((0, cset.dim)), np.zeros(0)
    return np.asarray(rows), np.asarray(rhs)


def _verified_projection(G: np.ndarray, h: np.ndarray, starts) -> np.ndarray | None:
    """Refine candidate solutions onto their active sets; keep the shortest
    one within feasibility tolerance."""
    best = None
    best_norm = np.inf
    for v in starts:
        if v is None:
            continue
        candidates = [v]
        slacks = h - G @ v
        for threshold in (1e-9, 1e-7, 1e-5):
            active = slacks <= threshold
            if not active.any():
                continue
            # Least-norm solution of the active equalities; if the guess is
            # wrong the residual shows up as an infeasibility below.
            candidates.append(np.linalg.lstsq(G[active], h[active], rcond=None)[0])
        for cand in candidates:
            if np.max(G @ cand - h, initial=0.0) > _FEAS_TOL:
                continue
            norm = float(np.linalg.norm(cand))
            if norm < best_norm:
                best, best_norm = cand, norm
    return best


def _min_norm_qp(G: np.ndarray, h: np.ndarray) -> np.ndarray | None:
    """Project the origin onto {v : G v <= h}; None when the set is empty.

    Unit-norm rows assumed. Interior-point solve, then an active-set refit
    for machine-precision output; non-optimal statuses are classified with an
    exact feasibility LP before giving up.
    """
    m, d = G.shape
    if m == 0 or np.all(h >= 0.0):
        return np.zeros(d)
    if m == 1:
        # One violated unit-norm halfspace: move straight to its boundary.
        return G[0] * h[0]

    raw = None
    try:
        sol = _cvxsolvers.qp(
            _cvxmat(2.0 * np.eye(d)), _cvxmat(np.zeros(d)),
            _cvxmat(G), _cvxmat(h), options=_QP_OPTIONS,
        )
        if sol["x"] is not None:
            raw = np.asarray(sol["x"]).ravel()
            if sol["status"] == "optimal":
                v = _verified_projection(G, h, [raw])
                if v is not None:
                    return v
    except (ValueError, ArithmeticError):
        pass

    lp = linprog(np.zeros(d), A_ub=G, b_ub=h, bounds=(None, None), method="highs")
    if lp.status == 2:
        return None
    if lp.status != 0:
        raise RuntimeError(f"feasibility check failed with status {lp.status}")
    v = _verified_projection(G, h, [raw, lp.x])
    if v is not None:
        return v
    res = minimize(
        lambda v: v @ v, lp.x, jac=lambda v: 2.0 * v, method="SLSQP",
        constraints=[{"type": "ineq", "fun": lambda v: h - G @ v, "jac": lambda v: -G}],
        options={"maxiter": 200},
    )
    v = _verified_projection(G, h, [res.x, lp.x])
    if v is not None:
        return v
    raise RuntimeError("projection onto region failed to converge")


def min_norm_to_region(cset: ClassifierSet, x, region: Region,
                       cfg: GeometryConfig | None = None) -> np.ndarray | None:
    """Shortest noise vector realizing the region's labels, or None if the
    region is empty (given the slack and optional box)."""
    cfg = cfg or GeometryConfig()
    x = as_vector(x, cset.dim)
    if len(region.labels) != len(cset):
        raise ValueError("region labels must match the classifier set")
    system = _region_inequalities(cset, x, region.labels, cfg.strict_slack, cfg.box)
    if system is None:
        return None
    return _min_norm_qp(*system)


def linf_feasible_point(cset: ClassifierSet, x, region: Region, epsilon: float,
                        cfg: GeometryConfig | None = None) -> np.ndarray | None:
    """Any noise vector with ||v||_inf <= epsilon realizing the region's
    labels, or None if no such vector exists."""
    cfg = cfg or GeometryConfig()
    x = as_vector(x, cset.dim)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    system = _region_inequalities(cset, x, region.labels, cfg.strict_slack, None)
    if system is None:
        return None
    G, h = system
    lo = np.full(cset.dim, -epsilon)
    hi = np.full(cset.dim, epsilon)
    if cfg.box is not None:
        lo = np.maximum(lo, cfg.box[0] - x)
        hi = np.minimum(hi, cfg.box[1] - x)
    if np.any(lo > hi):
        return None
    lp = linprog(np.zeros(cset.dim), A_ub=G, b_ub=h,
                 bounds=list(zip(lo, hi)), method="highs")
    if lp.status == 2:
        return None
    if lp.status != 0:
        raise RuntimeError(f"feasibility check failed with status {lp.status}")
    return lp.x


class ExactOracle:
    """Exact 0-1 best response for one (x, y) point, reusable across mixtures.

    Region reachability is independent of the mixture, so per-region
    projections are cached; only the walk order changes between calls.
    """

    def __init__(self, cset: ClassifierSet, x, y, budget: AttackBudget,
                 cfg: GeometryConfig | None = None):
        self.cset = cset
        self.x = as_vector(x, cset.dim)
        self.y = check_label(y, cset.num_classes)
        self.budget = budget
        self.cfg = cfg or GeometryConfig()
        self._cache: dict[tuple[int, ...], np.ndarray | None] = {}

    def _reach(self, region: Region) -> np.ndarray | None:
        """Feasible in-budget vector for the region, None if unreachable."""
        if region.labels in self._cache:
            hit = self._cache[region.labels]
        elif self.budget.norm == "l2":
            hit = min_norm_to_region(self.cset, self.x, region, self.cfg)
            self._cache[region.labels] = hit
        else:
            hit = linf_feasible_point(self.cset, self.x, region,
                                      self.budget.epsilon, self.cfg)
            self._cache[region.labels] = hit
        if hit is None:
            return None
        if self.budget.norm == "l2" and not np.linalg.norm(hit) <= self.budget.epsilon + 1e-12:
            return None
        return hit

    def best_response(self, p) -> tuple[np.ndarray, float]:
        probs = as_distribution(p, len(self.cset))
        for region in enumerate_regions(self.cset.num_classes, len(self.cset),
                                        self.y, probs, self.cfg.max_regions):
            v = self._reach(region)
            if v is None:
                continue
            achieved = sum(
                prob for prob, c in zip(probs, self.cset.members)
                if c.predict(self.x + v) != self.y
            )
            return v, float(achieved)
        raise RuntimeError("no region is reachable within the budget")


def exact_best_response(p, cset: ClassifierSet, x, y, budget: AttackBudget,
                        cfg: GeometryConfig | None = None) -> tuple[np.ndarray, float]:
    """Noise vector maximizing the mixture's expected 0-1 loss, with the loss
    it achieves. Exact up to the strict-inequality slack."""
    return ExactOracle(cset, x, y, budget, cfg).best_response(p)


def margin(c, x, y) -> float:
    """Euclidean distance from a correctly classified point to the nearest
    decision boundary of a linear classifier."""
    weights = getattr(c, "weights", None)
    if weights is None:
        raise ValueError("margin requires a linear classifier")
    x = as_vector(x, c.dim)
    y = check_label(y, c.num_classes)
    if c.predict(x) != y:
        raise ValueError("margin is undefined for a misclassified point")
    best = np.inf
    for j in range(c.num_classes):
        if j == y:
            continue
        g = weights[y] - weights[j]
        scale = float(np.linalg.norm(g))
        if scale < 1e-12:
            continue
        gap = g @ x + (c.biases[y] - c.biases[j])
        best = min(best, gap / scale)
    if not np.isfinite(best):
        raise ValueError("degenerate classifier: no separating direction")
    return float(best)
