"""Small shared helpers: input coercion and validation."""

from __future__ import annotations

import numpy as np


def as_vector(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    """Coerce to a finite float64 1-D array, optionally checking length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {dim}")
    return arr


def as_distribution(p, n: int | None = None, name: str = "p") -> np.ndarray:
    """Coerce a MixedStrategy or array-like to a validated probability vector.

    Accepts anything exposing a ``probs`` attribute, else treats the input as
    an array. Entries must be nonnegative and sum to 1 within 1e-9.
    """
    probs = getattr(p, "probs", p)
    arr = np.asarray(probs, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D probability vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(arr < 0):
        raise ValueError(f"{name} has negative entries")
    if abs(arr.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} sums to {arr.sum()!r}, expected 1")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr


def check_label(y, num_classes: int) -> int:
    y = int(y)
    if not 0 <= y < num_classes:
        raise ValueError(f"label {y} out of range for {num_classes} classes")
    return y
