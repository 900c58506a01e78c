"""Shared dense linear-algebra and scalar primitives.

Everything runs in float64: the Monte Carlo weights go through exponentials
and the bundled reference values are quoted to three decimals, so double
precision is assumed engine-wide.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["as_vector", "as_matrix", "dense_matvec", "l2_norm", "logistic"]


def as_vector(data, name: str = "vector") -> np.ndarray:
    """Validate *data* as a finite, non-empty 1-d float64 array."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name}: expected a 1-d array, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name}: must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: all entries must be finite")
    return arr


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """Validate *data* as a finite, non-empty 2-d float64 array."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name}: expected a 2-d array, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name}: must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: all entries must be finite")
    return arr


def dense_matvec(m, v) -> np.ndarray:
    """Standard matrix-vector product with shape and finiteness checks."""
    m = as_matrix(m, "matrix")
    v = as_vector(v, "vector")
    if m.shape[1] != v.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix is {m.shape[0]}x{m.shape[1]}, "
            f"vector has length {v.shape[0]}"
        )
    return m @ v


def l2_norm(v) -> float:
    """Euclidean norm; zero exactly for the zero vector."""
    return float(np.linalg.norm(as_vector(v)))


def logistic(x: float) -> float:
    """Numerically stable 1/(1 + exp(-x)).

    Saturates smoothly for large |x| instead of overflowing; in float64 the
    result rounds to exactly 0.0 or 1.0 once |x| exceeds roughly 36.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("logistic: argument must be finite")
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)
