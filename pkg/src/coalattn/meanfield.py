"""Damped fixed-point solver for the spin self-consistency equations.

The equilibrium condition is ``s_i = tanh((J_i + sum_{j!=i} C_ij s_j) / gamma)``
for external fields J and symmetric zero-diagonal couplings C.  Updates are
synchronous (every spin reads the previous iterate), optionally blended with
the previous iterate by a damping factor.

Stopping rule: the solver measures the self-consistency defect
``max_i |tanh(h_i(s)/gamma) - s_i|`` of the *current* iterate before each
update and stops once it drops below the tolerance.  The returned vector
therefore satisfies the undamped residual bound directly, whatever the
damping, and damping never moves the fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, as_vector

__all__ = [
    "MeanFieldConfig",
    "MeanFieldResult",
    "effective_field",
    "mean_field_step",
    "solve_fixed_point",
    "spins_to_attention",
]

# largest double strictly below 1; tanh output is clamped here so stored
# spins keep |s| < 1 even when the argument saturates
_SPIN_CAP = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class MeanFieldConfig:
    gamma: float = 0.25
    max_iterations: int = 25
    tolerance: float = 1e-4
    damping: float = 0.7

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not (math.isfinite(self.tolerance) and self.tolerance > 0.0):
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError(f"damping must lie in [0, 1), got {self.damping}")


@dataclass(frozen=True)
class MeanFieldResult:
    """Solver outcome.

    ``final_residual`` is the self-consistency defect of the returned
    iterate; ``converged`` is exactly ``final_residual < tolerance``.
    ``trace`` (when recorded) lists ``(iteration, residual)`` per step.
    """

    expected_spins: np.ndarray
    alphas: np.ndarray
    iterations_used: int
    final_residual: float
    converged: bool
    trace: tuple[tuple[int, float], ...] | None = field(default=None)


def _check_system(fields, couplings) -> tuple[np.ndarray, np.ndarray]:
    fields = as_vector(fields, "fields")
    couplings = as_matrix(couplings, "couplings")
    n = fields.size
    if couplings.shape != (n, n):
        raise ValueError(f"couplings: expected {n}x{n}, got {couplings.shape}")
    if not np.array_equal(couplings, couplings.T):
        raise ValueError("couplings: matrix must be symmetric")
    if np.any(np.diag(couplings) != 0.0):
        raise ValueError("couplings: diagonal must be zero")
    return fields, couplings


def effective_field(fields, couplings, spins, i: int) -> float:
    """Field seen by spin i: its own bias plus the coupling-weighted sum of
    the other spins' expectations (the zero diagonal excludes j = i)."""
    fields, couplings = _check_system(fields, couplings)
    spins = as_vector(spins, "spins")
    if spins.size != fields.size:
        raise ValueError(f"spins: expected length {fields.size}, got {spins.size}")
    if not 0 <= i < fields.size:
        raise ValueError(f"spin index {i} out of range")
    return float(fields[i] + couplings[i] @ spins)


def _update_target(fields, couplings, spins, gamma) -> np.ndarray:
    target = np.tanh((fields + couplings @ spins) / gamma)
    return np.clip(target, -_SPIN_CAP, _SPIN_CAP)


def mean_field_step(fields, couplings, spins, cfg: MeanFieldConfig) -> np.ndarray:
    """One synchronous update followed by the damped blend."""
    fields, couplings = _check_system(fields, couplings)
    spins = as_vector(spins, "spins")
    target = _update_target(fields, couplings, spins, cfg.gamma)
    return cfg.damping * spins + (1.0 - cfg.damping) * target


def solve_fixed_point(
    fields,
    couplings,
    cfg: MeanFieldConfig,
    initial_spins=None,
    record_trace: bool = False,
) -> MeanFieldResult:
    """Iterate the damped synchronous update until self-consistent.

    Starts from zeros unless ``initial_spins`` is given.  Non-convergence
    within ``max_iterations`` is not an error: the last iterate is returned
    with ``converged=False`` and its defect in ``final_residual``.  With all
    couplings zero and no damping the exact solution ``tanh(J_i/gamma)`` is
    reached in a single update.
    """
    fields, couplings = _check_system(fields, couplings)
    n = fields.size
    if initial_spins is None:
        spins = np.zeros(n)
    else:
        spins = as_vector(initial_spins, "initial_spins").copy()
        if spins.size != n:
            raise ValueError(f"initial_spins: expected length {n}, got {spins.size}")
        if np.any(np.abs(spins) > 1.0):
            raise ValueError("initial_spins: entries must lie in [-1, 1]")

    trace: list[tuple[int, float]] = []
    used = 0
    while True:
        target = _update_target(fields, couplings, spins, cfg.gamma)
        defect = float(np.max(np.abs(target - spins)))
        if record_trace:
            trace.append((used, defect))
        if defect < cfg.tolerance or used >= cfg.max_iterations:
            break
        spins = cfg.damping * spins + (1.0 - cfg.damping) * target
        used += 1

    return MeanFieldResult(
        expected_spins=spins,
        alphas=spins_to_attention(spins),
        iterations_used=used,
        final_residual=defect,
        converged=defect < cfg.tolerance,
        trace=tuple(trace) if record_trace else None,
    )


def spins_to_attention(spins) -> np.ndarray:
    """Affine map of spin expectations in [-1, 1] onto weights in [0, 1]."""
    spins = as_vector(spins, "spins")
    if np.any(np.abs(spins) > 1.0):
        raise ValueError("spins: entries must lie in [-1, 1]")
    return (1.0 + spins) / 2.0
