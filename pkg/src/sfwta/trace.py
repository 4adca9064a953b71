"""Per-iteration solver records."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

REL_EPS = 1e-12


def max_relative_change(x_new: np.ndarray, x_old: np.ndarray, eps: float = REL_EPS) -> float:
    """``max_e |x_new - x_old| / max(x_old, eps)``, ignoring edges below ``eps`` in both."""
    active = (x_old >= eps) | (x_new >= eps)
    if not np.any(active):
        return 0.0
    rel = np.abs(x_new[active] - x_old[active]) / np.maximum(x_old[active], eps)
    return float(np.max(rel))


@dataclass
class SolverTrace:
    """Scalar history of a solver run plus sparse flow snapshots.

    Frank-Wolfe runs fill ``objective`` and ``gap``; stochastic runs fill
    ``sampled_cost`` and, when the expected gradient is known,
    ``tracking_error``.  ``max_rel_change`` is always filled, one entry per
    iteration.
    """

    max_rel_change: list[float] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    gap: list[float] = field(default_factory=list)
    sampled_cost: list[float] = field(default_factory=list)
    tracking_error: list[float] = field(default_factory=list)
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)
    converged: bool = False
    stop_reason: str = ""
    n_clamped: int = 0

    @property
    def n_iterations(self) -> int:
        return len(self.max_rel_change)

    @property
    def has_tracking(self) -> bool:
        return len(self.tracking_error) == self.n_iterations and self.n_iterations > 0

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {
            name: np.asarray(getattr(self, name), dtype=float)
            for name in ("max_rel_change", "objective", "gap", "sampled_cost", "tracking_error")
        }


def window_means(values, window: int = 100) -> np.ndarray:
    """Means of consecutive non-overlapping windows (a short tail window is dropped)."""
    v = np.asarray(values, dtype=float)
    n = v.size // window
    if n == 0:
        return np.array([v.mean()]) if v.size else np.array([])
    return v[: n * window].reshape(n, window).mean(axis=1)
