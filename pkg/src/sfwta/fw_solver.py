"""Deterministic Frank-Wolfe for the social optimum with exact line search.

Two objectives share the same loop: the plain social cost, and the
closed-form expected social cost under multiplicative uniform noise with
spread ``beta``.  Both have the form ``sum_e a_e x_e + m b_e x_e**5`` with
``m = 1`` or ``m = m5(beta)``, so the segment objective is a convex quintic
in the step and its derivative is monotone.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .cost_model import CostParams, m5
from .network import Network
from .shortest_path import all_or_nothing
from .trace import SolverTrace, max_relative_change

Callback = Callable[[int, np.ndarray], None]


@dataclass(frozen=True)
class FwConfig:
    max_iters: int = 10_000
    rel_change_tol: float = 1e-6
    line_search_tol: float = 1e-12
    gap_tol: float = 1e-8  # relative to the objective

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_change_tol <= 0 or self.line_search_tol <= 0 or self.gap_tol <= 0:
            raise ValueError("tolerances must be positive")


class IterationBudgetWarning(RuntimeWarning):
    pass


def _objective(x, params: CostParams, m: float) -> float:
    return float(np.sum(params.a * x + params.b * x**5 * m))


def _gradient(x, params: CostParams, m: float) -> np.ndarray:
    return params.a + 5.0 * params.b * x**4 * m


def _objective_scale(objective: str | float) -> float:
    if isinstance(objective, str):
        if objective == "deterministic":
            return 1.0
        raise ValueError(f"unknown objective {objective!r}")
    return m5(objective)


def line_search(
    x: np.ndarray,
    y: np.ndarray,
    params: CostParams,
    objective: str | float = "deterministic",
    tol: float = 1e-12,
    max_bisections: int = 50,
) -> float:
    """Exact step along ``x + gamma (y - x)`` on [0, 1].

    ``objective`` is ``"deterministic"`` or a spread ``beta`` selecting the
    expected cost.  Bisection on the derivative, which is nondecreasing
    because the segment objective is convex.
    """
    return _bisect(x, y - x, params, _objective_scale(objective), tol, max_bisections)


def _bisect(x, d, params: CostParams, m: float, tol: float, max_bisections: int = 50) -> float:
    if not np.any(d):
        return 0.0

    def slope(g: float) -> float:
        return float(np.dot(d, _gradient(x + g * d, params, m)))

    if slope(0.0) >= 0.0:
        return 0.0
    if slope(1.0) <= 0.0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(max_bisections):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def duality_gap(x: np.ndarray, net: Network, params: CostParams, m: float = 1.0) -> float:
    """Frank-Wolfe gap ``grad(x) . (x - y)`` with ``y`` the best vertex."""
    grad = _gradient(x, params, m)
    y, _ = all_or_nothing(net, grad)
    return float(np.dot(grad, x - y))


def _frank_wolfe(
    net: Network,
    params: CostParams,
    m: float,
    config: FwConfig,
    callback: Optional[Callback] = None,
) -> tuple[np.ndarray, SolverTrace]:
    trace = SolverTrace()
    x, _ = all_or_nothing(net, params.a)
    if callback is not None:
        callback(0, x)
    best_x, best_gap = x, np.inf
    for it in range(config.max_iters):
        grad = _gradient(x, params, m)
        y, _ = all_or_nothing(net, grad)
        obj = _objective(x, params, m)
        gap = float(np.dot(grad, x - y))
        if gap < best_gap:
            best_x, best_gap = x, gap
        if gap <= config.gap_tol * obj:
            # record the final check so the trace covers the certifying iterate
            trace.objective.append(obj)
            trace.gap.append(gap)
            trace.max_rel_change.append(0.0)
            trace.converged, trace.stop_reason = True, "duality gap"
            return x, trace
        step = _bisect(x, y - x, params, m, config.line_search_tol)
        x_new = x + step * (y - x)
        rel = max_relative_change(x_new, x)
        x = x_new
        trace.objective.append(_objective(x, params, m))
        trace.gap.append(gap)
        trace.max_rel_change.append(rel)
        if callback is not None:
            callback(it + 1, x)
        if rel < config.rel_change_tol:
            trace.converged, trace.stop_reason = True, "relative change"
            return x, trace
    # the gap oscillates along the zig-zag; hand back the best-certified iterate
    grad = _gradient(x, params, m)
    gap = float(np.dot(grad, x - all_or_nothing(net, grad)[0]))
    if gap < best_gap:
        best_x = x
    trace.stop_reason = "iteration budget"
    warnings.warn(
        f"Frank-Wolfe stopped after {config.max_iters} iterations without converging; "
        "returning the iterate with the smallest duality gap",
        IterationBudgetWarning,
        stacklevel=3,
    )
    return best_x, trace


def solve_deterministic(
    net: Network,
    params: CostParams | None = None,
    config: FwConfig | None = None,
    callback: Optional[Callback] = None,
) -> tuple[np.ndarray, SolverTrace]:
    """Social optimum ignoring randomness (classic traffic assignment)."""
    params = params or CostParams.from_network(net)
    return _frank_wolfe(net, params, 1.0, config or FwConfig(), callback)


def solve_expected(
    net: Network,
    params: CostParams | None = None,
    beta: float = 1.0,
    config: FwConfig | None = None,
    callback: Optional[Callback] = None,
) -> tuple[np.ndarray, SolverTrace]:
    """Minimise the closed-form expected social cost under multiplicative noise.

    Used as the reference optimum for the stochastic solver.  At ``beta=0``
    this performs exactly the same arithmetic as :func:`solve_deterministic`.
    """
    params = params or CostParams.from_network(net)
    return _frank_wolfe(net, params, m5(beta), config or FwConfig(), callback)
