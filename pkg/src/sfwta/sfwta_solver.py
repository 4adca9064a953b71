"""Online stochastic Frank-Wolfe traffic assignment.

Each iteration samples a random-flow vector, folds the sampled gradient
into a running average ``d`` with weight ``rho_t``, routes all demand on the
shortest paths under ``d`` and moves the mean flow toward that vertex with
weight ``gamma_{t+1}``.  Iterates stay feasible because they are convex
combinations of all-or-nothing vertices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cost_model import (
    CostParams,
    expected_gradient_case1,
    expected_gradient_case2,
    social_cost,
    stochastic_gradient_case1,
    stochastic_gradient_case2,
)
from .network import Network
from .shortest_path import all_or_nothing
from .stochastic_env import NoiseModel, make_generator, sample_noise
from .trace import SolverTrace, max_relative_change, window_means


@dataclass(frozen=True)
class PowerLaw:
    """``rho_t = min(1, rho0 (t + t0)**-p_rho)``, ``gamma_t = min(1, gamma0 (t + t0)**-p_gamma)``."""

    rho0: float = 4.0
    p_rho: float = 2.0 / 3.0
    gamma0: float = 2.0
    p_gamma: float = 1.0
    t0: float = 8.0

    def rho(self, t: int) -> float:
        return min(1.0, self.rho0 * (t + self.t0) ** -self.p_rho)

    def gamma(self, t: int) -> float:
        return min(1.0, self.gamma0 * (t + self.t0) ** -self.p_gamma)


DEFAULT_SCHEDULE = PowerLaw()


@dataclass
class ScheduleCheck:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok


def validate_schedule(schedule: PowerLaw) -> ScheduleCheck:
    """Check the power-law exponents against the four step-size summability conditions."""
    v = []
    if not schedule.p_rho <= 1.0:
        v.append("(i) sum rho_t must diverge: need p_rho <= 1")
    if not schedule.p_rho > 0.5:
        v.append("(ii) sum rho_t^2 must converge: need p_rho > 1/2")
    if not schedule.p_gamma <= 1.0:
        v.append("(iii) sum gamma_t must diverge: need p_gamma <= 1")
    if not 2.0 * schedule.p_gamma - schedule.p_rho > 1.0:
        v.append("(iv) sum gamma_t^2/rho_t must converge: need 2 p_gamma - p_rho > 1")
    if schedule.rho0 <= 0 or schedule.gamma0 <= 0:
        v.append("step coefficients must be positive")
    if schedule.t0 <= 0:
        v.append("offset t0 must be positive")
    return ScheduleCheck(not v, v)


@dataclass(frozen=True)
class StopRule:
    max_iters: int = 100_000
    rel_change_tol: float = 1e-6  # 0 disables early stopping
    patience: int = 50

    def __post_init__(self):
        if self.max_iters < 1 or self.patience < 1:
            raise ValueError("max_iters and patience must be >= 1")
        if self.rel_change_tol < 0:
            raise ValueError("rel_change_tol must be >= 0")


@dataclass
class SfwtaState:
    t: int
    x: np.ndarray
    d: np.ndarray
    gen: np.random.Generator
    trace: SolverTrace = field(default_factory=SolverTrace)
    snapshot_every: int = 100


def init_state(
    net: Network,
    params: CostParams,
    noise: NoiseModel,
    snapshot_every: int = 100,
    x0: np.ndarray | None = None,
) -> SfwtaState:
    """Start from the all-or-nothing flow at zero-flow costs and a zero gradient tracker."""
    if x0 is None:
        x0, _ = all_or_nothing(net, params.a)
    state = SfwtaState(
        t=0,
        x=np.array(x0, dtype=float),
        d=np.zeros(net.n_edges),
        gen=make_generator(noise.seed),
        snapshot_every=snapshot_every,
    )
    state.trace.snapshots[0] = state.x.copy()
    return state


def _expected_gradient(x, noise: NoiseModel, params: CostParams) -> np.ndarray:
    if noise.is_multiplicative:
        return expected_gradient_case1(x, noise.beta, params)
    return expected_gradient_case2(x, noise.kind.moments(), params)


def sfwta_step(
    state: SfwtaState,
    net: Network,
    params: CostParams,
    noise: NoiseModel,
    schedule: PowerLaw = DEFAULT_SCHEDULE,
    track: bool = True,
) -> SfwtaState:
    """Run one iteration in place and return ``state``."""
    t, x = state.t, state.x
    sample = sample_noise(x, noise, state.gen)
    f = x + sample.z
    if noise.is_multiplicative:
        grad = stochastic_gradient_case1(x, sample.u, noise.beta, params)
    else:
        clamped = f < 0.0
        if clamped.any():
            state.trace.n_clamped += int(clamped.sum())
            f = np.maximum(f, 0.0)
        grad = stochastic_gradient_case2(x, sample.z, params)

    rho = schedule.rho(t)
    state.d = (1.0 - rho) * state.d + rho * grad
    if track:
        err = _expected_gradient(x, noise, params) - state.d
        state.trace.tracking_error.append(float(np.dot(err, err)))

    y, _ = all_or_nothing(net, state.d)
    g = schedule.gamma(t + 1)
    x_new = (1.0 - g) * x + g * y

    state.trace.max_rel_change.append(max_relative_change(x_new, x))
    state.trace.sampled_cost.append(float(social_cost(f, params)))
    state.x = x_new
    state.t = t + 1
    if state.snapshot_every and state.t % state.snapshot_every == 0:
        state.trace.snapshots[state.t] = x_new.copy()
    return state


def solve_sfwta(
    net: Network,
    params: CostParams | None = None,
    noise: NoiseModel | None = None,
    schedule: PowerLaw = DEFAULT_SCHEDULE,
    stop: StopRule | None = None,
    snapshot_every: int = 100,
    track: bool = True,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> tuple[np.ndarray, SolverTrace]:
    """Iterate :func:`sfwta_step` until the relative flow change stays below
    ``stop.rel_change_tol`` for ``stop.patience`` iterations or the budget runs out.

    Returns the last iterate and the trace.
    """
    params = params or CostParams.from_network(net)
    noise = noise or NoiseModel.multiplicative(1.0)
    stop = stop or StopRule()
    check = validate_schedule(schedule)
    if not check:
        raise ValueError("invalid step schedule: " + "; ".join(check.violations))

    state = init_state(net, params, noise, snapshot_every)
    if callback is not None:
        callback(0, state.x)
    quiet = 0
    while state.t < stop.max_iters:
        sfwta_step(state, net, params, noise, schedule, track)
        if callback is not None:
            callback(state.t, state.x)
        if not net.demands:
            state.trace.converged, state.trace.stop_reason = True, "no demand"
            break
        if state.trace.max_rel_change[-1] < stop.rel_change_tol:
            quiet += 1
            if quiet >= stop.patience:
                state.trace.converged, state.trace.stop_reason = True, "relative change"
                break
        else:
            quiet = 0
    else:
        state.trace.stop_reason = "iteration budget"
    state.trace.snapshots[state.t] = state.x.copy()
    return state.x, state.trace


@dataclass(frozen=True)
class TrackingSummary:
    initial_error: float
    final_error: float
    first_window_mean: float
    final_window_mean: float
    decreasing_fraction: float

    @property
    def reduction(self) -> float:
        return self.first_window_mean / self.final_window_mean if self.final_window_mean > 0 else np.inf


def lemma1_diagnostic(trace: SolverTrace, window: int = 100) -> TrackingSummary:
    """Summarise the squared gradient-tracking error ``||grad F(x_t) - d_t||^2``.

    ``decreasing_fraction`` is the share of consecutive non-overlapping
    windows whose mean is below the previous window's.
    """
    if not trace.has_tracking:
        raise ValueError("trace has no gradient-tracking record")
    err = np.asarray(trace.tracking_error)
    means = window_means(err, window)
    frac = float(np.mean(np.diff(means) < 0)) if means.size > 1 else 0.0
    return TrackingSummary(
        initial_error=float(err[0]),
        final_error=float(err[-1]),
        first_window_mean=float(err[:window].mean()),
        final_window_mean=float(err[-window:].mean()),
        decreasing_fraction=frac,
    )
