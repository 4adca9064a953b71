import numpy as np
import pytest

from conftest import X_DET_4DP, X_STOCH_4DP
from sfwta.cost_model import CostParams, expected_social_cost_case1, marginal_cost, social_cost
from sfwta.fw_solver import (
    FwConfig,
    IterationBudgetWarning,
    duality_gap,
    line_search,
    solve_deterministic,
    solve_expected,
)
from sfwta.network import build_network, check_balance
from sfwta.oracle import PathSpaceProblem, grid_minimize

# exact minimiser of 6a^4 - (1-a)^4 = 0.4 (mpmath, 30 digits); the step from
# [1,1,0,0] toward [0,0,1,1] is 1 - alpha
ALPHA_DET = 0.52373850281148537


def feasibility_probe(net):
    seen = []

    def cb(it, x):
        assert check_balance(x, net, 1e-9), f"infeasible iterate {it}"
        seen.append(it)

    return cb, seen


def test_deterministic_optimum(net, params):
    cb, seen = feasibility_probe(net)
    x, trace = solve_deterministic(net, params, callback=cb)
    assert np.max(np.abs(x - X_DET_4DP)) <= 1e-3
    assert x[0] == pytest.approx(ALPHA_DET, abs=1e-9)
    assert trace.converged
    assert seen[0] == 0 and len(seen) >= 2


def test_single_path(line_net):
    x, trace = solve_deterministic(line_net)
    np.testing.assert_array_equal(x, [2.0, 2.0])
    assert trace.n_iterations == 1


def test_linear_costs_all_or_nothing(net):
    x, _ = solve_deterministic(net, CostParams(net.a, np.zeros(4)))
    np.testing.assert_array_equal(x, [1, 1, 0, 0])


def test_line_search(params):
    x = np.array([1.0, 1.0, 0.0, 0.0])
    assert line_search(x, x, params) == 0.0
    y = np.array([0.0, 0.0, 1.0, 1.0])
    g = line_search(x, y, params)
    assert g == pytest.approx(1 - ALPHA_DET, abs=1e-10)
    for beta in (None, 0.5, 1.0):
        obj = "deterministic" if beta is None else beta
        g = line_search(x, y, params, obj)
        F = (lambda v: social_cost(v, params)) if beta is None else \
            (lambda v, b=beta: expected_social_cost_case1(v, b, params))
        best = F(x + g * (y - x))
        for t in np.linspace(0, 1, 21):
            assert best <= F(x + t * (y - x)) + 1e-15


def test_line_search_endpoints(params):
    x = np.array([0.0, 0.0, 1.0, 1.0])
    y = np.array([1.0, 1.0, 0.0, 0.0])
    # moving onto the cheap upper route helps at first, so gamma > 0 but < 1
    assert 0 < line_search(x, y, params) < 1
    cheap = CostParams(np.array([0.0, 0.0, 1.0, 1.0]), np.zeros(4))
    assert line_search(x, y, cheap) == 1.0
    assert line_search(y, x, cheap) == 0.0


def test_expected_optimum(net, params):
    x, _ = solve_expected(net, params, 1.0)
    assert np.max(np.abs(x - X_STOCH_4DP)) <= 1e-3
    a = x[0]
    assert 16 * a**4 - 8 / 3 * (1 - a) ** 4 == pytest.approx(0.2, abs=1e-3)


def test_expected_beta_zero_is_deterministic(net, params):
    x0, t0 = solve_expected(net, params, 0.0)
    xd, td = solve_deterministic(net, params)
    np.testing.assert_array_equal(x0, xd)
    assert t0.objective == td.objective


def test_expected_beta_half_matches_grid(net, params):
    x, _ = solve_expected(net, params, 0.5)
    g = grid_minimize(PathSpaceProblem.from_network(net, "expected", 0.5))
    assert np.max(np.abs(x - g.flow)) <= 1e-3


def test_monotone_descent_and_gap_certificate(grid_net):
    params = CostParams.from_network(grid_net)
    cb, _ = feasibility_probe(grid_net)
    with pytest.warns(IterationBudgetWarning):
        x, trace = solve_deterministic(grid_net, params, callback=cb)
    obj = np.array(trace.objective)
    assert np.all(np.diff(obj) <= 1e-12)
    g = social_cost(x, params)
    gap = duality_gap(x, grid_net, params)
    assert gap <= 1e-4 * g
    grid = grid_minimize(PathSpaceProblem.from_network(grid_net), resolution=200)
    assert g == pytest.approx(grid.objective, abs=1e-3)
    # the gap bounds the distance to the optimum from above
    assert g - grid.objective <= gap


def test_budget_exhaustion_warns(grid_net):
    with pytest.warns(IterationBudgetWarning):
        x, trace = solve_deterministic(grid_net, config=FwConfig(max_iters=2, rel_change_tol=1e-15))
    assert not trace.converged
    assert trace.stop_reason == "iteration budget"
    assert check_balance(x, grid_net)


def test_zero_demand():
    net = build_network("AB", [("A", "B", 1, 1)])
    x, trace = solve_deterministic(net)
    np.testing.assert_array_equal(x, [0.0])
    assert trace.converged


def test_config_validation():
    with pytest.raises(ValueError):
        FwConfig(max_iters=0)
    with pytest.raises(ValueError):
        FwConfig(rel_change_tol=0)


def test_marginal_cost_is_gradient(params):
    x = np.array([0.3, 0.3, 0.7, 0.7])
    h = 1e-6
    for e in range(4):
        d = np.zeros(4)
        d[e] = h
        fd = (social_cost(x + d, params) - social_cost(x - d, params)) / (2 * h)
        assert fd == pytest.approx(marginal_cost(x, params)[e], rel=1e-7)
