"""Brute-force checks that share no arithmetic with the solvers.

Objectives here are evaluated from path flows with their own loops, and the
noise expectation is taken by Gauss-Legendre quadrature over ``u`` instead
of the closed-form moment used by :mod:`sfwta.cost_model`.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import comb

import numpy as np
from numpy.polynomial.legendre import leggauss

from .network import DEFAULT_PATH_CAP, Network, simple_paths
from .stochastic_env import MultiplicativeUniform, NoiseModel, sample_noise

MAX_SIMPLEX_DIMS = 6
DEFAULT_GRID_CAP = 2_000_000

# 8 nodes integrate polynomials up to degree 15 exactly; the integrand is degree 5
_NODES, _WEIGHTS = leggauss(8)


class GridCapError(ValueError):
    pass


@dataclass(frozen=True)
class PathSpaceProblem:
    """Path-flow formulation of a small network.

    ``objective`` is ``"deterministic"`` or ``"expected"``; the latter uses
    multiplicative uniform noise with spread ``beta``.
    """

    n_edges: int
    a: tuple[float, ...]
    b: tuple[float, ...]
    paths: tuple[tuple[tuple[int, ...], ...], ...]  # per OD pair
    demand: tuple[float, ...]
    objective: str = "deterministic"
    beta: float = 0.0

    @classmethod
    def from_network(cls, net: Network, objective: str = "deterministic", beta: float = 0.0,
                     cap: int = DEFAULT_PATH_CAP) -> "PathSpaceProblem":
        if objective not in ("deterministic", "expected"):
            raise ValueError(f"unknown objective {objective!r}")
        paths = tuple(tuple(simple_paths(net, d.origin, d.destination, cap)) for d in net.demands)
        return cls(
            n_edges=net.n_edges,
            a=tuple(e.a for e in net.edges),
            b=tuple(e.b for e in net.edges),
            paths=paths,
            demand=tuple(d.rate for d in net.demands),
            objective=objective,
            beta=float(beta) if objective == "expected" else 0.0,
        )

    @property
    def dims(self) -> int:
        return sum(len(p) - 1 for p in self.paths)

    def edge_flows(self, fractions: np.ndarray) -> np.ndarray:
        """Edge flows for a batch of path-split points.

        ``fractions`` has shape ``(n, dims)``: for each OD pair, the demand
        shares of all paths but the last.
        """
        fractions = np.atleast_2d(fractions)
        flows = np.zeros((fractions.shape[0], self.n_edges))
        col = 0
        for paths, dem in zip(self.paths, self.demand):
            k = len(paths)
            shares = fractions[:, col:col + k - 1]
            last = 1.0 - shares.sum(axis=1)
            for j, p in enumerate(paths):
                s = shares[:, j] if j < k - 1 else last
                for e in p:
                    flows[:, e] += dem * s
            col += k - 1
        return flows

    def evaluate(self, flows: np.ndarray) -> np.ndarray:
        a = np.array(self.a)
        b = np.array(self.b)
        if self.objective == "deterministic" or self.beta == 0.0:
            return np.sum(flows * a + b * flows**5, axis=-1)
        # E over u of f (a + b f^4), f = x (1 + beta u), u ~ U[-1, 1]
        total = np.zeros(flows.shape[0])
        for node, w in zip(_NODES, _WEIGHTS):
            f = flows * (1.0 + self.beta * node)
            total += 0.5 * w * np.sum(f * (a + b * f**4), axis=-1)
        return total


@dataclass(frozen=True)
class GridResult:
    fractions: np.ndarray
    objective: float
    flow: np.ndarray


def _simplex_points(k: int, resolution: int) -> np.ndarray:
    """All share vectors (first k-1 coordinates) on the simplex grid with step 1/resolution."""
    if k == 1:
        return np.zeros((1, 0))
    if k == 2:
        return (np.arange(resolution + 1) / resolution).reshape(-1, 1)
    pts = [c for c in product(range(resolution + 1), repeat=k - 1) if sum(c) <= resolution]
    return np.array(pts, dtype=float) / resolution


def _grid_count(k: int, resolution: int) -> int:
    return comb(resolution + k - 1, k - 1)


def _feasible(fr: np.ndarray, problem: PathSpaceProblem, tol: float = 1e-15) -> np.ndarray:
    ok = np.all(fr >= -tol, axis=1)
    col = 0
    for paths in problem.paths:
        k = len(paths)
        ok &= fr[:, col:col + k - 1].sum(axis=1) <= 1.0 + tol
        col += k - 1
    return ok


def grid_minimize(
    problem: PathSpaceProblem,
    resolution: int = 10_000,
    rounds: int = 3,
    shrink: int = 10,
    cap: int = DEFAULT_GRID_CAP,
) -> GridResult:
    """Exhaustive simplex-grid search, then ``rounds`` local refinements.

    Each refinement evaluates a box of ``2*shrink+1`` points per dimension
    around the incumbent with spacing reduced by ``shrink``.  Ties go to the
    lowest grid index.
    """
    dims = problem.dims
    if dims > MAX_SIMPLEX_DIMS:
        raise GridCapError(f"{dims} simplex dimensions exceed the oracle limit {MAX_SIMPLEX_DIMS}")
    total = 1
    for paths in problem.paths:
        total *= _grid_count(len(paths), resolution)
    if total > cap:
        raise GridCapError(f"grid of {total} points exceeds cap {cap}")

    blocks = [_simplex_points(len(p), resolution) for p in problem.paths]
    grid = np.zeros((1, 0))
    for blk in blocks:
        grid = np.hstack([np.repeat(grid, len(blk), axis=0), np.tile(blk, (len(grid), 1))])
    vals = problem.evaluate(problem.edge_flows(grid))
    i = int(np.argmin(vals))
    best, best_val = grid[i], float(vals[i])

    h = 1.0 / resolution
    offsets_1d = np.arange(-shrink, shrink + 1)
    if dims and (2 * shrink + 1) ** dims <= cap:
        offsets = np.array(list(product(offsets_1d, repeat=dims)), dtype=float)
        for _ in range(rounds):
            h /= shrink
            cand = best + h * offsets
            cand = cand[_feasible(cand, problem)]
            cv = problem.evaluate(problem.edge_flows(cand))
            j = int(np.argmin(cv))
            if cv[j] < best_val:
                best, best_val = cand[j], float(cv[j])
    return GridResult(best, best_val, problem.edge_flows(best)[0])


def _oracle_social_cost(f: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(f * a + b * f**5, axis=-1)


def monte_carlo_expected_cost(
    x,
    params,
    noise: NoiseModel,
    n: int,
    gen: np.random.Generator,
    chunk: int = 250_000,
) -> tuple[float, float]:
    """Sample mean and standard error of the social cost at ``x + z``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.asarray(x, dtype=float)
    a = np.asarray(params.a, dtype=float)
    b = np.asarray(params.b, dtype=float)
    # shifted sums: exact zero variance when every sample is identical
    shift = None
    s = s2 = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        if isinstance(noise.kind, MultiplicativeUniform):
            u = 2.0 * gen.random((m, x.size)) - 1.0
            f = x * (1.0 + noise.kind.beta * u)
        else:
            z = np.array([sample_noise(x, noise, gen).z for _ in range(m)])
            f = np.maximum(x + z, 0.0)
        c = _oracle_social_cost(f, a, b)
        if shift is None:
            shift = float(c[0])
        c = c - shift
        s += float(c.sum())
        s2 += float(np.dot(c, c))
        done += m
    if n == 1:
        return shift, 0.0
    dm = s / n
    var = max(s2 / n - dm * dm, 0.0) * n / (n - 1)
    return shift + dm, float(np.sqrt(var / n))


def stationarity_residual(x, net: Network, beta: float, params=None) -> float:
    """``|upper-path - lower-path|`` expected marginal cost on a two-route network.

    The network must have a single OD pair served by exactly two simple
    paths.  Marginal costs are averaged over ``u`` by quadrature.
    """
    if len(net.demands) != 1:
        raise ValueError("stationarity check needs exactly one OD pair")
    d = net.demands[0]
    paths = simple_paths(net, d.origin, d.destination)
    if len(paths) != 2:
        raise ValueError("stationarity check needs exactly two routes")
    x = np.asarray(x, dtype=float)
    if params is None:
        a = np.array([e.a for e in net.edges])
        b = np.array([e.b for e in net.edges])
    else:
        a, b = np.asarray(params.a, dtype=float), np.asarray(params.b, dtype=float)
    # d/dx E[x(1+bu) c(x(1+bu))] = E[(1+bu)(a + 5 b x^4 (1+bu)^4)]
    marg = np.zeros_like(x)
    for node, w in zip(_NODES, _WEIGHTS):
        s = 1.0 + beta * node
        marg += 0.5 * w * s * (a + 5.0 * b * x**4 * s**4)
    upper, lower = (sum(marg[e] for e in p) for p in paths)
    return float(abs(upper - lower))
