"""Quartic link costs, the social objective and its stochastic/expected gradients.

Link cost is ``c_e(f) = a_e + b_e f**4`` and the social objective is
``g(f) = sum_e f_e c_e(f_e)``.  Two random-flow models are supported:

* multiplicative uniform: ``f_e = x_e (1 + beta u_e)`` with ``u_e ~ U[-1, 1]``;
* additive independent: ``f_e = x_e + z_e`` with ``z_e`` independent of ``x``.

For the multiplicative model the expectation has a closed form through
``m5(beta) = E[(1 + beta u)**5]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .network import Network, edge_demand_bounds, DEFAULT_PATH_CAP


@dataclass(frozen=True)
class CostParams:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 1 or a.shape != b.shape:
            raise ValueError("a and b must be 1-D vectors of equal length")
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("cost parameters must be nonnegative")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_network(cls, net: Network) -> "CostParams":
        return cls(np.array(net.a), np.array(net.b))

    def __len__(self):
        return self.a.shape[0]

    def scaled(self, a_factor: float = 1.0, b_factor: float = 1.0) -> "CostParams":
        return CostParams(self.a * a_factor, self.b * b_factor)


def _check(x, params: CostParams) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != params.a.shape:
        raise ValueError(f"flow has {x.shape[-1:]} entries, expected {params.a.shape}")
    return x


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"spread beta must lie in [0, 1], got {beta}")
    return beta


def link_cost(f, params: CostParams) -> np.ndarray:
    f = _check(f, params)
    return params.a + params.b * f**4


def social_cost(f, params: CostParams) -> float | np.ndarray:
    """Total cost ``sum_e f_e (a_e + b_e f_e**4)``; broadcasts over leading axes."""
    f = _check(f, params)
    return np.sum(f * (params.a + params.b * f**4), axis=-1)


def marginal_cost(f, params: CostParams) -> np.ndarray:
    """Gradient of :func:`social_cost`, ``a_e + 5 b_e f_e**4``."""
    f = _check(f, params)
    return params.a + 5.0 * params.b * f**4


def m5(beta: float) -> float:
    """Fifth moment ``E[(1 + beta u)**5]`` for ``u ~ U[-1, 1]``.

    Equals ``((1+beta)**6 - (1-beta)**6) / (12 beta)``; evaluated through the
    even polynomial ``1 + 10 beta**2 / 3 + beta**4`` which has no 0/0 at beta=0.
    """
    beta = _check_beta(beta)
    b2 = beta * beta
    return 1.0 + b2 * (10.0 / 3.0 + b2)


def uniform_flow_moment(x_e: float, beta: float, r: int) -> float:
    """``E[f**r]`` for ``f = x_e (1 + beta u)``, ``u ~ U[-1, 1]``.

    At beta=1 this is ``(2 x_e)**r / (r + 1)``.
    """
    if r < 1 or int(r) != r:
        raise ValueError("r must be a positive integer")
    r = int(r)
    beta = _check_beta(beta)
    if beta < 1e-8:
        # E[(1+bu)^r] = sum over even k of C(r,k) b^k / (k+1)
        s = sum(comb(r, k) * beta**k / (k + 1) for k in range(0, r + 1, 2))
        return x_e**r * s
    return x_e**r * ((1 + beta) ** (r + 1) - (1 - beta) ** (r + 1)) / (2 * beta * (r + 1))


def variance_of_f4(x_e: float, beta: float = 1.0) -> float:
    """Variance of ``f**4`` for ``f ~ U[0, 2 x_e]``: ``16/225 (2 x_e)**8``.

    Other spreads are obtained from :func:`uniform_flow_moment`.
    """
    if beta == 1.0:
        return 16.0 / 225.0 * (2.0 * x_e) ** 8
    return uniform_flow_moment(x_e, beta, 8) - uniform_flow_moment(x_e, beta, 4) ** 2


def stochastic_gradient_case1(x, u, beta: float, params: CostParams) -> np.ndarray:
    """Sampled gradient under multiplicative noise.

    ``a_e (1 + beta u_e) + 5 b_e x_e**4 (1 + beta u_e)**5``; the factor
    ``1 + beta u_e`` is the derivative of ``x_e (1 + beta u_e)`` w.r.t. ``x_e``.
    """
    x = _check(x, params)
    u = np.asarray(u, dtype=float)
    beta = _check_beta(beta)
    if np.any(np.abs(u) > 1.0):
        raise ValueError("uniform variates must lie in [-1, 1]")
    s = 1.0 + beta * u
    return params.a * s + 5.0 * params.b * x**4 * s**5


def stochastic_gradient_case2(x, z, params: CostParams) -> np.ndarray:
    """Sampled gradient ``a_e + 5 b_e (x_e + z_e)**4`` under additive noise.

    Negative total flows are clamped to zero first.
    """
    x = _check(x, params)
    f = np.maximum(x + np.asarray(z, dtype=float), 0.0)
    return params.a + 5.0 * params.b * f**4


def expected_gradient_case1(x, beta: float, params: CostParams) -> np.ndarray:
    x = _check(x, params)
    return params.a + 5.0 * params.b * x**4 * m5(beta)


def expected_gradient_case2(x, moments, params: CostParams) -> np.ndarray:
    """Expected gradient under additive noise from the raw moments of ``z``.

    ``moments`` has shape ``(4, n_edges)`` (or ``(4,)`` shared by all edges):
    rows are ``E[z]``, ``E[z**2]``, ``E[z**3]``, ``E[z**4]``.
    """
    x = _check(x, params)
    if moments is None:
        raise ValueError("noise moments E[z^k], k=1..4, are required")
    mom = np.asarray(moments, dtype=float)
    if mom.shape[0] != 4:
        raise ValueError("need four raw moments E[z^k], k=1..4")
    mom = np.broadcast_to(mom.reshape(4, -1), (4, x.shape[-1]))
    powers = [np.ones_like(x), mom[0], mom[1], mom[2], mom[3]]
    expansion = sum(comb(4, i) * x**i * powers[4 - i] for i in range(5))
    return params.a + 5.0 * params.b * expansion


def expected_social_cost_case1(x, beta: float, params: CostParams) -> float | np.ndarray:
    """``sum_e a_e x_e + b_e x_e**5 m5(beta)``, the mean of the social cost under noise."""
    x = _check(x, params)
    return np.sum(params.a * x + params.b * x**5 * m5(beta), axis=-1)


def lipschitz_bound(net: Network, params: CostParams, beta: float, cap: int = DEFAULT_PATH_CAP) -> float:
    """Lipschitz constant bound for the expected gradient over the feasible set.

    Each feasible edge flow satisfies ``x_e <= K_e``, so the sampled total flow
    is at most ``K_e (1 + beta)``.  Bounding the per-edge factor of
    ``(x-y)`` in the fourth-power difference gives
    ``g_e <= 20 b_e K_e**3 (1 + beta)**3`` and ``L = ||g||_2``.
    The beta < 1 case generalises the ``|z_e| <= x_e`` argument.
    """
    beta = _check_beta(beta)
    K = edge_demand_bounds(net, cap)
    g = 20.0 * params.b * K**3 * (1.0 + beta) ** 3
    return float(np.linalg.norm(g))
