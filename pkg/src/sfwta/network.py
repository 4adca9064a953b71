"""Directed road networks, OD demand, path assignments and the ``.net`` text format.

A network file is line oriented; ``#`` starts a comment::

    NODES A B C D
    EDGE A B 0.3 0.6      # tail head a b
    DEMAND A D 1.0        # origin destination rate

Edges are indexed in file order and every flow vector in the package uses
that order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class NetworkError(ValueError):
    """Base class for network input errors."""


class NetworkParseError(NetworkError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class NetworkValidationError(NetworkError):
    pass


class UnreachableDemandPairError(NetworkValidationError):
    """A positive demand with no route; the CLI reports it as a solver failure."""


class PathLimitError(NetworkError):
    """Raised when simple-path enumeration exceeds its cap."""


DEFAULT_PATH_CAP = 10_000


@dataclass(frozen=True)
class Edge:
    tail: str
    head: str
    a: float
    b: float


@dataclass(frozen=True)
class Demand:
    origin: str
    destination: str
    rate: float


@dataclass(frozen=True)
class Network:
    """Immutable directed graph with quartic link-cost parameters and OD demand.

    Only positive demands are stored.  Construct through :func:`build_network`
    or :func:`parse_network` so that the invariants are checked.
    """

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    demands: tuple[Demand, ...] = ()

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def node_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.nodes)}

    @cached_property
    def tails(self) -> np.ndarray:
        return np.array([self.node_index[e.tail] for e in self.edges], dtype=np.intp)

    @cached_property
    def heads(self) -> np.ndarray:
        return np.array([self.node_index[e.head] for e in self.edges], dtype=np.intp)

    @cached_property
    def a(self) -> np.ndarray:
        a = np.array([e.a for e in self.edges], dtype=float)
        a.flags.writeable = False
        return a

    @cached_property
    def b(self) -> np.ndarray:
        b = np.array([e.b for e in self.edges], dtype=float)
        b.flags.writeable = False
        return b

    @cached_property
    def out_edges(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per node, ``(edge index, head index)`` pairs in edge order."""
        out: list[list[tuple[int, int]]] = [[] for _ in self.nodes]
        for k, (t, h) in enumerate(zip(self.tails, self.heads)):
            out[t].append((k, int(h)))
        return tuple(tuple(x) for x in out)

    @cached_property
    def edge_lookup(self) -> dict[tuple[str, str], int]:
        return {(e.tail, e.head): k for k, e in enumerate(self.edges)}

    @cached_property
    def demand_balance(self) -> np.ndarray:
        """Required net outflow per node, ``sum_j D_ij - sum_j D_ji``."""
        bal = np.zeros(self.n_nodes)
        for d in self.demands:
            bal[self.node_index[d.origin]] += d.rate
            bal[self.node_index[d.destination]] -= d.rate
        return bal

    @property
    def total_demand(self) -> float:
        return float(sum(d.rate for d in self.demands))

    def demand_matrix(self) -> np.ndarray:
        D = np.zeros((self.n_nodes, self.n_nodes))
        for d in self.demands:
            D[self.node_index[d.origin], self.node_index[d.destination]] = d.rate
        return D

    def zero_flow(self) -> np.ndarray:
        return np.zeros(self.n_edges)


def build_network(
    nodes: Iterable[str],
    edges: Iterable[tuple[str, str, float, float] | Edge],
    demands: Iterable[tuple[str, str, float] | Demand] = (),
) -> Network:
    """Build and validate a :class:`Network`.

    Zero demands are dropped; every other invariant violation raises
    :class:`NetworkValidationError`.
    """
    nodes = tuple(str(n) for n in nodes)
    if len(set(nodes)) != len(nodes):
        raise NetworkValidationError("duplicate node identifier")
    known = set(nodes)

    edge_list: list[Edge] = []
    seen: set[tuple[str, str]] = set()
    for e in edges:
        if not isinstance(e, Edge):
            e = Edge(str(e[0]), str(e[1]), float(e[2]), float(e[3]))
        for n in (e.tail, e.head):
            if n not in known:
                raise NetworkValidationError(f"edge {e.tail}->{e.head} uses unknown node {n!r}")
        if e.tail == e.head:
            raise NetworkValidationError(f"self-loop at node {e.tail!r}")
        if (e.tail, e.head) in seen:
            raise NetworkValidationError(f"duplicate edge {e.tail}->{e.head}")
        if not (np.isfinite(e.a) and np.isfinite(e.b)) or e.a < 0 or e.b < 0:
            raise NetworkValidationError(
                f"negative or non-finite cost parameter on edge {e.tail}->{e.head}"
            )
        seen.add((e.tail, e.head))
        edge_list.append(e)

    dem_list: list[Demand] = []
    seen_od: set[tuple[str, str]] = set()
    for d in demands:
        if not isinstance(d, Demand):
            d = Demand(str(d[0]), str(d[1]), float(d[2]))
        for n in (d.origin, d.destination):
            if n not in known:
                raise NetworkValidationError(f"demand uses unknown node {n!r}")
        if (d.origin, d.destination) in seen_od:
            raise NetworkValidationError(f"duplicate demand {d.origin}->{d.destination}")
        seen_od.add((d.origin, d.destination))
        if not np.isfinite(d.rate) or d.rate < 0:
            raise NetworkValidationError(f"negative demand {d.origin}->{d.destination}")
        if d.rate == 0:
            continue
        if d.origin == d.destination:
            raise NetworkValidationError(f"nonzero diagonal demand at {d.origin!r}")
        dem_list.append(d)

    net = Network(nodes, tuple(edge_list), tuple(dem_list))
    for d in net.demands:
        if not _reachable(net, d.origin, d.destination):
            raise UnreachableDemandPairError(
                f"unreachable demand pair {d.origin}->{d.destination}"
            )
    return net


def _reachable(net: Network, origin: str, destination: str) -> bool:
    target = net.node_index[destination]
    stack = [net.node_index[origin]]
    seen = set(stack)
    while stack:
        u = stack.pop()
        if u == target:
            return True
        for _, v in net.out_edges[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def parse_network(text: str) -> Network:
    nodes: list[str] | None = None
    edges = []
    demands = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *args = line.split()
        key = key.upper()
        try:
            if key == "NODES":
                if nodes is not None:
                    raise NetworkParseError(lineno, "NODES given twice")
                if not args:
                    raise NetworkParseError(lineno, "NODES needs at least one node")
                nodes = args
            elif key == "EDGE":
                if len(args) != 4:
                    raise NetworkParseError(lineno, "expected: EDGE tail head a b")
                edges.append((args[0], args[1], float(args[2]), float(args[3])))
            elif key == "DEMAND":
                if len(args) != 3:
                    raise NetworkParseError(lineno, "expected: DEMAND origin destination rate")
                demands.append((args[0], args[1], float(args[2])))
            else:
                raise NetworkParseError(lineno, f"unknown keyword {key!r}")
        except ValueError as exc:
            if isinstance(exc, NetworkParseError):
                raise
            raise NetworkParseError(lineno, f"bad number: {exc}") from None
        if key != "NODES" and nodes is None:
            raise NetworkParseError(lineno, "NODES must precede EDGE and DEMAND lines")
    if nodes is None:
        raise NetworkParseError(0, "missing NODES line")
    return build_network(nodes, edges, demands)


def load_network(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


def serialize_network(net: Network) -> str:
    lines = ["NODES " + " ".join(net.nodes), "# EDGE tail head a b"]
    lines += [f"EDGE {e.tail} {e.head} {e.a!r} {e.b!r}" for e in net.edges]
    lines.append("# DEMAND origin destination rate")
    lines += [f"DEMAND {d.origin} {d.destination} {d.rate!r}" for d in net.demands]
    return "\n".join(lines) + "\n"


# --- flows and path assignments -------------------------------------------------


def as_flow(values: Sequence[float] | np.ndarray, net: Network) -> np.ndarray:
    """Coerce ``values`` to a float edge-flow vector, checking shape and sign."""
    x = np.asarray(values, dtype=float)
    if x.shape != (net.n_edges,):
        raise ValueError(f"flow vector has shape {x.shape}, expected ({net.n_edges},)")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("flow vector must be finite and nonnegative")
    return x


@dataclass(frozen=True)
class AssignedPath:
    origin: str
    destination: str
    edges: tuple[int, ...]
    demand: float


@dataclass(frozen=True)
class PathAssignment:
    paths: tuple[AssignedPath, ...] = ()

    def __iter__(self):
        return iter(self.paths)

    def __len__(self):
        return len(self.paths)


def induced_edge_flow(assignment: PathAssignment | Iterable[AssignedPath], net: Network) -> np.ndarray:
    """Edge flow induced by path flows: each edge carries the demand of every path using it."""
    flow = net.zero_flow()
    for p in assignment:
        node = p.origin
        for k in p.edges:
            if not 0 <= k < net.n_edges:
                raise ValueError(f"path references unknown edge {k}")
            e = net.edges[k]
            if e.tail != node:
                raise ValueError(f"path {p.origin}->{p.destination} is not contiguous at edge {k}")
            node = e.head
            flow[k] += p.demand
        if node != p.destination:
            raise ValueError(f"path {p.origin}->{p.destination} ends at {node}")
    return flow


@dataclass
class BalanceReport:
    ok: bool
    residuals: np.ndarray = field(repr=False)

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if self.residuals.size else 0.0

    def __bool__(self) -> bool:
        return self.ok


def node_net_outflow(x: np.ndarray, net: Network) -> np.ndarray:
    out = np.zeros(net.n_nodes)
    np.add.at(out, net.tails, x)
    np.subtract.at(out, net.heads, x)
    return out


def check_balance(x, net: Network, tol: float = 1e-9) -> BalanceReport:
    """Check aggregate flow conservation at every node.

    The residual at node ``i`` is its net outflow minus ``sum_j D_ij - sum_j D_ji``;
    the check passes when every residual is within ``tol * max(1, total demand)``
    and the flow is nonnegative.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (net.n_edges,):
        raise ValueError(f"flow vector has shape {x.shape}, expected ({net.n_edges},)")
    residuals = node_net_outflow(x, net) - net.demand_balance
    scale = max(1.0, net.total_demand)
    ok = bool(np.all(np.abs(residuals) <= tol * scale) and np.all(x >= -tol * scale))
    return BalanceReport(ok, residuals)


# --- path enumeration ------------------------------------------------------------


def simple_paths(net: Network, origin: str, destination: str, cap: int = DEFAULT_PATH_CAP) -> list[tuple[int, ...]]:
    """All simple directed paths from ``origin`` to ``destination`` as edge-index tuples.

    Depth-first, edges explored in edge order, so the output order is stable.
    """
    src, dst = net.node_index[origin], net.node_index[destination]
    paths: list[tuple[int, ...]] = []
    on_path = [False] * net.n_nodes
    edge_stack: list[int] = []

    def visit(u: int) -> None:
        if u == dst:
            paths.append(tuple(edge_stack))
            if len(paths) > cap:
                raise PathLimitError(
                    f"more than {cap} simple paths from {origin} to {destination}"
                )
            return
        on_path[u] = True
        for k, v in net.out_edges[u]:
            if not on_path[v]:
                edge_stack.append(k)
                visit(v)
                edge_stack.pop()
        on_path[u] = False

    visit(src)
    return paths


def edge_demand_bounds(net: Network, cap: int = DEFAULT_PATH_CAP) -> np.ndarray:
    """Per-edge ``K_e``: total demand of OD pairs having some path through the edge."""
    K = net.zero_flow()
    for d in net.demands:
        used = set()
        for p in simple_paths(net, d.origin, d.destination, cap):
            used.update(p)
        for k in used:
            K[k] += d.rate
    return K


def diameter_bound(net: Network, cap: int = DEFAULT_PATH_CAP) -> float:
    """Upper bound ``2 * ||K||_2`` on the distance between two feasible flows."""
    K = edge_demand_bounds(net, cap)
    return float(2.0 * np.sqrt(np.sum(K**2)))


def example_network() -> Network:
    """The bundled 4-node, 4-link example with a single unit A->D demand."""
    from importlib.resources import files

    return parse_network(files("sfwta").joinpath("data/paper_fig1.net").read_text(encoding="utf-8"))
