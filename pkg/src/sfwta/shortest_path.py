"""Dijkstra shortest paths and all-or-nothing assignment.

Ties are broken deterministically: nodes with equal tentative distance are
settled in node-index order, and among equal-length routes into a node the
predecessor edge with the smaller edge index wins.
"""
from __future__ import annotations

from dataclasses import dataclass
from heapq import heappop, heappush
from math import inf

import numpy as np

from .network import AssignedPath, Network, PathAssignment


class SolverError(RuntimeError):
    pass


class UnreachableDemandError(SolverError):
    pass


@dataclass(frozen=True)
class ShortestPathTree:
    origin: str
    dist: tuple[float, ...]
    pred_edge: tuple[int, ...]  # -1 for the origin and unreachable nodes

    def path_to(self, net: Network, destination: str) -> tuple[int, ...]:
        v = net.node_index[destination]
        if self.dist[v] == inf:
            raise UnreachableDemandError(f"{destination} unreachable from {self.origin}")
        edges = []
        while self.pred_edge[v] >= 0:
            k = self.pred_edge[v]
            edges.append(k)
            v = net.tails[k]
        return tuple(reversed(edges))


def _validate_costs(costs, net: Network) -> np.ndarray:
    c = np.asarray(costs, dtype=float)
    if c.shape != (net.n_edges,):
        raise ValueError(f"cost vector has shape {c.shape}, expected ({net.n_edges},)")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ValueError("edge costs must be finite and nonnegative")
    return c


def _dijkstra(net: Network, c: list[float], src: int) -> tuple[list[float], list[int]]:
    dist = [inf] * net.n_nodes
    pred = [-1] * net.n_nodes
    done = [False] * net.n_nodes
    dist[src] = 0.0
    heap = [(0.0, src)]
    out = net.out_edges
    while heap:
        d, u = heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for k, v in out[u]:
            if done[v]:
                continue
            nd = d + c[k]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = k
                heappush(heap, (nd, v))
            elif nd == dist[v] and k < pred[v]:
                pred[v] = k
    return dist, pred


def dijkstra(net: Network, costs, origin: str) -> ShortestPathTree:
    c = _validate_costs(costs, net)
    dist, pred = _dijkstra(net, c.tolist(), net.node_index[origin])
    return ShortestPathTree(origin, tuple(dist), tuple(pred))


def all_or_nothing(net: Network, costs) -> tuple[np.ndarray, PathAssignment]:
    """Route each OD demand entirely onto its shortest path under ``costs``.

    One Dijkstra run per origin.  Returns the edge flow ``y`` and the
    path assignment that induces it.
    """
    c = _validate_costs(costs, net).tolist()
    y = np.zeros(net.n_edges)
    paths = []
    trees: dict[str, tuple[list[float], list[int]]] = {}
    tails = net.tails
    for d in net.demands:
        if d.origin not in trees:
            trees[d.origin] = _dijkstra(net, c, net.node_index[d.origin])
        dist, pred = trees[d.origin]
        v = net.node_index[d.destination]
        if dist[v] == inf:
            raise UnreachableDemandError(f"no path {d.origin}->{d.destination}")
        edges = []
        while pred[v] >= 0:
            k = pred[v]
            edges.append(k)
            y[k] += d.rate
            v = tails[k]
        paths.append(AssignedPath(d.origin, d.destination, tuple(reversed(edges)), d.rate))
    return y, PathAssignment(tuple(paths))
