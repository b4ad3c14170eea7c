"""Path cost model, candidate-path enumeration and residual-graph feasibility.

A link costs ``(r_loss + sigma) * d``: accumulated photon loss plus a
distance weighting for the time it adds to entanglement distribution.  All
orderings are total: ties on cost break on hop count, then on the node
sequence itself, so every scheduler built on top is deterministic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .topology import NetworkGraph

DEFAULT_SIGMA_PER_KM = 0.1

# Costs are compared rounded to 9 decimals so that mathematically-tied paths
# fall through to the (hops, node sequence) tie-break instead of splitting on
# float summation noise.
COST_DECIMALS = 9


def quantized(cost: float) -> float:
    return round(cost, COST_DECIMALS)


@dataclass(frozen=True)
class CandidatePath:
    """A loop-free path with its cost and resource footprint."""

    nodes: tuple[int, ...]
    cost: float
    required_memories: int
    edges: tuple[tuple[int, int], ...]

    @classmethod
    def from_nodes(cls, graph: NetworkGraph, nodes, sigma: float) -> "CandidatePath":
        nodes = tuple(nodes)
        return cls(
            nodes=nodes,
            cost=path_cost(nodes, graph, sigma),
            required_memories=2 * len(nodes) - 2,
            edges=tuple(tuple(sorted(pair)) for pair in zip(nodes, nodes[1:])),
        )

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    def sort_key(self) -> tuple[float, int, tuple[int, ...]]:
        return (quantized(self.cost), self.hops, self.nodes)


def link_cost(d_km: float, r_loss_db_per_km: float, sigma: float) -> float:
    """Cost of a single link: photon-loss term plus distance weighting."""
    if d_km < 0 or r_loss_db_per_km < 0 or sigma < 0:
        raise ValueError("link cost inputs must be non-negative")
    return r_loss_db_per_km * d_km + sigma * d_km


def path_cost(path, graph: NetworkGraph, sigma: float) -> float:
    """Sum of link costs along consecutive node pairs of ``path``."""
    nodes = tuple(getattr(path, "nodes", path))
    total = 0.0
    for u, v in zip(nodes, nodes[1:]):
        if not graph.has_edge(u, v):
            raise ValueError(f"nodes {u} and {v} are not adjacent")
        attrs = graph.edge(u, v)
        total += link_cost(attrs.d_km, attrs.r_loss_db_per_km, sigma)
    return total


def _node_usable(graph: NetworkGraph, v: int, as_endpoint: bool) -> bool:
    if graph.node_disjoint and v in graph.used_nodes:
        return False
    need = 1 if as_endpoint else 2
    return graph.memory_left(v) >= need


def min_cost_path(
    graph: NetworkGraph,
    source: int,
    destination: int,
    sigma: float = DEFAULT_SIGMA_PER_KM,
) -> CandidatePath | None:
    """Lowest-cost feasible path on the residual graph, or ``None``.

    Feasible means every edge has a free channel and every node can still
    host the memories the path needs.  Ties break on (cost, hops, node
    sequence).
    """
    if source == destination:
        raise ValueError("source and destination must differ")
    if not _node_usable(graph, source, True) or not _node_usable(graph, destination, True):
        return None

    # Heap entries carry the quantized cost for ordering and the raw running
    # sum (last element, never compared: node tuples are unique) for output.
    heap: list[tuple[float, int, tuple[int, ...], float]] = [(0.0, 0, (source,), 0.0)]
    done: set[int] = set()
    while heap:
        _, hops, nodes, cost = heapq.heappop(heap)
        u = nodes[-1]
        if u in done:
            continue
        done.add(u)
        if u == destination:
            return CandidatePath(
                nodes=nodes,
                cost=cost,
                required_memories=2 * len(nodes) - 2,
                edges=tuple(tuple(sorted(pair)) for pair in zip(nodes, nodes[1:])),
            )
        for v, attrs in graph.available_neighbors(u):
            if v in done:
                continue
            if not _node_usable(graph, v, as_endpoint=(v == destination)):
                continue
            total = cost + link_cost(attrs.d_km, attrs.r_loss_db_per_km, sigma)
            heapq.heappush(heap, (quantized(total), hops + 1, nodes + (v,), total))
    return None


def k_lowest_cost_paths(
    graph: NetworkGraph,
    source: int,
    destination: int,
    k: int,
    sigma: float = DEFAULT_SIGMA_PER_KM,
) -> list[CandidatePath]:
    """Up to ``k`` loop-free paths in non-decreasing cost order.

    Classic deviation-based enumeration: each new path is the best spur off a
    previously accepted path with that path's root edges disabled.  Returns
    an empty list when the pair is disconnected on the residual graph.
    """
    if source == destination:
        raise ValueError("source and destination must differ")
    if k < 1:
        return []
    first = min_cost_path(graph, source, destination, sigma)
    if first is None:
        return []

    accepted = [first]
    seen = {first.nodes}
    # Key tuples end in the unique node sequence, so the paired CandidatePath
    # is never itself compared.
    candidates: list[tuple[tuple[float, int, tuple[int, ...]], CandidatePath]] = []
    for _ in range(1, k):
        base = accepted[-1].nodes
        for i in range(len(base) - 1):
            spur = base[i]
            root = base[: i + 1]
            scratch = graph.copy()
            for path in accepted:
                if path.nodes[: i + 1] == root and len(path.nodes) > i + 1:
                    key = scratch._key(path.nodes[i], path.nodes[i + 1])
                    if key in scratch._channels:
                        scratch._channels[key] = 0
            for node in root[:-1]:
                scratch.memories[node] = 0
            spur_path = min_cost_path(scratch, spur, destination, sigma)
            if spur_path is None:
                continue
            nodes = root[:-1] + spur_path.nodes
            if nodes in seen:
                continue
            seen.add(nodes)
            full = CandidatePath.from_nodes(graph, nodes, sigma)
            heapq.heappush(candidates, (full.sort_key(), full))
        if not candidates:
            break
        accepted.append(heapq.heappop(candidates)[1])
    return accepted


def is_feasible(path, graph: NetworkGraph) -> bool:
    """True iff ``path`` can still be allocated on the residual graph."""
    nodes = tuple(getattr(path, "nodes", path))
    if len(nodes) < 2:
        return False
    for u, v in zip(nodes, nodes[1:]):
        if not graph.has_edge(u, v) or graph.channels_left(u, v) < 1:
            return False
    for i, v in enumerate(nodes):
        endpoint = i == 0 or i == len(nodes) - 1
        if not _node_usable(graph, v, as_endpoint=endpoint):
            return False
    return True


def remove_path(graph: NetworkGraph, path) -> NetworkGraph:
    """Residual graph after allocating ``path``; the input is untouched."""
    nodes = tuple(getattr(path, "nodes", path))
    if not is_feasible(nodes, graph):
        raise ValueError(f"path {nodes} is not feasible on the residual graph")
    g = graph.copy()
    for u, v in zip(nodes, nodes[1:]):
        g.take_channel(u, v)
    for i, v in enumerate(nodes):
        g.take_memory(v, 1 if i in (0, len(nodes) - 1) else 2)
    if g.node_disjoint:
        g.used_nodes.update(nodes)
    return g
