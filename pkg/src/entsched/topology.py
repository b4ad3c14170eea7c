"""Random network topologies with heterogeneous fibre-link attributes.

Two generators are provided: a small-world ring-lattice-plus-rewiring graph
and a random geometric graph on the unit square.  Both regenerate with a
perturbed seed until the result is connected (bounded attempts) so every run
starts from a usable topology.  Link attributes (hop distance, fibre
attenuation, channel count) are sampled separately so the same structure can
be re-dressed reproducibly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .quantum_link import photon_loss_probability

DISTANCE_SET_KM = (5.0, 6.0, 7.0, 8.0, 9.0, 10.0)
ATTENUATION_SET_DB_PER_KM = (0.15, 0.20, 0.25, 0.30, 0.35)

MAX_GENERATION_ATTEMPTS = 64


class TopologyError(RuntimeError):
    """Raised when no acceptable topology can be generated."""


@dataclass(frozen=True)
class LinkAttributes:
    """Fixed physical attributes of one edge."""

    d_km: float
    r_loss_db_per_km: float
    channels: int = 1

    @property
    def p_loss(self) -> float:
        return photon_loss_probability(self.d_km, self.r_loss_db_per_km)


class NetworkGraph:
    """Undirected multigraph-capacity network with per-node memory budgets.

    The same object doubles as the residual graph during scheduling: edge
    channel counters and node memory counters are decremented as paths are
    allocated, and ``copy`` produces an independent residual to mutate.
    """

    def __init__(self, nodes: Iterable[int]):
        self.nodes: list[int] = sorted(nodes)
        self._adj: dict[int, dict[int, LinkAttributes]] = {v: {} for v in self.nodes}
        self._channels: dict[tuple[int, int], int] = {}
        self.memories: dict[int, int] = {v: 2 for v in self.nodes}
        self.layout: dict[int, tuple[float, float]] = {}
        # Strict node-disjoint mode: nodes touched by an allocated path are
        # off-limits to every later path in the same slot.
        self.node_disjoint: bool = False
        self.used_nodes: set[int] = set()

    @staticmethod
    def _key(u: int, v: int) -> tuple[int, int]:
        return (u, v) if u < v else (v, u)

    def add_edge(self, u: int, v: int, attrs: LinkAttributes) -> None:
        if u == v:
            raise ValueError(f"self-loop at node {u}")
        if u not in self._adj or v not in self._adj:
            raise ValueError(f"unknown node in edge ({u}, {v})")
        if v in self._adj[u]:
            raise ValueError(f"duplicate edge ({u}, {v})")
        self._adj[u][v] = attrs
        self._adj[v][u] = attrs
        self._channels[self._key(u, v)] = attrs.channels

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj.get(u, {})

    def edge(self, u: int, v: int) -> LinkAttributes:
        return self._adj[u][v]

    def edges(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self._channels))

    @property
    def num_edges(self) -> int:
        return len(self._channels)

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def channels_left(self, u: int, v: int) -> int:
        return self._channels[self._key(u, v)]

    def take_channel(self, u: int, v: int) -> None:
        key = self._key(u, v)
        if self._channels[key] < 1:
            raise ValueError(f"no channel left on edge {key}")
        self._channels[key] -= 1

    def memory_left(self, v: int) -> int:
        return self.memories[v]

    def take_memory(self, v: int, amount: int) -> None:
        if self.memories[v] < amount:
            raise ValueError(f"node {v} lacks {amount} free memories")
        self.memories[v] -= amount

    def available_neighbors(self, u: int) -> Iterator[tuple[int, LinkAttributes]]:
        """Neighbours reachable over an edge with at least one free channel."""
        for v, attrs in self._adj[u].items():
            if self._channels[self._key(u, v)] > 0:
                yield v, attrs

    def is_connected(self) -> bool:
        if not self.nodes:
            return False
        seen = {self.nodes[0]}
        stack = [self.nodes[0]]
        while stack:
            u = stack.pop()
            for v in self._adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == len(self.nodes)

    def copy(self) -> "NetworkGraph":
        g = NetworkGraph(self.nodes)
        g._adj = {u: dict(nbrs) for u, nbrs in self._adj.items()}
        g._channels = dict(self._channels)
        g.memories = dict(self.memories)
        g.layout = dict(self.layout)
        g.node_disjoint = self.node_disjoint
        g.used_nodes = set(self.used_nodes)
        return g

    def to_json(self) -> str:
        doc = {
            "nodes": self.nodes,
            "edges": [
                {
                    "u": u,
                    "v": v,
                    "d_km": self._adj[u][v].d_km,
                    "r_loss_db_per_km": self._adj[u][v].r_loss_db_per_km,
                    "channels": self._adj[u][v].channels,
                }
                for u, v in self.edges()
            ],
            "memories": {str(v): m for v, m in sorted(self.memories.items())},
            "layout": {str(v): list(xy) for v, xy in sorted(self.layout.items())},
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NetworkGraph":
        doc = json.loads(text)
        g = cls(doc["nodes"])
        for e in doc["edges"]:
            g.add_edge(
                e["u"],
                e["v"],
                LinkAttributes(e["d_km"], e["r_loss_db_per_km"], e.get("channels", 1)),
            )
        for v, m in doc.get("memories", {}).items():
            g.memories[int(v)] = m
        for v, xy in doc.get("layout", {}).items():
            g.layout[int(v)] = (xy[0], xy[1])
        return g


def _attempt_rng(seed: int, attempt: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, attempt)))


def _default_memories(graph: NetworkGraph) -> None:
    # Twice the degree: memory only binds when configured tighter.
    for v in graph.nodes:
        graph.memories[v] = max(2, 2 * graph.degree(v))


def generate_watts_strogatz(
    n: int, k: int, rewire_prob: float, seed: int
) -> NetworkGraph:
    """Ring lattice of ``n`` nodes with ``k`` neighbours, rewired with ``rewire_prob``.

    Regenerates with a perturbed seed when the rewired graph is disconnected,
    giving up after a bounded number of attempts.
    """
    if k >= n:
        raise ValueError(f"edges per node k={k} must be below node count n={n}")
    if k < 2 or k % 2 != 0:
        raise ValueError(f"k must be even and at least 2, got {k}")
    if not 0.0 <= rewire_prob <= 1.0:
        raise ValueError(f"rewire probability must be in [0, 1], got {rewire_prob}")

    placeholder = LinkAttributes(DISTANCE_SET_KM[0], ATTENUATION_SET_DB_PER_KM[0])
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = _attempt_rng(seed, attempt)
        g = NetworkGraph(range(n))
        for offset in range(1, k // 2 + 1):
            for u in range(n):
                g.add_edge(u, (u + offset) % n, placeholder)
        # Rewire the clockwise edges lattice-round by lattice-round.
        for offset in range(1, k // 2 + 1):
            for u in range(n):
                v = (u + offset) % n
                if not g.has_edge(u, v) or rng.random() >= rewire_prob:
                    continue
                if g.degree(u) >= n - 1:
                    continue
                w = int(rng.integers(n))
                while w == u or g.has_edge(u, w):
                    w = int(rng.integers(n))
                _drop_edge(g, u, v)
                g.add_edge(u, w, placeholder)
        if g.is_connected():
            _default_memories(g)
            for idx, node in enumerate(g.nodes):
                angle = 2.0 * math.pi * idx / n
                g.layout[node] = (math.cos(angle), math.sin(angle))
            return g
    raise TopologyError(
        f"no connected graph for n={n}, k={k}, p={rewire_prob} "
        f"within {MAX_GENERATION_ATTEMPTS} attempts"
    )


def _drop_edge(g: NetworkGraph, u: int, v: int) -> None:
    del g._adj[u][v]
    del g._adj[v][u]
    del g._channels[g._key(u, v)]


def generate_random_geometric(n: int, radius: float, seed: int) -> NetworkGraph:
    """``n`` uniform points in the unit square, edges up to Euclidean ``radius``."""
    if radius < 0 or radius > math.sqrt(2.0) + 1e-12:
        raise ValueError(f"radius must be in (0, sqrt(2)], got {radius}")

    placeholder = LinkAttributes(DISTANCE_SET_KM[0], ATTENUATION_SET_DB_PER_KM[0])
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = _attempt_rng(seed, attempt)
        points = rng.random((n, 2))
        g = NetworkGraph(range(n))
        for u in range(n):
            for v in range(u + 1, n):
                if float(np.hypot(*(points[u] - points[v]))) <= radius:
                    g.add_edge(u, v, placeholder)
        if g.is_connected():
            _default_memories(g)
            for v in g.nodes:
                g.layout[v] = (float(points[v][0]), float(points[v][1]))
            return g
    raise TopologyError(
        f"no connected geometric graph for n={n}, radius={radius} "
        f"within {MAX_GENERATION_ATTEMPTS} attempts"
    )


def assign_link_attributes(
    graph: NetworkGraph,
    seed: int,
    distance_set_km: Iterable[float] = DISTANCE_SET_KM,
    attenuation_set_db_per_km: Iterable[float] = ATTENUATION_SET_DB_PER_KM,
    channels: int = 1,
) -> NetworkGraph:
    """Sample fixed hop distances and attenuations for every edge.

    Returns a new graph; the input keeps its placeholder attributes.
    """
    distances = tuple(distance_set_km)
    attenuations = tuple(attenuation_set_db_per_km)
    if not distances or not attenuations:
        raise ValueError("selection sets must be non-empty")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xA77)))
    g = graph.copy()
    for u, v in g.edges():
        attrs = LinkAttributes(
            d_km=float(distances[rng.integers(len(distances))]),
            r_loss_db_per_km=float(attenuations[rng.integers(len(attenuations))]),
            channels=channels,
        )
        g._adj[u][v] = attrs
        g._adj[v][u] = attrs
        g._channels[g._key(u, v)] = channels
    return g


def set_memory_budget(graph: NetworkGraph, budget: int | None) -> NetworkGraph:
    """Override every node's memory budget; ``None`` keeps the degree default."""
    g = graph.copy()
    if budget is not None:
        if budget < 2:
            raise ValueError("memory budget must be at least 2 per node")
        for v in g.nodes:
            g.memories[v] = budget
    return g
