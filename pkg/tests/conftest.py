import numpy as np
import pytest

from entsched.topology import LinkAttributes, NetworkGraph

# Node labels used by the six-node scenario graphs.
A, B, C, D, E, F = range(6)


def build_graph(edges, memories=None, nodes=None):
    """Graph from {(u, v): (d_km, r_loss[, channels])} with optional memory overrides."""
    ids = set()
    for u, v in edges:
        ids.update((u, v))
    if nodes is not None:
        ids.update(nodes)
    g = NetworkGraph(ids)
    for (u, v), spec in edges.items():
        d_km, r_loss = spec[0], spec[1]
        channels = spec[2] if len(spec) > 2 else 1
        g.add_edge(u, v, LinkAttributes(d_km, r_loss, channels))
    for v in g.nodes:
        g.memories[v] = max(2, 2 * g.degree(v))
    for v, m in (memories or {}).items():
        g.memories[v] = m
    return g


@pytest.fixture
def parallelize_graph():
    """Six-node network where re-routing lets a third request run in parallel.

    Requests (D,C), (A,B), (B,E): the cheapest route for (B,E) runs through
    the A-B edge; once (A,B) holds it, only the costlier B-D-E detour is left.
    """
    return build_graph(
        {
            (A, B): (6.0, 0.15),
            (A, E): (5.0, 0.15),
            (B, D): (9.0, 0.20),
            (D, E): (8.0, 0.20),
            (D, C): (5.0, 0.15),
            (F, C): (7.0, 0.20),
        }
    )


@pytest.fixture
def starvation_graph():
    """Six-node network where one request has a single route via a shared edge."""
    return build_graph(
        {
            (A, B): (5.0, 0.15),
            (D, C): (5.0, 0.15),
            (B, D): (6.0, 0.20),
            (F, B): (7.0, 0.20),
            (D, E): (8.0, 0.20),
        }
    )


def random_test_graph(seed, n=8, k=4, channels=1):
    """Small attribute-dressed graph for fuzzing."""
    from entsched.topology import assign_link_attributes, generate_watts_strogatz

    g = generate_watts_strogatz(n, k, 0.3, seed=seed)
    return assign_link_attributes(g, seed=seed + 1, channels=channels)


def random_requests(rng, nodes, count, start_id=0):
    from entsched.traffic import EntanglementRequest

    nodes = list(nodes)
    out = []
    for i in range(count):
        src = int(rng.integers(len(nodes)))
        other = int(rng.integers(len(nodes) - 1))
        dst = other if other < src else other + 1
        out.append(
            EntanglementRequest(
                id=start_id + i,
                source=nodes[src],
                destination=nodes[dst],
                generated_at_ns=0.0,
            )
        )
    return out
