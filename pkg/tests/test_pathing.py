import itertools

import networkx as nx
import pytest

from entsched.pathing import (
    CandidatePath,
    is_feasible,
    k_lowest_cost_paths,
    link_cost,
    min_cost_path,
    path_cost,
    remove_path,
)

from conftest import build_graph, random_test_graph
from oracles import enumerate_paths, to_networkx


def test_link_cost_values():
    assert link_cost(0.0, 0.3, 0.1) == 0.0
    assert link_cost(5.0, 0.15, 0.1) == pytest.approx(1.25)
    assert link_cost(10.0, 0.35, 0.1) == pytest.approx(4.5)
    with pytest.raises(ValueError):
        link_cost(-1.0, 0.2, 0.1)


def test_path_cost_additivity():
    g = build_graph({(0, 1): (5.0, 0.15), (1, 2): (10.0, 0.35)})
    assert path_cost([0, 1], g, 0.1) == pytest.approx(1.25)
    assert path_cost([0, 1, 2], g, 0.1) == pytest.approx(1.25 + 4.5)
    with pytest.raises(ValueError):
        path_cost([0, 2], g, 0.1)


def test_path_cost_matches_independent_sum():
    g = random_test_graph(seed=3)
    nxg = to_networkx(g, 0.1)
    path = nx.shortest_path(nxg, 0, 4, weight="cost")
    expected = sum(nxg[u][v]["cost"] for u, v in zip(path, path[1:]))
    assert path_cost(path, g, 0.1) == pytest.approx(expected, abs=1e-9)


def test_candidate_path_invariants():
    g = random_test_graph(seed=5)
    for u, v in itertools.combinations(g.nodes, 2):
        for p in k_lowest_cost_paths(g, u, v, 4, 0.1):
            assert p.cost == pytest.approx(path_cost(p.nodes, g, 0.1), abs=1e-9)
            assert p.required_memories == 2 * len(p.nodes) - 2


def test_unique_path_in_tree():
    g = build_graph({(0, 1): (5.0, 0.2), (1, 2): (5.0, 0.2), (1, 3): (5.0, 0.2)})
    paths = k_lowest_cost_paths(g, 0, 1, 10, 0.1)
    assert len(paths) == 1 and paths[0].nodes == (0, 1)
    assert len(k_lowest_cost_paths(g, 0, 3, 10, 0.1)) == 1


def test_complete_graph_enumeration_count():
    edges = {(u, v): (5.0, 0.15) for u, v in itertools.combinations(range(4), 2)}
    g = build_graph(edges)
    paths = k_lowest_cost_paths(g, 0, 3, 10, 0.1)
    # K4: one direct, two 2-hop, two 3-hop simple paths.
    assert len(paths) == 5
    assert [p.hops for p in paths] == [1, 2, 2, 3, 3]


def test_disconnected_pair_returns_empty():
    g = build_graph({(0, 1): (5.0, 0.2), (2, 3): (5.0, 0.2)})
    assert k_lowest_cost_paths(g, 0, 3, 5, 0.1) == []
    assert min_cost_path(g, 0, 3, 0.1) is None


def test_paths_sorted_with_total_tiebreak():
    g = random_test_graph(seed=8)
    for u, v in [(0, 4), (1, 6), (2, 7)]:
        paths = k_lowest_cost_paths(g, u, v, 6, 0.1)
        keys = [p.sort_key() for p in paths]
        assert keys == sorted(keys)
        assert len({p.nodes for p in paths}) == len(paths)


def test_enumeration_exhaustive_against_brute_force():
    for seed in range(12):
        g = random_test_graph(seed=seed)
        nxg = to_networkx(g, 0.1)
        for u, v in [(0, 3), (1, 5), (2, 6)]:
            expected = enumerate_paths(nxg, u, v)
            got = k_lowest_cost_paths(g, u, v, len(expected) + 5, 0.1)
            assert [(p.hops, p.nodes) for p in got] == [(h, n) for _, h, n in expected]
            for path, (cost, _, _) in zip(got, expected):
                assert path.cost == pytest.approx(cost, abs=1e-9)


def test_remove_path_capacity_semantics():
    g = build_graph({(0, 1): (5.0, 0.2, 2)})
    once = remove_path(g, [0, 1])
    assert once.channels_left(0, 1) == 1
    assert is_feasible([0, 1], once)
    twice = remove_path(once, [0, 1])
    assert twice.channels_left(0, 1) == 0
    assert not is_feasible([0, 1], twice)
    # Original untouched by either removal.
    assert g.channels_left(0, 1) == 2


def test_remove_only_path_disconnects():
    g = build_graph({(0, 1): (5.0, 0.2)})
    residual = remove_path(g, [0, 1])
    assert min_cost_path(residual, 0, 1, 0.1) is None
    with pytest.raises(ValueError):
        remove_path(residual, [0, 1])


def test_edge_disjoint_sequential_removal():
    g = build_graph(
        {(0, 1): (5.0, 0.2), (1, 3): (5.0, 0.2), (0, 2): (5.0, 0.2), (2, 3): (5.0, 0.2)}
    )
    r1 = remove_path(g, [0, 1, 3])
    assert is_feasible([0, 2, 3], r1)
    r2 = remove_path(r1, [0, 2, 3])
    # Any overlap with either removed path is rejected now.
    assert not is_feasible([0, 1, 3], r2)
    with pytest.raises(ValueError):
        remove_path(r2, [0, 1, 3])


def test_memory_exhaustion_blocks_feasibility():
    # Transit node 1 has exactly one traversal's worth of memories.
    g = build_graph(
        {(0, 1): (5.0, 0.2, 5), (1, 2): (5.0, 0.2, 5)}, memories={1: 2}
    )
    residual = remove_path(g, [0, 1, 2])
    assert residual.channels_left(0, 1) == 4
    assert not is_feasible([0, 1, 2], residual)


def test_endpoint_memory_requirement():
    g = build_graph({(0, 1): (5.0, 0.2, 5)}, memories={0: 1})
    assert is_feasible([0, 1], g)
    residual = remove_path(g, [0, 1])
    assert residual.memories[0] == 0
    assert not is_feasible([0, 1], residual)


def test_dijkstra_respects_memory_constraints():
    # Node 1 cannot serve as a transit (needs 2), so the costlier route wins.
    g = build_graph(
        {(0, 1): (5.0, 0.15), (1, 2): (5.0, 0.15), (0, 3): (10.0, 0.35), (3, 2): (10.0, 0.35)},
        memories={1: 1},
    )
    p = min_cost_path(g, 0, 2, 0.1)
    assert p.nodes == (0, 3, 2)


def test_strict_node_disjoint_mode():
    g = build_graph(
        {(0, 1): (5.0, 0.15), (1, 2): (5.0, 0.15), (0, 3): (5.0, 0.2), (3, 2): (5.0, 0.2), (1, 4): (5.0, 0.2)}
    )
    g.node_disjoint = True
    residual = remove_path(g, [0, 1, 2])
    assert residual.used_nodes == {0, 1, 2}
    assert not is_feasible([1, 4], residual)
    assert min_cost_path(residual, 3, 4, 0.1) is None
