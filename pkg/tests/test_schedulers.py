import numpy as np
import pytest

from entsched.pathing import is_feasible, min_cost_path, remove_path
from entsched.schedulers import (
    GOOD,
    MEDIUM_WORST,
    WORST,
    SuccessEnhancementConfig,
    classify_request,
    schedule_dynamic_efficient,
    schedule_dynamic_fifo,
    schedule_static_efficient,
    schedule_static_fifo,
    schedule_success_enhancement,
)
from entsched.traffic import EntanglementRequest

from conftest import A, B, C, D, E, F, build_graph, random_requests, random_test_graph
from oracles import ORACLES

SIGMA = 0.1

ALL_SCHEDULERS = [
    schedule_dynamic_efficient,
    schedule_static_efficient,
    schedule_dynamic_fifo,
    schedule_static_fifo,
    lambda g, r, s=SIGMA: schedule_success_enhancement(g, r, None, s),
]


def req(rid, src, dst):
    return EntanglementRequest(id=rid, source=src, destination=dst, generated_at_ns=0.0)


def check_allocation(graph, requests, alloc):
    """Partition plus simultaneous-feasibility replay on a fresh copy."""
    ids = {r.id for r in requests}
    assert set(alloc.selected) | set(alloc.unselected) == ids
    assert not set(alloc.selected) & set(alloc.unselected)
    residual = graph.copy()
    for rid, path in alloc.order:
        assert is_feasible(path, residual)
        residual = remove_path(residual, path)
    assert sum(len(ps) for ps in alloc.selected.values()) == len(alloc.order)


def test_single_request_all_schedulers_agree():
    g = random_test_graph(seed=2)
    best = min_cost_path(g, 0, 5, SIGMA)
    for scheduler in ALL_SCHEDULERS:
        alloc = scheduler(g, [req(0, 0, 5)])
        assert list(alloc.selected) == [0]
        assert alloc.selected[0][0].nodes == best.nodes


def test_parallelize_scenario_dynamic_reroutes(parallelize_graph):
    requests = [req(0, D, C), req(1, A, B), req(2, B, E)]
    alloc = schedule_dynamic_efficient(parallelize_graph, requests, SIGMA)
    assert set(alloc.selected) == {0, 1, 2}
    assert alloc.selected[2][0].nodes == (B, D, E)
    assert [rid for rid, _ in alloc.order] == [0, 1, 2]


def test_parallelize_scenario_static_excludes_third(parallelize_graph):
    requests = [req(0, D, C), req(1, A, B), req(2, B, E)]
    alloc = schedule_static_efficient(parallelize_graph, requests, SIGMA)
    assert set(alloc.selected) == {0, 1}
    assert alloc.unselected == [2]
    # Its precomputed lowest-cost route runs through the taken A-B edge.
    assert min_cost_path(parallelize_graph, B, E, SIGMA).nodes == (B, A, E)


def test_static_efficient_prefix_stop_rejects_later_compatible():
    # Requests sorted by cost: r0 (cheap), r1 (conflicts with r0), r2 (would
    # fit); the stop at r1 still rejects r2.
    g = build_graph(
        {
            (0, 1): (5.0, 0.15),
            (1, 2): (6.0, 0.15),
            (3, 4): (10.0, 0.35),
        }
    )
    requests = [req(0, 0, 1), req(1, 0, 2), req(2, 3, 4)]
    alloc = schedule_static_efficient(g, requests, SIGMA)
    assert set(alloc.selected) == {0}
    assert sorted(alloc.unselected) == [1, 2]


def test_static_fifo_prefix_and_boundary():
    g = build_graph({(0, 1): (5.0, 0.15), (2, 3): (5.0, 0.15)}, nodes=[4, 5])
    # First request disconnected: nothing at all is selected.
    alloc = schedule_static_fifo(g, [req(0, 4, 5), req(1, 0, 1)], SIGMA)
    assert alloc.selected == {} and sorted(alloc.unselected) == [0, 1]
    # Conflict in the middle rejects the compatible tail request too.
    g2 = build_graph({(0, 1): (5.0, 0.15), (1, 2): (6.0, 0.15), (3, 4): (8.0, 0.2)})
    alloc2 = schedule_static_fifo(g2, [req(0, 0, 1), req(1, 0, 1), req(2, 3, 4)], SIGMA)
    assert set(alloc2.selected) == {0}
    assert sorted(alloc2.unselected) == [1, 2]


def test_dynamic_fifo_skips_and_continues():
    g2 = build_graph({(0, 1): (5.0, 0.15), (1, 2): (6.0, 0.15), (3, 4): (8.0, 0.2)})
    alloc = schedule_dynamic_fifo(g2, [req(0, 0, 1), req(1, 0, 1), req(2, 3, 4)], SIGMA)
    assert set(alloc.selected) == {0, 2}
    assert alloc.unselected == [1]


def test_dynamic_fifo_order_sensitivity():
    # 0-1 direct or via 2; queue order decides who gets the direct edge.
    g = build_graph({(0, 1): (5.0, 0.15), (0, 2): (5.0, 0.2), (2, 1): (5.0, 0.2)})
    forward = schedule_dynamic_fifo(g, [req(0, 0, 1), req(1, 0, 1), req(2, 0, 1)], SIGMA)
    assert set(forward.selected) == {0, 1}
    assert forward.selected[0][0].nodes == (0, 1)
    assert forward.selected[1][0].nodes == (0, 2, 1)
    reordered = schedule_dynamic_fifo(g, [req(2, 0, 1), req(0, 0, 1), req(1, 0, 1)], SIGMA)
    assert set(reordered.selected) == {2, 0}


def test_all_disjoint_instance_selects_everything():
    g = build_graph({(0, 1): (5.0, 0.15), (2, 3): (6.0, 0.2), (4, 5): (7.0, 0.25)})
    requests = [req(0, 0, 1), req(1, 2, 3), req(2, 4, 5)]
    for scheduler in ALL_SCHEDULERS:
        alloc = scheduler(g, requests)
        assert set(alloc.selected) == {0, 1, 2}


def test_classify_request_boundaries():
    assert classify_request(12.0, 12.0, 15.0) == MEDIUM_WORST
    assert classify_request(11.9, 12.0, 15.0) == GOOD
    assert classify_request(15.0, 12.0, 15.0) == MEDIUM_WORST
    assert classify_request(15.1, 12.0, 15.0) == WORST


def test_success_enhancement_similarity_window():
    # Two disjoint routes at cost 13 and 14 (inside the window), one at 19.
    g = build_graph(
        {
            (0, 2): (10.0, 0.55),  # 6.5
            (2, 1): (10.0, 0.55),  # 6.5   -> 13.0
            (0, 3): (10.0, 0.60),  # 7.0
            (3, 1): (10.0, 0.60),  # 7.0   -> 14.0
            (0, 4): (10.0, 0.85),  # 9.5
            (4, 1): (10.0, 0.85),  # 9.5   -> 19.0
        }
    )
    cfg = SuccessEnhancementConfig(similarity_threshold=2.0, max_paths_per_request=3)
    alloc = schedule_success_enhancement(g, [req(0, 0, 1)], cfg, SIGMA)
    chosen = {p.nodes for p in alloc.selected[0]}
    assert chosen == {(0, 2, 1), (0, 3, 1)}


def test_success_enhancement_good_gets_single_path():
    g = build_graph(
        {
            (0, 2): (5.0, 0.15),
            (2, 1): (5.0, 0.15),  # cost 2.5: good
            (0, 3): (5.0, 0.20),
            (3, 1): (5.0, 0.20),  # disjoint alternative exists
        }
    )
    alloc = schedule_success_enhancement(g, [req(0, 0, 1)], None, SIGMA)
    assert len(alloc.selected[0]) == 1


def test_success_enhancement_processes_medium_worst_first():
    # One medium-worst and one good request compete for the same cheap edge.
    g = build_graph(
        {
            (0, 2): (10.0, 0.55),  # 6.5
            (2, 1): (10.0, 0.55),  # 13.0 total: medium-worst
            (3, 2): (5.0, 0.15),   # 1.25: good, but shares node 2's memories
        },
        memories={2: 2},
    )
    requests = [req(0, 3, 2), req(1, 0, 1)]
    alloc = schedule_success_enhancement(g, requests, None, SIGMA)
    # Node 2 only has transit memory for the medium-worst path; the good
    # request would have claimed it under FIFO order.
    assert 1 in alloc.selected
    assert alloc.unselected == [0]


def test_multipath_success_uplift_monte_carlo():
    # Two disjoint equal-cost medium-worst routes; per-path success forced to
    # one half: request success should approach 1 - (1 - 1/2)^2 = 3/4.
    g = build_graph(
        {
            (0, 2): (10.0, 0.55),
            (2, 1): (10.0, 0.55),
            (0, 3): (10.0, 0.55),
            (3, 1): (10.0, 0.55),
        }
    )
    cfg = SuccessEnhancementConfig(similarity_threshold=2.0, max_paths_per_request=2)
    alloc = schedule_success_enhancement(g, [req(0, 0, 1)], cfg, SIGMA)
    assert len(alloc.selected[0]) == 2
    rng = np.random.default_rng(9)
    wins = 0
    trials = 10_000
    for _ in range(trials):
        wins += any(rng.random() < 0.5 for _ in alloc.selected[0])
    assert wins / trials == pytest.approx(0.75, abs=0.02)


@pytest.mark.parametrize("name", ["dynamic_efficient", "static_efficient", "dynamic_fifo", "static_fifo"])
def test_matches_independent_oracle(name):
    schedulers = {
        "dynamic_efficient": schedule_dynamic_efficient,
        "static_efficient": schedule_static_efficient,
        "dynamic_fifo": schedule_dynamic_fifo,
        "static_fifo": schedule_static_fifo,
    }
    rng = np.random.default_rng(17)
    for trial in range(40):
        g = random_test_graph(seed=int(rng.integers(10_000)))
        requests = random_requests(rng, g.nodes, int(rng.integers(1, 6)))
        alloc = schedulers[name](g, requests, SIGMA)
        oracle_selected, oracle_unselected = ORACLES[name](g, requests, SIGMA)
        assert {rid: alloc.selected[rid][0].nodes for rid in alloc.selected} == oracle_selected
        assert sorted(alloc.unselected) == oracle_unselected


def test_dynamic_fifo_superset_of_static_fifo():
    rng = np.random.default_rng(23)
    for trial in range(300):
        g = random_test_graph(seed=int(rng.integers(10_000)))
        requests = random_requests(rng, g.nodes, int(rng.integers(1, 7)))
        dynamic = schedule_dynamic_fifo(g, requests, SIGMA)
        static = schedule_static_fifo(g, requests, SIGMA)
        assert set(static.selected) <= set(dynamic.selected)


def test_allocations_always_partition_and_stay_feasible():
    rng = np.random.default_rng(31)
    for trial in range(120):
        g = random_test_graph(seed=int(rng.integers(10_000)), channels=int(rng.integers(1, 3)))
        requests = random_requests(rng, g.nodes, int(rng.integers(0, 7)))
        for scheduler in ALL_SCHEDULERS:
            check_allocation(g, requests, scheduler(g, requests))
