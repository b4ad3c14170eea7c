import math

import numpy as np
import pytest

from entsched.traffic import (
    ABORTED,
    PENDING,
    ArrivalConfig,
    EntanglementRequest,
    apply_retry_policy,
    generate_requests,
    merge_queue,
    sample_arrivals,
)


def make_request(rid, src=0, dst=1, retries=0):
    return EntanglementRequest(
        id=rid, source=src, destination=dst, generated_at_ns=0.0, retries_used=retries
    )


def truncated_poisson_mean(lam, lo, hi):
    probs = [math.exp(-lam) * lam**k / math.factorial(k) for k in range(lo, hi + 1)]
    total = sum(probs)
    return sum(k * p for k, p in zip(range(lo, hi + 1), probs)) / total


def test_degenerate_interval_is_constant():
    cfg = ArrivalConfig(mean_per_slot=6.0, minimum=0, maximum=0)
    rng = np.random.default_rng(0)
    assert all(sample_arrivals(cfg, rng) == 0 for _ in range(50))


def test_samples_respect_bounds():
    cfg = ArrivalConfig(mean_per_slot=2.0, minimum=0, maximum=4)
    rng = np.random.default_rng(1)
    draws = [sample_arrivals(cfg, rng) for _ in range(5000)]
    assert set(draws) <= {0, 1, 2, 3, 4}


def test_sample_mean_matches_truncated_pmf():
    cfg = ArrivalConfig(mean_per_slot=6.0, minimum=0, maximum=10)
    rng = np.random.default_rng(7)
    draws = [sample_arrivals(cfg, rng) for _ in range(100_000)]
    assert np.mean(draws) == pytest.approx(truncated_poisson_mean(6.0, 0, 10), abs=0.05)


def test_arrival_config_validation():
    with pytest.raises(ValueError):
        ArrivalConfig(mean_per_slot=0.0)
    with pytest.raises(ValueError):
        ArrivalConfig(mean_per_slot=2.0, minimum=5, maximum=3)


def test_generate_requests_basics():
    rng = np.random.default_rng(3)
    assert generate_requests(0, range(10), 0.0, rng) == []
    reqs = generate_requests(4, range(10), 1000.0, rng, start_id=7)
    assert [r.id for r in reqs] == [7, 8, 9, 10]
    assert all(r.source != r.destination for r in reqs)
    assert all(r.generated_at_ns == 1000.0 for r in reqs)


def test_request_pairs_uniform():
    rng = np.random.default_rng(11)
    counts = {}
    n = 100_000
    for r in generate_requests(n, range(10), 0.0, rng):
        counts[(r.source, r.destination)] = counts.get((r.source, r.destination), 0) + 1
    assert len(counts) == 90
    p = 1.0 / 90.0
    sigma = math.sqrt(n * p * (1 - p))
    assert all(abs(c - n * p) <= 3.5 * sigma for c in counts.values())


def test_rejects_tiny_node_sets_and_same_endpoints():
    with pytest.raises(ValueError):
        generate_requests(1, [0], 0.0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        EntanglementRequest(id=0, source=3, destination=3, generated_at_ns=0.0)


def test_merge_queue_priority_and_fifo():
    assert merge_queue([], [make_request(1)]) == [make_request(1)]
    assert merge_queue([make_request(2)], []) == [make_request(2)]
    pending = [make_request(3)]
    arrivals = [make_request(7), make_request(8)]
    assert [r.id for r in merge_queue(pending, arrivals)] == [3, 7, 8]
    # Ordering inside each group is by id even if handed over shuffled.
    merged = merge_queue([make_request(9), make_request(4)], [make_request(12), make_request(10)])
    assert [r.id for r in merged] == [4, 9, 10, 12]


def test_retry_boundary_goes_to_aborted():
    req = make_request(0, retries=2)
    pending, aborted = apply_retry_policy([req], [], max_retries=2)
    assert pending == [] and aborted == [req]
    assert req.status == ABORTED and req.retries_used == 3


def test_zero_retries_aborts_every_failure():
    failed = [make_request(i) for i in range(4)]
    pending, aborted = apply_retry_policy(failed, [], max_retries=0)
    assert pending == [] and len(aborted) == 4


def test_failure_below_cap_requeues():
    req = make_request(0, retries=0)
    pending, aborted = apply_retry_policy([req], [], max_retries=2)
    assert aborted == [] and pending == [req]
    assert req.status == PENDING and req.retries_used == 1


def test_deferral_never_consumes_retries():
    req = make_request(5)
    for _ in range(5):
        pending, aborted = apply_retry_policy([], [req], max_retries=0)
        assert pending == [req] and aborted == []
    assert req.retries_used == 0 and req.status == PENDING
