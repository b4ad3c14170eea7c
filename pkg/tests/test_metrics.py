import numpy as np
import pytest

from entsched.metrics import (
    RewardWeights,
    SlotMetrics,
    aggregate_run,
    capacity_utilization,
    delay,
    handling_rate,
    slot_reward,
    windowed_means,
)
from entsched.traffic import EntanglementRequest


def test_delay_values_and_validation():
    assert delay(100.0, 100.0) == 0.0
    assert delay(135_000.0, 0.0) == 135_000.0
    with pytest.raises(ValueError):
        delay(99.0, 100.0)


def test_delay_batch_mean_matches_hand_sum():
    pairs = [(120_000.0, 0.0), (250_000.0, 80_000.0), (90_500.0, 80_000.0)]
    values = [delay(f, g) for f, g in pairs]
    assert sum(values) / len(values) == pytest.approx((120_000 + 170_000 + 10_500) / 3)


def test_capacity_utilization():
    assert capacity_utilization(0, 100) == 0.0
    assert capacity_utilization(100, 100) == 1.0
    assert capacity_utilization(13, 100) == pytest.approx(0.13)
    with pytest.raises(ValueError):
        capacity_utilization(1, 0)


def test_handling_rate():
    assert handling_rate(5, 5) == 1.0
    assert handling_rate(0, 5) == 0.0
    assert handling_rate(9, 10) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        handling_rate(0, 0)


def test_slot_reward_cases():
    w = RewardWeights(alpha=0.3, beta=0.6, gamma=0.1, request_cap=10)
    # Everything succeeds on every used link, load below the cap.
    assert slot_reward(8, 8, 4, 0, 4, w) == pytest.approx(0.9)
    # Nothing executed at all.
    assert slot_reward(0, 0, 0, 0, 0, w) == 0.0
    # Hand-evaluated mixed slot.
    assert slot_reward(4, 8, 2, 2, 4, w) == pytest.approx(0.25)


def test_slot_reward_bounds_random():
    rng = np.random.default_rng(0)
    w = RewardWeights(alpha=0.3, beta=0.6, gamma=0.1, request_cap=10)
    for _ in range(500):
        l_u = int(rng.integers(0, 20))
        l_s = int(rng.integers(0, l_u + 1))
        n_e = int(rng.integers(0, 12))
        n_s = int(rng.integers(0, n_e + 1))
        n_f = n_e - n_s
        n_r = n_e + int(rng.integers(0, 5))
        r = slot_reward(l_s, l_u, n_s, n_f, n_r, w)
        assert -w.gamma * n_e - 1e-12 <= r <= w.alpha + w.beta + 1e-12


def test_windowed_means():
    assert windowed_means([2.0] * 100, 50) == [2.0, 2.0]
    values = list(np.random.default_rng(1).random(100))
    expected = [sum(values[i : i + 50]) / 50 for i in (0, 50)]
    assert windowed_means(values, 50) == pytest.approx(expected)
    # Short tail window still averages what it has.
    assert windowed_means([1.0, 3.0, 5.0], 2) == pytest.approx([2.0, 5.0])


def _slot(slot, **kw):
    base = dict(
        slot=slot, links_used=4, links_successful=2, executed=3, queued=4,
        successes=2, failures=1, utilization=0.04, handling_rate=0.75, reward=0.3,
    )
    base.update(kw)
    return SlotMetrics(**base)


def _request(rid, status, t_g=0.0, t_f=None):
    r = EntanglementRequest(id=rid, source=0, destination=1, generated_at_ns=t_g)
    r.status = status
    r.fulfilled_at_ns = t_f
    return r


def test_aggregate_single_slot():
    slots = [_slot(0)]
    reqs = [_request(0, "succeeded", 0.0, 120_000.0), _request(1, "aborted")]
    report = aggregate_run(slots, reqs)
    assert report.successes == 1
    assert report.aborted == 1
    assert report.mean_delay_ns == pytest.approx(120_000.0)
    assert report.mean_utilization == pytest.approx(0.04)
    assert report.mean_handling_rate == pytest.approx(0.75)
    assert report.utilization_windows == (pytest.approx(0.04),)


def test_aggregate_windows_match_independent_fold():
    rng = np.random.default_rng(2)
    slots = [_slot(i, utilization=float(u)) for i, u in enumerate(rng.random(120))]
    report = aggregate_run(slots, [])
    series = [m.utilization for m in slots]
    expected = [np.mean(series[i : i + 50]) for i in (0, 50, 100)]
    assert list(report.utilization_windows) == pytest.approx(expected)
    assert len(report.utilization_series) == 120


def test_aggregate_counts_censored_and_skips_delay():
    reqs = [_request(0, "pending")]
    report = aggregate_run([], reqs, censored=1)
    assert report.censored == 1
    assert report.mean_delay_ns is None
    assert report.successes == 0
