"""Per-slot evaluation metrics, the scalar slot reward, and run aggregation."""

from __future__ import annotations

from dataclasses import dataclass

from .traffic import SUCCEEDED, EntanglementRequest

WINDOW_SLOTS = 50


@dataclass(frozen=True)
class RewardWeights:
    """Coefficients of the slot reward; beta > alpha favours request success."""

    alpha: float = 0.3
    beta: float = 0.6
    gamma: float = 0.1
    request_cap: int = 10


@dataclass(frozen=True)
class SlotMetrics:
    slot: int
    links_used: int
    links_successful: int
    executed: int
    queued: int
    successes: int
    failures: int
    utilization: float
    handling_rate: float
    reward: float


def delay(fulfilled_at_ns: float, generated_at_ns: float) -> float:
    """Delay of a successful request."""
    if fulfilled_at_ns < generated_at_ns:
        raise ValueError("fulfilment cannot precede generation")
    return fulfilled_at_ns - generated_at_ns


def capacity_utilization(links_used: int, total_links: int) -> float:
    """Fraction of topology links carrying an allocated path this slot."""
    if total_links <= 0:
        raise ValueError("total_links must be positive")
    return links_used / total_links


def handling_rate(executed: int, queued: int) -> float:
    """Fraction of this slot's queued requests that got executed."""
    if queued <= 0:
        raise ValueError("handling rate is undefined for an empty slot")
    return executed / queued


def slot_reward(
    links_successful: int,
    links_used: int,
    successes: int,
    failures: int,
    queued: int,
    weights: RewardWeights,
) -> float:
    """Weighted link efficiency plus capped success ratio minus failure penalty."""
    link_term = links_successful / links_used if links_used > 0 else 0.0
    cap = min(queued, weights.request_cap)
    success_term = successes / cap if cap > 0 else 0.0
    return weights.alpha * link_term + weights.beta * success_term - weights.gamma * failures


def windowed_means(values: list[float], window: int = WINDOW_SLOTS) -> list[float]:
    """Means of consecutive non-overlapping windows; the tail window may be short."""
    if window < 1:
        raise ValueError("window must be at least 1")
    return [
        sum(chunk) / len(chunk)
        for chunk in (values[i : i + window] for i in range(0, len(values), window))
        if chunk
    ]


@dataclass(frozen=True)
class RunReport:
    """Aggregate view of one simulation run."""

    total_requests: int
    successes: int
    aborted: int
    censored: int
    mean_delay_ns: float | None
    mean_utilization: float
    mean_handling_rate: float
    utilization_series: tuple[float, ...]
    handling_series: tuple[float, ...]
    utilization_windows: tuple[float, ...]
    handling_windows: tuple[float, ...]
    mean_reward: float

    def summary_dict(self) -> dict:
        return {
            "total_requests": self.total_requests,
            "successes": self.successes,
            "aborted": self.aborted,
            "censored": self.censored,
            "mean_delay_ns": self.mean_delay_ns,
            "mean_utilization": self.mean_utilization,
            "mean_handling_rate": self.mean_handling_rate,
            "mean_reward": self.mean_reward,
        }


def aggregate_run(
    slots: list[SlotMetrics],
    requests: list[EntanglementRequest],
    censored: int = 0,
) -> RunReport:
    """Fold per-slot metrics and the request trace into a run report.

    Mean delay covers successful requests only; censored requests (still
    pending when the drain phase gave up) are excluded.
    """
    delays = [
        delay(r.fulfilled_at_ns, r.generated_at_ns)
        for r in requests
        if r.status == SUCCEEDED
    ]
    util = [m.utilization for m in slots]
    handl = [m.handling_rate for m in slots]
    rewards = [m.reward for m in slots]
    return RunReport(
        total_requests=len(requests),
        successes=len(delays),
        aborted=sum(1 for r in requests if r.status == "aborted"),
        censored=censored,
        mean_delay_ns=(sum(delays) / len(delays)) if delays else None,
        mean_utilization=(sum(util) / len(util)) if util else 0.0,
        mean_handling_rate=(sum(handl) / len(handl)) if handl else 0.0,
        utilization_series=tuple(util),
        handling_series=tuple(handl),
        utilization_windows=tuple(windowed_means(util)),
        handling_windows=tuple(windowed_means(handl)),
        mean_reward=(sum(rewards) / len(rewards)) if rewards else 0.0,
    )
