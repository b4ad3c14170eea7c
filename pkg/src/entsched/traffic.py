"""Request generation, queue bookkeeping and the retry/abort mechanism."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

QUEUED = "queued"
EXECUTING = "executing"
SUCCEEDED = "succeeded"
PENDING = "pending"
ABORTED = "aborted"


@dataclass
class EntanglementRequest:
    """One end-to-end entanglement demand and its lifecycle state."""

    id: int
    source: int
    destination: int
    generated_at_ns: float
    retries_used: int = 0
    status: str = QUEUED
    fulfilled_at_ns: float | None = None
    # Trace fields, filled by the engine on execution.
    path_len: int = 0
    fidelity: float | None = None

    def __post_init__(self) -> None:
        if self.source == self.destination:
            raise ValueError("source and destination must differ")


@dataclass(frozen=True)
class ArrivalConfig:
    """Truncated-Poisson arrival process: mean load and per-slot bounds."""

    mean_per_slot: float
    minimum: int = 0
    maximum: int = 10

    def __post_init__(self) -> None:
        if self.mean_per_slot <= 0:
            raise ValueError("mean_per_slot must be positive")
        if not 0 <= self.minimum <= self.maximum:
            raise ValueError("need 0 <= minimum <= maximum")


def sample_arrivals(cfg: ArrivalConfig, rng: np.random.Generator) -> int:
    """Poisson draw conditioned on [minimum, maximum] by rejection."""
    if cfg.minimum == cfg.maximum:
        return cfg.minimum
    while True:
        n = int(rng.poisson(cfg.mean_per_slot))
        if cfg.minimum <= n <= cfg.maximum:
            return n


def generate_requests(
    count: int,
    nodes,
    slot_start_ns: float,
    rng: np.random.Generator,
    start_id: int = 0,
) -> list[EntanglementRequest]:
    """Fresh requests with uniformly random distinct (source, destination) pairs."""
    nodes = list(nodes)
    if len(nodes) < 2:
        raise ValueError("need at least two nodes to draw request pairs")
    out = []
    for i in range(count):
        src_idx = int(rng.integers(len(nodes)))
        other = int(rng.integers(len(nodes) - 1))
        dst_idx = other if other < src_idx else other + 1
        out.append(
            EntanglementRequest(
                id=start_id + i,
                source=nodes[src_idx],
                destination=nodes[dst_idx],
                generated_at_ns=slot_start_ns,
            )
        )
    return out


def merge_queue(
    pending: list[EntanglementRequest], arrivals: list[EntanglementRequest]
) -> list[EntanglementRequest]:
    """Pending requests keep priority over arrivals; FIFO by id inside each group."""
    return sorted(pending, key=lambda r: r.id) + sorted(arrivals, key=lambda r: r.id)


def apply_retry_policy(
    failed: list[EntanglementRequest],
    unselected: list[EntanglementRequest],
    max_retries: int,
) -> tuple[list[EntanglementRequest], list[EntanglementRequest]]:
    """Route failed and unselected requests to the pending or aborted group.

    Only execution failures consume a retry; requests deferred for lack of
    resources re-queue for free.
    """
    pending: list[EntanglementRequest] = []
    aborted: list[EntanglementRequest] = []
    for req in failed:
        req.retries_used += 1
        if req.retries_used > max_retries:
            req.status = ABORTED
            aborted.append(req)
        else:
            req.status = PENDING
            pending.append(req)
    for req in unselected:
        req.status = PENDING
        pending.append(req)
    pending.sort(key=lambda r: r.id)
    aborted.sort(key=lambda r: r.id)
    return pending, aborted
