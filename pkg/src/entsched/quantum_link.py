"""Analytic stochastic model of Bell-pair generation, swapping and decoherence.

A path attempt is modelled hop by hop: every hop runs heralded generation
attempts in parallel with its neighbours, each attempt succeeding with
probability ``1 - p_loss`` and costing one round-trip signalling cycle over
the fibre.  The end-to-end pair quality is tracked with a scalar Werner
parameter: each elementary pair starts at ``base_werner``, decays
exponentially while stored waiting for the slowest hop, and every swap at an
intermediate node multiplies the product by the depolarizing survival factor
of the swap operation.  Fidelity is ``(1 + 3w) / 4``, so the 0.5 success
threshold corresponds to ``w = 1/3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Signal speed in optical fibre, used for generation round trips and for the
# classical correction broadcast at the end of a path attempt.
FIBRE_SIGNAL_SPEED_M_PER_S = 2.0e8

NS_PER_S = 1.0e9


@dataclass(frozen=True)
class NoiseParameters:
    """Physical noise knobs for path execution.

    Defaults follow the usual minimal experimental parameters: 1 kHz memory
    depolarizing, 0.1 MHz operation dephasing, and a 0.5 fidelity threshold
    below which a pair is not worth keeping.
    """

    depol_rate_hz: float = 1.0e3
    dephase_rate_hz: float = 1.0e5
    base_werner: float = 0.97
    swap_duration_ns: float = 1000.0
    fidelity_threshold: float = 0.5

    def validate(self) -> None:
        if not (1.0 / 3.0 < self.base_werner <= 1.0):
            raise ValueError(f"base_werner must be in (1/3, 1], got {self.base_werner}")
        if self.depol_rate_hz < 0 or self.dephase_rate_hz < 0:
            raise ValueError("noise rates must be non-negative")
        if self.swap_duration_ns < 0:
            raise ValueError("swap_duration_ns must be non-negative")


@dataclass(frozen=True)
class PathOutcome:
    """Result of one end-to-end path attempt within a slot."""

    success: bool
    fidelity: float
    execution_time_ns: float
    links_used: tuple[tuple[int, int], ...]


def photon_loss_probability(distance_km: float, attenuation_db_per_km: float) -> float:
    """Probability that a photon is lost over a fibre channel."""
    if distance_km < 0 or attenuation_db_per_km < 0:
        raise ValueError("distance and attenuation must be non-negative")
    return 1.0 - 10.0 ** (-(distance_km * attenuation_db_per_km) / 10.0)


def dephasing_probability(duration_ns: float, dephase_rate_hz: float) -> float:
    """Probability of a dephasing error while stored for ``duration_ns``."""
    if duration_ns < 0:
        raise ValueError("duration must be non-negative")
    return 1.0 - math.exp(-(duration_ns / NS_PER_S) * dephase_rate_hz)


def depolarizing_probability(duration_ns: float, depol_rate_hz: float) -> float:
    """Probability of a depolarizing error during an operation of ``duration_ns``."""
    if duration_ns < 0:
        raise ValueError("duration must be non-negative")
    return 1.0 - math.exp(-(duration_ns / NS_PER_S) * depol_rate_hz)


def werner_fidelity(werner: float) -> float:
    """Fidelity of a Werner state with mixing parameter ``werner``."""
    return (1.0 + 3.0 * werner) / 4.0


def attempt_cycle_ns(distance_km: float) -> float:
    """Round-trip duration of one heralded generation attempt over a hop."""
    return 2.0 * distance_km * 1000.0 / FIBRE_SIGNAL_SPEED_M_PER_S * NS_PER_S


def simulate_path_execution(
    path,
    graph,
    noise: NoiseParameters,
    slot_budget_ns: float,
    rng: np.random.Generator,
) -> PathOutcome:
    """Attempt end-to-end entanglement along ``path`` within one slot.

    ``path`` is a node sequence (or anything with a ``nodes`` attribute);
    consecutive nodes must be physical edges of ``graph``.  Hops generate in
    parallel; attempts per hop are geometric and capped so that generation
    never runs past the slot budget.  A run that exceeds the budget reports
    failure with its execution time clamped to the budget.
    """
    nodes = tuple(getattr(path, "nodes", path))
    if len(nodes) < 2:
        raise ValueError("path needs at least two nodes")
    if slot_budget_ns <= 0:
        raise ValueError("slot budget must be positive")
    noise.validate()

    hops = []
    for u, v in zip(nodes, nodes[1:]):
        if not graph.has_edge(u, v):
            raise ValueError(f"nodes {u} and {v} are not adjacent")
        hops.append(graph.edge(u, v))
    links = tuple(tuple(sorted((u, v))) for u, v in zip(nodes, nodes[1:]))

    # Per-hop generation: geometric number of attempts, capped by the slot.
    generated_ok = True
    gen_times = []
    for attrs in hops:
        cycle = attempt_cycle_ns(attrs.d_km)
        success_prob = 1.0 - attrs.p_loss
        max_attempts = int(slot_budget_ns // cycle) if cycle > 0 else 1
        if success_prob <= 0.0 or max_attempts < 1:
            generated_ok = False
            gen_times.append(slot_budget_ns)
            continue
        attempts = int(rng.geometric(success_prob))
        if attempts > max_attempts:
            generated_ok = False
            gen_times.append(slot_budget_ns)
        else:
            gen_times.append(attempts * cycle)

    if not generated_ok:
        return PathOutcome(False, 0.0, slot_budget_ns, links)

    t_links = max(gen_times)
    n_swaps = len(hops) - 1
    total_distance_m = sum(a.d_km for a in hops) * 1000.0
    correction_ns = total_distance_m / FIBRE_SIGNAL_SPEED_M_PER_S * NS_PER_S
    total_ns = t_links + n_swaps * noise.swap_duration_ns + correction_ns

    # Each elementary pair dephases while waiting for the slowest hop; every
    # swap applies the depolarizing survival factor of the operation.
    werner = 1.0
    for gen_time in gen_times:
        stored_ns = t_links - gen_time
        werner *= noise.base_werner * math.exp(
            -(stored_ns / NS_PER_S) * noise.dephase_rate_hz
        )
    werner *= (1.0 - depolarizing_probability(noise.swap_duration_ns, noise.depol_rate_hz)) ** n_swaps
    fidelity = werner_fidelity(werner)

    if total_ns > slot_budget_ns:
        return PathOutcome(False, fidelity, slot_budget_ns, links)
    return PathOutcome(fidelity >= noise.fidelity_threshold, fidelity, total_ns, links)
