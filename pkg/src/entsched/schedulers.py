"""The six allocation strategies behind a common interface.

Every scheduler maps ``(slot graph, request queue)`` to an ``Allocation``:
which requests run this slot, on which mutually-feasible paths, and in what
selection order.  All tie-breaks are total (cost, memories/hops, then id or
node sequence), so results are deterministic for a given queue.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .pathing import (
    DEFAULT_SIGMA_PER_KM,
    CandidatePath,
    is_feasible,
    k_lowest_cost_paths,
    min_cost_path,
    quantized,
    remove_path,
)
from .topology import NetworkGraph
from .traffic import EntanglementRequest

GOOD = "good"
MEDIUM_WORST = "medium_worst"
WORST = "worst"

SCHEDULER_NAMES = (
    "dynamic_efficient",
    "static_efficient",
    "success_enhancement",
    "dynamic_fifo",
    "static_fifo",
    "ppo",
)


@dataclass
class Allocation:
    """Outcome of one slot's scheduling decision."""

    selected: dict[int, list[CandidatePath]] = field(default_factory=dict)
    unselected: list[int] = field(default_factory=list)
    order: list[tuple[int, CandidatePath]] = field(default_factory=list)

    def request_ids(self) -> set[int]:
        return set(self.selected) | set(self.unselected)


@dataclass(frozen=True)
class SuccessEnhancementConfig:
    """Cost thresholds and the multipath window for success enhancement."""

    good_threshold: float = 12.0
    worst_threshold: float = 15.0
    similarity_threshold: float = 2.0
    max_paths_per_request: int = 3

    def __post_init__(self) -> None:
        if self.good_threshold >= self.worst_threshold:
            raise ValueError("good_threshold must lie below worst_threshold")
        if self.similarity_threshold < 0:
            raise ValueError("similarity_threshold must be non-negative")
        if self.max_paths_per_request < 1:
            raise ValueError("max_paths_per_request must be at least 1")


def classify_request(min_cost: float, good_threshold: float, worst_threshold: float) -> str:
    """Bucket a request by its cheapest path cost; thresholds are strict."""
    cost = quantized(min_cost)
    if cost < good_threshold:
        return GOOD
    if cost > worst_threshold:
        return WORST
    return MEDIUM_WORST


def schedule_dynamic_efficient(
    graph: NetworkGraph,
    requests: list[EntanglementRequest],
    sigma: float = DEFAULT_SIGMA_PER_KM,
) -> Allocation:
    """Repeatedly grant the request whose best residual path is cheapest.

    Each round re-evaluates the remaining requests on the current residual
    graph, admits the one minimising (cost, required memories, id), removes
    its path, and continues until nothing feasible is left.
    """
    residual = graph.copy()
    remaining = list(requests)
    alloc = Allocation()
    # Best-path cache: removal only shrinks the graph, so an entry stays
    # optimal until the removed path touches one of its nodes.
    cache: dict[int, CandidatePath | None] = {}
    while remaining:
        best_req = None
        best_path = None
        for req in remaining:
            if req.id not in cache:
                cache[req.id] = min_cost_path(residual, req.source, req.destination, sigma)
            path = cache[req.id]
            if path is None:
                continue
            if best_path is None or (
                (quantized(path.cost), path.required_memories, req.id)
                < (quantized(best_path.cost), best_path.required_memories, best_req.id)
            ):
                best_req, best_path = req, path
        if best_req is None:
            break
        alloc.selected[best_req.id] = [best_path]
        alloc.order.append((best_req.id, best_path))
        residual = remove_path(residual, best_path)
        remaining.remove(best_req)
        touched = set(best_path.nodes)
        for rid, cached in list(cache.items()):
            if cached is not None and touched.intersection(cached.nodes):
                del cache[rid]
    alloc.unselected = [r.id for r in remaining]
    return alloc


def schedule_static_efficient(
    graph: NetworkGraph,
    requests: list[EntanglementRequest],
    sigma: float = DEFAULT_SIGMA_PER_KM,
) -> Allocation:
    """Fixed fresh-graph paths, admitted in ascending cost order, prefix stop.

    Paths are never recomputed: the first candidate that cannot coexist with
    the already admitted paths terminates the whole selection.
    """
    evaluated = []
    for req in requests:
        path = min_cost_path(graph, req.source, req.destination, sigma)
        key = (
            (quantized(path.cost), path.required_memories, req.id)
            if path is not None
            else (float("inf"), 0, req.id)
        )
        evaluated.append((key, req, path))
    evaluated.sort(key=lambda item: item[0])

    alloc = Allocation()
    residual = graph.copy()
    stopped = False
    for _, req, path in evaluated:
        if not stopped and path is not None and is_feasible(path, residual):
            alloc.selected[req.id] = [path]
            alloc.order.append((req.id, path))
            residual = remove_path(residual, path)
        else:
            stopped = True
            alloc.unselected.append(req.id)
    return alloc


def schedule_dynamic_fifo(
    graph: NetworkGraph,
    requests: list[EntanglementRequest],
    sigma: float = DEFAULT_SIGMA_PER_KM,
) -> Allocation:
    """Strict queue order with residual-graph re-routing; infeasible means skip."""
    alloc = Allocation()
    residual = graph.copy()
    for req in requests:
        path = min_cost_path(residual, req.source, req.destination, sigma)
        if path is None:
            alloc.unselected.append(req.id)
            continue
        alloc.selected[req.id] = [path]
        alloc.order.append((req.id, path))
        residual = remove_path(residual, path)
    return alloc


def schedule_static_fifo(
    graph: NetworkGraph,
    requests: list[EntanglementRequest],
    sigma: float = DEFAULT_SIGMA_PER_KM,
) -> Allocation:
    """Strict queue order with fixed fresh-graph paths; halts at the first conflict."""
    alloc = Allocation()
    residual = graph.copy()
    stopped = False
    for req in requests:
        path = None if stopped else min_cost_path(graph, req.source, req.destination, sigma)
        if stopped or path is None or not is_feasible(path, residual):
            stopped = True
            alloc.unselected.append(req.id)
            continue
        alloc.selected[req.id] = [path]
        alloc.order.append((req.id, path))
        residual = remove_path(residual, path)
    return alloc


def schedule_success_enhancement(
    graph: NetworkGraph,
    requests: list[EntanglementRequest],
    cfg: SuccessEnhancementConfig | None = None,
    sigma: float = DEFAULT_SIGMA_PER_KM,
    k_paths: int = 5,
) -> Allocation:
    """Multipath allocation for medium-worst requests, single path otherwise.

    Medium-worst requests go first (ascending minimum cost) and may hold up
    to ``max_paths_per_request`` mutually feasible candidates whose cost sits
    within the similarity window of their cheapest path.  Good and worst
    requests follow with one dynamically re-routed path each.
    """
    cfg = cfg or SuccessEnhancementConfig()
    classified: dict[str, list[tuple[float, EntanglementRequest, list[CandidatePath]]]] = {
        GOOD: [],
        MEDIUM_WORST: [],
        WORST: [],
    }
    alloc = Allocation()
    for req in requests:
        candidates = k_lowest_cost_paths(graph, req.source, req.destination, k_paths, sigma)
        if not candidates:
            alloc.unselected.append(req.id)
            continue
        min_cost = candidates[0].cost
        label = classify_request(min_cost, cfg.good_threshold, cfg.worst_threshold)
        classified[label].append((quantized(min_cost), req, candidates))
    for label in classified:
        classified[label].sort(key=lambda item: (item[0], item[1].id))

    residual = graph.copy()
    for min_cost, req, candidates in classified[MEDIUM_WORST]:
        chosen = []
        for cand in candidates:
            if len(chosen) >= cfg.max_paths_per_request:
                break
            if quantized(cand.cost - min_cost) > cfg.similarity_threshold:
                break
            if is_feasible(cand, residual):
                residual = remove_path(residual, cand)
                chosen.append(cand)
                alloc.order.append((req.id, cand))
        if chosen:
            alloc.selected[req.id] = chosen
        else:
            alloc.unselected.append(req.id)
    for label in (GOOD, WORST):
        for _, req, _ in classified[label]:
            path = min_cost_path(residual, req.source, req.destination, sigma)
            if path is None:
                alloc.unselected.append(req.id)
                continue
            alloc.selected[req.id] = [path]
            alloc.order.append((req.id, path))
            residual = remove_path(residual, path)
    alloc.unselected.sort()
    return alloc


def schedule_ppo(
    graph: NetworkGraph,
    requests: list[EntanglementRequest],
    policy,
    sigma: float = DEFAULT_SIGMA_PER_KM,
    k_paths: int = 5,
) -> Allocation:
    """Greedy argmax rollout of a trained path-selection policy.

    The candidate pool holds up to the policy's row capacity of paths across
    the queue; each step picks the highest-probability feasible, unchosen
    path until the feasibility mask empties.
    """
    from . import rl_bridge  # deferred: rl_bridge pulls in the policy stack

    if policy is None:
        raise ValueError("ppo scheduling requires a loaded policy")
    if policy.n_nodes != len(graph.nodes):
        raise rl_bridge.BridgeError(
            f"field 'n_nodes': policy trained for {policy.n_nodes} nodes, "
            f"graph has {len(graph.nodes)}"
        )
    pool = rl_bridge.build_candidate_pool(
        graph, requests, k_paths, sigma, max_rows=policy.max_paths
    )
    residual = graph.copy()
    chosen: list[int] = []
    alloc = Allocation()
    while True:
        state = rl_bridge.encode_state(
            residual,
            pool,
            chosen,
            sigma,
            n_nodes=policy.n_nodes,
            max_paths=policy.max_paths,
            n_buckets=policy.n_buckets,
            bucket_width=policy.bucket_width,
        )
        if not state.mask.any():
            break
        logits, _ = rl_bridge.policy_forward(policy, state)
        action = int(logits.argmax())
        entry = pool[action]
        residual = remove_path(residual, entry.path)
        chosen.append(action)
        alloc.order.append((entry.request_id, entry.path))
        alloc.selected.setdefault(entry.request_id, []).append(entry.path)
    alloc.unselected = sorted(r.id for r in requests if r.id not in alloc.selected)
    return alloc
