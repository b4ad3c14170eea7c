"""Multi-slot simulation loop: refresh, collect, schedule, execute, retry.

One master seed feeds independent named RNG streams (topology, arrivals,
request pairs, per-execution physics), so swapping the scheduler never
perturbs the arrival process.  That makes paired-seed comparisons across
schedulers meaningful and keeps every run bit-reproducible.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import schedulers
from .metrics import (
    RewardWeights,
    RunReport,
    SlotMetrics,
    aggregate_run,
    capacity_utilization,
    handling_rate,
    slot_reward,
)
from .pathing import CandidatePath
from .quantum_link import NoiseParameters, PathOutcome, simulate_path_execution
from .topology import (
    ATTENUATION_SET_DB_PER_KM,
    DISTANCE_SET_KM,
    NetworkGraph,
    assign_link_attributes,
    generate_random_geometric,
    generate_watts_strogatz,
    set_memory_budget,
)
from .traffic import (
    EXECUTING,
    SUCCEEDED,
    ArrivalConfig,
    EntanglementRequest,
    apply_retry_policy,
    generate_requests,
    merge_queue,
    sample_arrivals,
)

STREAM_TOPOLOGY = 1
STREAM_ATTRIBUTES = 2
STREAM_ARRIVALS = 3
STREAM_PAIRS = 4
STREAM_EXECUTION = 5


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def stream_rng(seed: int, stream: int, *key: int) -> np.random.Generator:
    """Independent generator for one named stream of the master seed."""
    return np.random.default_rng(np.random.SeedSequence((seed, stream) + key))


def _child_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence((seed, stream)).generate_state(1)[0])


@dataclass(frozen=True)
class TopologyConfig:
    kind: str = "watts_strogatz"
    nodes: int = 20
    edges_per_node: int = 10
    rewire_prob: float = 0.25
    radius: float = 0.5
    distance_set_km: tuple[float, ...] = DISTANCE_SET_KM
    attenuation_set_db_per_km: tuple[float, ...] = ATTENUATION_SET_DB_PER_KM
    channels_per_edge: int = 1
    memory_per_node: int | None = None

    def build(self, seed: int) -> NetworkGraph:
        if self.kind == "watts_strogatz":
            g = generate_watts_strogatz(
                self.nodes, self.edges_per_node, self.rewire_prob,
                seed=_child_seed(seed, STREAM_TOPOLOGY),
            )
        elif self.kind == "random_geometric":
            g = generate_random_geometric(
                self.nodes, self.radius, seed=_child_seed(seed, STREAM_TOPOLOGY)
            )
        else:
            raise ConfigError(f"unknown topology kind {self.kind!r}")
        g = assign_link_attributes(
            g,
            seed=_child_seed(seed, STREAM_ATTRIBUTES),
            distance_set_km=self.distance_set_km,
            attenuation_set_db_per_km=self.attenuation_set_db_per_km,
            channels=self.channels_per_edge,
        )
        return set_memory_budget(g, self.memory_per_node)


@dataclass(frozen=True)
class RunConfig:
    topology: TopologyConfig = TopologyConfig()
    noise: NoiseParameters = NoiseParameters()
    arrivals: ArrivalConfig = ArrivalConfig(mean_per_slot=6.0, maximum=10)
    reward: RewardWeights | None = None
    scheduler: str = "dynamic_efficient"
    success: schedulers.SuccessEnhancementConfig = schedulers.SuccessEnhancementConfig()
    slot_duration_ns: float = 80_000.0
    slot_count: int = 1000
    max_retries: int = 0
    drain_slot_cap: int = 100
    sigma_per_km: float = 0.1
    k_paths: int = 5
    node_disjoint: bool = False
    seed: int = 1
    policy_path: str | None = None

    def validate(self) -> None:
        if self.scheduler not in schedulers.SCHEDULER_NAMES:
            raise ConfigError(f"unknown scheduler {self.scheduler!r}")
        if self.slot_duration_ns <= 0:
            raise ConfigError("slot_duration_ns must be positive")
        if self.slot_count < 0:
            raise ConfigError("slot_count must be non-negative")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be non-negative")
        if self.k_paths < 1:
            raise ConfigError("k_paths must be at least 1")
        if self.scheduler == "ppo" and not self.policy_path:
            raise ConfigError("ppo scheduling requires policy_path")

    def reward_weights(self) -> RewardWeights:
        if self.reward is not None:
            return self.reward
        return RewardWeights(request_cap=self.arrivals.maximum)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "scheduler": self.scheduler,
            "slot_duration_ns": self.slot_duration_ns,
            "slot_count": self.slot_count,
            "max_retries": self.max_retries,
            "drain_slot_cap": self.drain_slot_cap,
            "sigma_per_km": self.sigma_per_km,
            "k_paths": self.k_paths,
            "node_disjoint": self.node_disjoint,
            "policy_path": self.policy_path,
            "topology": {
                "kind": self.topology.kind,
                "nodes": self.topology.nodes,
                "edges_per_node": self.topology.edges_per_node,
                "rewire_prob": self.topology.rewire_prob,
                "radius": self.topology.radius,
                "distance_set_km": list(self.topology.distance_set_km),
                "attenuation_set_db_per_km": list(self.topology.attenuation_set_db_per_km),
                "channels_per_edge": self.topology.channels_per_edge,
                "memory_per_node": self.topology.memory_per_node,
            },
            "noise": {
                "depol_rate_hz": self.noise.depol_rate_hz,
                "dephase_rate_hz": self.noise.dephase_rate_hz,
                "base_werner": self.noise.base_werner,
                "swap_duration_ns": self.noise.swap_duration_ns,
                "fidelity_threshold": self.noise.fidelity_threshold,
            },
            "arrivals": {
                "mean_per_slot": self.arrivals.mean_per_slot,
                "minimum": self.arrivals.minimum,
                "maximum": self.arrivals.maximum,
            },
            "reward": {
                "alpha": self.reward_weights().alpha,
                "beta": self.reward_weights().beta,
                "gamma": self.reward_weights().gamma,
                "request_cap": self.reward_weights().request_cap,
            },
            "success": {
                "good_threshold": self.success.good_threshold,
                "worst_threshold": self.success.worst_threshold,
                "similarity_threshold": self.success.similarity_threshold,
                "max_paths_per_request": self.success.max_paths_per_request,
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        base = cls()
        try:
            topo_doc = doc.get("topology", {})
            topology = TopologyConfig(
                kind=topo_doc.get("kind", base.topology.kind),
                nodes=topo_doc.get("nodes", base.topology.nodes),
                edges_per_node=topo_doc.get("edges_per_node", base.topology.edges_per_node),
                rewire_prob=topo_doc.get("rewire_prob", base.topology.rewire_prob),
                radius=topo_doc.get("radius", base.topology.radius),
                distance_set_km=tuple(
                    topo_doc.get("distance_set_km", base.topology.distance_set_km)
                ),
                attenuation_set_db_per_km=tuple(
                    topo_doc.get(
                        "attenuation_set_db_per_km",
                        base.topology.attenuation_set_db_per_km,
                    )
                ),
                channels_per_edge=topo_doc.get("channels_per_edge", 1),
                memory_per_node=topo_doc.get("memory_per_node"),
            )
            noise_doc = doc.get("noise", {})
            noise = NoiseParameters(
                depol_rate_hz=noise_doc.get("depol_rate_hz", base.noise.depol_rate_hz),
                dephase_rate_hz=noise_doc.get("dephase_rate_hz", base.noise.dephase_rate_hz),
                base_werner=noise_doc.get("base_werner", base.noise.base_werner),
                swap_duration_ns=noise_doc.get("swap_duration_ns", base.noise.swap_duration_ns),
                fidelity_threshold=noise_doc.get(
                    "fidelity_threshold", base.noise.fidelity_threshold
                ),
            )
            arr_doc = doc.get("arrivals", {})
            arrivals = ArrivalConfig(
                mean_per_slot=arr_doc.get("mean_per_slot", 6.0),
                minimum=arr_doc.get("minimum", 0),
                maximum=arr_doc.get("maximum", 10),
            )
            reward = None
            if "reward" in doc:
                r = doc["reward"]
                reward = RewardWeights(
                    alpha=r.get("alpha", 0.3),
                    beta=r.get("beta", 0.6),
                    gamma=r.get("gamma", 0.1),
                    request_cap=r.get("request_cap", arrivals.maximum),
                )
            s = doc.get("success", {})
            success = schedulers.SuccessEnhancementConfig(
                good_threshold=s.get("good_threshold", 12.0),
                worst_threshold=s.get("worst_threshold", 15.0),
                similarity_threshold=s.get("similarity_threshold", 2.0),
                max_paths_per_request=s.get("max_paths_per_request", 3),
            )
            config = cls(
                topology=topology,
                noise=noise,
                arrivals=arrivals,
                reward=reward,
                scheduler=doc.get("scheduler", base.scheduler),
                success=success,
                slot_duration_ns=doc.get("slot_duration_ns", base.slot_duration_ns),
                slot_count=doc.get("slot_count", base.slot_count),
                max_retries=doc.get("max_retries", base.max_retries),
                drain_slot_cap=doc.get("drain_slot_cap", base.drain_slot_cap),
                sigma_per_km=doc.get("sigma_per_km", base.sigma_per_km),
                k_paths=doc.get("k_paths", base.k_paths),
                node_disjoint=doc.get("node_disjoint", base.node_disjoint),
                seed=doc.get("seed", base.seed),
                policy_path=doc.get("policy_path"),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        config.validate()
        return config

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc)


@dataclass
class SlotOutcome:
    """Everything that happened in one slot."""

    slot: int
    executed: dict[int, list[tuple[CandidatePath, PathOutcome]]] = field(default_factory=dict)
    newly_pending: list[int] = field(default_factory=list)
    aborted: list[int] = field(default_factory=list)
    metrics: SlotMetrics | None = None


class Simulation:
    """Deterministic multi-slot simulation owned by a single run."""

    def __init__(self, config: RunConfig, executor=None, policy=None):
        config.validate()
        self.config = config
        self.executor = executor or simulate_path_execution
        self.graph = config.topology.build(config.seed)
        self.graph.node_disjoint = config.node_disjoint
        self.policy = policy
        if config.scheduler == "ppo" and policy is None:
            from .rl_bridge import load_policy

            self.policy = load_policy(config.policy_path)
        self.pending: list[EntanglementRequest] = []
        self.requests: list[EntanglementRequest] = []
        self.slot_metrics: list[SlotMetrics] = []
        self.outcomes: list[SlotOutcome] = []
        self._next_id = 0

    # -- slot lifecycle -------------------------------------------------

    def begin_slot(
        self, slot_index: int, allow_arrivals: bool = True
    ) -> tuple[list[EntanglementRequest], NetworkGraph]:
        """Refresh resources and collect the slot's request queue."""
        slot_start = slot_index * self.config.slot_duration_ns
        arrivals: list[EntanglementRequest] = []
        if allow_arrivals:
            count = sample_arrivals(
                self.config.arrivals,
                stream_rng(self.config.seed, STREAM_ARRIVALS, slot_index),
            )
            arrivals = generate_requests(
                count,
                self.graph.nodes,
                slot_start,
                stream_rng(self.config.seed, STREAM_PAIRS, slot_index),
                start_id=self._next_id,
            )
            self._next_id += count
            self.requests.extend(arrivals)
        queue = merge_queue(self.pending, arrivals)
        self.pending = []
        return queue, self.graph.copy()

    def schedule(
        self, graph: NetworkGraph, queue: list[EntanglementRequest]
    ) -> schedulers.Allocation:
        name = self.config.scheduler
        sigma = self.config.sigma_per_km
        if name == "dynamic_efficient":
            return schedulers.schedule_dynamic_efficient(graph, queue, sigma)
        if name == "static_efficient":
            return schedulers.schedule_static_efficient(graph, queue, sigma)
        if name == "dynamic_fifo":
            return schedulers.schedule_dynamic_fifo(graph, queue, sigma)
        if name == "static_fifo":
            return schedulers.schedule_static_fifo(graph, queue, sigma)
        if name == "success_enhancement":
            return schedulers.schedule_success_enhancement(
                graph, queue, self.config.success, sigma, self.config.k_paths
            )
        if name == "ppo":
            return schedulers.schedule_ppo(
                graph, queue, self.policy, sigma, self.config.k_paths
            )
        raise ConfigError(f"unknown scheduler {name!r}")

    def finish_slot(
        self,
        slot_index: int,
        queue: list[EntanglementRequest],
        allocation: schedulers.Allocation,
    ) -> SlotOutcome:
        """Execute the allocation, settle successes/failures, queue retries."""
        cfg = self.config
        slot_start = slot_index * cfg.slot_duration_ns
        by_id = {r.id: r for r in queue}
        outcome = SlotOutcome(slot=slot_index)

        links_used: set[tuple[int, int]] = set()
        links_successful: set[tuple[int, int]] = set()
        for exec_idx, (rid, path) in enumerate(allocation.order):
            by_id[rid].status = EXECUTING
            result = self.executor(
                path,
                self.graph,
                cfg.noise,
                cfg.slot_duration_ns,
                stream_rng(cfg.seed, STREAM_EXECUTION, slot_index, exec_idx),
            )
            outcome.executed.setdefault(rid, []).append((path, result))
            links_used.update(result.links_used)

        failed: list[EntanglementRequest] = []
        successes = 0
        for rid, attempts in outcome.executed.items():
            req = by_id[rid]
            wins = [(res.execution_time_ns, path, res) for path, res in attempts if res.success]
            if wins:
                wins.sort(key=lambda item: (item[0], item[1].sort_key()))
                exec_time, path, res = wins[0]
                req.status = SUCCEEDED
                req.fulfilled_at_ns = slot_start + exec_time
                req.path_len = path.hops
                req.fidelity = res.fidelity
                links_successful.update(res.links_used)
                successes += 1
            else:
                best = max(attempts, key=lambda item: item[1].fidelity)
                req.path_len = best[0].hops
                req.fidelity = best[1].fidelity
                failed.append(req)

        unselected = [by_id[rid] for rid in allocation.unselected]
        self.pending, aborted = apply_retry_policy(failed, unselected, cfg.max_retries)
        outcome.newly_pending = [r.id for r in self.pending]
        outcome.aborted = [r.id for r in aborted]

        executed_count = len(allocation.selected)
        failures = len(failed)
        outcome.metrics = SlotMetrics(
            slot=slot_index,
            links_used=len(links_used),
            links_successful=len(links_successful),
            executed=executed_count,
            queued=len(queue),
            successes=successes,
            failures=failures,
            utilization=capacity_utilization(len(links_used), self.graph.num_edges),
            handling_rate=handling_rate(executed_count, len(queue)),
            reward=slot_reward(
                len(links_successful),
                len(links_used),
                successes,
                failures,
                len(queue),
                cfg.reward_weights(),
            ),
        )
        self.slot_metrics.append(outcome.metrics)
        self.outcomes.append(outcome)
        return outcome

    def step_slot(self, slot_index: int, allow_arrivals: bool = True) -> SlotOutcome:
        queue, graph = self.begin_slot(slot_index, allow_arrivals)
        if not queue:
            outcome = SlotOutcome(slot=slot_index)
            self.outcomes.append(outcome)
            return outcome
        allocation = self.schedule(graph, queue)
        return self.finish_slot(slot_index, queue, allocation)

    # -- full run -------------------------------------------------------

    def run(self, out_dir=None) -> RunReport:
        cfg = self.config
        for slot in range(cfg.slot_count):
            self.step_slot(slot)
        # Drain: keep slots ticking without new arrivals so queued requests
        # can finish; whatever survives the cap is censored.
        slot = cfg.slot_count
        while self.pending and slot < cfg.slot_count + cfg.drain_slot_cap:
            self.step_slot(slot, allow_arrivals=False)
            slot += 1
        censored = len(self.pending)
        report = aggregate_run(self.slot_metrics, self.requests, censored)
        if out_dir is not None:
            write_outputs(Path(out_dir), cfg, report, self.slot_metrics, self.requests, self.graph)
        return report


def run_simulation(config: RunConfig, out_dir=None, executor=None, policy=None) -> RunReport:
    """Build and run one simulation; writes artifacts when ``out_dir`` is set."""
    return Simulation(config, executor=executor, policy=policy).run(out_dir)


def write_outputs(
    out_dir: Path,
    config: RunConfig,
    report: RunReport,
    slots: list[SlotMetrics],
    requests: list[EntanglementRequest],
    graph: NetworkGraph,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["id", "src", "dst", "t_g", "t_f", "status", "retries", "path_len", "fidelity"]
        )
        for r in sorted(requests, key=lambda r: r.id):
            writer.writerow(
                [
                    r.id,
                    r.source,
                    r.destination,
                    r.generated_at_ns,
                    "" if r.fulfilled_at_ns is None else r.fulfilled_at_ns,
                    r.status,
                    r.retries_used,
                    r.path_len,
                    "" if r.fidelity is None else f"{r.fidelity:.9f}",
                ]
            )
    with open(out_dir / "slot_metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["slot", "l_u", "l_s", "n_e", "n_r", "N_s", "N_f", "u", "r_h", "reward"]
        )
        for m in slots:
            writer.writerow(
                [
                    m.slot,
                    m.links_used,
                    m.links_successful,
                    m.executed,
                    m.queued,
                    m.successes,
                    m.failures,
                    f"{m.utilization:.9f}",
                    f"{m.handling_rate:.9f}",
                    f"{m.reward:.9f}",
                ]
            )
    summary = report.summary_dict()
    summary["scheduler"] = config.scheduler
    summary["seed"] = config.seed
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    (out_dir / "resolved-config.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True)
    )
    (out_dir / "topology.json").write_text(graph.to_json())
