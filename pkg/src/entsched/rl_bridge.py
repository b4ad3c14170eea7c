"""Reinforcement-learning bridge: state encoding, policy inference, env server.

One episode is one slot's path-selection process.  The state is a fixed-size
stack of candidate-path rows: a binary node-membership vector per path plus
quantized cost, source and destination indices, padded with zero rows and a
validity mask.  A portable policy container (JSON header + raw float32
blocks) lets an externally trained actor run inference here without any ML
runtime.
"""

from __future__ import annotations

import hashlib
import json
import socket
import sys
from dataclasses import dataclass, field

import numpy as np

from .pathing import CandidatePath, is_feasible, k_lowest_cost_paths, remove_path
from .topology import NetworkGraph
from .traffic import EntanglementRequest

BUCKET_WIDTH = 0.5
N_BUCKETS = 64
EMBED_DIM = 8
HIDDEN_LAYERS = (128, 128)

POLICY_FORMAT = "entsched-policy"
POLICY_VERSION = 1


class BridgeError(RuntimeError):
    """State/policy dimension mismatch or protocol misuse."""


@dataclass(frozen=True)
class PoolEntry:
    request_id: int
    path: CandidatePath


@dataclass(frozen=True)
class StateEncoding:
    """Fixed-size encoding of a candidate-path pool."""

    paths: np.ndarray  # (max_paths, n_nodes) 0/1
    cost_bucket: np.ndarray  # (max_paths,) int
    source: np.ndarray  # (max_paths,) int
    destination: np.ndarray  # (max_paths,) int
    mask: np.ndarray  # (max_paths,) bool

    def to_wire(self) -> dict:
        return {
            "paths": self.paths.astype(int).ravel().tolist(),
            "cost_bucket": self.cost_bucket.tolist(),
            "source": self.source.tolist(),
            "destination": self.destination.tolist(),
        }


def build_candidate_pool(
    graph: NetworkGraph,
    requests: list[EntanglementRequest],
    k_paths: int,
    sigma: float,
    max_rows: int,
) -> list[PoolEntry]:
    """Up to ``max_rows`` candidate paths, queue order, cheapest first per request."""
    pool: list[PoolEntry] = []
    for req in requests:
        if len(pool) >= max_rows:
            break
        for path in k_lowest_cost_paths(graph, req.source, req.destination, k_paths, sigma):
            if len(pool) >= max_rows:
                break
            pool.append(PoolEntry(req.id, path))
    return pool


def cost_bucket(cost: float, bucket_width: float = BUCKET_WIDTH, n_buckets: int = N_BUCKETS) -> int:
    """Quantize a path cost into an embedding bucket index."""
    return min(int(cost // bucket_width), n_buckets - 1)


def encode_state(
    graph: NetworkGraph,
    pool: list[PoolEntry],
    selected: list[int],
    sigma: float,
    n_nodes: int,
    max_paths: int,
    n_buckets: int = N_BUCKETS,
    bucket_width: float = BUCKET_WIDTH,
) -> StateEncoding:
    """Encode the pool against the current residual graph.

    Rows beyond the pool stay zero with a false mask; already selected or
    currently infeasible paths are masked out.
    """
    if len(pool) > max_paths:
        raise BridgeError(f"pool holds {len(pool)} paths, exceeding max_paths={max_paths}")
    paths = np.zeros((max_paths, n_nodes), dtype=np.int8)
    buckets = np.zeros(max_paths, dtype=np.int64)
    sources = np.zeros(max_paths, dtype=np.int64)
    destinations = np.zeros(max_paths, dtype=np.int64)
    mask = np.zeros(max_paths, dtype=bool)
    chosen = set(selected)
    for i, entry in enumerate(pool):
        for node in entry.path.nodes:
            paths[i, node] = 1
        buckets[i] = cost_bucket(entry.path.cost, bucket_width, n_buckets)
        sources[i] = entry.path.nodes[0]
        destinations[i] = entry.path.nodes[-1]
        mask[i] = i not in chosen and is_feasible(entry.path, graph)
    return StateEncoding(paths, buckets, sources, destinations, mask)


# -- policy container -------------------------------------------------------

LAYER_ORDER = (
    "cost_embedding",
    "source_embedding",
    "destination_embedding",
    "hidden0_weight",
    "hidden0_bias",
    "hidden1_weight",
    "hidden1_bias",
    "actor_weight",
    "actor_bias",
    "value_weight",
    "value_bias",
)


@dataclass(frozen=True)
class Policy:
    """Portable actor weights plus the dimensions they were trained for."""

    n_nodes: int
    max_paths: int
    n_buckets: int
    bucket_width: float
    d_cost: int
    d_source: int
    d_destination: int
    hidden: tuple[int, ...]
    activation: str
    weights: dict[str, np.ndarray] = field(repr=False, default_factory=dict)

    @property
    def feature_dim(self) -> int:
        return self.n_nodes + self.d_cost + self.d_source + self.d_destination

    def layer_shapes(self) -> dict[str, tuple[int, ...]]:
        h0, h1 = self.hidden
        return {
            "cost_embedding": (self.n_buckets, self.d_cost),
            "source_embedding": (self.n_nodes, self.d_source),
            "destination_embedding": (self.n_nodes, self.d_destination),
            "hidden0_weight": (h0, self.feature_dim),
            "hidden0_bias": (h0,),
            "hidden1_weight": (h1, h0),
            "hidden1_bias": (h1,),
            "actor_weight": (1, h1),
            "actor_bias": (1,),
            "value_weight": (1, h1),
            "value_bias": (1,),
        }


def default_policy_header(n_nodes: int, max_paths: int) -> dict:
    return {
        "format": POLICY_FORMAT,
        "version": POLICY_VERSION,
        "n_nodes": n_nodes,
        "max_paths": max_paths,
        "n_buckets": N_BUCKETS,
        "bucket_width": BUCKET_WIDTH,
        "d_cost": EMBED_DIM,
        "d_source": EMBED_DIM,
        "d_destination": EMBED_DIM,
        "hidden": list(HIDDEN_LAYERS),
        "activation": "tanh",
    }


def write_policy(policy: Policy, path) -> None:
    """Serialize a policy container: JSON header line, then float32 blocks."""
    shapes = policy.layer_shapes()
    blocks = []
    layers = []
    for name in LAYER_ORDER:
        arr = np.ascontiguousarray(policy.weights[name], dtype="<f4")
        if arr.shape != shapes[name]:
            raise BridgeError(f"layer {name} has shape {arr.shape}, expected {shapes[name]}")
        blocks.append(arr.tobytes())
        layers.append({"name": name, "shape": list(arr.shape)})
    payload = b"".join(blocks)
    header = {
        "format": POLICY_FORMAT,
        "version": POLICY_VERSION,
        "n_nodes": policy.n_nodes,
        "max_paths": policy.max_paths,
        "n_buckets": policy.n_buckets,
        "bucket_width": policy.bucket_width,
        "d_cost": policy.d_cost,
        "d_source": policy.d_source,
        "d_destination": policy.d_destination,
        "hidden": list(policy.hidden),
        "activation": policy.activation,
        "dtype": "<f4",
        "layers": layers,
        "checksum": hashlib.sha256(payload).hexdigest(),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def load_policy(path) -> Policy:
    """Parse and validate a policy container, naming the failing field."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BridgeError(f"policy header is not valid JSON: {exc}") from exc
    if header.get("format") != POLICY_FORMAT:
        raise BridgeError(f"field 'format': expected {POLICY_FORMAT!r}, got {header.get('format')!r}")
    if header.get("version") != POLICY_VERSION:
        raise BridgeError(f"field 'version': unsupported {header.get('version')!r}")
    checksum = hashlib.sha256(payload).hexdigest()
    if checksum != header.get("checksum"):
        raise BridgeError("field 'checksum': payload does not match header")
    policy = Policy(
        n_nodes=header["n_nodes"],
        max_paths=header["max_paths"],
        n_buckets=header["n_buckets"],
        bucket_width=header["bucket_width"],
        d_cost=header["d_cost"],
        d_source=header["d_source"],
        d_destination=header["d_destination"],
        hidden=tuple(header["hidden"]),
        activation=header["activation"],
    )
    if policy.activation != "tanh":
        raise BridgeError(f"field 'activation': unsupported {policy.activation!r}")
    shapes = policy.layer_shapes()
    offset = 0
    weights: dict[str, np.ndarray] = {}
    for layer in header["layers"]:
        name, shape = layer["name"], tuple(layer["shape"])
        if name not in shapes:
            raise BridgeError(f"field 'layers': unknown layer {name!r}")
        if shape != shapes[name]:
            raise BridgeError(
                f"field 'layers.{name}': shape {shape} does not match dimensions {shapes[name]}"
            )
        nbytes = int(np.prod(shape)) * 4
        if offset + nbytes > len(payload):
            raise BridgeError(f"field 'layers.{name}': payload truncated")
        weights[name] = np.frombuffer(
            payload, dtype="<f4", count=int(np.prod(shape)), offset=offset
        ).reshape(shape)
        offset += nbytes
    if offset != len(payload):
        raise BridgeError("field 'layers': trailing bytes after declared blocks")
    missing = set(LAYER_ORDER) - set(weights)
    if missing:
        raise BridgeError(f"field 'layers': missing {sorted(missing)}")
    return Policy(
        n_nodes=policy.n_nodes,
        max_paths=policy.max_paths,
        n_buckets=policy.n_buckets,
        bucket_width=policy.bucket_width,
        d_cost=policy.d_cost,
        d_source=policy.d_source,
        d_destination=policy.d_destination,
        hidden=policy.hidden,
        activation=policy.activation,
        weights=weights,
    )


def random_policy(n_nodes: int, max_paths: int, seed: int = 0) -> Policy:
    """Randomly initialized policy with the default architecture."""
    header = default_policy_header(n_nodes, max_paths)
    policy = Policy(
        n_nodes=n_nodes,
        max_paths=max_paths,
        n_buckets=header["n_buckets"],
        bucket_width=header["bucket_width"],
        d_cost=header["d_cost"],
        d_source=header["d_source"],
        d_destination=header["d_destination"],
        hidden=tuple(header["hidden"]),
        activation="tanh",
    )
    rng = np.random.default_rng(seed)
    weights = {
        name: (0.1 * rng.standard_normal(shape)).astype("<f4")
        for name, shape in policy.layer_shapes().items()
    }
    return Policy(
        n_nodes=n_nodes,
        max_paths=max_paths,
        n_buckets=policy.n_buckets,
        bucket_width=policy.bucket_width,
        d_cost=policy.d_cost,
        d_source=policy.d_source,
        d_destination=policy.d_destination,
        hidden=policy.hidden,
        activation=policy.activation,
        weights=weights,
    )


def policy_forward(policy: Policy, state: StateEncoding) -> tuple[np.ndarray, float]:
    """Masked logits over candidate paths and the critic value.

    Per-path features (node vector, cost/source/destination embeddings) run
    through a shared tanh trunk; masked rows score minus infinity.
    """
    if state.paths.shape != (policy.max_paths, policy.n_nodes):
        raise BridgeError(
            f"field 'n_nodes'/'max_paths': state shape {state.paths.shape} does not "
            f"match policy ({policy.max_paths}, {policy.n_nodes})"
        )
    if state.cost_bucket.max(initial=0) >= policy.n_buckets:
        raise BridgeError("field 'n_buckets': state bucket index out of range")
    w = policy.weights
    feats = np.concatenate(
        [
            state.paths.astype(np.float64),
            w["cost_embedding"][state.cost_bucket],
            w["source_embedding"][state.source],
            w["destination_embedding"][state.destination],
        ],
        axis=1,
    )
    h = np.tanh(feats @ w["hidden0_weight"].T + w["hidden0_bias"])
    h = np.tanh(h @ w["hidden1_weight"].T + w["hidden1_bias"])
    logits = (h @ w["actor_weight"].T + w["actor_bias"]).ravel()
    logits = np.where(state.mask, logits, -np.inf)
    if state.mask.any():
        pooled = h[state.mask].mean(axis=0)
        value = float((pooled @ w["value_weight"].T + w["value_bias"]).item())
    else:
        value = 0.0
    return logits, value


# -- environment ------------------------------------------------------------


class SlotEnv:
    """Slot-by-slot selection environment over the simulator.

    ``reset`` advances the simulation to the next slot and exposes its
    candidate pool; ``step`` selects one path.  When no selectable path
    remains the episode finalizes: paths execute, the slot reward is paid on
    the terminal transition, and retry bookkeeping runs.
    """

    def __init__(self, config, executor=None, max_paths: int | None = None):
        from .sim_engine import Simulation

        self.sim = Simulation(config, executor=executor)
        self.config = config
        self.max_paths = max_paths or config.arrivals.maximum * config.k_paths
        self.n_nodes = len(self.sim.graph.nodes)
        self._slot = -1
        self._queue: list[EntanglementRequest] = []
        self._pool: list[PoolEntry] = []
        self._residual: NetworkGraph | None = None
        self._chosen: list[int] = []
        self._open = False
        self._episodes = 0

    def _encode(self) -> StateEncoding:
        return encode_state(
            self._residual,
            self._pool,
            self._chosen,
            self.config.sigma_per_km,
            n_nodes=self.n_nodes,
            max_paths=self.max_paths,
        )

    def reset(self) -> StateEncoding:
        if self._open:
            self._finalize()
        self._slot += 1
        self._queue, fresh = self.sim.begin_slot(self._slot)
        self._residual = fresh
        self._chosen = []
        self._pool = build_candidate_pool(
            fresh, self._queue, self.config.k_paths, self.config.sigma_per_km, self.max_paths
        )
        self._open = True
        return self._encode()

    def step(self, action: int) -> tuple[StateEncoding, float, bool, dict]:
        if not self._open:
            raise BridgeError("step before reset or after episode end")
        state = self._encode()
        if action < 0 or action >= self.max_paths or not state.mask[action]:
            raise BridgeError(f"action {action} is not selectable")
        entry = self._pool[action]
        self._residual = remove_path(self._residual, entry.path)
        self._chosen.append(action)
        next_state = self._encode()
        if next_state.mask.any():
            return next_state, 0.0, False, {}
        reward, info = self._finalize()
        return next_state, reward, True, info

    def _finalize(self) -> tuple[float, dict]:
        from .schedulers import Allocation

        alloc = Allocation()
        for idx in self._chosen:
            entry = self._pool[idx]
            alloc.order.append((entry.request_id, entry.path))
            alloc.selected.setdefault(entry.request_id, []).append(entry.path)
        alloc.unselected = sorted(
            r.id for r in self._queue if r.id not in alloc.selected
        )
        self._open = False
        self._episodes += 1
        if not self._queue:
            return 0.0, {"slot": self._slot, "slot_reward": 0.0, "queued": 0}
        outcome = self.sim.finish_slot(self._slot, self._queue, alloc)
        m = outcome.metrics
        info = {
            "slot": self._slot,
            "slot_reward": m.reward,
            "executed": m.executed,
            "queued": m.queued,
            "successes": m.successes,
            "failures": m.failures,
            "links_used": m.links_used,
        }
        return m.reward, info

    def close(self) -> None:
        if self._open:
            self._finalize()

    def config_dict(self) -> dict:
        weights = self.config.reward_weights()
        return {
            "n_nodes": self.n_nodes,
            "max_paths": self.max_paths,
            "n_buckets": N_BUCKETS,
            "bucket_width": BUCKET_WIDTH,
            "slot_duration_ns": self.config.slot_duration_ns,
            "k_paths": self.config.k_paths,
            "reward": {
                "alpha": weights.alpha,
                "beta": weights.beta,
                "gamma": weights.gamma,
                "request_cap": weights.request_cap,
            },
        }


# -- wire protocol ----------------------------------------------------------


def _state_message(state: StateEncoding, extra: dict | None = None) -> dict:
    msg = {"state": state.to_wire(), "mask": state.mask.astype(int).tolist()}
    if extra:
        msg.update(extra)
    return msg


def serve_session(env: SlotEnv, lines, write) -> None:
    """Serve newline-delimited JSON commands until close/EOF."""
    for raw in lines:
        raw = raw.strip()
        if not raw:
            continue
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError as exc:
            write({"error": {"code": "bad_json", "message": str(exc)}})
            continue
        cmd = msg.get("cmd")
        if cmd == "reset":
            write(_state_message(env.reset()))
        elif cmd == "step":
            action = msg.get("action")
            if not isinstance(action, int):
                write({"error": {"code": "bad_action", "message": "step needs integer 'action'"}})
                continue
            try:
                state, reward, done, info = env.step(action)
            except BridgeError as exc:
                write({"error": {"code": "illegal_action", "message": str(exc)}})
                continue
            write(_state_message(state, {"reward": reward, "done": done, "info": info}))
        elif cmd == "config":
            write(env.config_dict())
        elif cmd == "close":
            env.close()
            write({"ok": True})
            return
        else:
            write({"error": {"code": "unknown_cmd", "message": f"unknown cmd {cmd!r}"}})


def serve(config, stdio: bool = False, host: str = "127.0.0.1", port: int = 0) -> None:
    """Run an environment session over stdio or a single-client TCP socket."""
    env = SlotEnv(config)
    if stdio:
        out = sys.stdout

        def write(obj):
            out.write(json.dumps(obj) + "\n")
            out.flush()

        serve_session(env, sys.stdin, write)
        return
    with socket.create_server((host, port)) as server:
        actual_port = server.getsockname()[1]
        print(f"listening on {host}:{actual_port}", flush=True)
        conn, _ = server.accept()
        with conn, conn.makefile("r") as rfh, conn.makefile("w") as wfh:

            def write(obj):
                wfh.write(json.dumps(obj) + "\n")
                wfh.flush()

            serve_session(env, rfh, write)
