"""Writer for the portable policy container consumed by the simulator.

Format: one JSON header line (dimensions, layer table, sha256 checksum)
followed by the raw little-endian float32 blocks in declared order.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .model import BUCKET_WIDTH, COST_BUCKETS, EMBED_DIM, HIDDEN, ActorCritic

LAYER_TABLE = (
    ("cost_embedding", "cost_embedding.weight"),
    ("source_embedding", "source_embedding.weight"),
    ("destination_embedding", "destination_embedding.weight"),
    ("hidden0_weight", "hidden0.weight"),
    ("hidden0_bias", "hidden0.bias"),
    ("hidden1_weight", "hidden1.weight"),
    ("hidden1_bias", "hidden1.bias"),
    ("actor_weight", "actor.weight"),
    ("actor_bias", "actor.bias"),
    ("value_weight", "value.weight"),
    ("value_bias", "value.bias"),
)


def export_policy(model: ActorCritic, path) -> None:
    state = model.state_dict()
    blocks = []
    layers = []
    for name, param_key in LAYER_TABLE:
        arr = np.ascontiguousarray(state[param_key].detach().cpu().numpy(), dtype="<f4")
        blocks.append(arr.tobytes())
        layers.append({"name": name, "shape": list(arr.shape)})
    payload = b"".join(blocks)
    header = {
        "format": "entsched-policy",
        "version": 1,
        "n_nodes": model.n_nodes,
        "max_paths": model.max_paths,
        "n_buckets": COST_BUCKETS,
        "bucket_width": BUCKET_WIDTH,
        "d_cost": EMBED_DIM,
        "d_source": EMBED_DIM,
        "d_destination": EMBED_DIM,
        "hidden": list(HIDDEN),
        "activation": "tanh",
        "dtype": "<f4",
        "layers": layers,
        "checksum": hashlib.sha256(payload).hexdigest(),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)
