"""Actor-critic network over padded candidate-path states.

Per-path features (binary node vector plus cost/source/destination
embeddings) run through a shared tanh trunk; the actor scores each path and
the critic reads the masked mean of the trunk features.  The layer layout
matches the portable policy container one to one.
"""

from __future__ import annotations

import torch
from torch import nn

COST_BUCKETS = 64
BUCKET_WIDTH = 0.5
EMBED_DIM = 8
HIDDEN = (128, 128)

MASK_FILL = -1.0e9


class ActorCritic(nn.Module):
    def __init__(self, n_nodes: int, max_paths: int):
        super().__init__()
        self.n_nodes = n_nodes
        self.max_paths = max_paths
        self.cost_embedding = nn.Embedding(COST_BUCKETS, EMBED_DIM)
        self.source_embedding = nn.Embedding(n_nodes, EMBED_DIM)
        self.destination_embedding = nn.Embedding(n_nodes, EMBED_DIM)
        in_dim = n_nodes + 3 * EMBED_DIM
        self.hidden0 = nn.Linear(in_dim, HIDDEN[0])
        self.hidden1 = nn.Linear(HIDDEN[0], HIDDEN[1])
        self.actor = nn.Linear(HIDDEN[1], 1)
        self.value = nn.Linear(HIDDEN[1], 1)

    def forward(self, paths, cost_bucket, source, destination, mask):
        """Batched scores and values.

        paths: (B, M, N) float; index tensors: (B, M) long; mask: (B, M) bool.
        Returns raw per-path logits (B, M) before masking and values (B,).
        """
        feats = torch.cat(
            [
                paths,
                self.cost_embedding(cost_bucket),
                self.source_embedding(source),
                self.destination_embedding(destination),
            ],
            dim=-1,
        )
        h = torch.tanh(self.hidden0(feats))
        h = torch.tanh(self.hidden1(h))
        logits = self.actor(h).squeeze(-1)
        weights = mask.to(h.dtype).unsqueeze(-1)
        pooled = (h * weights).sum(dim=1) / weights.sum(dim=1).clamp(min=1.0)
        values = self.value(pooled).squeeze(-1)
        values = values * mask.any(dim=1).to(values.dtype)
        return logits, values

    def distribution(self, logits, mask):
        return torch.distributions.Categorical(
            logits=logits.masked_fill(~mask, MASK_FILL)
        )

    def act(self, state, greedy: bool = False):
        """Single-state action with log-probability and value estimate."""
        batch = _batch_one(state, device=next(self.parameters()).device)
        with torch.no_grad():
            logits, values = self.forward(*batch)
            dist = self.distribution(logits, batch[-1])
            action = logits.masked_fill(~batch[-1], MASK_FILL).argmax(dim=-1) if greedy else dist.sample()
            log_prob = dist.log_prob(action)
        return int(action.item()), float(log_prob.item()), float(values.item())


def _batch_one(state, device):
    return (
        torch.as_tensor(state.paths, dtype=torch.float32, device=device).unsqueeze(0),
        torch.as_tensor(state.cost_bucket, dtype=torch.long, device=device).unsqueeze(0),
        torch.as_tensor(state.source, dtype=torch.long, device=device).unsqueeze(0),
        torch.as_tensor(state.destination, dtype=torch.long, device=device).unsqueeze(0),
        torch.as_tensor(state.mask, dtype=torch.bool, device=device).unsqueeze(0),
    )
