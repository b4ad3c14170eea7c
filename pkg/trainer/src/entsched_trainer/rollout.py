"""Fixed-horizon rollout storage with generalized advantage estimation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch


@dataclass
class RolloutBuffer:
    """Transitions for one update window; episodes may span the boundary."""

    capacity: int
    paths: list = field(default_factory=list)
    cost_bucket: list = field(default_factory=list)
    source: list = field(default_factory=list)
    destination: list = field(default_factory=list)
    mask: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    values: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    dones: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def full(self) -> bool:
        return len(self) >= self.capacity

    def add(self, state, action, log_prob, value, reward, done):
        self.paths.append(state.paths)
        self.cost_bucket.append(state.cost_bucket)
        self.source.append(state.source)
        self.destination.append(state.destination)
        self.mask.append(state.mask)
        self.actions.append(action)
        self.log_probs.append(log_prob)
        self.values.append(value)
        self.rewards.append(reward)
        self.dones.append(done)

    def compute_returns(self, last_value: float, discount: float, gae_lambda: float):
        """GAE advantages and returns; ``last_value`` bootstraps a cut episode."""
        n = len(self)
        advantages = np.zeros(n, dtype=np.float64)
        gae = 0.0
        for t in reversed(range(n)):
            if self.dones[t]:
                next_value = 0.0
                carry = 0.0
            else:
                next_value = self.values[t + 1] if t + 1 < n else last_value
                carry = gae
            delta = self.rewards[t] + discount * next_value - self.values[t]
            gae = delta + discount * gae_lambda * carry
            advantages[t] = gae
        returns = advantages + np.asarray(self.values, dtype=np.float64)
        return advantages, returns

    def tensors(self, device="cpu"):
        return {
            "paths": torch.as_tensor(np.stack(self.paths), dtype=torch.float32, device=device),
            "cost_bucket": torch.as_tensor(np.stack(self.cost_bucket), dtype=torch.long, device=device),
            "source": torch.as_tensor(np.stack(self.source), dtype=torch.long, device=device),
            "destination": torch.as_tensor(np.stack(self.destination), dtype=torch.long, device=device),
            "mask": torch.as_tensor(np.stack(self.mask), dtype=torch.bool, device=device),
            "actions": torch.as_tensor(self.actions, dtype=torch.long, device=device),
            "log_probs": torch.as_tensor(self.log_probs, dtype=torch.float32, device=device),
        }
