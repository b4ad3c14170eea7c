"""Clipped-surrogate PPO update and the cosine learning-rate schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int = 200_000
    horizon: int = 1024
    minibatch: int = 64
    epochs: int = 3
    lr_start: float = 1.0e-4
    lr_end: float = 1.0e-7
    clip_ratio: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    grad_clip: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.horizon % self.minibatch != 0:
            raise ValueError("horizon must be divisible by minibatch")


def cosine_lr(step: int, cfg: TrainConfig) -> float:
    """Cosine decay from lr_start at step 0 to lr_end at the step budget."""
    if cfg.total_steps <= 0:
        return cfg.lr_end
    progress = min(max(step, 0), cfg.total_steps) / cfg.total_steps
    return cfg.lr_end + 0.5 * (cfg.lr_start - cfg.lr_end) * (1.0 + math.cos(math.pi * progress))


def ppo_loss(model, batch, advantages, returns, cfg: TrainConfig):
    """Total loss = clipped policy loss + c_v * value loss - c_e * entropy."""
    logits, values = model(
        batch["paths"], batch["cost_bucket"], batch["source"], batch["destination"], batch["mask"]
    )
    dist = model.distribution(logits, batch["mask"])
    log_probs = dist.log_prob(batch["actions"])
    ratio = torch.exp(log_probs - batch["log_probs"])
    clipped = torch.clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio)
    policy_loss = -torch.min(ratio * advantages, clipped * advantages).mean()
    value_loss = torch.nn.functional.mse_loss(values, returns)
    entropy = dist.entropy().mean()
    total = policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy
    return total, {
        "policy_loss": float(policy_loss.item()),
        "value_loss": float(value_loss.item()),
        "entropy": float(entropy.item()),
        "total_loss": float(total.item()),
    }


def normalize(advantages: np.ndarray) -> np.ndarray:
    return (advantages - advantages.mean()) / (advantages.std() + 1e-8)


def ppo_update(buffer, model, optimizer, cfg: TrainConfig, last_value: float, lr: float):
    """Runs the epoch/minibatch schedule over one full buffer."""
    advantages, returns = buffer.compute_returns(last_value, cfg.discount, cfg.gae_lambda)
    advantages = normalize(advantages)
    batch = buffer.tensors()
    adv_t = torch.as_tensor(advantages, dtype=torch.float32)
    ret_t = torch.as_tensor(returns, dtype=torch.float32)
    for group in optimizer.param_groups:
        group["lr"] = lr
    n = len(buffer)
    stats = {}
    generator = torch.Generator().manual_seed(int(ret_t.sum().item() * 1e6) % (2**31))
    for _ in range(cfg.epochs):
        order = torch.randperm(n, generator=generator)
        for start in range(0, n, cfg.minibatch):
            idx = order[start : start + cfg.minibatch]
            mini = {k: v[idx] for k, v in batch.items()}
            loss, stats = ppo_loss(model, mini, adv_t[idx], ret_t[idx], cfg)
            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
            optimizer.step()
    return stats
