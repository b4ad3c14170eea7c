"""Training loop: collect rollouts over the wire, update, export the policy."""

from __future__ import annotations

import argparse
import csv
import sys
from collections import deque
from pathlib import Path

import numpy as np
import torch

from .client import EnvClient
from .export import export_policy
from .model import ActorCritic
from .ppo import TrainConfig, cosine_lr, ppo_update
from .rollout import RolloutBuffer


def collect_rollouts(env: EnvClient, model: ActorCritic, horizon: int, state, episode_rewards):
    """Fill one buffer with sampled actions; episodes continue across calls.

    ``state`` carries the environment position between windows; pass the
    tuple returned by the previous call (or None to start).
    """
    buffer = RolloutBuffer(capacity=horizon)
    if state is None:
        obs = env.reset()
        while not obs.mask.any():
            obs = env.reset()
        running_reward = 0.0
    else:
        obs, running_reward = state
    while not buffer.full:
        action, log_prob, value = model.act(obs)
        next_obs, reward, done, info = env.step(action)
        buffer.add(obs, action, log_prob, value, reward, done)
        running_reward += reward
        if done:
            episode_rewards.append(running_reward)
            running_reward = 0.0
            next_obs = env.reset()
            while not next_obs.mask.any():
                next_obs = env.reset()
        obs = next_obs
    _, _, last_value = model.act(obs)
    return buffer, (obs, running_reward), last_value


def train(env: EnvClient, cfg: TrainConfig, out_dir) -> Path:
    """Run the step budget, write learning_curve.csv, export the policy file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(cfg.seed)
    np.random.seed(cfg.seed)
    model = ActorCritic(env.n_nodes, env.max_paths)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr_start)
    episode_rewards: list[float] = []
    curve_rows = []
    state = None
    steps_done = 0
    while steps_done < cfg.total_steps:
        buffer, state, last_value = collect_rollouts(
            env, model, cfg.horizon, state, episode_rewards
        )
        lr = cosine_lr(steps_done, cfg)
        ppo_update(buffer, model, optimizer, cfg, last_value, lr)
        steps_done += len(buffer)
        recent = episode_rewards[-100:]
        mean_reward = sum(recent) / len(recent) if recent else 0.0
        curve_rows.append((steps_done, mean_reward, lr))
    # Terminal row pins the schedule endpoint.
    curve_rows.append((cfg.total_steps, curve_rows[-1][1] if curve_rows else 0.0, cosine_lr(cfg.total_steps, cfg)))
    with open(out_dir / "learning_curve.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "mean_episode_reward", "lr"])
        writer.writerows(curve_rows)
    policy_path = out_dir / "policy.pol"
    export_policy(model, policy_path)
    (out_dir / "episode_rewards.csv").write_text(
        "episode,reward\n"
        + "\n".join(f"{i},{r}" for i, r in enumerate(episode_rewards))
        + "\n"
    )
    return policy_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="entsched-train",
        description="PPO trainer for the entanglement-scheduling environment",
    )
    parser.add_argument("--config", required=True, help="simulator run config (JSON)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--steps", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--env-command", default="entsched", help="simulator CLI executable")
    parser.add_argument("--tcp", metavar="HOST:PORT", help="connect instead of spawning")
    args = parser.parse_args(argv)

    cfg = TrainConfig(total_steps=args.steps, seed=args.seed)
    if args.tcp:
        host, port = args.tcp.rsplit(":", 1)
        env = EnvClient.connect(host, int(port))
    else:
        env = EnvClient.spawn(args.config, command=args.env_command)
    try:
        policy_path = train(env, cfg, args.out)
    finally:
        env.close()
    print(f"policy written to {policy_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
