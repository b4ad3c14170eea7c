"""PPO training agent for the entanglement-scheduling environment protocol."""

__version__ = "0.1.0"
