"""Entanglement-request scheduling simulator for multi-channel quantum networks."""

__version__ = "0.1.0"
