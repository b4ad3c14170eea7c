"""Client for the newline-delimited JSON environment protocol.

The environment lives in a separate process (the simulator CLI's
``serve-env`` command) reached over stdio or TCP; this module only speaks
the wire format and never imports the simulator.
"""

from __future__ import annotations

import json
import socket
import subprocess
from dataclasses import dataclass

import numpy as np


class ProtocolError(RuntimeError):
    """The environment answered with an error or malformed message."""


@dataclass
class EnvState:
    paths: np.ndarray  # (max_paths, n_nodes) float32
    cost_bucket: np.ndarray  # (max_paths,) int64
    source: np.ndarray
    destination: np.ndarray
    mask: np.ndarray  # (max_paths,) bool


class EnvClient:
    """One protocol session; construct via ``spawn`` or ``connect``."""

    def __init__(self, reader, writer, closer=None):
        self._reader = reader
        self._writer = writer
        self._closer = closer
        self.env_info = self.request({"cmd": "config"})
        self.n_nodes = int(self.env_info["n_nodes"])
        self.max_paths = int(self.env_info["max_paths"])

    @classmethod
    def spawn(cls, config_path: str, command: str = "entsched") -> "EnvClient":
        proc = subprocess.Popen(
            [command, "serve-env", "--config", str(config_path), "--stdio"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )

        def close():
            if proc.poll() is None:
                proc.terminate()
                proc.wait(timeout=5)

        return cls(proc.stdout, proc.stdin, close)

    @classmethod
    def connect(cls, host: str, port: int) -> "EnvClient":
        sock = socket.create_connection((host, port))
        reader = sock.makefile("r")
        writer = sock.makefile("w")
        return cls(reader, writer, sock.close)

    def request(self, msg: dict) -> dict:
        self._writer.write(json.dumps(msg) + "\n")
        self._writer.flush()
        line = self._reader.readline()
        if not line:
            raise ProtocolError("environment closed the stream")
        reply = json.loads(line)
        if "error" in reply:
            raise ProtocolError(f"{reply['error']['code']}: {reply['error']['message']}")
        return reply

    def _decode(self, reply: dict) -> EnvState:
        mask = np.asarray(reply["mask"], dtype=bool)
        state = reply["state"]
        paths = np.asarray(state["paths"], dtype=np.float32).reshape(
            self.max_paths, self.n_nodes
        )
        return EnvState(
            paths=paths,
            cost_bucket=np.asarray(state["cost_bucket"], dtype=np.int64),
            source=np.asarray(state["source"], dtype=np.int64),
            destination=np.asarray(state["destination"], dtype=np.int64),
            mask=mask,
        )

    def reset(self) -> EnvState:
        return self._decode(self.request({"cmd": "reset"}))

    def step(self, action: int) -> tuple[EnvState, float, bool, dict]:
        reply = self.request({"cmd": "step", "action": int(action)})
        return (
            self._decode(reply),
            float(reply["reward"]),
            bool(reply["done"]),
            reply.get("info", {}),
        )

    def close(self) -> None:
        try:
            self.request({"cmd": "close"})
        except ProtocolError:
            pass
        if self._closer:
            self._closer()
