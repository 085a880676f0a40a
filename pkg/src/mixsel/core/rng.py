from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mixsel.core.hashing import stream_key


@dataclass(frozen=True)
class RngStreams:
    """Named, independent generators spawned from one master seed.

    A consumer asking for the same name always receives a fresh generator in
    the same state, so adding a new consumer never perturbs existing ones.
    """

    master_seed: int

    def __post_init__(self) -> None:
        if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ValueError("master_seed must be a non-negative integer")

    def stream(self, name: str) -> np.random.Generator:
        if not name or not name.strip():
            raise ValueError("stream name cannot be empty")
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(stream_key(name),))
        return np.random.default_rng(seq)


__all__ = ["RngStreams"]
