"""
Deterministic, splittable random streams.
"""

from dataclasses import dataclass

import numpy as np

from icbandit.errors import ConfigurationError

_UINT64_MAX = 2**64 - 1

# Stream ids used by the harness; environments and arm sampling never share draws.
ENVIRONMENT_STREAM = 0
SAMPLING_STREAM = 1
BELIEF_STREAM = 2


@dataclass(frozen=True, slots=True)
class RngStream:
    """
    A (seed, stream id) pair naming an independent Philox key.

    Generators are built on demand; `substream` sets the high counter word, so
    `generator(substream=t)` gives round-t draws that depend only on
    (seed, stream id, t).
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name, value in (("seed", self.seed), ("stream_id", self.stream_id)):
            if not 0 <= value <= _UINT64_MAX:
                raise ConfigurationError(
                    f"{name} must be a 64-bit unsigned integer, got {value}"
                )

    def generator(self, substream: int = 0) -> np.random.Generator:
        bit_generator = np.random.Philox(
            key=np.array([self.seed, self.stream_id], dtype=np.uint64),
            counter=np.array([0, substream, 0, 0], dtype=np.uint64),
        )
        return np.random.Generator(bit_generator)

    def spawn(self, stream_id: int) -> "RngStream":
        """Sibling stream with the same seed."""
        return RngStream(self.seed, stream_id)
