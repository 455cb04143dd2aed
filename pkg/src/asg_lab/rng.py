"""Reproducible random number streams.

Every stochastic routine in this package draws from a stream addressed by a
(master_seed, stream_index) pair.  Stream derivation is a fixed 64-bit mixing
function (the splitmix64 output function applied to the master seed advanced
by ``stream_index + 1`` golden-ratio increments), so a given pair always
reproduces the same draw sequence, and distinct indices give statistically
independent PCG64 generators.  Replicate fan-out assigns one stream index per
replicate; results are then independent of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    """splitmix64 output (finalizer) function on a 64-bit state."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_stream_seed(master_seed: int, stream_index: int) -> int:
    """Mix (master_seed, stream_index) into a single 64-bit seed."""
    state = (master_seed + (stream_index + 1) * _GOLDEN) & _MASK64
    return _splitmix64(state)


@dataclass(frozen=True)
class RngStream:
    """Address of a reproducible random stream.

    Identical (master_seed, stream_index) pairs reproduce identical draw
    sequences; distinct indices under one master seed give independent
    streams.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not 0 <= int(self.master_seed) < (1 << 64):
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if int(self.stream_index) < 0:
            raise ValueError("stream_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        """Fresh PCG64 generator positioned at the start of this stream."""
        seed = derive_stream_seed(int(self.master_seed), int(self.stream_index))
        return np.random.Generator(np.random.PCG64(seed))

    def stream(self, index: int) -> "RngStream":
        """Sibling stream under the same master seed."""
        return RngStream(self.master_seed, index)


def as_generator(rng: "RngStream | np.random.Generator") -> np.random.Generator:
    """Accept either a stream address or an already-materialized generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return rng.generator()
