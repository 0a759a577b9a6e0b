"""Counter-based random streams keyed by (seed, stream index)."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """
    Identifies one reproducible pseudo-random sequence.

    The generator is Philox (counter based) keyed through a ``SeedSequence``
    whose spawn key is the stream index plus any sub-stream path, so a replica's
    draws never depend on which worker runs it.
    """

    seed: int
    stream_index: int = 0
    path: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.seed < 0 or self.stream_index < 0:
            raise ValueError("seed and stream_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        """Create a fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(
            entropy=self.seed,
            spawn_key=(self.stream_index,) + self.path,
        )
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, index: int) -> "RngStream":
        """Independent child stream, e.g. for the second walk of a pair."""
        return RngStream(self.seed, self.stream_index, self.path + (index,))
