"""Seeded uniform streams for planners and experiments.

Every randomized routine in the package draws from a :class:`UniformStream`,
a buffered view over numpy's Philox4x64-10 counter-based generator keyed by
``SeedSequence(seed)``. Draws are consumed strictly in order, one double per
uniform, so buffering never changes the sequence a consumer observes. The
planners document their per-iteration draw order; together with this class
that order is the replay contract.
"""

import numpy as np

_BLOCK = 4096


class UniformStream:
    def __init__(self, seed: int, block: int = _BLOCK):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.Philox(seed))
        self._block = block
        self._buf: list[float] = []
        self._pos = 0

    def _refill(self, need: int):
        rest = self._buf[self._pos:]
        n = max(self._block, need - len(rest))
        self._buf = rest + self._gen.random(n).tolist()
        self._pos = 0

    def take(self, n: int) -> list[float]:
        """Next ``n`` uniforms on [0, 1) as Python floats."""
        if self._pos + n > len(self._buf):
            self._refill(n)
        out = self._buf[self._pos:self._pos + n]
        self._pos += n
        return out

    def uniform(self) -> float:
        return self.take(1)[0]
