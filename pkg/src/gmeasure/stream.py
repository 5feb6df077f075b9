"""Counter-based random streams.

A stream is a function of ``(seed, time)``: the uniforms attached to time
``t`` come from Philox block ``t // block`` keyed by the seed, so any time
index can be re-queried, in any order, with identical results. Replica
seeds are derived with ``SeedSequence(master, spawn_key=(replica,))``, which
leaves earlier replicas untouched when the replica count changes.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
UNIFORMS_PER_TIME = 2


def replica_seed(master: int, replica: int) -> int:
    ss = np.random.SeedSequence(int(master) & MASK64, spawn_key=(int(replica),))
    return int(ss.generate_state(1, np.uint64)[0])


def _key(seed: int) -> np.ndarray:
    ss = np.random.SeedSequence(int(seed) & MASK64)
    return ss.generate_state(2, np.uint64)


class LabelStream:
    """Uniforms ``U[t, 0:2]`` for every integer time ``t``.

    Labels are deterministic functions of these uniforms, so caching them is
    only a speed matter.
    """

    def __init__(self, seed: int, block: int = 1024):
        if block < 1:
            raise ValueError("block must be >= 1")
        self.seed = int(seed) & MASK64
        self.block = int(block)
        self._key = _key(self.seed)
        self._cache: dict[int, np.ndarray] = {}

    def _block(self, b: int) -> np.ndarray:
        arr = self._cache.get(b)
        if arr is None:
            counter = np.zeros(4, dtype=np.uint64)
            counter[3] = np.uint64(b & MASK64)
            bitgen = np.random.Philox(key=self._key, counter=counter)
            arr = np.random.Generator(bitgen).random((self.block, UNIFORMS_PER_TIME))
            self._cache[b] = arr
        return arr

    def uniforms(self, t0: int, t1: int) -> np.ndarray:
        """Uniforms for times ``t0..t1-1`` as an array of shape ``(t1-t0, 2)``."""
        if t1 < t0:
            raise ValueError("empty or reversed time range")
        out = np.empty((t1 - t0, UNIFORMS_PER_TIME))
        B = self.block
        t = t0
        while t < t1:
            b = t // B
            start = t - b * B
            stop = min(B, t1 - b * B)
            out[t - t0 : t - t0 + stop - start] = self._block(b)[start:stop]
            t += stop - start
        return out

    def at(self, t: int) -> np.ndarray:
        return self.uniforms(t, t + 1)[0]
