"""Seeded, platform-stable randomness.

All stochastic components draw from ``Rng``, a thin wrapper around numpy's
Philox counter-based bit generator. Philox has a fixed published algorithm,
so identical seeds produce identical streams across runs and platforms.
"""
from __future__ import annotations

import numpy as np


class Rng:
    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self._gen = np.random.Generator(np.random.Philox(key=self.seed + (self.stream << 32)))

    def spawn(self, stream: int) -> "Rng":
        """Independent substream derived from the same seed."""
        return Rng(self.seed, stream)

    def integers(self, low, high=None, size=None) -> np.ndarray:
        return self._gen.integers(low, high=high, size=size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size=size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size=size)

    def random(self, size=None):
        return self._gen.random(size=size)

    def shuffle(self, arr) -> None:
        self._gen.shuffle(arr)

    def permutation(self, n) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, a, size=None, replace=True, p=None):
        return self._gen.choice(a, size=size, replace=replace, p=p)
