"""Seeded random source shared by initialization, shuffling, dropout and
sampling. Identical seed + identical call sequence gives identical outputs."""

import numpy as np


class Rng:
    def __init__(self, seed):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def normal(self, shape=()):
        return self._gen.standard_normal(shape)

    def uniform(self, low=0.0, high=1.0, shape=()):
        return self._gen.uniform(low, high, shape)

    def permutation(self, n):
        return self._gen.permutation(n)

    def __repr__(self):
        return f"Rng(seed={self.seed})"
