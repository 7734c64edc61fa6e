# lab/rng.py
# SplitMix64: a 64-bit generator simple enough to reproduce bit-for-bit in
# any language, so synthetic corpora match across implementations.
from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends included."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + self.next_u64() % (hi - lo + 1)

    def normal(self) -> float:
        # Box-Muller, one draw per pair of uniforms (no cached second value)
        u1 = 1.0 - self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, size: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(size)], dtype=float)

    def exponential(self) -> float:
        return -math.log(1.0 - self.random())

    def shuffle(self, items: list) -> None:
        """Fisher-Yates, in place."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]

    def simplex(self, k: int, floor: float = 0.0) -> np.ndarray:
        """Random probability vector of length k with every entry >= floor."""
        if floor * k >= 1.0:
            raise ValueError(f"floor {floor} too large for {k} entries")
        draws = np.array([self.exponential() for _ in range(k)], dtype=float)
        total = draws.sum()
        p = draws / total if total > 0 else np.full(k, 1.0 / k)
        return (1.0 - floor * k) * p + floor
