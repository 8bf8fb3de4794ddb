"""SplitMix64 stream used for every seeded draw in the package.

Kept in pure integer arithmetic so weight initialisation and AUC-Borji
negative sampling are reproducible independently of numpy's generators.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) / 9007199254740992.0

    def uniform(self, n: int) -> np.ndarray:
        return np.array([self.next_float() for _ in range(n)], dtype=np.float64)

    def integers(self, bound: int, n: int) -> np.ndarray:
        """``n`` draws from ``range(bound)`` by modulo reduction."""
        return np.array([self.next_u64() % bound for _ in range(n)], dtype=np.intp)


def glorot_limit(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def glorot_conv(rng: SplitMix64, c_out: int, c_in: int, k: int) -> np.ndarray:
    """Conv weights filled in (out, in, row, col) order from ``rng``."""
    a = glorot_limit(c_in * k * k, c_out * k * k)
    u = rng.uniform(c_out * c_in * k * k)
    return ((2.0 * u - 1.0) * a).reshape(c_out, c_in, k, k)
