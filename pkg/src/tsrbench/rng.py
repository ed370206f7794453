"""Deterministic pseudo-random number generator.

Every piece of randomness in the toolkit (shuffles, splits, parameter
sampling) flows through one xorshift64* stream so that a run is fully
reproducible from a single integer seed, independent of platform,
Python version, and numpy version.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_MULTIPLIER = 0x2545F4914F6CDD1D

# splitmix64 constants, used only to turn an arbitrary seed (including 0,
# which xorshift cannot hold as state) into a well-mixed nonzero state.
_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_MIX1 = 0xBF58476D1CE4E5B9
_SM_MIX2 = 0x94D049BB133111EB


def _splitmix64(x: int) -> int:
    x = (x + _SM_GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * _SM_MIX1) & _MASK64
    x = ((x ^ (x >> 27)) * _SM_MIX2) & _MASK64
    return x ^ (x >> 31)


class Xorshift64Star:
    """xorshift64* stream: shifts 12/25/27, multiplier 0x2545F4914F6CDD1D.

    The raw seed is passed through splitmix64 once, so any 64-bit seed
    (zero included) yields a valid nonzero internal state.
    """

    def __init__(self, seed: int):
        self._state = _splitmix64(seed & _MASK64)
        if self._state == 0:
            # splitmix64 maps exactly one input to 0; any fixed nonzero
            # replacement keeps the stream well defined.
            self._state = _SM_GAMMA

    def next_u64(self) -> int:
        x = self._state
        x ^= (x >> 12)
        x = (x ^ (x << 25)) & _MASK64
        x ^= (x >> 27)
        self._state = x
        return (x * _MULTIPLIER) & _MASK64

    def next_float(self) -> float:
        """Uniform float in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n).  Uses the multiply-shift reduction;
        the bias for any n that fits in practice (n << 2^64) is negligible
        and the result is identical on every platform."""
        if n <= 0:
            raise ValueError("next_below needs a positive bound")
        return (self.next_u64() * n) >> 64

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, iterating from the tail."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, population: int, count: int) -> list[int]:
        """`count` distinct indices drawn from range(population), in draw
        order, via a partial Fisher-Yates pass."""
        if count > population:
            raise ValueError("cannot sample more indices than the population")
        pool = list(range(population))
        picked: list[int] = []
        for i in range(count):
            j = i + self.next_below(population - i)
            pool[i], pool[j] = pool[j], pool[i]
            picked.append(pool[i])
        return picked

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.next_float()

    def log_uniform(self, low: float, high: float) -> float:
        """Uniform in log space over (low, high); both bounds positive."""
        if low <= 0 or high <= 0:
            raise ValueError("log_uniform bounds must be positive")
        return math.exp(self.uniform(math.log(low), math.log(high)))
