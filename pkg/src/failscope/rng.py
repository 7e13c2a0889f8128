"""Deterministic random number generation.

All randomness in the toolkit flows through :class:`Rng`, a SplitMix64
generator implemented in plain integer arithmetic. The same seed produces
the same stream on every platform and Python version, which keeps
generated datasets, fold assignments, and reports reproducible bit for bit.

Algorithm (SplitMix64, public domain): the 64-bit state advances by the
constant 0x9E3779B97F4A7C15 each step and the output is a finalizing
xor-shift-multiply mix of the new state.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence, TypeVar

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

T = TypeVar("T")


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Rng:
    """SplitMix64 stream with the handful of draws the toolkit needs."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare_normal: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n). Rejection sampling, no modulo bias."""
        if n <= 0:
            raise ValueError("randint bound must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def bernoulli(self, p: float) -> bool:
        return self.random() < p

    def binomial(self, n: int, p: float) -> int:
        """Sum of n Bernoulli draws. Intended for small n."""
        return sum(1 for _ in range(n) if self.random() < p)

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Box-Muller transform; caches the spare deviate."""
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
        else:
            u1 = 1.0 - self.random()  # avoid log(0)
            u2 = self.random()
            r = math.sqrt(-2.0 * math.log(u1))
            z = r * math.cos(2.0 * math.pi * u2)
            self._spare_normal = r * math.sin(2.0 * math.pi * u2)
        return mu + sigma * z

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, population: Sequence[T], k: int) -> list[T]:
        """k distinct items, order randomized (partial Fisher-Yates)."""
        if k > len(population):
            raise ValueError("sample larger than population")
        pool = list(population)
        for i in range(k):
            j = i + self.randint(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def choice_weighted(self, items: Sequence[T], weights: Iterable[float]) -> T:
        ws = list(weights)
        total = math.fsum(ws)
        if total <= 0:
            raise ValueError("weights must sum to a positive value")
        x = self.random() * total
        acc = 0.0
        for item, w in zip(items, ws):
            acc += w
            if x < acc:
                return item
        return items[-1]
