"""Portable seeded random stream.

The stream is SplitMix64 so that any implementation can reproduce the
exact draw sequence from a seed:

    state <- (state + 0x9E3779B97F4A7C15) mod 2**64
    z <- state
    z <- ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z <- ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    output z ^ (z >> 31)

Derived draws:

* ``random()``: ``(next() >> 11) * 2**-53``, a double in [0, 1).
* ``randbelow(n)``: draw ``x = next()`` until ``x < 2**64 - (2**64 mod n)``,
  then return ``x mod n`` (unbiased).
* ``uniform(a, b)``: ``a + (b - a) * random()``.
* ``shuffle(seq)``: Fisher-Yates from the last index down,
  ``j = randbelow(i + 1)`` for ``i = n-1 .. 1``.

The initial state is the seed reduced mod 2**64.
"""

from __future__ import annotations

from typing import MutableSequence

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

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, a: float, b: float) -> float:
        return a + (b - a) * self.random()

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, seq: MutableSequence) -> None:
        for i in range(len(seq) - 1, 0, -1):
            j = self.randbelow(i + 1)
            seq[i], seq[j] = seq[j], seq[i]
