"""Portable deterministic random number generation.

Episode streams must be reproducible across platforms and languages, so the
harness uses splitmix64 (Steele, Lea & Flood's SplittableRandom finalizer, as
published by Sebastiano Vigna) instead of an interpreter-specific generator.
The algorithm is pure 64-bit integer arithmetic:

    state <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z <- state
    z <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9   mod 2^64
    z <- (z XOR (z >> 27)) * 0x94D049BB133111EB   mod 2^64
    output z XOR (z >> 31)

Bounded integers use Lemire's multiply-shift reduction ((x * n) >> 64), and
floats take the top 53 bits of one output word, so every draw is a fixed
function of the seed with no platform dependence.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64 stream seeded from a single 64-bit integer."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0**-53)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n) via multiply-shift reduction."""
        if n <= 0:
            raise ValueError("randrange bound must be positive")
        return (self.next_u64() * n) >> 64

    def choice(self, seq):
        return seq[self.randrange(len(seq))]


def mix_seed(*parts: int) -> int:
    """Fold several integers into one 64-bit seed.

    Each part is absorbed through one splitmix64 scramble so that nearby
    seeds (0, 1, 2, ...) yield unrelated streams.
    """
    acc = 0
    for part in parts:
        acc = (acc ^ (part & _MASK64)) & _MASK64
        acc = (acc + _GOLDEN) & _MASK64
        z = acc
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        acc = z ^ (z >> 31)
    return acc
