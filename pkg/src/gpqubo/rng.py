"""Deterministic pseudo-random numbers for experiments and annealing.

All randomness in this package flows through SplitMix64, a counter-based
generator: the state advances by the 64-bit golden-ratio constant
0x9E3779B97F4A7C15 and each output is a fixed avalanche mix of the counter
(Steele, Lea & Flood, "Fast splittable pseudorandom number generators").
It is pure 64-bit integer arithmetic, so streams are identical on every
platform for a given seed. OS randomness is never consulted.

The compiled annealing kernel re-implements the identical algorithm in C;
`tests/test_backend.py` cross-checks the two streams bit for bit.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z: int) -> int:
    """The SplitMix64 output function applied to a 64-bit counter value."""
    z &= _MASK64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Stateful wrapper: state_k = seed + k * GOLDEN, output_k = mix64(state_k)."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return mix64(self._state)

    def uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection of the short tail."""
        if n <= 0:
            raise ValueError("n must be positive")
        tail = ((1 << 64) - n) % n  # == 2**64 mod n
        while True:
            u = self.next_u64()
            if u >= tail:
                return u % n

    def choose(self, n: int, k: int) -> tuple[int, ...]:
        """Uniform k-subset of range(n) via a partial Fisher-Yates shuffle."""
        if not 0 <= k <= n:
            raise ValueError("need 0 <= k <= n")
        pool = list(range(n))
        for t in range(k):
            r = t + self.below(n - t)
            pool[t], pool[r] = pool[r], pool[t]
        return tuple(sorted(pool[:k]))
