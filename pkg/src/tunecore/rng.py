"""Deterministic xorshift128+ generator with serializable state.

Scheduler decisions and sampled configs must replay exactly across snapshot
and resume, so the generator algorithm is pinned here (and its identifier is
recorded in experiment metadata) instead of relying on `random`'s unspecified
internals.
"""

from __future__ import annotations

import hashlib

RNG_ALGORITHM = "xorshift128+"

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> tuple:
    """One splitmix64 step; returns (new_state, output). Used only for seeding."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x, z ^ (z >> 31)


def derive_seed(seed: int, salt: str) -> int:
    """Stable sub-seed so independent streams (suggestion, PBT) never collide."""
    h = hashlib.sha256(f"{seed}:{salt}".encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


class XorShift128Plus:
    """xorshift128+ with 53-bit unit-uniform output in [0, 1)."""

    def __init__(self, seed: int = 0):
        state = seed & _MASK64
        state, s0 = _splitmix64(state)
        state, s1 = _splitmix64(state)
        if s0 == 0 and s1 == 0:  # all-zero state is a fixed point
            s0 = 0x9E3779B97F4A7C15
        self._s0 = s0
        self._s1 = s1

    def next_u64(self) -> int:
        s1 = self._s0
        s0 = self._s1
        self._s0 = s0
        s1 = (s1 ^ (s1 << 23)) & _MASK64
        self._s1 = s1 ^ s0 ^ (s1 >> 18) ^ (s0 >> 5)
        return (self._s1 + s0) & _MASK64

    def uniform(self) -> float:
        """Unit uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def getstate(self) -> list:
        return [self._s0, self._s1]

    def setstate(self, state) -> None:
        s0, s1 = int(state[0]), int(state[1])
        if not (0 <= s0 <= _MASK64 and 0 <= s1 <= _MASK64) or (s0 == 0 and s1 == 0):
            raise ValueError(f"invalid xorshift128+ state {state!r}")
        self._s0 = s0
        self._s1 = s1
