"""Deterministic randomness for relation resolution.

SplitMix64 streams seeded per connection make random pairings bit-exact across
runs and platforms: stream seed = FNV-1a-64 of the connection id's UTF-8 bytes,
XOR the relation's seed, XOR the scenario master seed.
"""

from __future__ import annotations

MASK64 = 2**64 - 1

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & MASK64
    return h


class SplitMix64:
    """The classic SplitMix64 generator over 64-bit state."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)


def stream_seed(conn_id: str, relation_seed: int, master_seed: int) -> int:
    return fnv1a64(conn_id.encode("utf-8")) ^ (relation_seed & MASK64) ^ (master_seed & MASK64)


def uniform_index(stream: SplitMix64, n: int) -> int:
    """Unbiased index in [0, n) by rejection sampling; deterministic given the stream state."""
    if n < 1:
        raise ValueError("n must be >= 1")
    limit = 2**64 - (2**64 % n)
    while True:
        word = stream.next_u64()
        if word < limit:
            return word % n
