"""Deterministic seeding primitives.

Every random decision in the pipeline flows through splitmix64, a mixing
function fully specified by three published 64-bit constants, so seeds and
draws are bit-identical across platforms and independent of worker schedule.
Seeds for per-sample work derive from content ids, never from wall clock or
thread identity.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1

# splitmix64 constants (golden-gamma increment and the two mixing multipliers).
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(state: int) -> int:
    """One splitmix64 step: advance ``state`` by the golden gamma and mix.

    ``splitmix64(0) == 0xE220A8397B1DCDAF``.
    """
    z = (state + _GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(global_seed: int, sample_id: str, stage_tag: str, variant_index: int) -> int:
    """Derive the seed for one (sample, stage, variant) triple.

    The sample id and stage tag are hashed (UTF-8, with the variant index as
    4 big-endian bytes) so the seed depends only on content identity, making
    augmentation and variation seeds independent of production order.
    """
    payload = sample_id.encode("utf-8") + stage_tag.encode("utf-8")
    payload += (variant_index & 0xFFFFFFFF).to_bytes(4, "big")
    digest = hashlib.sha256(payload).digest()
    mixed = int.from_bytes(digest[:8], "big")
    return splitmix64((global_seed ^ mixed) & MASK64)


class Splitmix64:
    """Sequential splitmix64 stream with uniform float draws.

    Draw ``i`` (1-based) equals ``mix(seed + i * gamma)``, which is what
    :func:`splitmix64_block` produces vectorised; the two paths are
    interchangeable and tested against each other.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform draw in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.next_float()


def splitmix64_block(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Vectorised splitmix64 outputs ``offset+1 .. offset+count`` of a stream.

    Matches the scalar :class:`Splitmix64` sequence exactly; used where a
    per-pixel python loop would be too slow (mock image synthesis).
    """
    with np.errstate(over="ignore"):
        idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
        z = np.uint64(seed & MASK64) + idx * np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def uniform_block(seed: int, count: int, low: float, high: float) -> np.ndarray:
    """Vectorised uniform draws in [low, high), same sequence as scalar draws."""
    u = splitmix64_block(seed, count) >> np.uint64(11)
    return low + (high - low) * (u.astype(np.float64) * 2.0**-53)
