"""Deterministic random numbers for reproducible runs.

Everything stochastic in this package draws from splitmix64 streams so that a
run is a pure function of its seed.  One stream per purpose, derived from the
run seed with a fixed label:

    stream(seed, "init")     parameter initialization
    stream(seed, "shuffle")  epoch shuffling
    stream(seed, "dropout")  dropout masks
    stream(seed, "split")    train/dev splitting
    stream(seed, "gradcheck") coordinate sampling for gradient checks

Out-of-vocabulary vectors use per-word streams: stream(fnv1a64(word) ^
oov_seed, "oov").  Python's built-in hash() is process-salted, so the stable
FNV-1a hash is used instead.

Doubles are (z >> 11) * 2**-53, giving uniforms in [0, 1).  Bounded integers
use rejection sampling, so they are exactly uniform.  The vectorized fill is
possible because the splitmix64 state advance is linear (state_k = seed +
k*GAMMA mod 2**64); it is bit-identical to repeated next_u64() calls.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFF_FFFF_FFFF_FFFF
_GAMMA = 0x9E37_79B9_7F4A_7C15
_MIX1 = 0xBF58_476D_1CE4_E5B9
_MIX2 = 0x94D0_49BB_1331_11EB

_FNV_OFFSET = 0xCBF2_9CE4_8422_2325
_FNV_PRIME = 0x0000_0100_0000_01B3


def fnv1a64(data: str | bytes) -> int:
    """Stable 64-bit FNV-1a hash of a string or byte sequence."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def mix64(x: int) -> int:
    """The splitmix64 output scrambler, usable as a standalone hash."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & _MASK64
    return x ^ (x >> 31)


class SplitMix64:
    """splitmix64 generator over a single 64-bit state."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return mix64(self._state)

    def next_double(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.next_double()

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        threshold = ((_MASK64 + 1) // n) * n
        while True:
            z = self.next_u64()
            if z < threshold:
                return z % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def fill_u64(self, n: int) -> np.ndarray:
        """Next n raw outputs as uint64, vectorized."""
        state = np.uint64(self._state) + np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GAMMA)
        self._state = (self._state + n * _GAMMA) & _MASK64
        z = state
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def fill_uniform(self, low: float, high: float, shape, dtype=np.float64) -> np.ndarray:
        """Array of uniforms in [low, high), row-major draw order."""
        n = int(np.prod(shape))
        u = (self.fill_u64(n) >> np.uint64(11)) * 2.0**-53
        return (low + (high - low) * u).reshape(shape).astype(dtype, copy=False)


def stream(seed: int, label: str) -> SplitMix64:
    """Derive the generator for one purpose from a seed and a fixed label."""
    return SplitMix64((seed & _MASK64) ^ fnv1a64(label))


def oov_stream(word: str, oov_seed: int) -> SplitMix64:
    """Per-word generator for out-of-vocabulary vectors."""
    return stream(fnv1a64(word) ^ (oov_seed & _MASK64), "oov")
