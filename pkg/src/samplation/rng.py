"""Counter-based pseudo-random primitives shared by all backends.

Every random draw in this package is a pure function of a 64-bit key plus
integer indices, built from the SplitMix64 finalizer.  There is no mutable
generator state, which buys three things:

* any draw is addressable (seed, index, attempt) -> value, so independent
  substreams can be derived per item, per trial or per group without
  coordination;
* the compiled and the numpy kernel backends can reproduce each other's
  output bit for bit (the contract `tests/test_kernels.py` enforces);
* vectorizing across trials cannot change results, because nothing is
  consumed in sequence.

This module holds the scalar reference implementation.  `_pykernels` carries
the vectorized twin, `_ckernels.pyx` the compiled one.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

# golden-ratio increment from SplitMix64
GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finalizer: scramble a 64-bit value."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def substream(key: int, index: int) -> int:
    """The ``index``-th raw 64-bit draw (or child key) under ``key``."""
    return mix64((key + (index + 1) * GAMMA) & MASK64)


def spawn_seed(seed: int, index: int) -> int:
    """Derive an independent child seed, e.g. one per group or per trial."""
    return substream(seed, index)


def uniform01(key: int, index: int) -> float:
    """Uniform double in [0, 1) with 53 random bits."""
    return (substream(key, index) >> 11) * 2.0 ** -53


def bounded_int(key: int, index: int, bound: int) -> int:
    """Uniform integer in [0, bound) by bitmask rejection.

    Each (key, index) pair owns its private attempt stream, so the number
    of rejected draws for one value never shifts any other value.
    """
    if bound <= 0:
        raise ValueError(f"bound must be positive, got {bound}")
    if bound == 1:
        return 0
    k = substream(key, index)
    mask = (1 << (bound - 1).bit_length()) - 1
    attempt = 0
    while True:
        v = substream(k, attempt) & mask
        if v < bound:
            return v
        attempt += 1
