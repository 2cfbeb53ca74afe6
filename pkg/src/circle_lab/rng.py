"""Seeded 64-bit random stream (SplitMix64).

Contract: ``SplitMix64(seed)`` produces the same sequence of 64-bit words on
every platform.  Word ``i`` (0-based) of the stream is
``mix(seed + (i + 1) * 0x9E3779B97F4A7C15 mod 2**64)`` with the standard
SplitMix64 finalizer.  Doubles take the top 53 bits of a word.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Counter-based SplitMix64 stream; draws advance an internal counter."""

    def __init__(self, seed):
        self.seed = np.uint64(int(seed) & ((1 << 64) - 1))
        self.counter = 0

    def next_u64(self, n):
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return _mix(self.seed + idx * _GOLDEN)

    def uniform(self, n, low=0.0, high=1.0):
        u = (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return low + (high - low) * u

    def integers(self, low, high, n):
        """Integers in ``[low, high)``; uses 53-bit floats, bias below 2**-40 for spans < 2**13."""
        u = self.uniform(n)
        return low + np.floor(u * (high - low)).astype(np.int64)
