"""Ordered parallel map supplied by the caller.

Library functions never create workers.  They accept a ``pmap`` callable with
the signature ``pmap(fn, items) -> list`` that must return results in input
order; reductions are then done by the caller in that order, so the numbers
do not depend on how many workers ran.
"""

from concurrent.futures import ThreadPoolExecutor


def serial_map(fn, items):
    return [fn(x) for x in items]


class ThreadMap:
    """Thread-pool map; usable as a context manager."""

    def __init__(self, threads):
        self.threads = max(1, int(threads))
        self._pool = ThreadPoolExecutor(self.threads) if self.threads > 1 else None

    def __call__(self, fn, items):
        if self._pool is None:
            return serial_map(fn, items)
        return list(self._pool.map(fn, items))

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
