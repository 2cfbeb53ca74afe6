"""Exact phase reduction.

Large integer arguments such as ``theta * n**k`` lose their fractional part
in float arithmetic.  A float ``theta`` is an exact dyadic rational, so when
its denominator divides ``2**64`` the product ``theta * n`` can be reduced
mod 1 with one wrapping ``uint64`` multiplication.  Other inputs fall back
to Python integers.
"""

from fractions import Fraction

import numpy as np

TWO64 = 1 << 64
_MASK = TWO64 - 1
TAU = 2.0 * np.pi


def e(x):
    """``exp(2 pi i x)`` elementwise."""
    return np.exp(1j * TAU * np.asarray(x, dtype=float))


def dyadic_residue(theta):
    """Return ``M`` with ``theta = M / 2**64 (mod 1)`` or ``None`` if not representable."""
    num, den = Fraction(theta).as_integer_ratio() if isinstance(theta, Fraction) else float(theta).as_integer_ratio()
    if TWO64 % den:
        return None
    return (num * (TWO64 // den)) & _MASK


def frac_mul(theta, n):
    """Fractional part of ``theta * n`` for an integer array ``n``, computed exactly.

    ``n`` may be any integer dtype (negative entries allowed) or an object
    array of Python ints.  The result is a float array in ``[0, 1)``.
    """
    n = np.asarray(n)
    m = dyadic_residue(theta)
    if m is not None and n.dtype != object:
        with np.errstate(over="ignore"):
            r = n.astype(np.int64).astype(np.uint64) * np.uint64(m)
        # top 53 bits carry all the precision a double can hold
        return (r >> np.uint64(11)).astype(np.float64) * 2.0**-53
    num, den = Fraction(theta).as_integer_ratio()
    flat = [((num * int(v)) % den) / den for v in n.ravel()]
    return np.array(flat, dtype=float).reshape(n.shape)


def frac_mul_many(thetas, n):
    """``frac(theta_i * n_j)`` as a ``(len(thetas), len(n))`` matrix."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    n = np.asarray(n)
    residues = [dyadic_residue(t) for t in thetas]
    if n.dtype != object and all(r is not None for r in residues):
        m = np.array(residues, dtype=np.uint64)
        nn = n.astype(np.int64).astype(np.uint64)
        with np.errstate(over="ignore"):
            r = m[:, None] * nn[None, :]
        return (r >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return np.stack([frac_mul(t, n) for t in thetas])
