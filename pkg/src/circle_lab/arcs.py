"""Farey dissection of the circle into major and minor arcs.

At level N the major arc around a reduced a/q (q <= N) is the closed interval
of radius 1/(4 k q N^(k-1)).  Arcs are kept as integer arrays; the exact
rational centre and radius are derived on demand.
"""

from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction

import numpy as np


def farey(n):
    """Yield the Farey sequence of order n as ``(a, q)`` pairs, from 0/1 to 1/1."""
    a, b, c, d = 0, 1, 1, n
    yield a, b
    while c <= n:
        k = (n + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
        yield a, b


def farey_arrays(n):
    """Numerators and denominators of the Farey sequence of order n, as int64 arrays.

    Distinct fractions with denominators <= n differ by at least 1/n^2, so
    sorting on the float value is exact while n^2 is far below 2^52.
    """
    if n > 1 << 20:
        pairs = np.array(list(farey(n)), dtype=np.int64)
        return pairs[:, 0], pairs[:, 1]
    q = np.repeat(np.arange(1, n + 1, dtype=np.int64), np.arange(2, n + 2))
    a = np.concatenate([np.arange(m + 1, dtype=np.int64) for m in range(1, n + 1)])
    keep = np.gcd(a, q) == 1
    a, q = a[keep], q[keep]
    order = np.argsort(a / q, kind="stable")
    return a[order], q[order]


@dataclass(frozen=True)
class MajorArc:
    a: int
    q: int
    radius: Fraction

    @property
    def center(self):
        return Fraction(self.a, self.q)

    @property
    def interval(self):
        return self.center - self.radius, self.center + self.radius


@dataclass(frozen=True)
class ArcDissection:
    N: int
    k: int
    a: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)

    @property
    def scale(self):
        """The integer 4 k N^(k-1); arc radius is 1/(scale * q)."""
        return 4 * self.k * self.N ** (self.k - 1)

    def __len__(self):
        return len(self.q)

    def radius(self, q):
        return Fraction(1, self.scale * int(q))

    def arc(self, i):
        q = int(self.q[i])
        return MajorArc(int(self.a[i]), q, self.radius(q))

    @property
    def arcs(self):
        return [self.arc(i) for i in range(len(self))]

    @cached_property
    def centers(self):
        return self.a / self.q

    def rows(self):
        """``(a, q, center, radius)`` tuples with exact rationals."""
        return [(m.a, m.q, m.center, m.radius) for m in self.arcs]


def dissect(N, k):
    if N < 1 or k < 2:
        raise ValueError("dissect needs N >= 1 and k >= 2")
    a, q = farey_arrays(N)
    d = ArcDissection(N, k, a, q)
    _assert_disjoint(d)
    return d


def _assert_disjoint(d):
    # Neighbouring Farey fractions satisfy a'q - aq' = 1, so the gap is
    # 1/(q q'), and it exceeds r_q + r_q' iff scale > q + q'.
    a, q = d.a, d.q
    det = a[1:] * q[:-1] - a[:-1] * q[1:]
    if not np.all(det == 1):
        raise AssertionError("Farey neighbour property violated")
    if len(q) > 1 and not d.scale > int((q[1:] + q[:-1]).max()):
        raise AssertionError(f"major arcs overlap at N={d.N}, k={d.k}")


def _as_fraction(theta):
    if isinstance(theta, Fraction):
        return theta
    if isinstance(theta, int):
        return Fraction(theta)
    return Fraction(float(theta))  # exact dyadic value of the float


def classify(theta, dissection):
    """Return the closed major arc containing ``theta`` or ``None`` (minor arcs)."""
    t = _as_fraction(theta)
    num, den = t.numerator, t.denominator
    centers = dissection.centers
    i = int(np.searchsorted(centers, float(t)))
    scale = dissection.scale
    for j in (i - 1, i, i + 1):
        if 0 <= j < len(centers):
            a, q = int(dissection.a[j]), int(dissection.q[j])
            # |num/den - a/q| <= 1/(scale q)  <=>  |num q - a den| * scale <= den
            if abs(num * q - a * den) * scale <= den:
                return dissection.arc(j)
    return None


def classify_many(thetas, dissection):
    """Index of the containing arc for each theta, or -1 when minor.

    Float input is screened in floating point with a generous margin; only
    thetas that might lie on an arc get the exact rational test.
    """
    out = np.full(len(thetas), -1, dtype=np.int64)
    if isinstance(thetas, np.ndarray) and thetas.dtype.kind == "f":
        centers = dissection.centers
        i = np.searchsorted(centers, thetas)
        near = np.zeros(len(thetas), dtype=bool)
        for j in (i - 1, i):
            jj = np.clip(j, 0, len(centers) - 1)
            r = 1.0 / (float(dissection.scale) * dissection.q[jj])
            near |= np.abs(thetas - centers[jj]) <= r * (1 + 1e-6) + 1e-15
        for idx in np.flatnonzero(near):
            m = classify(float(thetas[idx]), dissection)
            if m is not None:
                out[idx] = _index_of(dissection, m)
        return out
    for i, t in enumerate(thetas):
        m = classify(t, dissection)
        if m is not None:
            out[i] = _index_of(dissection, m)
    return out


def _index_of(dissection, arc):
    i = int(np.searchsorted(dissection.centers, arc.a / arc.q))
    for j in (i - 1, i, i + 1):
        if 0 <= j < len(dissection) and dissection.a[j] == arc.a and dissection.q[j] == arc.q:
            return j
    raise KeyError(arc)


def minor_mask(thetas, dissection):
    return classify_many(thetas, dissection) < 0


def major_total_measure(dissection):
    """Exact length of the union of major arcs in R/Z and of its complement.

    The 0/1 and 1/1 arcs contribute one half-arc each, which together form
    the single wrapped arc around 0.
    """
    total = Fraction(0)
    for q, count in zip(*np.unique(dissection.q, return_counts=True)):
        total += Fraction(2 * int(count), dissection.scale * int(q))
    # 0/1 and 1/1 are counted as full arcs above but only their inner halves lie in [0, 1)
    total -= Fraction(2, dissection.scale)
    return total, 1 - total
