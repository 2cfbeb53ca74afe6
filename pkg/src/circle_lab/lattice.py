"""Lattice points on the surface |x_1|^k + ... + |x_d|^k = lambda.

Counts come from repeated truncated convolution of the one-dimensional
sequence c1 (c1[0] = 1, c1[j^k] = 2).  Solution sets are enumerated
independently by a meet-in-the-middle join on partial form values, which
makes each route an oracle for the other.
"""

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from circle_lab.errors import CapExceededError, PreconditionError
from circle_lab.exponents import FormParams
from circle_lab.parallel import serial_map

DEFAULT_MEMORY_CAP = 1 << 30  # bytes
DEFAULT_ENUM_CAP = 2_000_000  # points

_INT64_SAFE = (1 << 62)


def kth_root_floor(x, k):
    """Largest n >= 0 with n**k <= x (exact for Python ints)."""
    if x < 0:
        raise ValueError("negative argument")
    n = int(round(x ** (1.0 / k)))
    while n**k > x:
        n -= 1
    while (n + 1) ** k <= x:
        n += 1
    return n


def kth_root_ceil(x, k):
    n = kth_root_floor(x, k)
    return n if n**k == x else n + 1


def one_dim_counts(k, lambda_max):
    c = np.zeros(lambda_max + 1, dtype=np.int64)
    c[0] = 1
    for j in range(1, kth_root_floor(lambda_max, k) + 1):
        c[j**k] = 2
    return c


@dataclass(frozen=True)
class RepresentationTable:
    params: FormParams
    lambda_max: int
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.counts.flags.writeable = False

    def __getitem__(self, lam):
        return int(self.counts[lam])

    def as_ints(self):
        return [int(c) for c in self.counts]


def _convolve_block(src, powers, lo, hi):
    """Entries ``lo..hi-1`` of src * (1 + 2 sum_j x^(j^k))."""
    out = src[lo:hi].copy()
    for m in powers:
        if m >= hi:
            break
        a = max(lo, m)
        out[a - lo:] += 2 * src[a - m:hi - m]
    return out


def count_representations(params, lambda_max, memory_cap=DEFAULT_MEMORY_CAP, pmap=serial_map, block=1 << 16):
    """Exact R(lambda) for 0 <= lambda <= lambda_max.

    Counts are carried in int64 while a bound on their size allows it and
    in Python integers afterwards.  The output range is split into blocks
    that may be computed in parallel; each block is exact so the result does
    not depend on the worker count.
    """
    if lambda_max < 0:
        raise PreconditionError("lambda_max must be >= 0")
    k, d = params.k, params.d
    n = kth_root_floor(lambda_max, k)
    # crude bound on any count: (2n+1)^d
    big = (2 * n + 1) ** d >= _INT64_SAFE
    itemsize = 8 if not big else 8 + 8 * (d * (2 * n + 1).bit_length() // 64 + 1)
    need = (lambda_max + 1) * itemsize * 2
    if need > memory_cap:
        raise CapExceededError(f"representation table needs ~{need} bytes, cap is {memory_cap}", need)
    powers = [j**k for j in range(1, n + 1)]
    cur = np.zeros(lambda_max + 1, dtype=object if big else np.int64)
    cur[0] = 1
    starts = list(range(0, lambda_max + 1, block))
    for _ in range(d):
        src = cur
        parts = pmap(lambda lo: _convolve_block(src, powers, lo, min(lo + block, lambda_max + 1)), starts)
        cur = np.concatenate(parts)
    return RepresentationTable(params, lambda_max, cur)


def _half_vectors(h, k, bound, signed=True):
    """All integer h-vectors with form value <= bound, grouped by value.

    Returns ``(values, vectors)`` sorted by value then lexicographically.
    With ``signed=False`` only nonnegative vectors are produced.
    """
    n = kth_root_floor(bound, k)
    axis = np.arange(-n if signed else 0, n + 1, dtype=np.int64)
    powk = np.abs(axis) ** k
    vals = np.zeros(1, dtype=np.int64)
    vecs = np.zeros((1, 0), dtype=np.int64)
    for _ in range(h):
        s = vals[:, None] + powk[None, :]
        keep = s <= bound
        rows, cols = np.nonzero(keep)
        vecs = np.concatenate([vecs[rows], axis[cols, None]], axis=1)
        vals = s[rows, cols]
    order = np.lexsort(tuple(vecs.T[::-1]) + (vals,))
    return vals[order], vecs[order]


@dataclass(frozen=True)
class SolutionSet:
    """Solutions of f(x) = lambda, either materialised or as two half-tables.

    In factored form ``halves`` holds ``(values, vectors)`` for the first
    ceil(d/2) and the last floor(d/2) coordinates.
    """

    params: FormParams
    lam: int
    points: np.ndarray | None = field(default=None, repr=False)
    halves: tuple | None = field(default=None, repr=False)

    def __len__(self):
        if self.points is not None:
            return len(self.points)
        return _join_size(self.halves, self.lam)


def _group_bounds(vals):
    keys, starts, counts = np.unique(vals, return_index=True, return_counts=True)
    return {int(v): (int(s), int(s + c)) for v, s, c in zip(keys, starts, counts)}


def _join_size(halves, lam):
    (v1, _), (v2, _) = halves
    g2 = _group_bounds(v2)
    total = 0
    for s, (a, b) in _group_bounds(v1).items():
        if lam - s in g2:
            c, e = g2[lam - s]
            total += (b - a) * (e - c)
    return total


def enumerate_solutions(params, lam, mode="full", cap=DEFAULT_ENUM_CAP):
    if lam < 0:
        raise PreconditionError("lambda must be >= 0")
    k, d = params.k, params.d
    h1, h2 = (d + 1) // 2, d // 2
    halves = (_half_vectors(h1, k, lam), _half_vectors(h2, k, lam))
    if mode == "factored":
        return SolutionSet(params, lam, halves=halves)
    if mode != "full":
        raise ValueError(f"unknown mode {mode!r}")
    size = _join_size(halves, lam)
    if size > cap:
        raise CapExceededError(f"R({lam}) = {size} solutions exceeds the enumeration cap {cap}", size)
    (v1, x1), (v2, x2) = halves
    g2 = _group_bounds(v2)
    blocks = []
    for s, (a, b) in _group_bounds(v1).items():
        if lam - s not in g2:
            continue
        c, e = g2[lam - s]
        left, right = x1[a:b], x2[c:e]
        blocks.append(np.concatenate([np.repeat(left, len(right), axis=0), np.tile(right, (len(left), 1))], axis=1))
    pts = np.concatenate(blocks) if blocks else np.zeros((0, d), dtype=np.int64)
    pts = pts[np.lexsort(tuple(pts.T[::-1]))]
    pts.flags.writeable = False
    return SolutionSet(params, lam, points=pts)


def count_positive_weighted(params, lam):
    """R(lambda) from nonnegative vectors weighted by 2^(number of nonzero coordinates)."""
    vals, vecs = _half_vectors(params.d, params.k, lam, signed=False)
    sel = vecs[vals == lam]
    return int(np.sum(2 ** np.count_nonzero(sel, axis=1)))


@dataclass
class GridFunction:
    """A function on {-B..B}^d stored as a dense d-dimensional array (index 0 is -B)."""

    d: int
    box: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (2 * self.box + 1,) * self.d:
            raise PreconditionError(f"values must have shape {(2 * self.box + 1,) * self.d}")
        if not np.all(np.isfinite(self.values)):
            raise PreconditionError("grid values must be finite")

    @classmethod
    def zeros(cls, d, box):
        return cls(d, box, np.zeros((2 * box + 1,) * d, dtype=complex))

    @classmethod
    def delta(cls, d, box=0, at=None):
        g = cls.zeros(d, box)
        at = (0,) * d if at is None else at
        g.values[tuple(box + np.asarray(at))] = 1.0
        return g

    @classmethod
    def from_triples(cls, d, box, triples):
        g = cls.zeros(d, box)
        for idx, re, im in triples:
            g.values[tuple(box + np.asarray(idx))] += complex(re, im)
        return g

    def to_triples(self):
        out = []
        for pos in np.argwhere(self.values != 0):
            v = self.values[tuple(pos)]
            out.append(([int(p) - self.box for p in pos], float(v.real), float(v.imag)))
        return out

    def at(self, x):
        idx = np.asarray(x) + self.box
        if np.any(idx < 0) or np.any(idx > 2 * self.box):
            return 0j
        return complex(self.values[tuple(idx)])

    def padded(self, box):
        if box < self.box:
            raise ValueError("cannot shrink")
        out = GridFunction.zeros(self.d, box)
        o = box - self.box
        out.values[(slice(o, o + 2 * self.box + 1),) * self.d] = self.values
        return out

    def norm(self, p):
        a = np.abs(self.values)
        if p == np.inf:
            return float(a.max(initial=0.0))
        return float(np.sum(a**p) ** (1.0 / p))


def _solutions(params, lam, cap):
    return enumerate_solutions(params, lam, "full", cap).points


def apply_average(f, lam, params, method="auto", cap=DEFAULT_ENUM_CAP):
    """A_lambda f(x) = lambda^(1-d/k) sum_{f(y)=lambda} f(x-y), on the enlarged box."""
    if f.d != params.d:
        raise PreconditionError("grid dimension does not match params.d")
    if lam < 1:
        raise PreconditionError("lambda must be >= 1")
    k, d = params.k, params.d
    grow = kth_root_ceil(lam, k)
    out_box = f.box + grow
    pts = _solutions(params, lam, cap)
    scale = float(lam) ** float(params.scale_exponent)
    out = np.zeros((2 * out_box + 1,) * d, dtype=complex)
    nz = np.argwhere(f.values != 0)
    if method == "auto":
        method = "sparse" if len(nz) * 4 < f.values.size else "dense"
    if method == "dense":
        w = 2 * f.box + 1
        for y in pts:
            o = grow + y
            out[tuple(slice(int(s), int(s) + w) for s in o)] += f.values
    elif method == "sparse":
        if len(nz) and len(pts):
            vals = f.values[tuple(nz.T)]
            tgt = (nz[:, None, :] + grow + pts[None, :, :]).reshape(-1, d)
            np.add.at(out, tuple(tgt.T), np.repeat(vals, len(pts)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return GridFunction(d, out_box, out * scale)


def maximal_function(f, lambda_set, params, cap=DEFAULT_ENUM_CAP):
    """Pointwise max over the finite lambda_set of |A_lambda f|; lambdas with R = 0 are skipped."""
    lambda_set = list(lambda_set)
    if not lambda_set or min(lambda_set) < 1:
        raise PreconditionError("lambda_set must be non-empty with every lambda >= 1")
    box = f.box + max(kth_root_ceil(l, params.k) for l in lambda_set)
    acc = np.zeros((2 * box + 1,) * params.d)
    for lam in lambda_set:
        if len(enumerate_solutions(params, lam, "factored")) == 0:
            continue
        g = apply_average(f, lam, params, cap=cap).padded(box)
        np.maximum(acc, np.abs(g.values), out=acc)
    return GridFunction(params.d, box, acc)


def empirical_lp_ratio(f, p, lambda_set, params, cap=DEFAULT_ENUM_CAP):
    """||A_* f||_p / ||f||_p over the truncated lambda set.

    This is a lower bound for the operator norm of the maximal function on
    l^p, never an estimate of it.
    """
    p = np.inf if p in ("inf", float("inf")) else float(p)
    if not (p == np.inf or p >= 1):
        raise PreconditionError("p must lie in [1, inf]")
    base = f.norm(p)
    if base == 0:
        raise PreconditionError("input grid function is identically zero")
    return maximal_function(f, lambda_set, params, cap).norm(p) / base
