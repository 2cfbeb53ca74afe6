"""Exponential sums, Gauss sums and exact mean-value counts.

Phases ``theta * n**k`` are reduced mod 1 in integer arithmetic before they
reach a float (see ``_phase``), so large ``n**k`` never costs accuracy.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import gcd

import numpy as np

from circle_lab._phase import TAU, e, frac_mul, frac_mul_many
from circle_lab.arcs import ArcDissection, classify
from circle_lab.errors import CapExceededError, PreconditionError
from circle_lab.parallel import serial_map

DEFAULT_TABLE_CAP = 60_000_000  # entries in a meet-in-the-middle table


def _phases(theta, xi, n, k):
    return frac_mul(theta, np.abs(n) ** k) + frac_mul(xi, n)


def s_N(theta, xi, N, k):
    """S_N(theta, xi) = sum_{|n|<=N} e(theta |n|^k + xi n)."""
    if N < 0:
        raise PreconditionError("N must be >= 0")
    n = np.arange(-N, N + 1, dtype=np.int64)
    return complex(np.sum(e(_phases(theta, xi, n, k))))


def s_tilde_N(theta, xi, N, k):
    """One-sided sum over 1 <= n <= N."""
    n = np.arange(1, N + 1, dtype=np.int64)
    return complex(np.sum(e(_phases(theta, xi, n, k))))


def f_N(theta, xi, N, k):
    """Product over coordinates of S_N(theta, xi_j)."""
    out = 1.0 + 0j
    for x in np.atleast_1d(xi):
        out *= s_N(theta, float(x), N, k)
    return out


def s_N_grid(thetas, xis, N, k):
    """Matrix of S_N(theta_i, xi_j) computed as a product of phase matrices."""
    n = np.arange(-N, N + 1, dtype=np.int64)
    left = e(frac_mul_many(thetas, np.abs(n) ** k))
    right = e(frac_mul_many(xis, n)).T
    return left @ right


@dataclass(frozen=True)
class PhaseVector:
    """theta (degree k coefficient) and xi = (xi_1, ..., xi_l), all reduced mod 1."""

    theta: float
    xi: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % 1.0)
        object.__setattr__(self, "xi", tuple(float(x) % 1.0 for x in self.xi))


def weyl_sum(phase, N, k):
    """sum_{n=1}^N e(theta n^k + xi_l n^l + ... + xi_1 n)."""
    if N < 1:
        raise PreconditionError("N must be >= 1")
    if len(phase.xi) >= k:
        raise PreconditionError("lower-order phases must have degree < k")
    n = np.arange(1, N + 1, dtype=np.int64)
    ph = frac_mul(phase.theta, n**k)
    for j, x in enumerate(phase.xi, start=1):
        ph = ph + frac_mul(x, n**j)
    return complex(np.sum(e(ph)))


# ---------------------------------------------------------------- Gauss sums

@dataclass(frozen=True)
class GaussSum:
    q: int
    a: int
    b: int
    k: int
    value: complex


def _check_unit(q, a):
    if q < 1:
        raise PreconditionError("q must be >= 1")
    if gcd(a, q) != 1:
        raise PreconditionError(f"gcd(a, q) must be 1, got a={a}, q={q}")


def _roots(q):
    return e(np.arange(q) / q)


def gauss_value(q, a, b, k):
    _check_unit(q, a)
    x = np.arange(q, dtype=object)
    res = np.array([(a * pow(int(t), k, q) + b * int(t)) % q for t in x], dtype=np.int64)
    return complex(_roots(q)[res].sum() / q)


def gauss_sum(q, a, b, k):
    """G(q; a, b) = q^-1 sum_{x in [0,q)} e_q(a x^k + b x) with x^k reduced mod q exactly."""
    return GaussSum(q, a % q, b % q, k, gauss_value(q, a, b, k))


@lru_cache(maxsize=256)
def gauss_table(q, k):
    """``(units, G)`` where ``G[i, b] = G(q; units[i], b)`` for b in [0, q)."""
    units = np.array([a for a in range(q) if gcd(a, q) == 1] or [0], dtype=np.int64)
    x = np.arange(q, dtype=np.int64)
    xk = np.array([pow(int(t), k, q) for t in x], dtype=np.int64)
    res = (units[:, None, None] * xk[None, None, :] + np.arange(q)[None, :, None] * x[None, None, :]) % q
    G = _roots(q)[res].sum(axis=-1) / q
    G.flags.writeable = False
    return units, G


def gauss_sum_multi(q, a, b_vec, k):
    """Product of G(q; a, b_j) over coordinates (representatives taken in [0, q))."""
    _check_unit(q, a)
    out = 1.0 + 0j
    for b in b_vec:
        out *= gauss_value(q, a, int(b), k)
    return out


def gauss_fourier_check(q, a, m, k):
    """``(sum_b e_q(-m b) G(q;a,b), e_q(a m^k))``; the two agree exactly in theory."""
    _check_unit(q, a)
    bs = np.arange(q)
    G = np.array([gauss_value(q, a, int(b), k) for b in bs])
    lhs = complex(np.sum(_roots(q)[(-m * bs) % q] * G))
    rhs = complex(_roots(q)[(a * pow(m, k, q)) % q])
    return lhs, rhs


def gauss_fourier_residual(q, k):
    """max over units a and residues m of |sum_b e_q(-m b) G(q;a,b) - e_q(a m^k)|."""
    units, G = gauss_table(q, k)
    b = np.arange(q)
    W = _roots(q)[(-np.outer(b, b)) % q]
    mk = np.array([pow(int(m), k, q) for m in b], dtype=np.int64)
    rhs = _roots(q)[(units[:, None] * mk[None, :]) % q]
    return float(np.abs(G @ W - rhs).max())


# ------------------------------------------------------- Vinogradov counting

def _power_sum_keys(tuples, k, N, s):
    """Encode the power sums (j = 1..k) of each row as one integer key.

    Uses a mixed-radix int64 code when it fits; otherwise falls back to
    Python-integer keys in an object array.
    """
    radix = [s * N**j + 1 for j in range(1, k + 1)]
    total = 1
    for r in radix:
        total *= r
    obj = total >= (1 << 63)
    t = tuples.astype(object) if obj else tuples
    key = np.zeros(len(tuples), dtype=object if obj else np.int64)
    mult = 1
    for j in range(1, k + 1):
        key = key + (t**j).sum(axis=1) * mult
        mult *= radix[j - 1]
    return key, obj


def _tuple_distribution(s, k, N, cap):
    """Unique power-sum keys of s-tuples in [1,N]^s with multiplicities."""
    if N**s > cap:
        raise CapExceededError(f"{N}^{s} tuples exceed the table cap {cap}", N**s)
    grids = np.meshgrid(*[np.arange(1, N + 1, dtype=np.int64)] * s, indexing="ij")
    tuples = np.stack([g.ravel() for g in grids], axis=1)
    key, _ = _power_sum_keys(tuples, k, N, s)
    return np.unique(key, return_counts=True)


def _encode_combined(s, k, N):
    radix = [s * N**j + 1 for j in range(1, k + 1)]
    total = 1
    for r in radix:
        total *= r
    return total < (1 << 63)


def vinogradov_count(s, k, N, cap=DEFAULT_TABLE_CAP):
    """J_{s,k}(N): pairs of s-tuples in [1,N] with equal power sums of degrees 1..k.

    The s-tuple power-sum distribution is built by joining the distributions
    of a ceil(s/2)- and a floor(s/2)-tuple (keys add because power sums add),
    then J is the sum of squared multiplicities.
    """
    if s < 1 or k < 1 or N < 1:
        raise PreconditionError("need s, k, N >= 1")
    if not _encode_combined(s, k, N):
        keys, counts = _tuple_distribution(s, k, N, cap)
        return int(sum(int(c) * int(c) for c in counts))
    s1, s2 = (s + 1) // 2, s // 2

    def dist(h):
        # keys use the s-tuple radix so that sums of half keys stay decodable
        grids = np.meshgrid(*[np.arange(1, N + 1, dtype=np.int64)] * h, indexing="ij")
        tuples = np.stack([g.ravel() for g in grids], axis=1)
        radix = [s * N**j + 1 for j in range(1, k + 1)]
        key = np.zeros(len(tuples), dtype=np.int64)
        mult = 1
        for j in range(1, k + 1):
            key += (tuples**j).sum(axis=1) * mult
            mult *= radix[j - 1]
        return np.unique(key, return_counts=True)

    if N**s1 > cap:
        raise CapExceededError(f"{N}^{s1} half tuples exceed the table cap {cap}", N**s1)
    k1, c1 = dist(s1)
    if s2 == 0:
        return int(np.sum(c1.astype(object) ** 2))
    k2, c2 = (k1, c1) if s2 == s1 else dist(s2)
    size = len(k1) * len(k2)
    if size > cap:
        raise CapExceededError(f"join table of {size} entries exceeds the cap {cap}", size)
    keys = (k1[:, None] + k2[None, :]).ravel()
    weights = (c1[:, None] * c2[None, :]).ravel()
    order = np.argsort(keys, kind="stable")
    keys, weights = keys[order], weights[order]
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    mult = np.add.reduceat(weights, starts)
    return int(np.sum(mult.astype(object) ** 2))


def multiset_pair_count(s, N):
    """Pairs of s-tuples that are permutations of each other (sum of squared orbit sizes)."""
    from math import factorial
    from itertools import combinations_with_replacement
    from collections import Counter

    total = 0
    for m in combinations_with_replacement(range(1, N + 1), s):
        orbit = factorial(s)
        for c in Counter(m).values():
            orbit //= factorial(c)
        total += orbit * orbit
    return total


def mean_value_identity_check(theta, s, l, k, N, cap=DEFAULT_TABLE_CAP):
    """``(LHS, RHS)`` for the exact identity behind the mean-value reduction.

    LHS groups s-tuples by their power sums of degrees 1..l and returns
    sum_h |a_h(theta)|^2.  RHS sums e(theta (f_k(n) - f_k(m))) over all
    matching pairs (n, m), enumerated pair by pair.
    """
    if not 1 <= l <= k - 1 or s < 1:
        raise PreconditionError("need 1 <= l <= k-1 and s >= 1")
    if N**s > cap:
        raise CapExceededError(f"{N}^{s} tuples exceed the cap {cap}", N**s)
    grids = np.meshgrid(*[np.arange(1, N + 1, dtype=np.int64)] * s, indexing="ij")
    tuples = np.stack([g.ravel() for g in grids], axis=1)
    key, _ = _power_sum_keys(tuples, l, N, s)
    fk = np.sum(tuples.astype(object) ** k, axis=1)
    fk_int = fk.astype(np.int64) if max(fk) < (1 << 62) else fk
    ph = e(frac_mul(theta, fk_int))
    _, inv = np.unique(key, return_inverse=True)
    inv = inv.ravel()
    a_re = np.bincount(inv, weights=ph.real)
    a_im = np.bincount(inv, weights=ph.imag)
    lhs = float(np.sum(a_re**2 + a_im**2))
    rhs = 0j
    order = np.argsort(inv, kind="stable")
    bounds = np.flatnonzero(np.r_[True, np.diff(inv[order]) != 0, True])
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        g = order[lo:hi]
        diff = (fk[g][:, None] - fk[g][None, :]).ravel()
        diff = diff.astype(np.int64) if fk_int.dtype != object else diff
        rhs += np.sum(e(frac_mul(theta, diff)))
    return complex(lhs), complex(rhs)


# ------------------------------------------------------- minor arcs, sup over xi

def minor_arc_sup_scan(N, k, theta_samples, xi_samples, dissection, pmap=serial_map, chunk=256):
    """max |S_N(theta, xi)| over sample pairs with theta on the minor arcs."""
    minor = [t for t in theta_samples if classify(t, dissection) is None]
    if not minor:
        raise PreconditionError("no theta sample lies on the minor arcs")
    xis = np.asarray(xi_samples, dtype=float)
    parts = [minor[i:i + chunk] for i in range(0, len(minor), chunk)]
    maxima = pmap(lambda th: float(np.abs(s_N_grid(th, xis, N, k)).max()), parts)
    return max(maxima)


def boundary_probes(dissection, q_limit, offsets=(1.01, 1.5, 2.0, 3.0)):
    """theta values just outside the major arcs of denominator <= q_limit (reduced mod 1)."""
    out = []
    for a, q in zip(dissection.a, dissection.q):
        if q > q_limit:
            continue
        r = 1.0 / (dissection.scale * int(q))
        c = int(a) / int(q)
        for f in offsets:
            out.extend([(c - f * r) % 1.0, (c + f * r) % 1.0])
    return sorted(set(out))


def minor_arc_sweep(k, Ns, n_theta=256, n_xi=64, seed=0, q_limit=6, pmap=serial_map):
    """Rows ``(N, sup)`` of sampled minor-arc suprema and the fitted log-log slope.

    Sampling: seeded uniform theta plus probes just outside the arcs of
    small denominator, where |S_N| is largest; xi runs over a uniform grid.
    """
    from circle_lab.arcs import dissect
    from circle_lab.rng import SplitMix64

    rows = []
    for N in Ns:
        rng = SplitMix64(seed ^ (N * 0x9E3779B1))
        d = dissect(N, k)
        thetas = list(rng.uniform(n_theta)) + boundary_probes(d, q_limit)
        xis = np.arange(n_xi) / n_xi
        rows.append((N, minor_arc_sup_scan(N, k, thetas, xis, d, pmap)))
    slope = loglog_slope([r[0] for r in rows], [r[1] for r in rows])
    return rows, slope


def loglog_slope(x, y):
    """Least-squares slope of log y against log x."""
    x, y = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(x, y, 1)[0])


def _coefficients(thetas, N, k):
    n = np.arange(-N, N + 1, dtype=np.int64)
    return e(frac_mul_many(thetas, np.abs(n) ** k)), n


def _eval_at(coef, n, xi):
    """S at per-row xi values: coef (T, 2N+1), xi (T, m) -> (T, m), by Horner in z = e(xi)."""
    z = np.exp(1j * TAU * xi)
    acc = np.zeros_like(z)
    for j in range(coef.shape[1] - 1, -1, -1):
        acc = acc * z + coef[:, j, None]
    return acc * z ** float(n[0])


def sup_over_xi(thetas, N, k, grid=256, refine_top=3, iterations=14):
    """Lower bound for sup_xi |S_N(theta, xi)| for each theta.

    A uniform xi grid (at least 2(2N+1) points, at least ``grid``) is
    evaluated by FFT; the best ``refine_top`` grid points are then refined
    by golden-section search on the neighbouring cells.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    coef, n = _coefficients(thetas, N, k)
    M = max(grid, 1 << int(np.ceil(np.log2(2 * (2 * N + 1)))))
    buf = np.zeros((len(thetas), M), dtype=complex)
    np.add.at(buf, (slice(None), n % M), coef)
    vals = np.abs(np.fft.ifft(buf, axis=1) * M)  # vals[:, j] = |S(theta, j/M)|
    best = vals.max(axis=1)
    if refine_top <= 0 or N == 0:
        return best
    top = np.argsort(-vals, axis=1)[:, :refine_top]
    g = (np.sqrt(5) - 1) / 2
    lo, hi = (top - 1) / M, (top + 1) / M
    for _ in range(iterations):
        x1 = hi - g * (hi - lo)
        x2 = lo + g * (hi - lo)
        f1 = np.abs(_eval_at(coef, n, x1))
        f2 = np.abs(_eval_at(coef, n, x2))
        move_lo = f1 < f2
        lo = np.where(move_lo, x1, lo)
        hi = np.where(move_lo, hi, x2)
    fin = np.abs(_eval_at(coef, n, (lo + hi) / 2)).max(axis=1)
    return np.maximum(best, fin)


def theta_grid(M):
    return np.arange(M) / M


def _region_mask(thetas, dissection, region):
    if region == "full":
        return np.ones(len(thetas), dtype=bool)
    if region == "minor":
        return np.array([classify(t, dissection) is None for t in thetas])
    raise ValueError(f"unknown region {region!r}")


def mean_value_integral_estimate(r, k, N, dissection=None, grid_resolution=None, region="minor",
                                 xi_mode="sup", xi_grid=256, pmap=serial_map, chunk=512):
    """Riemann estimate of the integral over theta of (sup_xi |S_N(theta, xi)|)^r.

    ``region="full"`` integrates over the whole circle (test hook).  With
    ``xi_mode="integrate"`` the sup is replaced by the mean over an exact
    xi grid, so r = 2 on the full circle returns 2N+1 by orthogonality.
    The sup variant is approximate and biased low.
    """
    if r < 2:
        raise PreconditionError("r must be >= 2")
    arc_scale = 8 * k * N ** (k - 1)
    if grid_resolution is None:
        grid_resolution = 2 * arc_scale
    if region == "minor":
        if dissection is None:
            from circle_lab.arcs import dissect
            dissection = dissect(N, k)
        if grid_resolution < arc_scale:
            raise PreconditionError(f"theta grid {grid_resolution} is coarser than the arc scale {arc_scale}")
    thetas = theta_grid(grid_resolution)
    thetas = thetas[_region_mask(thetas, dissection, region)]
    if len(thetas) == 0:
        return 0.0
    parts = [thetas[i:i + chunk] for i in range(0, len(thetas), chunk)]
    if xi_mode == "sup":
        vals = pmap(lambda th: float(np.sum(sup_over_xi(th, N, k, xi_grid) ** r)), parts)
    elif xi_mode == "integrate":
        M = max(xi_grid, 2 * N + 1)
        xis = np.arange(M) / M
        vals = pmap(lambda th: float(np.sum(np.mean(np.abs(s_N_grid(th, xis, N, k)) ** r, axis=1))), parts)
    else:
        raise ValueError(f"unknown xi_mode {xi_mode!r}")
    return float(sum(vals)) / grid_resolution
