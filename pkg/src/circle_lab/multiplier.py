"""The discrete multiplier, its main-term approximation and the error field.

    a_hat(lambda, xi) = lambda^(1-d/k) sum_{f(x)=lambda} e(x . xi)

is approximated by a sum over q <= q_max and units a mod q of
e_q(-lambda a) times Gauss sums times the surface transform, localised near
b/q by the bump psi.  The difference is the error field.
"""

from dataclasses import dataclass
from itertools import product
from math import gcd

import numpy as np

from circle_lab._phase import e, frac_mul
from circle_lab.errors import PreconditionError
from circle_lab.expsum import gauss_table, loglog_slope, sup_over_xi
from circle_lab.lattice import DEFAULT_ENUM_CAP, enumerate_solutions, kth_root_floor
from circle_lab.oscillatory import QuadratureSpec, sigma0, sigma_hat, surface_transform
from circle_lab.parallel import serial_map

# ----------------------------------------------------------------- the bump


def _h(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def bump_phi(t):
    """Even smooth step: 1 on |t| <= 1/8, 0 on |t| >= 1/4."""
    s = np.clip((0.25 - np.abs(np.asarray(t, dtype=float))) / 0.125, 0.0, 1.0)
    hs, hc = _h(s), _h(1.0 - s)
    return hs / (hs + hc)


def bump_psi(u):
    """psi(u) = prod_j phi(u_j) over the last axis."""
    return np.prod(bump_phi(u), axis=-1)


def bump_support(t):
    """Integers b with phi(t - b) > 0; there are at most two."""
    return [b for b in dict.fromkeys((int(np.floor(t)), int(np.ceil(t)))) if abs(t - b) < 0.25]


# ---------------------------------------------------------------- a_hat


def _scale(lam, params):
    return float(lam) ** float(params.scale_exponent)


def half_phase_table(xis, lam_max, k):
    """F[s, b] = sum over vectors x with form value s of e(x . xi_b).

    ``xis`` has shape (B, h).  Built one coordinate at a time as a truncated
    product of sparse polynomials, with 2 cos(2 pi n xi) at degree n^k.
    """
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    B, h = xis.shape
    n_max = kth_root_floor(lam_max, k)
    out = np.zeros((B, lam_max + 1), dtype=complex)
    out[:, 0] = 1.0
    for j in range(h):
        new = out.copy()
        for n in range(1, n_max + 1):
            m = n**k
            c = 2.0 * np.cos(2.0 * np.pi * n * xis[:, j])
            new[:, m:] += c[:, None] * out[:, :lam_max + 1 - m]
        out = new
    return out


def a_hat_table(xis, lam_max, params):
    """Unnormalised sums over f(x) = lambda for all lambda <= lam_max, shape (B, lam_max+1)."""
    return half_phase_table(xis, lam_max, params.k)


def a_hat(lam, xi, params, method="auto", cap=DEFAULT_ENUM_CAP):
    """lambda^(1-d/k) sum_{f(x)=lambda} e(x . xi)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if len(xi) != params.d:
        raise PreconditionError("xi must have length d")
    if method == "auto":
        method = "direct" if params.d <= 4 else "factored"
    if method == "direct":
        pts = enumerate_solutions(params, lam, "full", cap).points
        ph = np.zeros(len(pts))
        for j in range(params.d):
            ph = ph + frac_mul(xi[j], pts[:, j])
        total = complex(np.sum(e(ph)))
    elif method == "factored":
        h1 = (params.d + 1) // 2
        F1 = half_phase_table(xi[None, :h1], lam, params.k)[0]
        F2 = half_phase_table(xi[None, h1:], lam, params.k)[0] if params.d > h1 else np.eye(1, lam + 1)[0]
        total = complex(np.dot(F1, F2[::-1]))
    else:
        raise ValueError(f"unknown method {method!r}")
    return _scale(lam, params) * total


# ------------------------------------------------------------ main term


def _unit_roots(q):
    return e(np.arange(q) / q)


def _candidates(q, xi):
    """Per coordinate, the integers b with phi(q xi_j - b) > 0, or None if some coordinate has none."""
    out = []
    for t in q * xi:
        bs = bump_support(t)
        if not bs:
            return None
        out.append(bs)
    return out


def _q_weights(q, xi, lam, params):
    """Per-unit coordinate weights for the surface integral at modulus q.

    Coordinate j carries sum_b phi(q xi_j - b) [G(q;a,b) e(N eta y) + G(q;a,-b) e(-N eta y)]
    with eta = xi_j - b/q, which is the w- and b-sum folded into one factor.
    """
    cands = _candidates(q, xi)
    if cands is None:
        return None
    units, G = gauss_table(q, params.k)
    N = float(lam) ** (1 / params.k)
    R = 2 * max(len(c) for c in cands)
    freqs = np.zeros((len(units), params.d, R))
    coefs = np.zeros((len(units), params.d, R), dtype=complex)
    for j, bs in enumerate(cands):
        for i, b in enumerate(bs):
            eta = xi[j] - b / q
            p = float(bump_phi(q * xi[j] - b))
            freqs[:, j, 2 * i] = N * eta
            freqs[:, j, 2 * i + 1] = -N * eta
            coefs[:, j, 2 * i] = p * G[:, b % q]
            coefs[:, j, 2 * i + 1] = p * G[:, (-b) % q]
    return units, freqs, coefs


def default_q_max(lam, params):
    return max(1, kth_root_floor(lam, params.k))


def main_term(lam, xi, q_max, params, spec=QuadratureSpec(), method="collapsed", sigma_method="coarea"):
    """Truncated main term of the approximation formula at (lambda, xi)."""
    if params.d <= params.k:
        raise PreconditionError(f"main term needs d > k, got d={params.d}, k={params.k}")
    if q_max is None:
        q_max = default_q_max(lam, params)
    if q_max < 1:
        raise PreconditionError("q_max must be >= 1")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    total = 0j
    for q in range(1, q_max + 1):
        if method == "collapsed":
            w = _q_weights(q, xi, lam, params)
            if w is None:
                continue
            units, freqs, coefs = w
            K = surface_transform(params.k, freqs, coefs)
        elif method == "literal":
            units, K = _literal_q(q, xi, lam, params, spec, sigma_method)
            if units is None:
                continue
        else:
            raise ValueError(f"unknown method {method!r}")
        total += complex(np.sum(_unit_roots(q)[(-lam * units) % q] * K))
    return total


def _literal_q(q, xi, lam, params, spec, sigma_method):
    """Sum over every (w, b) of G(q;a,wb) psi(q xi - b) sigma_hat(w(xi - b/q)), one unit a per entry."""
    cands = _candidates(q, xi)
    if cands is None:
        return None, None
    units, G = gauss_table(q, params.k)
    d = params.d
    terms = []
    for b in product(*cands):
        b = np.array(b)
        psi = float(bump_psi(q * xi - b))
        for w in product((1, -1), repeat=d):
            w = np.array(w)
            eta = w * (xi - b / q)
            g = np.prod(G[:, (w * b) % q], axis=1)
            terms.append((psi * g, eta))
    if sigma_method == "coarea":
        N = float(lam) ** (1 / params.k)
        fr = np.array([N * eta for _, eta in terms])[:, :, None]
        Ks = surface_transform(params.k, fr, np.ones_like(fr, dtype=complex))
    else:
        Ks = [sigma_hat(eta, lam, params, spec, sigma_method) for _, eta in terms]
    K = sum(c * s for (c, _), s in zip(terms, Ks))
    return units, K


# ------------------------------------------------------- singular series


@dataclass(frozen=True)
class SingularSeries:
    value: float
    imag: float


def singular_series_many(lams, q_max, params):
    """Complex truncated sums over q <= q_max of sum_a e_q(-lambda a) prod_j G(q;a,0)."""
    if params.d < 2 * params.k + 1:
        raise PreconditionError(f"singular series needs d >= 2k+1, got d={params.d}, k={params.k}")
    lams = np.asarray(lams, dtype=np.int64)
    out = np.zeros(len(lams), dtype=complex)
    for q in range(1, q_max + 1):
        units, G = gauss_table(q, params.k)
        term = G[:, 0] ** params.d
        out += _unit_roots(q)[(-lams[:, None] * units[None, :]) % q] @ term
    return out


def singular_series(lam, q_max, params):
    v = singular_series_many([lam], q_max, params)[0]
    return SingularSeries(float(v.real), float(v.imag))


def hardy_littlewood_ratios(table, lams, q_max):
    """R(lambda) lambda^(1-d/k) / (2^d S(lambda) sigma_hat(0)) for each lambda.

    The factor 2^d accounts for the 2^d orthants of the surface; the
    surface transform is normalised on the positive orthant.
    """
    params = table.params
    lams = np.asarray(lams, dtype=np.int64)
    S = singular_series_many(lams, q_max, params).real
    R = np.array([float(table.counts[l]) for l in lams])
    return R * lams.astype(float) ** float(params.scale_exponent) / (2**params.d * S * sigma0(params))


# --------------------------------------------------------- error field


@dataclass(frozen=True)
class MultiplierSample:
    lam: int
    xi: tuple
    a_hat: complex
    main: complex
    error: complex
    q_max: int


def error_field(lam, xi_samples, q_max, params, spec=QuadratureSpec(), pmap=serial_map):
    """Samples of a_hat, main term and their difference, plus summary statistics."""
    if q_max is None:
        q_max = default_q_max(lam, params)
    xis = np.atleast_2d(np.asarray(xi_samples, dtype=float))
    ah = a_hat_table(xis, lam, params)[:, lam] * _scale(lam, params)
    mains = pmap(lambda x: main_term(lam, x, q_max, params, spec), list(xis))
    samples = [MultiplierSample(lam, tuple(float(v) for v in x), complex(a), complex(m), complex(a) - complex(m), q_max)
               for x, a, m in zip(xis, ah, mains)]
    errs = np.array([abs(s.error) for s in samples])
    summary = {"max_abs_error": float(errs.max(initial=0.0)), "mean_abs_error": float(errs.mean()) if len(errs) else 0.0}
    return samples, summary


def sample_frequencies(count, d, seed, N, near_rational=0.75, q_sample=4):
    """Seeded xi samples in [0,1)^d.

    A fraction ``near_rational`` sits within about 1/N of a random b/q with
    q <= q_sample (clipped to the flat part of the bump); the rest are
    uniform.  Uniform samples alone almost never meet the bump's support
    in high dimension, where the main term vanishes identically.
    """
    from circle_lab.rng import SplitMix64

    rng = SplitMix64(seed)
    qs = rng.integers(1, q_sample + 1, count)
    base = np.floor(rng.uniform(count * d).reshape(count, d) * qs[:, None]) / qs[:, None]
    u = rng.uniform(count * d, -1.0, 1.0).reshape(count, d)
    lim = 1.0 / (8 * qs[:, None])
    near = base + np.clip(u / N, -lim, lim)
    unif = rng.uniform(count * d).reshape(count, d)
    pick = rng.uniform(count) < near_rational
    return np.where(pick[:, None], near, unif) % 1.0


@dataclass(frozen=True)
class DecayTable:
    rows: list  # (Lambda, max_abs_error, mean_abs_error, lambdas)
    slope: float


def _block_lambdas(Lam, count, seed):
    from circle_lab.rng import SplitMix64

    rng = SplitMix64(seed ^ (Lam * 0xD1B54A32D192ED03 & ((1 << 64) - 1)))
    return sorted(set(int(v) for v in rng.integers(Lam // 2, Lam, count)))


def dyadic_error_decay(lambda_list, sample_count, q_max, params, seed, lambdas_per_block=16,
                       spec=QuadratureSpec(), error_fn=None, pmap=serial_map):
    """Per dyadic block, the sampled max |error| and the fitted log-log slope.

    For each Lambda the xi samples share one seeded rational skeleton, with
    the perturbation scaled by Lambda^(-1/k); lambda runs over seeded values
    in [Lambda/2, Lambda).  ``error_fn(lam, xis, q_max)`` may replace the
    real error computation (used as a test double).
    """
    lambda_list = list(lambda_list)
    if any(b <= a for a, b in zip(lambda_list, lambda_list[1:])):
        raise PreconditionError("lambda_list must be increasing")
    if any(L & (L - 1) for L in lambda_list):
        raise PreconditionError("lambda_list must consist of powers of two")
    rows = []
    for Lam in lambda_list:
        N = Lam ** (1 / params.k)
        xis = sample_frequencies(sample_count, params.d, seed, N)
        lams = _block_lambdas(Lam, lambdas_per_block, seed)
        table = None if error_fn is not None else a_hat_table(xis, max(lams), params)
        maxima, means = [], []
        for lam in lams:
            qm = default_q_max(lam, params) if q_max is None else q_max
            if error_fn is not None:
                err = np.abs(np.asarray(error_fn(lam, xis, qm)))
            else:
                ah = table[:, lam] * _scale(lam, params)
                mains = np.array(pmap(lambda x: main_term(lam, x, qm, params, spec), list(xis)))
                err = np.abs(ah - mains)
            maxima.append(float(err.max()))
            means.append(float(err.mean()))
        rows.append((Lam, max(maxima), float(np.mean(means)), tuple(lams)))
    peaks = [r[1] for r in rows]
    if all(p == 0 for p in peaks):
        slope = 0.0
    elif min(peaks) <= 0:
        slope = float("nan")
    else:
        slope = loglog_slope([r[0] for r in rows], peaks)
    return DecayTable(rows, slope)


# ------------------------------------------------------- kernel sup bound


@dataclass(frozen=True)
class KernelSup:
    integral: float
    scaled: float | None  # N^(k-d) * integral


def kernel_sup_bound(region, N, params, grid=None, xi_grid=256, pmap=serial_map, chunk=512):
    """Riemann estimate of int_B sup_xi |F_N(theta; xi)| d theta.

    ``region`` is an ``ArcDissection`` (its minor arcs), ``"full"`` for the
    whole circle, or a list of (lo, hi) theta intervals.  The sup of the
    d-fold product is the d-th power of the one-dimensional sup.
    """
    from circle_lab.arcs import ArcDissection, classify

    k, d = params.k, params.d
    scale = None if N == 0 else float(N) ** (k - d)
    if isinstance(region, (list, tuple)) and len(region) == 0:
        return KernelSup(0.0, 0.0 if scale is not None else None)
    if N == 0:
        # S_0 = 1 identically
        if region == "full":
            length = 1.0
        elif isinstance(region, (list, tuple)):
            length = float(sum(hi - lo for lo, hi in region))
        else:
            raise PreconditionError("N = 0 has no arc dissection")
        return KernelSup(length, None)
    arc_scale = 8 * k * N ** (k - 1)
    if grid is None:
        grid = 2 * arc_scale
    if grid < arc_scale:
        raise PreconditionError(f"theta grid {grid} is coarser than the arc scale {arc_scale}")
    thetas = np.arange(grid) / grid
    if isinstance(region, ArcDissection):
        thetas = thetas[np.array([classify(t, region) is None for t in thetas])]
    elif region != "full":
        keep = np.zeros(len(thetas), dtype=bool)
        for lo, hi in region:
            keep |= (thetas >= lo) & (thetas < hi)
        thetas = thetas[keep]
    if len(thetas) == 0:
        return KernelSup(0.0, 0.0)
    parts = [thetas[i:i + chunk] for i in range(0, len(thetas), chunk)]
    sums = pmap(lambda th: float(np.sum(sup_over_xi(th, N, k, xi_grid) ** d)), parts)
    integral = float(sum(sums)) / grid
    return KernelSup(integral, scale * integral)
