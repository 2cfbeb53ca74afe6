"""Oscillatory integrals v_N, J_lambda and the surface-measure transform.

After the substitution t = N s, theta = u / lambda (N = lambda^(1/k)) one has

    v_N(theta, eta)  = N * v1(u, N eta),   v1(u, z) = int_0^1 e(u s^k + z s) ds
    J_lambda(eta)    = lambda^(d/k - 1) * K(N eta)
    K(zeta)          = int_R prod_j v1(u, zeta_j) e(-u) du

and K is also the Fourier transform of the surface measure
delta(sum y_j^k - 1) on the positive orthant, so sigma_hat_lambda(eta) =
K(N eta).  Two independent evaluators of K are provided:

* ``"theta"`` integrates over u directly on [0, U] and handles the slowly
  decaying tail analytically.  For |u| >= U each v1 splits as
  A(u, z) - e(u) C(u, z), where A is a convergent power series in
  z u^(-1/k) and C a rapidly convergent Laplace-type integral.  Expanding
  the product in powers of e(u) lets every term be rotated onto a ray in
  the complex plane where it decays exponentially.
* ``"coarea"`` integrates over the surface itself, peeling off one
  coordinate at a time, with each partial integral represented on a
  Chebyshev grid.  It accepts per-coordinate weights that are sums of
  exponentials, which is what the main term of the multiplier needs.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, gamma

import numpy as np
from numpy.polynomial import chebyshev as cheb

from circle_lab._phase import TAU, e
from circle_lab.errors import CapExceededError, PreconditionError


@dataclass(frozen=True)
class QuadratureSpec:
    order: int = 12
    phase_budget: float = 1 / 8
    tail_tolerance: float = 1e-9
    max_panels: int = 4_000_000

    def __post_init__(self):
        if self.order < 4:
            raise PreconditionError("Gauss-Legendre order must be >= 4")
        if not 0 < self.phase_budget <= 0.25:
            raise PreconditionError("phase_budget must lie in (0, 1/4]")
        if not self.tail_tolerance > 0:
            raise PreconditionError("tail_tolerance must be positive")

    @classmethod
    def from_mapping(cls, m):
        kw = {}
        for key, cast in (("order", int), ("phase_budget", float), ("tail_tolerance", float), ("max_panels", int)):
            if key in m:
                kw[key] = cast(m[key])
        return cls(**kw)


@lru_cache(maxsize=32)
def _gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


def _panel_nodes(edges, order):
    x, w = _gauss_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    return ((a + b) / 2 + (b - a) / 2 * x).ravel(), ((b - a) / 2 * w).ravel()


def _phase_inverse(y, c_k, c_1, k, hi):
    """Solve c_k t^k + c_1 t = y for t in [0, hi] by bisection (vectorised)."""
    lo_t = np.zeros_like(y)
    hi_t = np.full_like(y, float(hi))
    for _ in range(64):
        mid = (lo_t + hi_t) / 2
        low = c_k * mid**k + c_1 * mid < y
        lo_t = np.where(low, mid, lo_t)
        hi_t = np.where(low, hi_t, mid)
    return (lo_t + hi_t) / 2


def v_N(theta, xi, N, k, spec=QuadratureSpec(), chunk=200_000):
    """int_0^N e(theta t^k + xi t) dt with panels of bounded phase change."""
    if not N > 0:
        raise PreconditionError("N must be positive")
    ct, cx = abs(float(theta)), abs(float(xi))
    total = ct * N**k + cx * N
    panels = max(1, int(np.ceil(total / spec.phase_budget)))
    if panels > spec.max_panels:
        raise CapExceededError(
            f"v_N needs {panels} panels (phase {total:.3g} turns) over the cap {spec.max_panels}", panels)
    y = np.arange(1, panels) * (total / panels)
    inner = _phase_inverse(y, ct, cx, k, N) if panels > 1 else np.zeros(0)
    edges = np.concatenate([[0.0], inner, [float(N)]])
    acc = 0j
    for i in range(0, panels, chunk):
        t, w = _panel_nodes(edges[i:i + chunk + 1], spec.order)
        acc += np.sum(w * e(float(theta) * t**k + float(xi) * t))
    return complex(acc)


def check_vN_bound2(theta, xi, N, k, spec=QuadratureSpec()):
    """|v_N| (1 + N|xi|)^(1/2) / N."""
    return abs(v_N(theta, xi, N, k, spec)) * (1 + N * abs(xi)) ** 0.5 / N


def vN_bound_ratio(theta, xi, N, k, spec=QuadratureSpec()):
    """|v_N| (1 + N|xi| + N^k|theta|)^(1/k) / N."""
    return abs(v_N(theta, xi, N, k, spec)) * (1 + N * abs(xi) + N**k * abs(theta)) ** (1 / k) / N


def vN_bound_sweep(k, Ns, samples, seed, spec=QuadratureSpec(), which="basic"):
    """Maximum bound ratio per N over seeded random (theta, xi) at natural scale.

    theta is drawn as u / N^k and xi as z / N with u, z uniform in [-50, 50],
    so the integrand always has a moderate number of oscillations.
    """
    from circle_lab.rng import SplitMix64

    fn = vN_bound_ratio if which == "basic" else check_vN_bound2
    rows = []
    for N in Ns:
        rng = SplitMix64(seed + N)
        u = rng.uniform(samples, -50, 50)
        z = rng.uniform(samples, -50, 50)
        rows.append((N, max(fn(a / N**k, b / N, N, k, spec) for a, b in zip(u, z))))
    return rows


# --------------------------------------------------------------- theta route

class _Ray:
    """Series and Laguerre data for the split v1 = A - e(u) C at fixed k."""

    TERMS = 80
    LAG = 60

    def __init__(self, k):
        self.k = k
        m = np.arange(self.TERMS)
        self.coef = np.array([(2j * np.pi) ** i / factorial(i) * gamma((i + 1) / k) / (k * (2 * np.pi) ** ((i + 1) / k))
                              for i in m])
        self.c = np.exp(1j * np.pi / (2 * k))
        self.lx, self.lw = np.polynomial.laguerre.laggauss(self.LAG)

    def A(self, u, z):
        w = self.c * u ** (-1 / self.k)
        x = z * w
        acc = np.zeros_like(x, dtype=complex)
        for cf in self.coef[::-1]:
            acc = acc * x + cf
        return w * acc

    def C(self, u, z):
        u = np.asarray(u, dtype=complex)[..., None]
        y = self.lx / TAU
        base = 1 + 1j * y / u
        s = base ** (1 / self.k)
        sp = (1j / (self.k * u)) * base ** (1 / self.k - 1)
        return np.sum(self.lw / TAU * e_complex(z * s) * sp, axis=-1)


def e_complex(x):
    return np.exp(1j * TAU * x)


@lru_cache(maxsize=16)
def _ray(k):
    return _Ray(k)


def _v1_on_grid(us, z, k, budget, chunk=400):
    """v1(u, z) for real u in [0, max(us)] on a common s-grid."""
    U = float(us.max()) if len(us) else 0.0
    ns = int(np.ceil((k * U + abs(z)) / budget)) + 1
    s, w = _panel_nodes(np.linspace(0.0, 1.0, ns + 1), 12)
    sk = s**k
    lin = e(z * s) * w
    out = np.empty(len(us), dtype=complex)
    for i in range(0, len(us), chunk):
        u = us[i:i + chunk]
        out[i:i + chunk] = np.exp(1j * TAU * (u[:, None] * sk[None, :])) @ lin
    return out


def _poly_in_e(As, Cs):
    """Coefficients P_m of prod_j (A_j - z C_j) as a polynomial in z."""
    P = [np.ones_like(As[0])]
    for a, c in zip(As, Cs):
        new = [np.zeros_like(As[0]) for _ in range(len(P) + 1)]
        for m, p in enumerate(P):
            new[m] = new[m] + p * a
            new[m + 1] = new[m + 1] - p * c
        P = new
    return P


def _half_line(zetas, k, spec, work_cap=4e8):
    """int_0^inf prod_j v1(u, zeta_j) e(-u) du."""
    ray = _ray(k)
    d = len(zetas)
    zmax = max((abs(z) for z in zetas), default=0.0)
    U = max(4.0, (zmax / 0.75) ** k)
    budget = spec.phase_budget
    npan = int(np.ceil(U * max(1, d) / budget))
    ns = (k * U + zmax) / (budget / 2) * 12
    if npan * spec.order * ns * len(set(zetas)) > work_cap:
        raise CapExceededError("theta-route quadrature too large for this frequency; use method='coarea'")
    us, w = _panel_nodes(np.linspace(0.0, U, npan + 1), spec.order)
    V = np.ones(len(us), dtype=complex)
    cache = {}
    for z in zetas:
        if z not in cache:
            cache[z] = _v1_on_grid(us, z, k, budget / 2)
        V *= cache[z]
    direct = np.sum(w * V * e(-us))

    # m = 1 term of the expansion has no net oscillation: integrate along
    # the real axis in t = log(u/U); it decays like u^(-(d-1)/k).
    T = min(400.0, max(20.0, k / max(d - 1, 1) * np.log(1 / spec.tail_tolerance) + 10))
    t, tw = _panel_nodes(np.linspace(0.0, T, int(2 * T) + 1), spec.order)
    u = U * np.exp(t)
    P = _poly_in_e([ray.A(u, z) for z in zetas], [ray.C(u, z) for z in zetas])
    tail = np.sum(tw * u * P[1])
    # terms with net phase e((m-1)u) are rotated onto u = U -/+ i y
    for m in range(d + 1):
        if m == 1:
            continue
        sgn = -1 if m == 0 else 1
        rate = abs(m - 1)
        y, wy = ray.lx / (TAU * rate), ray.lw / (TAU * rate)
        uc = U + sgn * 1j * y
        P = _poly_in_e([ray.A(uc, z) for z in zetas], [ray.C(uc, z) for z in zetas])
        tail += sgn * 1j * e((m - 1) * U) * np.sum(wy * P[m])
    return complex(direct + tail)


def k_theta(zetas, k, spec=QuadratureSpec()):
    """K(zeta) by integrating over u: K = I(zeta) + conj(I(-zeta)) with I over u >= 0."""
    z = tuple(float(x) for x in zetas)
    pos = _half_line(z, k, spec)
    if all(x == 0 for x in z):
        return complex(2 * pos.real)
    neg = _half_line(tuple(-x for x in z), k, spec)
    return pos + np.conj(neg)


# -------------------------------------------------------------- coarea route

@lru_cache(maxsize=32)
def _coarea_tables(k, n):
    xc = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    rho = (xc + 1) / 2
    gl, gw = _gauss_legendre(n)
    half = 2.0 ** (-1.0 / k)
    a = half * (gl + 1) / 2
    w = half * gw / 2
    b = (1 - a**k) ** (1 / k)
    V = cheb.chebvander(2 * rho - 1, n - 1)
    Vinv = np.linalg.inv(V)
    Ya = rho[:, None] * a[None, :]
    Yb = rho[:, None] * b[None, :]
    Ea = cheb.chebvander(2 * Ya.ravel() - 1, n - 1) @ Vinv
    Eb = cheb.chebvander(2 * Yb.ravel() - 1, n - 1) @ Vinv
    end = cheb.chebvander(np.array([1.0]), n - 1) @ Vinv
    return rho, a, w, Ya, Yb, Ea, Eb, end


def surface_transform(k, freqs, coefs, nodes=None):
    """Integrate prod_j m_j(y_j) against the surface measure delta(sum y^k - 1) on [0,1]^d.

    Each weight is ``m_j(y) = sum_r coefs[b, j, r] * e(freqs[b, j, r] * y)``;
    the leading axis ``b`` is a batch.  Returns an array of length B.

    Write h_m(rho) for the integral over the first m coordinates restricted
    to y_1^k + ... + y_m^k = rho^k (suitably normalised).  Splitting the
    next coordinate at 2^(-1/k) keeps both pieces of the recursion free of
    endpoint singularities, so Gauss-Legendre converges spectrally.
    """
    freqs = np.asarray(freqs, dtype=float)
    coefs = np.asarray(coefs, dtype=complex)
    B, d, _ = freqs.shape
    if nodes is None:
        fmax = float(np.abs(freqs).max(initial=0.0))
        nodes = int(min(160, max(32, 24 + 8 * np.ceil(fmax))))
    rho, a, w, Ya, Yb, Ea, Eb, end = _coarea_tables(k, nodes)
    n = nodes

    def weight(j, Y):
        return np.einsum("br,pbr->pb", coefs[:, j, :], e(Y.ravel()[:, None, None] * freqs[None, :, j, :]))

    h = weight(0, rho) / k
    for m in range(1, d):
        Ma = weight(m, Ya).reshape(n, n, B)
        Mb = weight(m, Yb).reshape(n, n, B)
        hb = (Eb @ h).reshape(n, n, B)
        ha = (Ea @ h).reshape(n, n, B)
        w1 = (w * (1 - a**k) ** (m / k - 1))[None, :, None]
        w2 = (w * a ** (m - 1) * (1 - a**k) ** (1 / k - 1))[None, :, None]
        h = (w1 * hb * Ma + w2 * ha * Mb).sum(axis=1)
    return (end @ h)[0]


def k_coarea(zetas, k, nodes=None):
    z = np.asarray(zetas, dtype=float)
    return complex(surface_transform(k, z[None, :, None], np.ones((1, len(z), 1)), nodes)[0])


# ------------------------------------------------------------------ public

def sigma0(params):
    """Total mass of the normalised surface measure, Gamma(1+1/k)^d / Gamma(d/k)."""
    k, d = params.k, params.d
    return gamma(1 + 1 / k) ** d / gamma(d / k)


def _check(params, lam):
    if params.d <= params.k:
        raise PreconditionError(f"need d > k for an integrable theta tail, got d={params.d}, k={params.k}")
    if not lam >= 1:
        raise PreconditionError("lambda must be >= 1")


def sigma_hat(eta, lam, params, spec=QuadratureSpec(), method="theta"):
    """Fourier transform of the normalised surface measure, lambda^(1-d/k) J_lambda(eta)."""
    _check(params, lam)
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if len(eta) != params.d:
        raise PreconditionError("eta must have length d")
    zeta = float(lam) ** (1 / params.k) * eta
    if method == "theta":
        return k_theta(zeta, params.k, spec)
    if method == "coarea":
        return k_coarea(zeta, params.k)
    raise ValueError(f"unknown method {method!r}")


def j_lambda(eta, lam, params, spec=QuadratureSpec(), method="theta"):
    """J_lambda(eta) = int_R prod_j v_N(theta, eta_j) e(-lambda theta) d theta, N = lambda^(1/k)."""
    return float(lam) ** (params.d / params.k - 1) * sigma_hat(eta, lam, params, spec, method)
