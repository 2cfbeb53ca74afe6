"""Closed-form exponents and thresholds for the k-spherical maximal problem.

Everything here is exact rational arithmetic via ``fractions.Fraction`` so
tables can be compared for equality rather than within a tolerance.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import floor

from circle_lab.errors import PreconditionError


@dataclass(frozen=True)
class FormParams:
    """The diagonal form |x_1|^k + ... + |x_d|^k."""

    k: int
    d: int

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 2:
            raise PreconditionError(f"degree k must be an integer >= 2, got {self.k!r}")
        if not isinstance(self.d, int) or self.d < 1:
            raise PreconditionError(f"dimension d must be an integer >= 1, got {self.d!r}")

    @property
    def scale_exponent(self):
        """Exponent of lambda in the average normalisation, 1 - d/k."""
        return 1 - Fraction(self.d, self.k)


def _require_k3(k):
    if k < 3:
        raise PreconditionError(f"k must be >= 3 (the j-range 2..k-1 is empty), got {k}")


def _saving(k, j):
    return Fraction(k * j - min(2**j + 2, j * j + j), k - j + 1)


def d0_with_index(k):
    """Return ``(d0(k), l0(k))``; ties in the maximisation go to the smallest j."""
    _require_k3(k)
    best_j, best = 2, _saving(k, 2)
    for j in range(3, k):
        s = _saving(k, j)
        if s > best:
            best_j, best = j, s
    return k * k - best, best_j


def d0(k):
    return d0_with_index(k)[0]


def l0(k):
    return d0_with_index(k)[1]


def d0_star(k):
    return 1 + floor(d0(k))


def d1(k):
    """Dimension threshold used for the prime-coordinate variant (exposed as a constant only)."""
    _require_k3(k)
    return 13 if k == 3 else k * k + k + 3


def tau(k):
    if k < 2:
        raise PreconditionError("k must be >= 2")
    return max(Fraction(2, 2**k), Fraction(1, k * k - k))


@dataclass(frozen=True)
class Delta0:
    """delta_0(d, k) together with its regime.

    ``regime`` is one of ``"below"`` (d < d0, value <= 0), ``"interpolated"``
    (d0 <= d <= k^2+k) or ``"large"`` (d > k^2+k).
    """

    value: Fraction
    regime: str

    @property
    def positive(self):
        return self.value > 0


def delta0_info(params):
    k, d = params.k, params.d
    d_0 = d0(k)
    top = k * k + k
    if d > top:
        return Delta0((1 + (d - top) * tau(k)) / k, "large")
    value = (d - d_0) / (top - d_0) / k
    return Delta0(value, "below" if d < d_0 else "interpolated")


def delta0(params):
    return delta0_info(params).value


def p0(params):
    k, d = params.k, params.d
    if d <= k:
        raise PreconditionError(f"p0 needs d > k, got d={d}, k={k}")
    dl = delta0(params)
    if 1 + 2 * dl <= 0:
        raise PreconditionError(f"p0 is undefined when 1 + 2 delta0 <= 0 (d={d}, k={k})")
    return max(Fraction(d, d - k), 1 + 1 / (1 + 2 * dl))


def r1(k, l):
    _require_k3(k)
    if not 2 <= l <= k - 1:
        raise PreconditionError(f"l must lie in [2, k-1], got l={l}, k={k}")
    return k * k - _saving(k, l)


def delta_r(r, k, l):
    """The linear interpolation delta(r) with delta(r1(k,l)) = 0 and delta(k^2+k) = 1."""
    lo = r1(k, l)
    return (Fraction(r) - lo) / (k * k + k - lo)


@dataclass(frozen=True)
class Alpha:
    value: Fraction
    positive: bool


def alpha_p(p, delta):
    p, delta = Fraction(p), Fraction(delta)
    if not 1 < p <= 2:
        raise PreconditionError(f"p must lie in (1, 2], got {p}")
    if delta < 0:
        raise PreconditionError(f"delta must be >= 0, got {delta}")
    v = 2 * (1 + delta) * (1 - 1 / p) - 1
    return Alpha(v, v > 0)


def gamma(params):
    return min(Fraction(params.d, params.k) - 2, Fraction(1, 2))


def beta_p(p, params):
    """Open-form decay exponent 2*gamma*(p - p1) / (k p (2 - p1)) with p1 = d/(d-k)."""
    k, d = params.k, params.d
    if d <= k:
        raise PreconditionError("beta_p needs d > k")
    p = Fraction(p)
    p1 = Fraction(d, d - k)
    return 2 * gamma(params) * (p - p1) / (k * p * (2 - p1))


@dataclass(frozen=True)
class ExponentBudget:
    params: FormParams
    d0: Fraction
    d0_star: int
    l0: int
    tau: Fraction
    delta0: Fraction
    delta0_regime: str
    p0: Fraction | None
    gamma: Fraction

    def alpha_p(self, p):
        return alpha_p(p, max(self.delta0, Fraction(0)))

    def beta_p(self, p):
        return beta_p(p, self.params)


def exponent_budget(params):
    k = params.k
    d_0, l_0 = d0_with_index(k)
    info = delta0_info(params)
    return ExponentBudget(
        params=params,
        d0=d_0,
        d0_star=1 + floor(d_0),
        l0=l_0,
        tau=tau(k),
        delta0=info.value,
        delta0_regime=info.regime,
        p0=p0(params) if params.d > k and 1 + 2 * info.value > 0 else None,
        gamma=gamma(params),
    )


def table1(ks=range(3, 11)):
    """Rows ``(k, d0, d0_star, l0)`` for the tabulated degrees."""
    rows = []
    for k in ks:
        v, j = d0_with_index(k)
        rows.append((k, v, 1 + floor(v), j))
    return rows
