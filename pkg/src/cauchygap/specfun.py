"""Special functions used throughout the package.

Log-gamma and the Gauss-Legendre rule come from the standard library and
numpy.  The hypergeometric series, the Bessel function of real order and the
Cauchy orthonormal polynomials are implemented here because the callers
need control over the argument transformations and over the small-argument
behaviour.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre

from .errors import DomainError, NumericError
from .params import EnsembleParams

BESSEL_CROSSOVER = 15.0
HYP_MAX_TERMS = 2_000_000


def ln_gamma(x: float) -> float:
    if not x > 0:
        raise DomainError(f"ln_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def _is_nonpositive_int(c: float) -> bool:
    return c <= 0 and float(c).is_integer()


def _hyp_series(a: float, b: float, c: float, z: float) -> float:
    total, term = 1.0, 1.0
    for k in range(HYP_MAX_TERMS):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
        if term == 0.0:
            return total
        ratio = abs((a + k + 1) * (b + k + 1) / ((c + k + 1) * (k + 2)) * z)
        if abs(term) <= 1e-17 * abs(total) and ratio < 1.0:
            return total
    raise NumericError(f"2F1({a},{b};{c};{z}) did not converge in {HYP_MAX_TERMS} terms")


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function for real parameters and z <= 0.

    For z < -1/2 the Pfaff transformation to w = z/(z-1) in (1/3, 1) is used.
    Of the two Pfaff forms the one that terminates (or whose upper
    parameter is smaller) is taken.
    """
    if _is_nonpositive_int(c):
        raise DomainError(f"c must not be a non-positive integer, got {c}")
    if z > 0:
        raise DomainError(f"gauss_2f1 is only implemented for z <= 0, got {z}")
    if z == 0.0:
        return 1.0
    if z >= -0.5:
        return _hyp_series(a, b, c, z)
    w = z / (z - 1.0)
    # (1-z)^-a F(a, c-b; c; w)  or  (1-z)^-b F(c-a, b; c; w)
    first = (a, c - b)
    second = (c - a, b)
    def cost(pair):
        if any(_is_nonpositive_int(p) for p in pair):
            return -1.0
        return abs(pair[0] * pair[1])
    if cost(first) <= cost(second):
        return (1.0 - z) ** (-a) * _hyp_series(first[0], first[1], c, w)
    return (1.0 - z) ** (-b) * _hyp_series(second[0], second[1], c, w)


def bessel_j_reduced(nu: float, x):
    """(x/2)^(-nu) J_nu(x) by the ascending series; entire in x."""
    x = np.asarray(x, dtype=float)
    h = 0.25 * x * x
    term = np.full_like(x, 1.0 / math.gamma(nu + 1.0))
    total = term.copy()
    kmax = int(30 + 2.0 * float(np.max(np.abs(x), initial=0.0)))
    for k in range(1, kmax):
        term = -term * h / (k * (k + nu))
        total += term
    return total


def _hankel_pq(nu: float, x: np.ndarray):
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    best = np.full_like(x, np.inf)
    live = np.ones(x.shape, dtype=bool)
    for k in range(1, 80):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(term)
        # asymptotic series: stop each point at its smallest term
        live &= mag < best
        best = np.where(live, mag, best)
        contrib = np.where(live, term, 0.0)
        if k % 2 == 1:
            q += contrib * (-1) ** ((k - 1) // 2)
        else:
            p += contrib * (-1) ** (k // 2)
        if not live.any():
            break
    return p, q


def _bessel_large(nu: float, x: np.ndarray) -> np.ndarray:
    nu0 = nu - math.floor(nu + 0.5)
    def hankel(order):
        p, q = _hankel_pq(order, x)
        chi = x - (0.5 * order + 0.25) * math.pi
        return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))
    lo, hi = hankel(nu0), hankel(nu0 + 1.0)
    order = nu0 + 1.0
    if abs(nu - nu0) < 1e-12:
        return lo
    while order < nu - 1e-12:
        lo, hi = hi, 2.0 * order / x * hi - lo
        order += 1.0
    return hi


def bessel_j(nu: float, x):
    """Bessel function of the first kind J_nu(x) for nu >= -1/2, x >= 0.

    The ascending series is used below x = 15 (or when nu >= x); above that
    the Hankel expansion at the fractional order followed by upward
    recurrence, which is stable for nu < x.
    """
    if nu < -0.5:
        raise DomainError(f"bessel_j needs nu >= -1/2, got {nu}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("bessel_j needs x >= 0")
    out = np.empty_like(xa)
    small = (xa < BESSEL_CROSSOVER) | (nu >= xa)
    if small.any():
        xs = xa[small]
        with np.errstate(divide="ignore"):
            out[small] = (0.5 * xs) ** nu * bessel_j_reduced(nu, xs)
    if (~small).any():
        out[~small] = _bessel_large(nu, xa[~small])
    return out if out.ndim else float(out)


def root_weighted_bessel_j(nu: float, x):
    """(x/2)^(1/2) J_nu(x), finite at x = 0 even for nu = -1/2."""
    xa = np.asarray(x, dtype=float)
    out = np.empty_like(xa)
    small = xa < BESSEL_CROSSOVER
    if small.any():
        xs = xa[small]
        out[small] = (0.5 * xs) ** (nu + 0.5) * bessel_j_reduced(nu, xs)
    if (~small).any():
        xl = xa[~small]
        out[~small] = np.sqrt(0.5 * xl) * bessel_j(nu, xl)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class QuadratureRule:
    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def on_interval(self, lo: float, hi: float):
        half = 0.5 * (hi - lo)
        return lo + half * (self.nodes + 1.0), half * self.weights


def gauss_legendre(order: int) -> QuadratureRule:
    if order < 1:
        raise DomainError(f"quadrature order must be positive, got {order}")
    nodes, weights = legendre.leggauss(order)
    # enforce exact symmetry
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return QuadratureRule(order, nodes, weights)


@dataclass(frozen=True)
class OrthoPolySystem:
    """Orthonormal polynomials for the weight (1+x^2)^(-N-a).

    Two real recurrences are kept.  ``jacobi_*`` builds
    pi_n(x) = i^-n P_n^(-m,-m)(ix) with m = N+a, and ``monic_b`` builds the
    monic family p~_{n+1} = x p~_n - b_n p~_{n-1}.  The monic family stays
    well defined at degree N even when the weight has no finite norm
    there, which is what the kernel functions need.
    """

    params: EnsembleParams
    monic_b: tuple
    log_h0: float

    @classmethod
    def build(cls, params: EnsembleParams) -> "OrthoPolySystem":
        m = params.exponent
        # b_N has the factor 2a - 1 in its denominator; at a = 1/2 it is infinite,
        # which only says that degree N is not normalisable
        b = tuple(n * (2 * m - n) / den if (den := (2 * m - 2 * n - 1) * (2 * m - 2 * n + 1)) else math.inf
                  for n in range(1, params.N + 1))
        log_h0 = 0.5 * math.log(math.pi) + ln_gamma(m - 0.5) - ln_gamma(m)
        return cls(params, b, log_h0)

    def log_norm(self, n: int) -> float:
        """log of h_n = int p~_n^2 w dx for the monic polynomial."""
        if n >= self.params.N and not 0 < self.monic_b[self.params.N - 1] < math.inf:
            raise DomainError(f"degree {n} is not normalisable for a = {self.params.a}")
        return self.log_h0 + sum(math.log(bk) for bk in self.monic_b[:n])

    def monic(self, n: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        prev, cur = np.zeros_like(x), np.ones_like(x)
        for k in range(n):
            bk = self.monic_b[k - 1] if k else 0.0
            prev, cur = cur, x * cur - bk * prev
        return cur

    def weighted_monic(self, n: int, x) -> np.ndarray:
        """sqrt(w(x)) p~_n(x), without overflow of p~_n or underflow of w at large |x|.

        For |x| > 1 the recurrence runs on p~_k / x^k and the power x^n is
        recombined with the weight in logarithms.
        """
        x = np.asarray(x, dtype=float)
        z = np.where(np.abs(x) > 1.0, x, 1.0)
        inv2 = 1.0 / (z * z)
        xs = x / z
        prev, cur = np.zeros_like(x), np.ones_like(x)
        for k in range(n):
            bk = self.monic_b[k - 1] if k else 0.0
            # p~_{k+1}/z^{k+1} = (x/z) p~_k/z^k - b_k/z^2 p~_{k-1}/z^{k-1}
            prev, cur = cur, xs * cur - bk * inv2 * prev
        log_scale = n * np.log(np.abs(z)) - 0.5 * self.params.exponent * np.log1p(x * x)
        return cur * np.sign(z) ** n * np.exp(log_scale)

    def real_jacobi(self, n: int, x) -> np.ndarray:
        """pi_n(x) = i^-n P_n^(alpha,alpha)(ix) with alpha = -(N+a)."""
        x = np.asarray(x, dtype=float)
        al = -self.params.exponent
        prev, cur = np.ones_like(x), (al + 1.0) * x
        if n == 0:
            return prev
        for k in range(1, n):
            s = 2 * k + 2 * al
            num = (s + 1) * (s + 2) * s * x * cur + 2 * (k + al) ** 2 * (s + 2) * prev
            prev, cur = cur, num / (2 * (k + 1) * (k + 2 * al + 1) * s)
        return cur


def _check_degree(system: OrthoPolySystem, n: int) -> None:
    N, m = system.params.N, system.params.exponent
    if n < 0 or n > N:
        raise DomainError(f"degree must lie in 0..{N}, got {n}")
    if m - n - 0.5 <= 0:
        raise DomainError(f"degree {n} is not normalisable for a = {system.params.a}")


def cauchy_poly(system: OrthoPolySystem, n: int, x):
    """Orthonormal polynomial p_n(x) for the Cauchy weight, positive leading coefficient."""
    _check_degree(system, n)
    m = system.params.exponent
    log_c = (m * math.log(2.0) + 0.5 * (math.lgamma(n + 1) + math.log(m - n - 0.5)
             + 2 * ln_gamma(m - n) - math.log(2 * math.pi) - ln_gamma(2 * m - n)))
    val = (-1) ** n * math.exp(log_c) * system.real_jacobi(n, x)
    return val if np.ndim(val) else float(val)


def coeff_ratio(system: OrthoPolySystem, n: int) -> float:
    """Ratio a_{n-1}/a_n of leading coefficients of consecutive orthonormal polynomials."""
    if n < 1:
        raise DomainError(f"coeff_ratio needs n >= 1, got {n}")
    _check_degree(system, n)
    m = system.params.exponent
    return 0.5 * math.sqrt(n * (2 * m - n) / ((m - n + 0.5) * (m - n - 0.5)))
