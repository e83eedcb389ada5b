"""Weights, correlation kernels, interval descriptions and the N = 1, 2 closed forms."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError
from .params import EnsembleParams
from .specfun import OrthoPolySystem, cauchy_poly, coeff_ratio, gauss_2f1, root_weighted_bessel_j, bessel_j_reduced

__all__ = [
    "EnsembleParams", "weight", "phi_psi", "FiniteCauchyKernel", "SineKernel", "BesselKernel",
    "kernel_eval", "correlation", "stereo_to_line", "stereo_to_circle",
    "SingleTail", "DoubleTail", "ScaledSingle", "ScaledDouble", "Union",
    "exact_gap_single", "exact_gap_double", "gauge_factor",
]

DIAG_EPS = 1e-6


def weight(params: EnsembleParams, lam):
    return (1.0 + np.square(lam)) ** (-params.exponent)


def gauge_factor(a: float) -> float:
    """c = ((2a+1)/(2a-1))^(1/4), the scale between raw and rescaled kernel functions."""
    if a <= 0.5:
        raise DomainError(f"the raw gauge needs a > 1/2, got {a}")
    return ((2 * a + 1) / (2 * a - 1)) ** 0.25


def phi_psi(params: EnsembleParams, x, gauge: str = "rescaled"):
    """The pair (phi, psi) whose Christoffel-Darboux combination is the kernel.

    ``gauge="raw"`` returns sqrt(a_{N-1}/a_N w) (p_N, p_{N-1}) and exists
    only for a > 1/2.  The default rescaled pair is real for every a >= 0
    and satisfies

        (1+x^2) phi' = -a x phi + kappa psi
        (1+x^2) psi' = -kappa phi + a x psi

    with kappa = sqrt(N(N+2a)).  For a > 1/2 it equals (c phi_raw, psi_raw/c).
    """
    x = np.asarray(x, dtype=float)
    system = OrthoPolySystem.build(params)
    N, a, kappa = params.N, params.a, params.kappa
    root_w = np.sqrt(weight(params, x))
    if gauge == "raw":
        r = coeff_ratio(system, N)
        pref = np.sqrt(r) * root_w
        return pref * cauchy_poly(system, N, x), pref * cauchy_poly(system, N - 1, x)
    if gauge != "rescaled":
        raise DomainError(f"unknown gauge {gauge!r}")
    # p_{N-1} = p~_{N-1} / sqrt(h_{N-1}); both in the overflow-safe weighted form
    half_h = math.exp(0.5 * system.log_norm(N - 1))
    phi = math.sqrt((2 * a + 1) / kappa) * system.weighted_monic(N, x) / half_h
    psi = math.sqrt(kappa / (2 * a + 1)) * system.weighted_monic(N - 1, x) / half_h
    return phi, psi


class _CDKernel:
    """Shared Christoffel-Darboux evaluation with a near-diagonal switch."""

    def phi_psi(self, x):
        raise NotImplementedError

    def diag(self, x):
        raise NotImplementedError

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        fx, px = self.phi_psi(x)
        fy, py = self.phi_psi(y)
        d = x - y
        near = np.abs(d) < DIAG_EPS * (1.0 + np.abs(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            off = (fx * py - fy * px) / d
        if near.any():
            # K is symmetric, so the midpoint diagonal is accurate to O(d^2)
            off = np.where(near, self.diag(0.5 * (x + y)), off)
        return off if off.ndim else float(off)

    def gram(self, nodes):
        """Matrix K(x_i, x_j) on a node set, evaluating phi and psi once."""
        nodes = np.asarray(nodes, dtype=float)
        f, p = self.phi_psi(nodes)
        d = nodes[:, None] - nodes[None, :]
        near = np.abs(d) < DIAG_EPS * (1.0 + np.abs(nodes[:, None]))
        with np.errstate(divide="ignore", invalid="ignore"):
            mat = (f[:, None] * p[None, :] - f[None, :] * p[:, None]) / d
        if near.any():
            mid = 0.5 * (nodes[:, None] + nodes[None, :])
            mat[near] = self.diag(mid[near])
        return mat


@dataclass(frozen=True)
class FiniteCauchyKernel(_CDKernel):
    params: EnsembleParams

    def phi_psi(self, x):
        return phi_psi(self.params, x)

    def diag(self, x):
        x = np.asarray(x, dtype=float)
        f, p = self.phi_psi(x)
        a, kappa = self.params.a, self.params.kappa
        return (kappa * (f * f + p * p) - 2 * a * x * f * p) / (1.0 + x * x)


@dataclass(frozen=True)
class SineKernel:
    rho: float = 1.0

    def __call__(self, x, y):
        val = self.rho * np.sinc(self.rho * (np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
        return val if np.ndim(val) else float(val)

    def diag(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.rho)

    def gram(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        return self(nodes[:, None], nodes[None, :])

    def phi_psi(self, x):
        t = math.pi * self.rho * np.asarray(x, dtype=float)
        return np.sin(t) / math.sqrt(math.pi), np.cos(t) / math.sqrt(math.pi)


def bessel_phi_psi(a: float, X):
    """phi(X) = sgn X (|X|/2)^(1/2) J_{a+1/2}(|X|), psi(X) = (|X|/2)^(1/2) J_{a-1/2}(|X|)."""
    X = np.asarray(X, dtype=float)
    r = np.abs(X)
    return np.sign(X) * root_weighted_bessel_j(a + 0.5, r), root_weighted_bessel_j(a - 0.5, r)


def bessel_phi_psi_over_x(a: float, X):
    """phi(X) psi(X) / X, evaluated without the 0/0 at the origin."""
    r = np.abs(np.asarray(X, dtype=float))
    out = np.empty_like(r)
    small = r < 1.0
    rs = r[small]
    out[small] = 0.5 * (0.5 * rs) ** (2 * a) * bessel_j_reduced(a + 0.5, rs) * bessel_j_reduced(a - 0.5, rs)
    rl = r[~small]
    out[~small] = root_weighted_bessel_j(a + 0.5, rl) * root_weighted_bessel_j(a - 0.5, rl) / rl
    return out


@dataclass(frozen=True)
class BesselKernel(_CDKernel):
    """Scaled kernel near the spectrum singularity, in physical units with density rho.

    Built from phi, psi at X = pi rho x; at a = 0 it is the sine kernel.
    """

    a: float
    rho: float = 1.0

    def phi_psi(self, x):
        return bessel_phi_psi(self.a, math.pi * self.rho * np.asarray(x, dtype=float))

    def diag(self, x):
        X = math.pi * self.rho * np.asarray(x, dtype=float)
        f, p = bessel_phi_psi(self.a, X)
        return math.pi * self.rho * (f * f + p * p - 2 * self.a * bessel_phi_psi_over_x(self.a, X))


def kernel_eval(spec, x, y):
    return spec(x, y)


def correlation(spec, points) -> float:
    """n-point correlation det[K(x_i, x_j)]."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 1.0
    mat = spec(pts[:, None], pts[None, :])
    return float(np.linalg.det(np.atleast_2d(mat)))


def stereo_to_line(theta: float) -> float:
    """lambda = cot(theta/2); theta = 0 maps to +inf."""
    if theta == 0.0:
        return math.inf
    return math.cos(0.5 * theta) / math.sin(0.5 * theta)


def stereo_to_circle(lam: float) -> float:
    """theta = 2 arccot(lambda), in (0, 2 pi)."""
    if math.isinf(lam):
        return 0.0 if lam > 0 else 2 * math.pi
    return 2.0 * (0.5 * math.pi - math.atan(lam))


# Interval descriptions.  ``pieces`` is the list of disjoint (lo, hi) parts fed
# to the quadrature; ``endpoints`` the finite boundary points of I where
# resolvent data are reported.

@dataclass(frozen=True)
class SingleTail:
    s: float

    def pieces(self):
        return [(self.s, math.inf)]

    def endpoints(self):
        return [self.s]


@dataclass(frozen=True)
class DoubleTail:
    s: float

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError(f"double tail needs s > 0, got {self.s}")

    def pieces(self):
        return [(-math.inf, -self.s), (self.s, math.inf)]

    def endpoints(self):
        return [-self.s, self.s]


@dataclass(frozen=True)
class ScaledSingle:
    x: float

    def pieces(self):
        return [(0.0, self.x)]

    def endpoints(self):
        return [0.0, self.x]


@dataclass(frozen=True)
class ScaledDouble:
    """(-x, x), split at the origin so a |t|^a kink sits on a node boundary."""

    x: float

    def pieces(self):
        return [(-self.x, 0.0), (0.0, self.x)]

    def endpoints(self):
        return [-self.x, self.x]


@dataclass(frozen=True)
class Union:
    parts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        parts = tuple((float(lo), float(hi)) for lo, hi in self.parts)
        for (lo, hi), nxt in zip(parts, parts[1:] + ((math.inf, math.inf),)):
            if hi < lo or hi > nxt[0]:
                raise DomainError(f"intervals must be ordered and disjoint: {parts}")
        object.__setattr__(self, "parts", parts)

    def pieces(self):
        return [p for p in self.parts if p[1] > p[0]]

    def endpoints(self):
        return [e for lo, hi in self.parts for e in (lo, hi) if math.isfinite(e)]


# Closed forms for N = 1, 2.

def _gratio(x: float, y: float) -> float:
    return math.exp(math.lgamma(x) - math.lgamma(y))


def closed_form_x(a: float, s: float, variant: str = "auto") -> float:
    """The auxiliary X(s) of the single-interval closed forms.

    ``variant="inverse"`` uses the series in -1/s^2 (s > 0 only),
    ``"direct"`` the series in -s^2.
    """
    if variant == "auto":
        variant = "inverse" if s >= 1.0 else "direct"
    if variant == "inverse":
        if s <= 0:
            raise DomainError("the inverse-argument form needs s > 0")
        c = _gratio(a + 1, a + 1.5) / (2 * math.sqrt(math.pi))
        return 1.0 - c * s ** (-2 * a - 1) * gauss_2f1(a + 1, a + 0.5, a + 1.5, -1.0 / (s * s))
    c = _gratio(a + 1, a + 0.5) / math.sqrt(math.pi)
    return 0.5 + c * s * gauss_2f1(a + 1, 0.5, 1.5, -s * s)


def exact_gap_single(params: EnsembleParams, s: float):
    """(E2, sigma) for no eigenvalue in (s, inf), N = 1 or 2."""
    N, a = params.N, params.a
    g = 1.0 + s * s
    X = closed_form_x(a, s)
    sp = math.sqrt(math.pi)
    if N == 1:
        E = X
        sigma = _gratio(a + 1, a + 0.5) / sp * g ** (-a) / E
    elif N == 2:
        E = (X * X - a * _gratio(a + 1, a + 1.5) / sp * s * g ** (-a - 1) * X
             - math.exp(2 * math.lgamma(a + 1) - math.lgamma(a + 0.5) - math.lgamma(a + 1.5))
             / (2 * math.pi) * g ** (-2 * a - 1))
        sigma = (_gratio(a + 2, a + 1.5) / sp * g ** (-a - 1) / E
                 * ((1 + (2 * a + 1) * s * s) * X + _gratio(a + 1, a + 0.5) / sp * s * g ** (-a)))
    else:
        raise DomainError(f"closed forms exist for N = 1, 2 only, got N = {N}")
    if not E > 0:
        raise NumericError(f"closed-form gap probability is not positive at s = {s}")
    return E, sigma


def double_gap_forms(params: EnsembleParams, s: float):
    """Both closed-form expressions for the double-tail E2 (direct, inverse)."""
    N, a = params.N, params.a
    if not s > 0:
        raise DomainError(f"double tail needs s > 0, got {s}")
    sp = math.sqrt(math.pi)
    z, zi = -s * s, -1.0 / (s * s)
    g = 1.0 + s * s
    if N == 1:
        direct = 2 * _gratio(a + 1, a + 0.5) / sp * s * gauss_2f1(a + 1, 0.5, 1.5, z)
        inverse = 1.0 - _gratio(a + 1, a + 1.5) / sp * s ** (-2 * a - 1) * gauss_2f1(a + 1, a + 0.5, a + 1.5, zi)
    elif N == 2:
        f1 = gauss_2f1(a + 1, 0.5, 1.5, z)
        f2 = gauss_2f1(a + 2, 0.5, 1.5, z)
        c = 4 * math.exp(math.lgamma(a + 2) + math.lgamma(a + 1) - math.lgamma(a + 0.5) - math.lgamma(a + 1.5)) / math.pi
        direct = c * s * s * f2 * (f1 - g ** (-a - 1))
        first = 1.0 - _gratio(a + 2, a + 2.5) / sp * s ** (-2 * a - 3) * gauss_2f1(a + 2, a + 1.5, a + 2.5, zi)
        second = 1.0 - 2 * _gratio(a + 2, a + 1.5) / sp * s ** (-2 * a - 1) * gauss_2f1(a + 2, a + 0.5, a + 1.5, zi)
        inverse = first * second
    else:
        raise DomainError(f"closed forms exist for N = 1, 2 only, got N = {N}")
    return direct, inverse


def exact_gap_double(params: EnsembleParams, s: float):
    """(E2, sigma, F) for no eigenvalue in (-inf, -s) u (s, inf), N = 1 or 2."""
    N, a = params.N, params.a
    direct, inverse = double_gap_forms(params, s)
    E = direct if s <= 1.0 else inverse
    z = -s * s
    g = 1.0 + s * s
    if N == 1:
        f1 = gauss_2f1(a + 1, 0.5, 1.5, z)
        sigma = g ** (-a) / (2 * s * f1)
        F = a * s + g ** (-a) / (s * f1)
    else:
        f1 = gauss_2f1(a + 1, 0.5, 1.5, z)
        f2 = gauss_2f1(a + 2, 0.5, 1.5, z)
        lead = 2 * (a + 1) * s * s / (f1 - g ** (-a - 1))
        sigma = g ** (-a - 1) / (2 * s) * (lead + 1.0 / f2)
        F = a * s + g ** (-a - 1) / s * (lead - 1.0 / f2)
    if not E > 0:
        raise NumericError(f"closed-form gap probability is not positive at s = {s}")
    return E, sigma, F
