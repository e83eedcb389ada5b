"""Trajectory integrators for the gap probabilities.

Three families of ODEs are integrated here.

* The coupled auxiliary systems for the tails (s, inf) and
  (-inf, -s) u (s, inf) of the finite-N Cauchy ensemble, in the rescaled
  variables where both off-diagonal coefficients equal kappa = sqrt(N(N+2a)).
  These need u = <Q, phi> to be finite, i.e. a > 1/2.  At a = 0 the ensemble
  is rotation invariant on the circle and both tail problems are mapped onto
  the symmetric interval (-t, t), where the same machinery has no
  convergence issue.
* Reduced equations for sigma = (1+s^2) R(s, s) alone (the "sigma-ode"
  route), integrated in their differentiated third-order form so that no
  square-root branch has to be followed; they hold for every a >= 0.
* The scaled limits: tau_a for one-sided intervals at the spectrum
  singularity and the Bessel-kernel system for symmetric ones.

Every trajectory is seeded from a Fredholm solve (or, for tau_a, from an
analytic small-x form) and integrated with DOP853.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .ensemble import (BesselKernel, DoubleTail, FiniteCauchyKernel, ScaledDouble, SingleTail,
                       bessel_phi_psi, bessel_phi_psi_over_x)
from .errors import BranchError, DomainError, IntegrationError
from .fredholm import resolvent_at_endpoints
from .params import EnsembleParams
from .specfun import gauss_legendre, ln_gamma

RTOL = 1e-10
ATOL = 1e-12
S_START = 40.0
X0_BESSEL = 1e-3
DRIFT_TOL = 1e-5
SEED_ORDER = 128
METHODS = ("coupled", "sigma-ode", "fredholm", "closed-form")


@dataclass(frozen=True)
class SigmaGrid:
    """A solution curve sampled on a strictly increasing abscissa.

    ``x`` is s for the finite ensemble and the scaled variable X = pi rho x
    for the scaled limits.  ``tracks`` holds auxiliary arrays (q, p, R0,
    invariants, ...) on the same abscissa.  Grids produced by an integrator
    can be resampled from its dense output.
    """

    method: str
    x: np.ndarray
    sigma: np.ndarray
    dsigma: np.ndarray
    E: np.ndarray
    tracks: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    builder: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method tag {self.method!r}")
        if self.x.size > 1 and not np.all(np.diff(self.x) > 0):
            raise DomainError("grid abscissa must be strictly increasing")
        if not (np.all(self.E > 0) and np.all(self.E <= 1 + 1e-9)):
            raise IntegrationError("gap probability left (0, 1]",
                                   location=float(self.x[np.argmax((self.E <= 0) | (self.E > 1 + 1e-9))]))

    def __len__(self):
        return self.x.size

    def resample(self, x) -> "SigmaGrid":
        if self.builder is None:
            raise DomainError("this grid has no dense output to resample from")
        return self.builder(np.sort(np.atleast_1d(np.asarray(x, dtype=float))))

    def is_monotone(self, increasing: bool = True) -> bool:
        d = np.diff(self.E)
        return bool(np.all(d >= -1e-14) if increasing else np.all(d <= 1e-14))


def _solve(rhs, span, y0, rtol, atol, where):
    sol = solve_ivp(rhs, span, np.asarray(y0, dtype=float), method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True)
    if sol.status != 0:
        raise IntegrationError(f"{where}: {sol.message}", location=float(sol.t[-1]))
    return sol.sol


def _seed_atol(atol, y0):
    """Per-component absolute tolerance no larger than 1e-6 of the seed value.

    Seeds that start at small powers of the abscissa would otherwise sit
    below a fixed atol and lose all relative accuracy.
    """
    return np.minimum(atol, np.maximum(1e-6 * np.abs(np.asarray(y0, dtype=float)), 1e-30))


def _default_grid(lo, hi, points):
    if lo > 0:
        return np.geomspace(lo, hi, points)
    return np.linspace(lo, hi, points)


def _check_drift(name, values, scale, abscissa):
    bad = np.abs(values) > DRIFT_TOL * scale
    if bad.any():
        i = int(np.argmax(bad))
        raise IntegrationError(f"{name} drifted to {values[i]:.3g}", location=float(abscissa[i]))


def centered_derivative(grid: SigmaGrid, name: str, rel_step: float = 1e-5):
    """Centered difference of a track (or sigma, E) from the grid's dense output."""
    x = grid.x
    h = rel_step * np.where(x != 0, np.abs(x), 1.0)
    lo, hi = grid.resample(x - h), grid.resample(x + h)

    def pick(g):
        return getattr(g, name) if name in ("sigma", "dsigma", "E") else g.tracks[name]
    return (pick(hi) - pick(lo)) / (2 * h)


def _cheb_derivatives(fn, x0, half_width, nodes=16):
    """First and second derivative at x0 of a Chebyshev fit of fn on [x0-h, x0+h]."""
    k = np.arange(nodes)
    xs = x0 + half_width * np.cos(np.pi * (k + 0.5) / nodes)
    fit = Chebyshev.fit(xs, [fn(x) for x in xs], nodes - 1, domain=[x0 - half_width, x0 + half_width])
    return float(fit.deriv(1)(x0)), float(fit.deriv(2)(x0))


def _pick_root(radicand, target, scale, what):
    """+-sqrt(radicand) nearest to ``target``; tiny negative radicands count as zero."""
    if radicand < 0:
        if radicand < -1e-8 * scale:
            raise BranchError(f"{what}: negative discriminant {radicand:.3g}")
        radicand = 0.0
    root = math.sqrt(radicand)
    return root if abs(root - target) <= abs(-root - target) else -root


# ---------------------------------------------------------------------------
# Residuals of the reduced equations.  Each returns (residual, scale) where the
# scale is the sum of the magnitudes of the individual terms.

def _with_scale(terms):
    terms = [np.asarray(t, dtype=float) for t in terms]
    res = sum(terms)
    scale = sum(np.abs(t) for t in terms)
    return res, scale


def sigma_residual_single(params: EnsembleParams, s, sigma, dsigma, d2sigma, with_scale=False):
    """Residual of the second-degree equation for sigma on (s, inf)."""
    a, k2 = params.a, params.kappa ** 2
    s, sg, d1, d2 = (np.asarray(v, dtype=float) for v in (s, sigma, dsigma, d2sigma))
    g = 1 + s * s
    res, scale = _with_scale([
        g * g * d2 * d2, 4 * g * d1 ** 3, -8 * s * sg * d1 * d1, 4 * sg * sg * (d1 - a * a),
        8 * a * a * s * sg * d1, 4 * (k2 - a * a * s * s) * d1 * d1])
    return (res, scale) if with_scale else res


def sigma_residual_double(params: EnsembleParams, s, sigma, dsigma, d2sigma, with_scale=False):
    """Residual of the sigma equation for the double tail, with F = sqrt(a^2 s^2 - 2(1+s^2) sigma')."""
    a, k2 = params.a, params.kappa ** 2
    s, sg, d1, d2 = (np.asarray(v, dtype=float) for v in (s, sigma, dsigma, d2sigma))
    g = 1 + s * s
    F = np.sqrt(np.maximum(a * a * s * s - 2 * g * d1, 0.0))
    h = F - a * s
    with np.errstate(divide="ignore", invalid="ignore"):
        first = ((1 - s * s) * F - 2 * a * s + s * g / F * (a * a * s - 2 * s * d1 - g * d2)) ** 2
    second = (2 * g * sg + 2 * a * s * s * h - s * h * h) ** 2
    third = 4 * s * s * h * h * (k2 - 2 * s * sg - 2 * a * s * h)
    res, scale = _with_scale([first, -second, third])
    return (res, scale) if with_scale else res


def r0_residual_double(params: EnsembleParams, s, r0, dr0, d2r0, with_scale=False):
    """Residual of the R0 equation for the double tail, T = 2 s R0."""
    a, k2 = params.a, params.kappa ** 2
    s, r, r1, r2 = (np.asarray(v, dtype=float) for v in (s, r0, dr0, d2r0))
    g = 1 + s * s
    T = 2 * s * r
    T1 = 2 * r + 2 * s * r1
    lhs = (s * g * g * r2 + 2 * g * (1 + 2 * s * s) * r1 + T * (2 * k2 + g) - 6 * a * T * T - 4 * T ** 3) ** 2
    rhs = (a * s - 2 * (1 - s * s) * r) ** 2 * (g * g * T1 * T1 - 4 * T * T * (T * (T + 2 * a) - k2))
    res, scale = _with_scale([lhs, -rhs])
    return (res, scale) if with_scale else res


def tau_residual(a: float, x, tau, dtau, d2tau, with_scale=False):
    """Residual of the second-degree equation for tau_a(x) = x sigma(x)."""
    x, t, t1, t2 = (np.asarray(v, dtype=float) for v in (x, tau, dtau, d2tau))
    m = x * t1 - t
    res, scale = _with_scale([x * x * t2 * t2, -4 * m * t1 * t1, -4 * a * a * t1 * t1, 4 * m * m])
    return (res, scale) if with_scale else res


def sigma1_residual(a: float, r, s1, ds1, d2s1, with_scale=False):
    """Residual of the equation for sigma_1(r) = -2x R(x, x), r = 2x, Bessel kernel."""
    r, f, f1, f2 = (np.asarray(v, dtype=float) for v in (r, s1, ds1, d2s1))
    rad = a * a + f - r * f1
    root = np.sqrt(np.maximum(rad, 0.0))
    res, scale = _with_scale([(r * f2) ** 2, -4 * rad * f1 * f1, 4 * rad * (a - root) ** 2])
    return (res, scale) if with_scale else res


# ---------------------------------------------------------------------------
# Asymptotic forms used as agreement checks at the seed.

def asymptotic_sigma_single(params: EnsembleParams, s, terms: int = 2):
    N, a = params.N, params.a
    lead = math.exp(2 * a * math.log(2) + ln_gamma(1 + N + 2 * a) + 2 * ln_gamma(a + 1)
                    - ln_gamma(N) - 2 * ln_gamma(2 * a + 2)) / math.pi
    s = np.asarray(s, dtype=float)
    bracket = 2 * a + 1
    if terms > 1:
        bracket = bracket - s ** -2 * a / (2 * a + 3) * (2 * N * N + 4 * a * N + 4 * a * a + 4 * a + 1)
    return lead * s ** (-2 * a) * bracket


def _double_lead(params):
    N, a = params.N, params.a
    return math.exp(ln_gamma(N + 2 * a + 1) - (2 * a + 1) * math.log(2) - ln_gamma(a + 0.5)
                    - ln_gamma(a + 1.5) - ln_gamma(N))


def asymptotic_sigma_double(params: EnsembleParams, s):
    return _double_lead(params) * np.asarray(s, dtype=float) ** (-2 * params.a)


def asymptotic_r0_double(params: EnsembleParams, s):
    return _double_lead(params) * np.asarray(s, dtype=float) ** (-2 * params.a - 2)


def asymptotic_qp_double(params: EnsembleParams, gauge: str = "rescaled"):
    """Constants (cq, cp) with q ~ cq (2s)^-a and p ~ cp (2s)^(-a-1) as s -> inf."""
    N, a, kappa = params.N, params.a, params.kappa
    cq = math.exp(0.5 * (math.log(kappa) + ln_gamma(N + 2 * a) - ln_gamma(N + 1)) - ln_gamma(a + 0.5))
    cp = math.exp(0.5 * (math.log(kappa) + ln_gamma(N + 2 * a + 1) - ln_gamma(N)) - ln_gamma(a + 1.5))
    if gauge == "raw":
        if a <= 0.5:
            raise DomainError(f"the raw gauge needs a > 1/2, got {a}")
        c = ((2 * a + 1) / (2 * a - 1)) ** 0.25
        return cq / c, cp * c
    if gauge != "rescaled":
        raise DomainError(f"unknown gauge {gauge!r}")
    return cq, cp


# ---------------------------------------------------------------------------
# State types.

@dataclass(frozen=True)
class TWStateSingle:
    """Auxiliary variables at the endpoint of (s, inf), rescaled gauge."""

    params: EnsembleParams
    s: float
    q: float
    p: float
    u: float
    v: float
    w: float

    @classmethod
    def from_resolvent(cls, params, data):
        return cls(params, float(data.endpoints[0]), float(data.q[0]), float(data.p[0]), data.u, data.v, data.w)

    @property
    def sigma(self):
        return _single_quantities(self.params, self.s, self.q, self.p, self.u, self.v, self.w)["sigma"]

    @property
    def R(self):
        return self.sigma / (1 + self.s * self.s)

    def integrals(self):
        d = _single_quantities(self.params, self.s, self.q, self.p, self.u, self.v, self.w)
        return d["first_integral"], d["second_integral"]


@dataclass(frozen=True)
class TWStateDouble:
    """Auxiliary variables at s for (-inf, -s) u (s, inf); v = 0 by parity and is not stored."""

    params: EnsembleParams
    s: float
    q: float
    p: float
    u: float
    w: float

    @classmethod
    def from_resolvent(cls, params, data):
        return cls(params, float(data.endpoints[1]), float(data.q[1]), float(data.p[1]), data.u, data.w)

    def _d(self):
        return _double_quantities(self.params, self.s, self.q, self.p, self.u, self.w)

    @property
    def sigma(self):
        return self._d()["sigma"]

    @property
    def R(self):
        return self.sigma / (1 + self.s * self.s)

    @property
    def R0(self):
        return self._d()["R0"]

    @property
    def F(self):
        return self._d()["F"]

    @property
    def T(self):
        return 2 * self.q * self.p

    def integral(self):
        return self._d()["integral"]


@dataclass(frozen=True)
class BesselState:
    """Bessel-kernel auxiliaries at the endpoint x of (-x, x)."""

    a: float
    x: float
    q: float
    p: float
    u: float
    w: float

    @property
    def c(self):
        return -self.a + self.u - self.w

    @property
    def R(self):
        q, p = self.q, self.p
        return (self.x * (q * q + p * p) + 2 * self.c * q * p + 2 * (q * p) ** 2) / self.x

    @property
    def sigma1(self):
        return -2 * self.x * self.R

    def integral(self):
        return 2 * self.q * self.p - (self.w - self.u)


# ---------------------------------------------------------------------------
# Finite N, single tail.

def _single_quantities(params, s, q, p, u, v, w):
    a, k = params.a, params.kappa
    g = 1 + s * s
    A = a * s + v
    B = k - (2 * a - 1) * u
    C = k + (2 * a + 1) * w
    sigma = C * q * q + B * p * p - 2 * A * q * p
    dsigma = -2 * a * q * p
    first = sigma - 2 * a * v
    with np.errstate(divide="ignore", invalid="ignore"):
        second = B * C - (k * k + g * dsigma - s * sigma + sigma * sigma / (4 * a * a))
    return dict(sigma=sigma, dsigma=dsigma, first_integral=first, second_integral=second)


def _single_rhs(params):
    a, k = params.a, params.kappa

    def rhs(s, y):
        q, p, u, v, w, _ = y
        g = 1 + s * s
        A = a * s + v
        B = k - (2 * a - 1) * u
        C = k + (2 * a + 1) * w
        sigma = C * q * q + B * p * p - 2 * A * q * p
        return [(-A * q + B * p) / g, (-C * q + A * p) / g, -q * q, -q * p, -p * p, sigma / g]
    return rhs


def _sym_quantities(params, t, q, p, u, w):
    a, k = params.a, params.kappa
    g = 1 + t * t
    B = k - (2 * a - 1) * u
    C = k + (2 * a + 1) * w
    qp = q * p
    sigma = C * q * q + B * p * p - 2 * a * t * qp - 2 * g * qp * qp / t
    dsigma = -2 * a * qp + 2 * g * qp * qp / (t * t)
    integral = B * C - (k * k + 2 * t * sigma + 4 * a * g * qp)
    return dict(sigma=sigma, dsigma=dsigma, integral=integral, qp=qp, dqp=(B * p * p - C * q * q) / g)


def _sym_rhs(params):
    a, k = params.a, params.kappa

    def rhs(t, y):
        q, p, u, w, _ = y
        g = 1 + t * t
        B = k - (2 * a - 1) * u
        C = k + (2 * a + 1) * w
        qp = q * p
        sigma = C * q * q + B * p * p - 2 * a * t * qp - 2 * g * qp * qp / t
        return [(-a * t * q + B * p) / g - 2 * q * qp / t,
                (-C * q + a * t * p) / g + 2 * p * qp / t,
                2 * q * q, 2 * p * p, -2 * sigma / g]
    return rhs


def _half_angle(s):
    """t = tan(arccot(s)/2) = sqrt(1+s^2) - s, written without cancellation."""
    s = np.asarray(s, dtype=float)
    r = np.sqrt(1 + s * s)
    with np.errstate(divide="ignore"):
        return np.where(s > 0, 1.0 / (r + s), r - s)


def _symmetric_solution(params, t0, t1, rtol, atol, order):
    """Integrate the symmetric-interval system on (-t, t) from t0 to t1."""
    data = resolvent_at_endpoints(FiniteCauchyKernel(params), ScaledDouble(t0), order=order)
    y0 = [data.q[1], data.p[1], data.u, data.w, math.log(data.E)]
    dense = _solve(_sym_rhs(params), (t0, t1), y0, rtol, atol, "symmetric interval system")
    return dense, data


def _require_coupled(params):
    a = params.a
    if 0 < a <= 0.5:
        raise DomainError(f"the coupled tail system needs a = 0 or a > 1/2 (got a = {a}); "
                          "use method='sigma-ode'")


def integrate_single(params: EnsembleParams, s_start: float = S_START, s_end: float = 0.2, seed=None,
                     grid=None, points: int = 400, method: str = "coupled",
                     rtol: float = RTOL, atol: float = ATOL, order: int = SEED_ORDER) -> SigmaGrid:
    """sigma(s) and E2(0; (s, inf)) by integrating inward from s_start."""
    if not s_start > s_end:
        raise DomainError(f"need s_start > s_end, got {s_start} <= {s_end}")
    if method == "sigma-ode":
        return _sigma_single(params, s_start, s_end, grid, points, rtol, atol, order)
    if method != "coupled":
        raise DomainError(f"unknown method {method!r}")
    _require_coupled(params)
    if params.a == 0:
        return _rotated_single(params, s_start, s_end, grid, points, rtol, atol, order)
    if seed is None:
        seed = resolvent_at_endpoints(FiniteCauchyKernel(params), SingleTail(s_start), order=order)
    state = TWStateSingle.from_resolvent(params, seed)
    y0 = [state.q, state.p, state.u, state.v, state.w, math.log(seed.E)]
    dense = _solve(_single_rhs(params), (s_start, s_end), y0, rtol, atol, "single tail system")
    scale = 1 + params.kappa ** 2

    def build(s):
        q, p, u, v, w, lnE = dense(s)
        d = _single_quantities(params, s, q, p, u, v, w)
        _check_drift("first integral", d["first_integral"], scale, s)
        _check_drift("second integral", d["second_integral"], scale, s)
        tracks = dict(q=q, p=p, u=u, v=v, w=w, first_integral=d["first_integral"],
                      second_integral=d["second_integral"])
        return SigmaGrid("coupled", s, d["sigma"], d["dsigma"], np.exp(lnE), tracks, meta, build)

    meta = dict(route="tail", N=params.N, a=params.a, s_start=s_start,
                seed_asymptotic_ratio=state.sigma / float(asymptotic_sigma_single(params, s_start)))
    return build(_default_grid(s_end, s_start, points) if grid is None else np.sort(grid))


def _rotated_single(params, s_start, s_end, grid, points, rtol, atol, order):
    # at a = 0 the tail (s, inf) is an arc of the circle; rotating its midpoint
    # to the point opposite infinity gives (-t, t) with t = tan(arccot(s)/2)
    t0, t1 = float(_half_angle(s_start)), float(_half_angle(s_end))
    dense, data = _symmetric_solution(params, t0, t1, rtol, atol, order)
    scale = 1 + params.kappa ** 2

    def build(s):
        t = _half_angle(s)
        q, p, u, w, lnE = dense(t)
        d = _sym_quantities(params, t, q, p, u, w)
        _check_drift("symmetric-interval integral", d["integral"], scale, s)
        dtds = -t / np.sqrt(1 + s * s)
        tracks = dict(t=t, q_sym=q, p_sym=p, u_sym=u, w_sym=w, first_integral=d["sigma"] * 0.0,
                      second_integral=d["integral"])
        return SigmaGrid("coupled", s, d["sigma"], d["dsigma"] * dtds, np.exp(lnE), tracks, meta, build)

    meta = dict(route="rotated", N=params.N, a=params.a, s_start=s_start)
    out = build(_default_grid(s_end, s_start, points) if grid is None else np.sort(grid))
    meta["seed_asymptotic_ratio"] = float(out.sigma[-1] / asymptotic_sigma_single(params, out.x[-1]))
    return out


def _fredholm_sigma_single(params, order):
    spec = FiniteCauchyKernel(params)

    def sigma(s):
        data = resolvent_at_endpoints(spec, SingleTail(s), order=order)
        return (1 + s * s) * data.R[0]
    return sigma


def _sigma_single(params, s_start, s_end, grid, points, rtol, atol, order):
    a, k2 = params.a, params.kappa ** 2
    spec = FiniteCauchyKernel(params)
    data = resolvent_at_endpoints(spec, SingleTail(s_start), order=order)
    s0 = s_start
    g = 1 + s0 * s0
    sg0 = g * data.R[0]
    fit1, fit2 = _cheb_derivatives(_fredholm_sigma_single(params, order), s0, 0.1 * max(1.0, abs(s0)))
    d1 = -2 * a * data.q[0] * data.p[0] if a > 0.5 else fit1
    rest = float(sigma_residual_single(params, s0, sg0, d1, 0.0))
    d2 = _pick_root(-rest / g ** 2, fit2, abs(rest) / g ** 2 + fit2 ** 2, "sigma'' at the seed")

    def rhs(s, y):
        sg, p1, p2, _ = y
        gg = 1 + s * s
        P = (12 * gg * p1 * p1 - 16 * s * sg * p1 + 4 * sg * sg + 8 * a * a * s * sg
             + 8 * (k2 - a * a * s * s) * p1)
        return [p1, p2, -(4 * s * gg * p2 + P) / (2 * gg * gg), sg / gg]

    y0 = [sg0, d1, d2, math.log(data.E)]
    dense = _solve(rhs, (s_start, s_end), y0, rtol, _seed_atol(atol, y0), "sigma equation")

    def build(s):
        sg, p1, p2, lnE = dense(s)
        res, scale = sigma_residual_single(params, s, sg, p1, p2, with_scale=True)
        return SigmaGrid("sigma-ode", s, sg, p1, np.exp(lnE), dict(d2sigma=p2, residual=res, residual_scale=scale),
                         meta, build)

    meta = dict(route="sigma", N=params.N, a=a, s_start=s_start, seed_fit_dsigma=fit1, seed_fit_d2sigma=fit2)
    return build(_default_grid(s_end, s_start, points) if grid is None else np.sort(grid))


# ---------------------------------------------------------------------------
# Finite N, double tail.

def _double_quantities(params, s, q, p, u, w):
    a, k = params.a, params.kappa
    g = 1 + s * s
    B = k - (2 * a - 1) * u
    C = k + (2 * a + 1) * w
    om = q * p
    sigma = C * q * q + B * p * p - 2 * a * s * om + 2 * g * om * om / s
    dom = (B * p * p - C * q * q) / g
    return dict(sigma=sigma, dsigma=-2 * a * om - 2 * g * om * om / (s * s),
                integral=B * C - (k * k - 2 * s * sigma - 4 * a * g * om),
                R0=om / s, dR0=dom / s - om / (s * s), F=a * s + 2 * g * om / s, T=2 * om, omega=om)


def _double_rhs(params):
    a, k = params.a, params.kappa

    def rhs(s, y):
        q, p, u, w, _ = y
        g = 1 + s * s
        B = k - (2 * a - 1) * u
        C = k + (2 * a + 1) * w
        om = q * p
        sigma = C * q * q + B * p * p - 2 * a * s * om + 2 * g * om * om / s
        return [(-a * s * q + B * p) / g + 2 * q * om / s,
                (-C * q + a * s * p) / g - 2 * p * om / s,
                -2 * q * q, -2 * p * p, 2 * sigma / g]
    return rhs


def integrate_double(params: EnsembleParams, s_start: float = S_START, s_end: float = 0.2, seed=None,
                     grid=None, points: int = 400, method: str = "coupled",
                     rtol: float = RTOL, atol: float = ATOL, order: int = SEED_ORDER) -> SigmaGrid:
    """sigma(s), R0, F, T and E2(0; (-inf,-s) u (s,inf)) integrating inward from s_start."""
    if not s_start > s_end > 0:
        raise DomainError(f"need s_start > s_end > 0, got {s_start}, {s_end}")
    if method == "sigma-ode":
        return _sigma_double(params, s_start, s_end, grid, points, rtol, atol, order)
    if method != "coupled":
        raise DomainError(f"unknown method {method!r}")
    _require_coupled(params)
    if params.a == 0:
        return _rotated_double(params, s_start, s_end, grid, points, rtol, atol, order)
    if seed is None:
        seed = resolvent_at_endpoints(FiniteCauchyKernel(params), DoubleTail(s_start), order=order)
    state = TWStateDouble.from_resolvent(params, seed)
    y0 = [state.q, state.p, state.u, state.w, math.log(seed.E)]
    dense = _solve(_double_rhs(params), (s_start, s_end), y0, rtol, atol, "double tail system")
    scale = 1 + params.kappa ** 2

    def build(s):
        q, p, u, w, lnE = dense(s)
        d = _double_quantities(params, s, q, p, u, w)
        _check_drift("double-tail integral", d["integral"], scale, s)
        tracks = dict(q=q, p=p, u=u, w=w, R0=d["R0"], dR0=d["dR0"], F=d["F"], T=d["T"],
                      integral=d["integral"])
        return SigmaGrid("coupled", s, d["sigma"], d["dsigma"], np.exp(lnE), tracks, meta, build)

    meta = dict(route="tail", N=params.N, a=params.a, s_start=s_start,
                seed_asymptotic_ratio=state.sigma / float(asymptotic_sigma_double(params, s_start)))
    return build(_default_grid(s_end, s_start, points) if grid is None else np.sort(grid))


def _rotated_double(params, s_start, s_end, grid, points, rtol, atol, order):
    # at a = 0 inversion x -> -1/x maps the double tail onto (-1/s, 1/s)
    dense, data = _symmetric_solution(params, 1.0 / s_start, 1.0 / s_end, rtol, atol, order)
    scale = 1 + params.kappa ** 2

    def build(s):
        t = 1.0 / s
        q, p, u, w, lnE = dense(t)
        d = _sym_quantities(params, t, q, p, u, w)
        _check_drift("symmetric-interval integral", d["integral"], scale, s)
        sign = np.sign(d["qp"])
        om = sign * d["qp"]
        dom = -sign * d["dqp"] * t * t
        g = 1 + s * s
        tracks = dict(t=t, q_sym=q, p_sym=p, u_sym=u, w_sym=w, R0=om / s, dR0=dom / s - om / (s * s),
                      F=2 * g * om / s, T=2 * om, integral=d["integral"])
        return SigmaGrid("coupled", s, d["sigma"], -d["dsigma"] * t * t, np.exp(lnE), tracks, meta, build)

    meta = dict(route="rotated", N=params.N, a=params.a, s_start=s_start)
    out = build(_default_grid(s_end, s_start, points) if grid is None else np.sort(grid))
    meta["seed_asymptotic_ratio"] = float(out.sigma[-1] / asymptotic_sigma_double(params, out.x[-1]))
    return out


def _omega_second(params, s, sg, om, om1):
    a, k2 = params.a, params.kappa ** 2
    s2, s3 = s * s, s ** 3
    s4, s5 = s2 * s2, s3 * s2
    Xd = (2 * k2 * om * s2 - 2 * a * a * om * s4 - 6 * a * om * om * s4 - 6 * a * om * om * s2
          - a * s3 * sg - 4 * om ** 3 * s4 - 8 * om ** 3 * s2 - 4 * om ** 3 - 2 * om * s3 * sg
          + 2 * om * s * sg + om1 * s5 + om1 * s3)
    return -2 * Xd / ((1 + s2) ** 2 * s2)


def omega_constraint(params: EnsembleParams, s, sigma, omega, domega):
    """(1+s^2)^2 w'^2 - S^2 + 4 w^2 (kappa^2 - 2 s sigma - 4 a (1+s^2) w), w = qp."""
    a, k2 = params.a, params.kappa ** 2
    g = 1 + s * s
    S = sigma + 2 * a * s * omega - 2 * g * omega * omega / s
    return g * g * domega * domega - S * S + 4 * omega * omega * (k2 - 2 * s * sigma - 4 * a * g * omega)


def _sigma_double(params, s_start, s_end, grid, points, rtol, atol, order):
    a = params.a
    spec = FiniteCauchyKernel(params)

    def fred(s):
        data = resolvent_at_endpoints(spec, DoubleTail(s), order=order)
        return data, (1 + s * s) * data.R[1], data.q[1] * data.p[1]

    data, sg0, om0 = fred(s_start)
    fit1, _ = _cheb_derivatives(lambda s: fred(s)[2], s_start, 0.1 * s_start)
    g = 1 + s_start ** 2
    rest = float(omega_constraint(params, s_start, sg0, om0, 0.0))
    om1 = _pick_root(-rest / g ** 2, fit1, abs(rest) / g ** 2 + fit1 ** 2, "omega' at the seed")

    def rhs(s, y):
        sg, om, o1, _ = y
        gg = 1 + s * s
        return [-2 * a * om - 2 * gg * om * om / (s * s), o1, _omega_second(params, s, sg, om, o1), 2 * sg / gg]

    y0 = [sg0, om0, om1, math.log(data.E)]
    dense = _solve(rhs, (s_start, s_end), y0, rtol, _seed_atol(atol, y0), "double sigma system")

    def build(s):
        sg, om, o1, lnE = dense(s)
        g = 1 + s * s
        dsg = -2 * a * om - 2 * g * om * om / (s * s)
        o2 = _omega_second(params, s, sg, om, o1)
        d2sg = -2 * a * o1 - (4 * s * om * om + 4 * g * om * o1) / (s * s) + 4 * g * om * om / s ** 3
        sign = np.sign(om)
        om, o1, o2 = sign * om, sign * o1, sign * o2
        tracks = dict(omega=om, domega=o1, R0=om / s, dR0=o1 / s - om / (s * s),
                      d2R0=o2 / s - 2 * o1 / (s * s) + 2 * om / s ** 3, d2sigma=d2sg,
                      F=a * s + 2 * g * om / s, T=2 * om, constraint=omega_constraint(params, s, sg, om, o1))
        return SigmaGrid("sigma-ode", s, sg, dsg, np.exp(lnE), tracks, meta, build)

    meta = dict(route="sigma", N=params.N, a=a, s_start=s_start, seed_fit_domega=fit1)
    return build(_default_grid(s_end, s_start, points) if grid is None else np.sort(grid))


def aux_qp_double(params: EnsembleParams, grid: SigmaGrid, seed=None, order: int = SEED_ORDER):
    """q(s), p(s) on the grid from sigma and R0 alone, by quadrature of their log-derivatives.

    The boundary values at the largest grid point come from a Fredholm solve
    (or ``seed``).  The minus sign of the radical is the one consistent with
    q ~ s^-a, p ~ s^(-a-1) at large s.
    """
    if "R0" not in grid.tracks:
        raise DomainError("grid carries no R0 track")
    a, k2 = params.a, params.kappa ** 2
    s, sg, r0 = grid.x, grid.sigma, grid.tracks["R0"]
    g = 1 + s * s
    lead = sg / (2 * s * r0)
    rad = (lead + a * s - g * r0) ** 2 + 2 * s * sg + 4 * a * s * g * r0 - k2
    scale = (lead + a * s - g * r0) ** 2 + np.abs(2 * s * sg) + np.abs(4 * a * s * g * r0) + k2
    if np.any(rad < -1e-8 * scale):
        i = int(np.argmax(rad < -1e-8 * scale))
        raise BranchError(f"negative radicand {rad[i]:.3g} in the q, p quadrature at s = {s[i]:.6g}")
    root = np.sqrt(np.maximum(rad, 0.0))
    dlq = (lead + g * r0 - root) / g
    dlp = (-lead - g * r0 - root) / g
    if seed is None:
        seed = resolvent_at_endpoints(FiniteCauchyKernel(params), DoubleTail(float(s[-1])), order=order)
    q_top, p_top = float(seed.q[1]), float(seed.p[1])
    # integrate the spline of the log-derivative in log s, where the grid is uniform
    ls = np.log(s)
    lq = CubicSpline(ls, dlq * s).antiderivative()
    lp = CubicSpline(ls, dlp * s).antiderivative()
    q = q_top * np.exp(lq(ls) - lq(ls[-1]))
    p = p_top * np.exp(lp(ls) - lp(ls[-1]))
    return q, p


# ---------------------------------------------------------------------------
# Scaled one-sided interval: tau_a.

def tau_leading(a: float, X):
    """Leading small-X term of tau_a: X^(2a+1) / (2^(2a+1) Gamma(a+1/2) Gamma(a+3/2))."""
    X = np.asarray(X, dtype=float)
    return np.exp((2 * a + 1) * np.log(0.5 * X) - ln_gamma(a + 0.5) - ln_gamma(a + 1.5))


def _tau_seed(a, X):
    """tau_a and two derivatives for small X.

    Exact to O(X^(6a+3)) relative to the leading X^(2a+1): the first
    resolvent correction is carried by the geometric factor y^2/(1-y).
    """
    X = np.asarray(X, dtype=float)
    f, p = bessel_phi_psi(a, X)
    fpx = bessel_phi_psi_over_x(a, X)
    kbar = f * f + p * p - 2 * a * fpx
    t0 = X * kbar
    t1 = kbar + 2 * a * fpx
    with np.errstate(divide="ignore", invalid="ignore"):
        t2 = np.where(X > 0, 2 * a * (p * p - f * f) / X, 0.0)
    c = math.exp(-(2 * a + 1) * math.log(2) - ln_gamma(a + 0.5) - ln_gamma(a + 1.5))
    k = 2 * a + 1
    y = c * X ** k / k
    y1 = c * X ** (2 * a)
    y2 = 2 * a * c * X ** (2 * a - 1) if a > 0 else np.zeros_like(X)
    F = y * y / (1 - y)
    F1 = (2 * y - y * y) / (1 - y) ** 2
    F2 = 2 / (1 - y) ** 3
    return t0 + k * F, t1 + k * F1 * y1, t2 + k * (F2 * y1 * y1 + F1 * y2)


def _tau_log_gap_small(a, X, nodes=40):
    """int_0^X tau(y)/y dy from the small-X form."""
    rule = gauss_legendre(nodes)
    X = np.atleast_1d(np.asarray(X, dtype=float))
    out = np.empty_like(X)
    for i, xi in enumerate(X):
        y, w = rule.on_interval(0.0, xi)
        out[i] = np.sum(w * _tau_seed(a, y)[0] / y)
    return out


def integrate_scaled_single(a: float, x_end: float, x0: float | None = None, grid=None, points: int = 400,
                            rtol: float = 1e-11, atol: float = 1e-14) -> SigmaGrid:
    """tau_a on (0, x_end] and E2(0; (0, X); a) = exp(-int_0^X tau_a(y)/y dy).

    The abscissa is the scaled variable X = pi rho x.  ``sigma`` holds
    tau_a / X and the tracks hold tau_a and its derivatives.
    """
    if a < 0:
        raise DomainError(f"a must be non-negative, got {a}")
    if x0 is None:
        # keep tau(x0) ~ 1e-9 or more so the absolute tolerance does not swamp it
        x0 = 1e-4 if a == 0 else max(1e-3, 10 ** (-9 / (2 * a + 1)))
    if not x_end > x0:
        raise DomainError(f"x_end must exceed the seed point {x0}")
    t0, t1, t2 = (float(v) for v in _tau_seed(a, x0))
    I0 = float(_tau_log_gap_small(a, x0)[0])
    res0, sc0 = tau_residual(a, x0, t0, t1, t2, with_scale=True)
    if abs(res0) > 1e-6 * sc0:
        raise BranchError(f"small-x seed does not satisfy the tau equation (relative residual {res0 / sc0:.3g})")

    def rhs(x, y):
        t, d1, d2, _ = y
        P = -4 * x * d1 * d1 - 8 * (x * d1 - t) * d1 - 8 * a * a * d1 + 8 * x * (x * d1 - t)
        return [d1, d2, -(2 * x * d2 + P) / (2 * x * x), t / x]

    dense = _solve(rhs, (x0, x_end), [t0, t1, t2, I0], rtol, atol, "tau equation")

    def build(X):
        X = np.asarray(X, dtype=float)
        inner = X < x0
        vals = np.empty((4, X.size))
        if (~inner).any():
            vals[:, ~inner] = dense(X[~inner])
        if inner.any():
            vals[:3, inner] = np.array(_tau_seed(a, X[inner]))
            vals[3, inner] = _tau_log_gap_small(a, X[inner])
        t, d1, d2, I = vals
        res, scale = tau_residual(a, X, t, d1, d2, with_scale=True)
        tracks = dict(tau=t, dtau=d1, d2tau=d2, log_gap=I, residual=res, residual_scale=scale)
        return SigmaGrid("sigma-ode", X, t / X, (X * d1 - t) / (X * X), np.exp(-I), tracks, meta, build)

    meta = dict(route="tau", a=a, x0=x0)
    return build(_default_grid(x0, x_end, points) if grid is None else np.sort(grid))


def spacing_pdf(x, tau1: SigmaGrid | None = None):
    """Nearest-neighbour spacing density at unit mean spacing, from tau_1."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise DomainError("spacing_pdf needs x > 0")
    if tau1 is None:
        tau1 = integrate_scaled_single(1.0, math.pi * float(np.max(x)) * 1.001)
    order = np.argsort(x)
    g = tau1.resample(math.pi * x[order])
    out = np.empty_like(x)
    out[order] = g.tracks["tau"] / x[order] * g.E
    return out


# ---------------------------------------------------------------------------
# Scaled symmetric interval: Bessel kernel.

def _bessel_rhs(a):
    def rhs(t, y):
        x = math.exp(t)
        q, p, u, w, _ = y
        c = -a + u - w
        xR = x * (q * q + p * p) + 2 * c * q * p + 2 * (q * p) ** 2
        return [x * p + c * q, -x * q - c * p, 2 * x * q * q, 2 * x * p * p, xR]
    return rhs


def integrate_bessel(a: float, x_end: float, x0: float = X0_BESSEL, grid=None, points: int = 400,
                     rtol: float = 1e-11, atol: float = 1e-14, seed_order: int = 20) -> SigmaGrid:
    """Bessel-kernel auxiliaries on (-X, X) for X up to x_end.

    ``sigma`` is R(X, X), E is exp(-2 int_0^X R); tracks carry q, p, u, w,
    sigma1(2X) = -2X R and r = X q p.
    """
    if a < 0:
        raise DomainError(f"a must be non-negative, got {a}")
    if not x_end > x0:
        raise DomainError(f"x_end must exceed the seed point {x0}")
    data = resolvent_at_endpoints(BesselKernel(a, 1.0 / math.pi), ScaledDouble(x0), order=seed_order)
    y0 = [data.q[1], data.p[1], data.u, data.w, -0.5 * math.log(data.E)]
    dense = _solve(_bessel_rhs(a), (math.log(x0), math.log(x_end)), y0, rtol, _seed_atol(atol, y0), "Bessel system")

    def build(X):
        X = np.asarray(X, dtype=float)
        if np.any(X < x0 * (1 - 1e-3)):
            raise DomainError(f"Bessel grid starts at the seed point {x0}")
        q, p, u, w, I = dense(np.log(X))
        c = -a + u - w
        xR = X * (q * q + p * p) + 2 * c * q * p + 2 * (q * p) ** 2
        R = xR / X
        integral = 2 * q * p - (w - u)
        _check_drift("Bessel integral", integral, 1.0, X)
        # sigma1 as a function of r = 2X has d sigma1/dr = -(q^2 + p^2)
        tracks = dict(q=q, p=p, u=u, w=w, sigma1=-2 * xR, dsigma1=-(q * q + p * p), r=X * q * p, xR=xR,
                      integral=integral)
        return SigmaGrid("coupled", X, R, (q * q + p * p - R) / X, np.exp(-2 * I), tracks, meta, build)

    meta = dict(route="bessel", a=a, x0=x0, seed_order=seed_order)
    return build(_default_grid(x0, x_end, points) if grid is None else np.sort(grid))


def bessel_states(grid: SigmaGrid):
    a = grid.meta["a"]
    t = grid.tracks
    return [BesselState(a, float(x), float(q), float(p), float(u), float(w))
            for x, q, p, u, w in zip(grid.x, t["q"], t["p"], t["u"], t["w"])]


def aux_qp_scaled_map(a: float, bessel: SigmaGrid, gauge: str = "raw", order: int = 48):
    """Scaled double-tail q(x), p(x) from the Bessel-kernel q_inf, p_inf.

    The exponent integral of p_inf/q_inf diverges like (2a+1) log x at 0; it
    is split as (2a+1) log x + int_0^x (p_inf/q_inf - (2a+1)/y) dy, the
    normalisation under which x q p = x q_inf p_inf.  Valid up to the first
    zero of q_inf or p_inf.
    """
    if gauge == "raw":
        if a <= 0.5:
            raise DomainError(f"the raw gauge needs a > 1/2, got {a}; pass gauge='rescaled'")
        c = ((2 * a - 1) / (2 * a + 1)) ** 0.25
    elif gauge == "rescaled":
        c = 1.0
    else:
        raise DomainError(f"unknown gauge {gauge!r}")
    x0 = bessel.meta["x0"]
    X = bessel.x
    fine = bessel.resample(np.geomspace(x0, X[-1], 2000))
    if np.any(fine.tracks["q"] <= 0) or np.any(fine.tracks["p"] <= 0):
        raise DomainError("q_inf or p_inf vanishes on the grid; the exponent integrals stop there")
    k = 2 * a + 1
    rule = gauss_legendre(order)
    seed_order = bessel.meta.get("seed_order", 20)
    spec = BesselKernel(a, 1.0 / math.pi)

    def ratios(q, p, y):
        return q / p, p / q - k / y

    # below the seed point q_inf, p_inf come from small Fredholm solves
    y, w = rule.on_interval(0.0, min(x0, X[-1]))
    inner = [resolvent_at_endpoints(spec, ScaledDouble(yi), order=seed_order) for yi in y]
    rq, rp = ratios(np.array([d.q[1] for d in inner]), np.array([d.p[1] for d in inner]), y)
    head_q, head_p = float(np.sum(w * rq)), float(np.sum(w * rp))

    def integrals(x):
        if x <= x0:
            yy, ww = rule.on_interval(0.0, x)
            data = [resolvent_at_endpoints(spec, ScaledDouble(yi), order=seed_order) for yi in yy]
            rq, rp = ratios(np.array([d.q[1] for d in data]), np.array([d.p[1] for d in data]), yy)
            return float(np.sum(ww * rq)), float(np.sum(ww * rp))
        yy, ww = rule.on_interval(x0, x)
        g = bessel.resample(yy)
        rq, rp = ratios(g.tracks["q"], g.tracks["p"], yy)
        return head_q + float(np.sum(ww * rq)), head_p + float(np.sum(ww * rp))

    pref_q = c * math.exp(-ln_gamma(a + 0.5))
    pref_p = math.exp(-ln_gamma(a + 1.5)) / c
    q = np.empty_like(X)
    p = np.empty_like(X)
    for i, x in enumerate(X):
        iq, ip = integrals(x)
        q[i] = pref_q * (0.5 * x) ** a * math.exp(-iq)
        p[i] = pref_p * 0.5 ** (a + 1) * x ** (k - a) * math.exp(ip)
    return q, p


# ---------------------------------------------------------------------------
# Finite N against the scaled limits.

@dataclass(frozen=True)
class LimitReport:
    kind: str
    a: float
    y: float
    Ns: tuple
    finite: tuple
    limit: float
    deviations: tuple
    r0_finite: tuple = ()
    r0_limit: float = float("nan")
    r0_deviations: tuple = ()

    @property
    def decreasing(self) -> bool:
        d = self.deviations
        return all(d[i + 1] < d[i] for i in range(len(d) - 1))


def scaled_limit_check(a: float, y: float, Ns=(4, 8, 16, 32), kind: str = "single",
                       order: int = SEED_ORDER) -> LimitReport:
    """Compare finite-N sigma at s = cot(pi y / N) with its scaled limit (rho = 1).

    Single tail: sigma/N against tau_a(pi y)/(pi y).  Double tail: sigma/N
    against R(pi y) of the Bessel kernel and N R0 against r(pi y) = X q p.
    """
    X = math.pi * y
    finite, r0 = [], []
    for N in Ns:
        params = EnsembleParams(N, a)
        s = 1.0 / math.tan(math.pi * y / N)
        spec = FiniteCauchyKernel(params)
        if kind == "single":
            data = resolvent_at_endpoints(spec, SingleTail(s), order=order)
            finite.append((1 + s * s) * data.R[0] / N)
        elif kind == "double":
            data = resolvent_at_endpoints(spec, DoubleTail(s), order=order)
            finite.append((1 + s * s) * data.R[1] / N)
            r0.append(N * abs(data.q[1] * data.p[1]) / s)
        else:
            raise DomainError(f"unknown kind {kind!r}")
    if kind == "single":
        limit = float(integrate_scaled_single(a, X * 1.01).resample([X]).sigma[0])
        return LimitReport(kind, a, y, tuple(Ns), tuple(finite), limit,
                           tuple(abs(f - limit) for f in finite))
    g = integrate_bessel(a, X * 1.01).resample([X])
    limit = float(g.sigma[0])
    r_lim = float(abs(g.tracks["r"][0]))
    return LimitReport(kind, a, y, tuple(Ns), tuple(finite), limit, tuple(abs(f - limit) for f in finite),
                       tuple(r0), r_lim, tuple(abs(v - r_lim) for v in r0))
