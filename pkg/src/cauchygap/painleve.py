"""Painleve parameter sets and numerical checks of the transcendent identities.

Parameter tables are evaluated in exact rational arithmetic on the binary
value of ``a`` and rounded once, so every entry is the correctly rounded
value of its formula.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .params import EnsembleParams
from .twode import SigmaGrid, centered_derivative

FAMILIES = ("PV", "PVI")
HALF = Fraction(1, 2)


@dataclass(frozen=True)
class PainleveParams:
    family: str
    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if not all(math.isfinite(v) for v in self.as_tuple()):
            raise DomainError(f"non-finite Painleve parameters {self.as_tuple()}")

    def as_tuple(self):
        return (self.alpha, self.beta, self.gamma, self.delta)


@dataclass(frozen=True)
class TableRow:
    """One row of the single-interval table; ``branches`` is (upper sign, lower sign)."""

    row: int
    branches: tuple


@dataclass(frozen=True)
class CanonicalCoeffs:
    A1: float
    A2: float
    A3: float
    A4: float


def _pvi(*vals):
    return PainleveParams("PVI", *(float(v) for v in vals))


def _pv(*vals):
    return PainleveParams("PV", *(float(v) for v in vals))


def pvi_parameter_table(params: EnsembleParams) -> list:
    N, a = Fraction(params.N), Fraction(params.a)
    m = N + a
    nn = N * (N + 2 * a)
    rows = [
        lambda e: (HALF, -HALF * m ** 2, HALF * m ** 2, HALF - 2 * a ** 2),
        lambda e: (HALF * (1 + e * 2 * a) ** 2, -HALF * m ** 2, HALF * m ** 2, HALF),
        lambda e: (HALF * (1 + e * (N + 2 * a)) ** 2, -HALF * a ** 2, HALF * a ** 2, HALF * (1 - N ** 2)),
        lambda e: (HALF * (1 + e * N) ** 2, -HALF * a ** 2, HALF * a ** 2, HALF * (1 - (N + 2 * a) ** 2)),
        lambda e: (HALF * (1 + e * m) ** 2, 0, 2 * a ** 2, HALF * (1 - m ** 2)),
        lambda e: (HALF * (1 + e * m) ** 2, -2 * a ** 2, 0, HALF * (1 - m ** 2)),
        lambda e: (HALF * (1 + e * a) ** 2, -HALF * nn, 2 * a ** 2 + HALF * nn, HALF * (1 - a ** 2)),
        lambda e: (HALF * (1 + e * a) ** 2, 2 * a ** 2 - HALF * nn, HALF * nn, HALF * (1 - a ** 2)),
    ]
    return [TableRow(i + 1, (_pvi(*f(1)), _pvi(*f(-1)))) for i, f in enumerate(rows)]


def canonical_coeffs_single(params: EnsembleParams) -> CanonicalCoeffs:
    a = Fraction(params.a)
    nn = params.N * (params.N + 2 * a)
    return CanonicalCoeffs(float(3 * a ** 2 + nn), 0.0, float(3 * a ** 4 + 2 * a ** 2 * nn),
                           float(a ** 6 + a ** 4 * nn))


def scaled_pv_params(a: float, N: int | None = None) -> dict:
    """Parameter sets of the scaled and double-interval reductions, keyed by context.

    ``"tau"``: (minus, plus) branches for tau_a, ``"tau_alt"``: the second
    solution set, ``"bessel"``: the set for the Bessel-kernel p(x),
    ``"double"``: (minus, plus) branches for the double-interval R0 (only
    when N is given).
    """
    af = Fraction(a)
    out = {
        "tau": tuple(_pv(HALF * (1 + e * 2 * af) ** 2, 0, 0, 2) for e in (-1, 1)),
        "tau_alt": (_pv(HALF, -2 * af ** 2, 0, 2),),
        "bessel": (_pv(Fraction(1, 32) * (1 - 2 * af) ** 2, -Fraction(1, 32) * (1 - 2 * af) ** 2, 0, -2),),
    }
    if N is not None:
        m = N + af
        out["double"] = tuple(_pvi(Fraction(1, 8), -Fraction(1, 8) * (1 + e * 2 * af) ** 2, 0, HALF * (1 - m ** 2))
                              for e in (-1, 1))
    return out


# ---------------------------------------------------------------------------
# Gauge map of the single-interval sigma onto the canonical variables.

@dataclass(frozen=True)
class GaugeTrack:
    t: np.ndarray
    eta: np.ndarray


def gauge_map_single(params: EnsembleParams, grid: SigmaGrid) -> GaugeTrack:
    s = np.asarray(grid.x, dtype=float)
    return GaugeTrack(0.5 * (1 - 1j * s), (grid.sigma - params.a ** 2 * s) / 2j)


def gauge_inverse(params: EnsembleParams, t, eta):
    """(s, sigma) from (t, eta)."""
    s = (1j * (2 * np.asarray(t) - 1)).real
    return s, (2j * np.asarray(eta)).real + params.a ** 2 * s


# ---------------------------------------------------------------------------
# Identities between scaled transcendents.

@dataclass(frozen=True)
class IdentityReport:
    max_residual: float
    x: np.ndarray
    residual: np.ndarray
    skipped: tuple


def _on_grid(grid, x):
    return grid if x is None else grid.resample(x)


def tau_identity_residual(tau0: SigmaGrid, tau1: SigmaGrid, x=None, x_min: float = 0.05,
                          floor: float = 1e-12, perturb: float = 0.0) -> IdentityReport:
    """max |tau_1 - (1 + tau_0 - x tau_0'/tau_0)| with tau_0' by centered differences.

    Points below ``x_min`` or where tau_0 < ``floor`` are skipped and listed.
    ``perturb`` adds a constant to tau_1 (sensitivity check).
    """
    g0, g1 = _on_grid(tau0, x), _on_grid(tau1, x)
    if not np.array_equal(g0.x, g1.x):
        raise DomainError("tau grids must share the abscissa")
    X = g0.x
    t0 = g0.tracks["tau"]
    t1 = g1.tracks["tau"] + perturb
    d0 = centered_derivative(g0, "tau") if g0.builder is not None else np.gradient(t0, X, edge_order=2)
    keep = (X >= x_min) & (np.abs(t0) >= floor)
    res = np.abs(t1[keep] - (1 + t0[keep] - X[keep] * d0[keep] / t0[keep]))
    return IdentityReport(float(np.max(res, initial=0.0)), X[keep], res, tuple(X[~keep]))


def pdf_identity_residual(tau0: SigmaGrid, tau1: SigmaGrid, x=None, rho: float = 1.0) -> IdentityReport:
    """max |-(1/rho) dE(0;(0,x);0)/dx - E(0;(0,x);1)| in physical x, derivative by centered differences."""
    g0, g1 = _on_grid(tau0, x), _on_grid(tau1, x)
    X = g0.x
    dE = centered_derivative(g0, "E") if g0.builder is not None else np.gradient(g0.E, X, edge_order=2)
    # d/dx = pi rho d/dX
    res = np.abs(-math.pi * dE - g1.E)
    return IdentityReport(float(np.max(res)), X / (math.pi * rho), res, ())


@dataclass(frozen=True)
class PVReport:
    max_residual: float
    q_error: float
    sigma1_error: float
    x: np.ndarray
    residual: np.ndarray
    skipped: tuple
    convention: str = "y'' = (1/(2y) + 1/(y-1)) y'^2 - y'/x + (y-1)^2 (alpha y + beta/y)/x^2 + gamma y/x + delta y (y+1)/(y-1)"


def _bessel_derivatives(a, x, q, p):
    """p', p'' (and q') from the coupled Bessel system, with c = a + 2qp."""
    c = a + 2 * q * p
    dq = p - c * q / x
    dp = -q + c * p / x
    dc = 2 * (dq * p + q * dp)
    d2p = -dq + (dc * p + c * dp) / x - c * p / (x * x)
    return dq, dp, d2p


def pv_residual_bessel(a: float, bessel: SigmaGrid, x=None, x_range=(0.1, 3.0), pole_guard: float = 1e-6,
                       derivatives: str = "analytic") -> PVReport:
    """Residual of the PV equation for y = (p + sqrt(x/2))/(p - sqrt(x/2)), relative to its term scale.

    ``derivatives="fd"`` takes p' and p'' by finite differences on the grid
    instead of from the system (used to check the order of the residual).
    Also compares the q and sigma_1 formulas in terms of y against the track.
    """
    g = _on_grid(bessel, x)
    X = g.x
    keep = (X >= x_range[0]) & (X <= x_range[1])
    X = X[keep]
    q, p = g.tracks["q"][keep], g.tracks["p"][keep]
    if derivatives == "analytic":
        _, dp, d2p = _bessel_derivatives(a, X, q, p)
    elif derivatives == "fd":
        dp = np.gradient(p, X, edge_order=2)
        d2p = np.gradient(dp, X, edge_order=2)
        # one-sided stencils of the nested gradient are only first order
        X, q, p, dp, d2p = (v[2:-2] for v in (X, q, p, dp, d2p))
        keep = np.flatnonzero(keep)[2:-2]
    else:
        raise DomainError(f"unknown derivative mode {derivatives!r}")
    r = np.sqrt(0.5 * X)
    dr = r / (2 * X)
    d2r = -r / (4 * X * X)
    num, den = p + r, p - r
    ok = np.abs(den) > pole_guard
    skipped = tuple(X[~ok])
    X, q, p, dp, d2p, r, dr, d2r, num, den = (v[ok] for v in (X, q, p, dp, d2p, r, dr, d2r, num, den))
    dnum, dden = dp + dr, dp - dr
    y = num / den
    y1 = (dnum * den - num * dden) / den ** 2
    y2 = (d2p + d2r) / den - (d2p - d2r) * num / den ** 2 - 2 * dden * y1 / den
    al, be, ga, de = scaled_pv_params(a)["bessel"][0].as_tuple()
    terms = [-y2, (1 / (2 * y) + 1 / (y - 1)) * y1 * y1, -y1 / X, (y - 1) ** 2 * (al * y + be / y) / X ** 2,
             ga * y / X, de * y * (y + 1) / (y - 1)]
    res = sum(terms)
    scale = sum(np.abs(t) for t in terms)
    rel = np.abs(res) / scale
    q_formula = np.sqrt(2 / X) / (4 * y) * (-X * y1 + 0.25 * (2 * a - 1) * (1 - y * y))
    s1_formula = ((X * y1 / (1 - y) + 0.25 * (1 + y)) ** 2 / y - 0.25 * a * a * (1 + y) ** 2 / y
                  - X * X * ((1 + y) / (1 - y)) ** 2)
    s1_track = g.tracks["sigma1"][keep][ok]
    return PVReport(float(np.max(rel, initial=0.0)), float(np.max(np.abs(q_formula - q), initial=0.0)),
                    float(np.max(np.abs(s1_formula - s1_track), initial=0.0)), X, rel, skipped)
