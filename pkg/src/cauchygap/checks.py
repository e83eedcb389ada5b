"""Named numerical checks with tolerances, shared by ``cauchygap verify`` and the tests.

Each check returns a :class:`Check`; residuals are reported relative to the
sum of magnitudes of the terms of the equation at each point.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import montecarlo as mc
from . import painleve as pl
from . import twode
from .ensemble import DoubleTail, FiniteCauchyKernel, SingleTail, exact_gap_double, exact_gap_single
from .errors import DomainError
from .fredholm import det_gap
from .params import EnsembleParams

RESIDUAL_TOL = 1e-5
INTEGRAL_TOL = 1e-7
IDENTITY_TOL = 1e-5


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value < self.tolerance)


def _rel_max(res_scale):
    res, scale = res_scale
    return float(np.max(np.abs(res) / scale))


def coupled_available(params: EnsembleParams) -> bool:
    return not 0 < params.a <= 0.5


def _derivative(grid, name, track):
    """Integrated derivative track when the route carries one, else centered differences."""
    return grid.tracks[track] if track in grid.tracks else twode.centered_derivative(grid, name)


def residual_checks(params: EnsembleParams, methods=("coupled", "sigma-ode"), s_end: float = 0.2):
    out = []
    for method in methods:
        if method == "coupled" and not coupled_available(params):
            continue
        g = twode.integrate_single(params, s_end=s_end, method=method)
        out.append(Check(f"single sigma residual [{method}]", _rel_max(twode.sigma_residual_single(
            params, g.x, g.sigma, g.dsigma, _derivative(g, "dsigma", "d2sigma"), with_scale=True)), RESIDUAL_TOL))
        g = twode.integrate_double(params, s_end=s_end, method=method)
        out.append(Check(f"double sigma residual [{method}]", _rel_max(twode.sigma_residual_double(
            params, g.x, g.sigma, g.dsigma, _derivative(g, "dsigma", "d2sigma"), with_scale=True)), RESIDUAL_TOL))
        out.append(Check(f"double R0 residual [{method}]", _rel_max(twode.r0_residual_double(
            params, g.x, g.tracks["R0"], g.tracks["dR0"], _derivative(g, "dR0", "d2R0"), with_scale=True)),
            RESIDUAL_TOL))
    return out


def scaled_residual_checks(a: float, x_end: float = 8.0):
    d = twode.centered_derivative
    g = twode.integrate_scaled_single(a, x_end)
    tau = Check(f"tau residual [a={a:g}]", _rel_max(twode.tau_residual(
        a, g.x, g.tracks["tau"], g.tracks["dtau"], _derivative(g, "dtau", "d2tau"), with_scale=True)), RESIDUAL_TOL)
    b = twode.integrate_bessel(a, x_end)
    # sigma1 is a function of r = 2X
    s1 = Check(f"sigma1 residual [a={a:g}]", _rel_max(twode.sigma1_residual(
        a, 2 * b.x, b.tracks["sigma1"], b.tracks["dsigma1"], 0.5 * d(b, "dsigma1"), with_scale=True)),
        RESIDUAL_TOL)
    return [tau, s1]


def integral_checks(params: EnsembleParams, a_scaled: float | None = None):
    out = []
    scale = 1 + params.kappa ** 2
    if coupled_available(params):
        g = twode.integrate_single(params)
        names = ["second_integral"] if g.meta["route"] == "rotated" else ["first_integral", "second_integral"]
        for name in names:
            out.append(Check(f"single {name.replace('_', ' ')}", float(np.max(np.abs(g.tracks[name]))) / scale,
                             INTEGRAL_TOL))
        g = twode.integrate_double(params)
        out.append(Check("double integral", float(np.max(np.abs(g.tracks["integral"]))) / scale, INTEGRAL_TOL))
    a = params.a if a_scaled is None else a_scaled
    b = twode.integrate_bessel(a, 8.0)
    out.append(Check(f"Bessel integral [a={a:g}]", float(np.max(np.abs(b.tracks["integral"]))), INTEGRAL_TOL))
    return out


def identity_checks(perturb: float = 0.0):
    t0 = twode.integrate_scaled_single(0.0, 4.2)
    t1 = twode.integrate_scaled_single(1.0, 4.2)
    x = np.linspace(0.05, 4.0, 400)
    tau = pl.tau_identity_residual(t0, t1, x=x, perturb=perturb)
    pdf = pl.pdf_identity_residual(t0, t1, x=np.linspace(0.01, 4.0, 400))
    return [Check("tau_1 = 1 + tau_0 - x tau_0'/tau_0", tau.max_residual, IDENTITY_TOL),
            Check("-dE_0/dx = E_1", pdf.max_residual, IDENTITY_TOL)]


def pv_checks(a_values=(0.0, 1.0)):
    out = []
    for a in a_values:
        b = twode.integrate_bessel(a, 3.5)
        rep = pl.pv_residual_bessel(a, b, x=np.linspace(0.1, 3.0, 300))
        out += [Check(f"PV residual [a={a:g}]", rep.max_residual, RESIDUAL_TOL),
                Check(f"q from y [a={a:g}]", rep.q_error, IDENTITY_TOL),
                Check(f"sigma1 from y [a={a:g}]", rep.sigma1_error, IDENTITY_TOL)]
    return out


def reference_gap(params: EnsembleParams, kind: str, s: float) -> float:
    """Closed form when N <= 2, Fredholm otherwise."""
    if params.N <= 2:
        return exact_gap_single(params, s)[0] if kind == "single" else exact_gap_double(params, s)[0]
    I = SingleTail(s) if kind == "single" else DoubleTail(s)
    return det_gap(FiniteCauchyKernel(params), I, order=128)


def mc_calibration(params: EnsembleParams, cases=(("single", 1.0), ("double", 1.0)), seeds=range(20),
                   config: mc.MCConfig | None = None, threads: int = 1):
    """For each case, the number of seeds whose estimate lies outside 3 standard errors."""
    config = config or mc.MCConfig(params)
    if config.params != params:
        raise DomainError("config parameters differ from params")
    exact = {c: reference_gap(params, *c) for c in cases}
    misses = {c: 0 for c in cases}
    runs = mc.run_seeds(config, seeds, threads)
    for samples in runs:
        for kind, s in cases:
            est = mc.estimate_gap(samples, SingleTail(s) if kind == "single" else DoubleTail(s))
            misses[(kind, s)] += not est.within(exact[(kind, s)])
    return misses, len(runs)


def mc_checks(params: EnsembleParams, seeds=range(20), threads: int = 1):
    misses, n = mc_calibration(params, seeds=seeds, threads=threads)
    # at 3 sigma P(miss) ~ 0.0027, so 3 or more misses out of 20 has probability ~ 1e-5
    allowed = max(1, math.floor(0.1 * n))
    return [Check(f"MC {kind} s={s:g} misses out of {n}", float(m), allowed + 0.5) for (kind, s), m in misses.items()]


def all_checks(params: EnsembleParams, perturb: float = 0.0, mc_seeds=range(20), threads: int = 1):
    out = residual_checks(params)
    out += scaled_residual_checks(params.a)
    out += integral_checks(params)
    out += identity_checks(perturb)
    out += pv_checks()
    if mc_seeds:
        out += mc_checks(params, mc_seeds, threads)
    return out
