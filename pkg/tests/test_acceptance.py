"""Acceptance criteria 1-14.

Each test records one PASS/FAIL line (collected into the pytest terminal
summary by conftest.py).  Run directly with ``python3 tests/test_acceptance.py``
to print only those lines.
"""

import math
import random
import sys
import time

import numpy as np
import pytest
import sympy as sp
from scipy import integrate

from cauchygap import checks, montecarlo as mc, painleve as pl, twode
from cauchygap.ensemble import (BesselKernel, DoubleTail, FiniteCauchyKernel, ScaledSingle, SineKernel, SingleTail,
                                exact_gap_double, exact_gap_single)
from cauchygap.fredholm import det_gap, resolvent_at_endpoints
from cauchygap.params import EnsembleParams
from cauchygap.specfun import OrthoPolySystem, cauchy_poly

RESULTS = {}
S_GRID = np.linspace(0.2, 10.0, 50)
CLOSED_CASES = [(N, a) for N in (1, 2) for a in (0.0, 1.0, 2.0)]


def record(k, ok, detail):
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[k] = line
    print(line)
    return ok


def _closed_agreement(kind):
    t = time.perf_counter()
    worst_f = worst_c = 0.0
    for N, a in CLOSED_CASES:
        p = EnsembleParams(N, a)
        kernel = FiniteCauchyKernel(p)
        if kind == "single":
            exact = np.array([exact_gap_single(p, s)[0] for s in S_GRID])
            fred = np.array([det_gap(kernel, SingleTail(s), order=128) for s in S_GRID])
            g = twode.integrate_single(p, grid=S_GRID)
        else:
            exact = np.array([exact_gap_double(p, s)[0] for s in S_GRID])
            fred = np.array([det_gap(kernel, DoubleTail(s), order=128) for s in S_GRID])
            g = twode.integrate_double(p, grid=S_GRID)
        worst_f = max(worst_f, float(np.max(np.abs(fred - exact))))
        worst_c = max(worst_c, float(np.max(np.abs(g.E - exact))))
    elapsed = time.perf_counter() - t
    ok = worst_f < 1e-8 and worst_c < 1e-6 and elapsed < 60
    return ok, f"fredholm {worst_f:.2e} (<1e-8), coupled {worst_c:.2e} (<1e-6), {elapsed:.1f} s (<60 s)"


def criterion_1():
    return record(1, *_closed_agreement("single"))


def criterion_2():
    return record(2, *_closed_agreement("double"))


def criterion_3():
    p = EnsembleParams(1, 0.0)
    single = 0.5 + np.arctan(S_GRID) / math.pi
    double = 2 / math.pi * np.arctan(S_GRID)
    kernel = FiniteCauchyKernel(p)
    errs = {
        "fredholm": max(np.max(np.abs([det_gap(kernel, SingleTail(s), order=128) for s in S_GRID] - single)),
                        np.max(np.abs([det_gap(kernel, DoubleTail(s), order=128) for s in S_GRID] - double))),
        "closed-form": max(np.max(np.abs([exact_gap_single(p, s)[0] for s in S_GRID] - single)),
                           np.max(np.abs([exact_gap_double(p, s)[0] for s in S_GRID] - double))),
    }
    for method in ("coupled", "sigma-ode"):
        gs = twode.integrate_single(p, grid=S_GRID, method=method)
        gd = twode.integrate_double(p, grid=S_GRID, method=method)
        errs[method] = max(np.max(np.abs(gs.E - single)), np.max(np.abs(gd.E - double)))
    ok = all(v < 1e-9 for v in errs.values())
    return record(3, ok, ", ".join(f"{k} {v:.2e}" for k, v in errs.items()) + " (<1e-9)")


def criterion_4():
    worst = {}
    for N in (1, 2, 3):
        for a in (0.0, 1.0, 2.0):
            for c in checks.residual_checks(EnsembleParams(N, a)):
                key = c.name.split(" [")[0]
                worst[key] = max(worst.get(key, 0.0), c.value)
    for a in (0.0, 1.0, 2.0):
        for c in checks.scaled_residual_checks(a):
            key = c.name.split(" [")[0]
            worst[key] = max(worst.get(key, 0.0), c.value)
    ok = all(v < checks.RESIDUAL_TOL for v in worst.values())
    return record(4, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (<1e-5 x scale)")


def criterion_5():
    worst = {}
    for N in (1, 2, 3):
        for a in (0.0, 1.0, 2.0):
            for c in checks.integral_checks(EnsembleParams(N, a)):
                key = c.name.split(" [")[0]
                worst[key] = max(worst.get(key, 0.0), c.value)
    ok = all(v < checks.INTEGRAL_TOL for v in worst.values())
    return record(5, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (<1e-7)")


def criterion_6():
    s = 50.0
    bad, worst = [], 0.0
    for N in (1, 2, 3):
        for a in (0.0, 1.0):
            p = EnsembleParams(N, a)
            single = twode.integrate_single(p, s_start=60.0).resample([s]).sigma[0]
            double = twode.integrate_double(p, s_start=60.0).resample([s]).sigma[0]
            for kind, val, lead in (("single", single, twode.asymptotic_sigma_single(p, s, terms=1)),
                                    ("double", double, twode.asymptotic_sigma_double(p, s))):
                dev = abs(val / lead - 1)
                worst = max(worst, dev)
                if dev >= 0.01:
                    bad.append(f"{kind} N={N} a={a:g} off by {100 * dev:.2f}%")
    detail = f"worst {100 * worst:.2f}% (<1%)" + ("; " + "; ".join(bad) if bad else "")
    return record(6, not bad, detail)


def criterion_7():
    x = np.linspace(0.02, 2.0, 60)
    g = twode.integrate_scaled_single(0.0, math.pi * 2.0 * 1.001).resample(math.pi * x)
    sine = SineKernel(1.0)
    fred = np.array([det_gap(sine, ScaledSingle(v), order=64) for v in x])
    gap_err = float(np.max(np.abs(g.E - fred)))
    pts = np.linspace(-3.0, 3.0, 41)
    X, Y = np.meshgrid(pts, pts + 0.0123)
    kern_err = float(np.max(np.abs(BesselKernel(0.0, 1.0)(X, Y) - sine(X, Y))))
    ok = gap_err < 1e-6 and kern_err < 1e-10
    return record(7, ok, f"tau_0 vs sine det {gap_err:.2e} (<1e-6), Bessel(a=0) vs sine kernel {kern_err:.2e} (<1e-10)")


def criterion_8():
    tau, pdf = checks.identity_checks()
    ok = tau.passed and pdf.passed
    return record(8, ok, f"tau identity {tau.value:.2e}, pdf identity {pdf.value:.2e} (<1e-5)")


def criterion_9():
    tau1 = twode.integrate_scaled_single(1.0, 5.0 * math.pi * 1.001)
    xs = np.linspace(1e-4, 5.0, 20001)
    p2 = twode.spacing_pdf(xs, tau1)
    norm = integrate.simpson(p2, x=xs)
    mean = integrate.simpson(xs * p2, x=xs)
    tail = float(tau1.resample([5.0 * math.pi]).E[0])
    small = np.linspace(0.01, 0.05, 41)
    ratio = twode.spacing_pdf(small, tau1) / small ** 2
    coeff = np.polynomial.polynomial.polyfit(small, ratio, 1)[0]
    rel = abs(coeff / (math.pi ** 2 / 3) - 1)
    ok = abs(norm - 1) < 1e-3 and abs(mean - 1) < 1e-3 and rel < 0.01
    return record(9, ok, f"int p2 - 1 = {norm - 1:.1e}, int x p2 - 1 = {mean - 1:.1e} (tail beyond 5 <= {tail:.1e}),"
                         f" p2/x^2 -> {coeff:.5f} vs pi^2/3 ({100 * rel:.2f}% < 1%)")


def criterion_10():
    found = checks.pv_checks((0.0, 1.0))
    ok = all(c.passed for c in found)
    return record(10, ok, ", ".join(f"{c.name} {c.value:.1e}" for c in found))


def _symbolic_sets(N, a_float):
    """Independent exact transcription of every parameter set, as %.15e strings."""
    N, a = sp.Integer(N), sp.Rational(a_float)
    h = sp.Rational(1, 2)
    m, nn = N + a, N * (N + 2 * a)
    out = []
    for e in (1, -1):
        out += [(1, e, (h, -h * m ** 2, h * m ** 2, h - 2 * a ** 2)),
                (2, e, (h * (1 + 2 * e * a) ** 2, -h * m ** 2, h * m ** 2, h)),
                (3, e, (h * (1 + e * (N + 2 * a)) ** 2, -h * a ** 2, h * a ** 2, h * (1 - N ** 2))),
                (4, e, (h * (1 + e * N) ** 2, -h * a ** 2, h * a ** 2, h * (1 - (N + 2 * a) ** 2))),
                (5, e, (h * (1 + e * m) ** 2, 0, 2 * a ** 2, h * (1 - m ** 2))),
                (6, e, (h * (1 + e * m) ** 2, -2 * a ** 2, 0, h * (1 - m ** 2))),
                (7, e, (h * (1 + e * a) ** 2, -h * nn, 2 * a ** 2 + h * nn, h * (1 - a ** 2))),
                (8, e, (h * (1 + e * a) ** 2, 2 * a ** 2 - h * nn, h * nn, h * (1 - a ** 2)))]
    scaled = {
        "tau": [(h * (1 - 2 * a) ** 2, 0, 0, 2), (h * (1 + 2 * a) ** 2, 0, 0, 2)],
        "tau_alt": [(h, -2 * a ** 2, 0, 2)],
        "bessel": [(sp.Rational(1, 32) * (1 - 2 * a) ** 2, -sp.Rational(1, 32) * (1 - 2 * a) ** 2, 0, -2)],
        "double": [(sp.Rational(1, 8), -sp.Rational(1, 8) * (1 - 2 * a) ** 2, 0, h * (1 - m ** 2)),
                   (sp.Rational(1, 8), -sp.Rational(1, 8) * (1 + 2 * a) ** 2, 0, h * (1 - m ** 2))],
    }
    fmt = lambda vals: tuple("%.15e" % float(sp.Rational(v)) for v in vals)
    table = {(row, e): fmt(v) for row, e, v in out}
    return table, {k: [fmt(v) for v in vs] for k, vs in scaled.items()}


def criterion_11():
    rng = random.Random(20240611)
    pairs = [(rng.randint(1, 12), round(rng.uniform(0, 5), rng.randint(0, 3))) for _ in range(5)]
    mismatches = 0
    for N, a in pairs:
        table, scaled = _symbolic_sets(N, a)
        for row in pl.pvi_parameter_table(EnsembleParams(N, a)):
            for e, branch in zip((1, -1), row.branches):
                mismatches += tuple("%.15e" % v for v in branch.as_tuple()) != table[(row.row, e)]
        for key, branches in pl.scaled_pv_params(a, N).items():
            got = [tuple("%.15e" % v for v in b.as_tuple()) for b in branches]
            mismatches += got != scaled[key]
    return record(11, mismatches == 0, f"{mismatches} mismatches over (N, a) = {pairs}")


def criterion_12():
    t = time.perf_counter()
    cases = (("single", -1.0), ("single", 0.5), ("single", 2.0), ("double", 0.5), ("double", 1.5))
    worst = 20
    for N, a in CLOSED_CASES:
        p = EnsembleParams(N, a)
        cfg = mc.MCConfig(p)
        misses, n = checks.mc_calibration(p, cases=cases, seeds=range(20), config=cfg)
        worst = min(worst, min(n - m for m in misses.values()))
        assert cfg.n_samples >= 200_000
    elapsed = time.perf_counter() - t
    ok = worst >= 18 and elapsed < 300
    return record(12, ok, f"worst case {worst}/20 seeds within 3 stderr (>=18), {elapsed:.0f} s (<300 s)")


def criterion_13():
    bad, parts = [], []
    for a in (0.0, 1.0):
        for y in (0.2, 0.5):
            for kind in ("single", "double"):
                rep = twode.scaled_limit_check(a, y, kind=kind)
                parts.append(f"{kind[0]} a={a:g} y={y:g}: " + "/".join(f"{d:.1e}" for d in rep.deviations))
                if not rep.decreasing:
                    bad.append(parts[-1])
    return record(13, not bad, "; ".join(bad or parts[:2]) + ("" if bad else " ... all strictly decreasing"))


def _gram(N, a):
    system = OrthoPolySystem.build(EnsembleParams(N, a))
    w = lambda x: (1 + x * x) ** (-(N + a))
    G = np.empty((N, N))
    for i in range(N):
        for j in range(i, N):
            f = lambda x: cauchy_poly(system, i, x) * cauchy_poly(system, j, x) * w(x)
            G[i, j] = G[j, i] = integrate.quad(f, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
    return G


def criterion_14():
    worst = 0.0
    for N in (1, 2, 3, 5):
        for a in (0.0, 0.75, 1.0, 2.0):
            worst = max(worst, float(np.max(np.abs(_gram(N, a) - np.eye(N)))))
    return record(14, worst < 1e-10, f"max |G - I| = {worst:.2e} (<1e-10)")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13, criterion_14]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 15)])
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    failed = [c for c in CRITERIA if not c()]
    sys.exit(1 if failed else 0)
