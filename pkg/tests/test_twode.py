import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cauchygap import twode
from cauchygap.ensemble import (BesselKernel, DoubleTail, FiniteCauchyKernel, ScaledDouble, ScaledSingle,
                                exact_gap_double, exact_gap_single)
from cauchygap.errors import DomainError, IntegrationError
from cauchygap.fredholm import det_gap, resolvent_at_endpoints
from cauchygap.params import EnsembleParams

GRID = np.linspace(0.2, 10.0, 25)


@pytest.mark.parametrize("method", ["coupled", "sigma-ode"])
@pytest.mark.parametrize("N,a", [(1, 0.0), (2, 0.0), (1, 1.0), (2, 2.0)])
def test_single_routes_match_closed_forms(method, N, a):
    p = EnsembleParams(N, a)
    g = twode.integrate_single(p, grid=GRID, method=method)
    exact = np.array([exact_gap_single(p, s) for s in GRID])
    np.testing.assert_allclose(g.E, exact[:, 0], atol=1e-6)
    np.testing.assert_allclose(g.sigma, exact[:, 1], rtol=1e-4)
    assert g.is_monotone()


@pytest.mark.parametrize("method", ["coupled", "sigma-ode"])
@pytest.mark.parametrize("N,a", [(1, 0.0), (2, 0.0), (1, 1.0), (2, 2.0)])
def test_double_routes_match_closed_forms(method, N, a):
    p = EnsembleParams(N, a)
    g = twode.integrate_double(p, grid=GRID, method=method)
    exact = np.array([exact_gap_double(p, s) for s in GRID])
    np.testing.assert_allclose(g.E, exact[:, 0], atol=1e-6)
    np.testing.assert_allclose(g.sigma, exact[:, 1], rtol=1e-4)
    # F = a s + 2 (1+s^2) R0
    np.testing.assert_allclose(g.tracks["F"], exact[:, 2], rtol=1e-4)


def test_coupled_rejects_small_positive_a():
    with pytest.raises(DomainError, match="sigma-ode"):
        twode.integrate_single(EnsembleParams(2, 0.3))
    with pytest.raises(DomainError):
        twode.integrate_double(EnsembleParams(2, 0.5))


def test_sigma_route_covers_small_positive_a():
    p = EnsembleParams(2, 0.3)
    s = np.array([0.5, 2.0])
    g = twode.integrate_single(p, grid=s, method="sigma-ode")
    ref = [det_gap(FiniteCauchyKernel(p), twode.SingleTail(v), 256) for v in s]
    np.testing.assert_allclose(g.E, ref, atol=1e-7)


def test_sigma_grid_validation():
    x = np.array([1.0, 2.0])
    with pytest.raises(DomainError):
        twode.SigmaGrid("magic", x, x, x, np.array([0.5, 0.6]))
    with pytest.raises(DomainError):
        twode.SigmaGrid("coupled", x[::-1], x, x, np.array([0.5, 0.6]))
    with pytest.raises(IntegrationError):
        twode.SigmaGrid("coupled", x, x, x, np.array([0.5, 1.2]))


@pytest.mark.parametrize("N,a", [(1, 1.0), (2, 2.0), (3, 1.0)])
def test_double_qp_recovered_from_sigma_and_r0(N, a):
    p = EnsembleParams(N, a)
    g = twode.integrate_double(p, points=600)
    q, pp = twode.aux_qp_double(p, g)
    np.testing.assert_allclose(q, g.tracks["q"], rtol=1e-6)
    np.testing.assert_allclose(pp, g.tracks["p"], rtol=1e-6)


@pytest.mark.parametrize("N,a", [(1, 1.0), (2, 2.0)])
def test_double_qp_large_s_asymptotics(N, a):
    p = EnsembleParams(N, a)
    g = twode.integrate_double(p, s_start=400.0).resample([300.0])
    cq, cp = twode.asymptotic_qp_double(p)
    assert g.tracks["q"][0] * 600.0 ** a == pytest.approx(cq, rel=1e-2)
    assert g.tracks["p"][0] * 600.0 ** (a + 1) == pytest.approx(cp, rel=1e-2)


@pytest.mark.parametrize("N,a", [(1, 1.0), (3, 2.0)])
def test_states_from_resolvent_satisfy_integrals(N, a):
    p = EnsembleParams(N, a)
    data = resolvent_at_endpoints(FiniteCauchyKernel(p), twode.SingleTail(3.0))
    st_ = twode.TWStateSingle.from_resolvent(p, data)
    assert max(abs(v) for v in st_.integrals()) < 1e-9 * (1 + p.kappa ** 2)
    data = resolvent_at_endpoints(FiniteCauchyKernel(p), DoubleTail(3.0))
    assert abs(twode.TWStateDouble.from_resolvent(p, data).integral()) < 1e-9 * (1 + p.kappa ** 2)


@pytest.mark.parametrize("a", [0.0, 0.5, 1.0, 2.0])
def test_tau_route_matches_bessel_fredholm(a):
    X = np.array([0.3, 1.0, 3.0, 6.0])
    g = twode.integrate_scaled_single(a, 6.5).resample(X)
    ref = [det_gap(BesselKernel(a, 1 / math.pi), ScaledSingle(x), 64) for x in X]
    np.testing.assert_allclose(g.E, ref, atol=1e-9)


@pytest.mark.parametrize("a", [0.0, 1.0, 2.0])
def test_bessel_route_matches_fredholm(a):
    X = np.array([0.01, 0.5, 2.0, 5.0])
    g = twode.integrate_bessel(a, 5.5).resample(X)
    ref = [det_gap(BesselKernel(a, 1 / math.pi), ScaledDouble(x), 64) for x in X]
    np.testing.assert_allclose(g.E, ref, atol=1e-9)


@given(st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.0]), st.floats(1e-6, 1e-3))
@settings(max_examples=15)
def test_tau_small_x_series(a, X):
    g = twode.integrate_scaled_single(a, 0.5).resample([X])
    assert g.tracks["tau"][0] / twode.tau_leading(a, X) == pytest.approx(1.0, abs=10 * X)


def test_spacing_density_properties():
    x = np.linspace(1e-4, 5.0, 8001)
    p2 = twode.spacing_pdf(x)
    assert np.all(p2 >= 0)
    assert np.trapezoid(p2, x) == pytest.approx(1.0, abs=1e-5)
    small = np.array([0.01, 0.02])
    np.testing.assert_allclose(twode.spacing_pdf(small) / small ** 2, math.pi ** 2 / 3, rtol=2e-3)
    with pytest.raises(DomainError):
        twode.spacing_pdf([0.0])


@pytest.mark.parametrize("a,gauge", [(0.0, "rescaled"), (1.0, "raw"), (2.0, "raw")])
def test_scaled_map_reproduces_xqp(a, gauge):
    b = twode.integrate_bessel(a, 1.5, grid=np.array([0.01, 0.3, 1.0, 1.5]))
    q, p = twode.aux_qp_scaled_map(a, b, gauge=gauge)
    np.testing.assert_allclose(b.x * q * p, b.tracks["r"], rtol=1e-8)


def test_scaled_map_raw_gauge_needs_a_above_half():
    b = twode.integrate_bessel(0.0, 1.0, points=10)
    with pytest.raises(DomainError):
        twode.aux_qp_scaled_map(0.0, b, gauge="raw")


def test_finite_n_approaches_scaled_limit():
    rep = twode.scaled_limit_check(1.0, 0.5, kind="single")
    assert rep.decreasing
    rep = twode.scaled_limit_check(0.0, 0.2, kind="double")
    assert rep.decreasing
    assert all(rep.r0_deviations[i + 1] < rep.r0_deviations[i] for i in range(3))


def test_resample_matches_direct_grid():
    p = EnsembleParams(2, 1.0)
    g = twode.integrate_single(p, grid=GRID)
    h = g.resample(GRID[::3])
    np.testing.assert_allclose(h.E, g.E[::3], rtol=1e-14)
