import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from cauchygap.ensemble import (BesselKernel, DoubleTail, FiniteCauchyKernel, SineKernel, Union, closed_form_x,
                                correlation, double_gap_forms, exact_gap_double, exact_gap_single, gauge_factor,
                                phi_psi, stereo_to_circle, stereo_to_line, weight)
from cauchygap.errors import DomainError
from cauchygap.params import EnsembleParams

a_st = st.sampled_from([0.0, 0.3, 0.5, 1.0, 1.7, 2.0])
params_st = st.builds(EnsembleParams, st.integers(1, 5), a_st)


def test_params_validation():
    with pytest.raises(DomainError):
        EnsembleParams(0, 1.0)
    with pytest.raises(DomainError):
        EnsembleParams(2, -0.1)
    assert EnsembleParams(3, 1).kappa == pytest.approx(math.sqrt(15))


def test_weight_is_cauchy_at_a_zero_n_one():
    assert weight(EnsembleParams(1, 0.0), 2.0) == pytest.approx(0.2)


@given(st.floats(-20, 20))
def test_n1_a0_closed_forms(s):
    p = EnsembleParams(1, 0.0)
    assert exact_gap_single(p, s)[0] == pytest.approx(0.5 + math.atan(s) / math.pi, abs=1e-14)
    if s > 0.05:
        assert exact_gap_double(p, s)[0] == pytest.approx(2 / math.pi * math.atan(s), abs=1e-14)


@given(st.floats(0.0, 4.0), st.floats(0.6, 1.6))
def test_closed_form_branches_agree(a, s):
    assert closed_form_x(a, s, "direct") == pytest.approx(closed_form_x(a, s, "inverse"), rel=1e-12)


@given(st.integers(1, 2), st.floats(0.0, 3.0), st.floats(0.4, 2.5))
def test_double_closed_form_branches_agree(N, a, s):
    direct, inverse = double_gap_forms(EnsembleParams(N, a), s)
    assert direct == pytest.approx(inverse, rel=1e-11)


def test_closed_forms_only_for_small_n():
    with pytest.raises(DomainError):
        exact_gap_single(EnsembleParams(3, 0.0), 1.0)


@given(params_st, st.floats(-15, 15))
def test_phi_psi_satisfy_first_order_system(params, x):
    h = 1e-5 * max(1.0, abs(x))
    (fm, pm), (f0, p0), (fp, pp) = (phi_psi(params, v) for v in (x - h, x, x + h))
    df, dp = (fp - fm) / (2 * h), (pp - pm) / (2 * h)
    g, a, k = 1 + x * x, params.a, params.kappa
    scale = abs(a * x * f0) + abs(k * p0) + abs(k * f0) + 1e-12
    assert g * df == pytest.approx(-a * x * f0 + k * p0, abs=1e-6 * scale)
    assert g * dp == pytest.approx(-k * f0 + a * x * p0, abs=1e-6 * scale)


@given(st.integers(1, 4), st.sampled_from([0.75, 1.0, 2.5]), st.floats(-10, 10))
def test_raw_and_rescaled_gauges(N, a, x):
    p = EnsembleParams(N, a)
    c = gauge_factor(a)
    fr, pr = phi_psi(p, x, "raw")
    f, q = phi_psi(p, x)
    assert f == pytest.approx(c * fr, rel=1e-10, abs=1e-14)
    assert q == pytest.approx(pr / c, rel=1e-10, abs=1e-14)


def test_raw_gauge_needs_a_above_half():
    with pytest.raises(DomainError):
        phi_psi(EnsembleParams(2, 0.5), 0.0, "raw")


@given(params_st, st.floats(-5, 5), st.floats(-5, 5))
def test_kernel_symmetric(params, x, y):
    K = FiniteCauchyKernel(params)
    assert K(x, y) == pytest.approx(K(y, x), rel=1e-12, abs=1e-14)


@given(params_st, st.floats(-5, 5))
def test_kernel_diagonal_is_limit(params, x):
    K = FiniteCauchyKernel(params)
    # symmetric kernel: K(x, x+h) = K(m, m) + O(h^2) at the midpoint m
    assert K(x, x + 1e-4) == pytest.approx(float(K.diag(x + 0.5e-4)), rel=1e-7)


@pytest.mark.parametrize("N,a", [(1, 0.0), (2, 1.0), (3, 0.5), (4, 2.0)])
def test_density_integrates_to_n(N, a):
    K = FiniteCauchyKernel(EnsembleParams(N, a))
    total = integrate.quad(lambda x: K.diag(np.array(x)), -np.inf, np.inf, epsabs=1e-12, limit=200)[0]
    assert total == pytest.approx(N, rel=1e-9)


def test_correlation_one_point_is_density():
    K = FiniteCauchyKernel(EnsembleParams(1, 0.0))
    assert correlation(K, [0.7]) == pytest.approx(1 / (math.pi * (1 + 0.49)), rel=1e-12)
    assert correlation(K, []) == 1.0
    # pair correlation vanishes on the diagonal
    assert abs(correlation(FiniteCauchyKernel(EnsembleParams(3, 1.0)), [0.4, 0.4])) < 1e-10


def test_bessel_a0_is_sine_kernel():
    x = np.linspace(-4, 4, 33)
    X, Y = np.meshgrid(x, x + 0.01)
    np.testing.assert_allclose(BesselKernel(0.0, 1.3)(X, Y), SineKernel(1.3)(X, Y), atol=1e-10)


@given(st.floats(0.01, 6.2))
def test_stereographic_round_trip(theta):
    assert stereo_to_circle(stereo_to_line(theta)) == pytest.approx(theta, rel=1e-12)


def test_stereographic_infinity():
    assert stereo_to_line(0.0) == math.inf
    assert stereo_to_circle(math.inf) == 0.0


def test_interval_validation():
    with pytest.raises(DomainError):
        DoubleTail(0.0)
    with pytest.raises(DomainError):
        Union(((0.0, 2.0), (1.0, 3.0)))
    assert Union(((-1.0, 0.0), (2.0, math.inf))).endpoints() == [-1.0, 0.0, 2.0]
