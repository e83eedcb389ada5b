import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cauchygap import montecarlo as mc
from cauchygap.ensemble import DoubleTail, FiniteCauchyKernel, SingleTail, Union
from cauchygap.errors import DomainError
from cauchygap.fredholm import det_gap
from cauchygap.params import EnsembleParams


@pytest.fixture(scope="module")
def cauchy_samples():
    return mc.sample(mc.MCConfig(EnsembleParams(1, 0.0), seed=7))


def test_config_validation():
    p = EnsembleParams(1)
    with pytest.raises(DomainError):
        mc.MCConfig(p, sweeps=10, burn_in=10)
    with pytest.raises(DomainError):
        mc.MCConfig(p, proposal_width=0.0)
    with pytest.raises(DomainError):
        mc.MCConfig(p, thinning=0)
    assert mc.MCConfig(p, sweeps=300, burn_in=100, thinning=2, walkers=2000).n_samples == 200_000


def test_same_seed_same_stream():
    cfg = mc.MCConfig(EnsembleParams(2, 1.0), sweeps=30, burn_in=10, walkers=50, seed=3)
    a, b = mc.sample(cfg), mc.sample(cfg)
    np.testing.assert_array_equal(a.configs, b.configs)
    c = mc.sample(mc.MCConfig(EnsembleParams(2, 1.0), sweeps=30, burn_in=10, walkers=50, seed=4))
    assert not np.array_equal(a.configs, c.configs)


@given(st.integers(1, 4), st.sampled_from([0.0, 1.0, 2.0]))
@settings(max_examples=8)
def test_acceptance_rate_tuned(N, a):
    s = mc.sample(mc.MCConfig(EnsembleParams(N, a), sweeps=200, burn_in=100, walkers=200))
    assert 0.2 < s.acceptance < 0.6


def test_cdf_at_one(cauchy_samples):
    est = mc.empirical_cdf(cauchy_samples, 1.0)
    assert est.within(0.75)


def test_gap_above_one(cauchy_samples):
    assert mc.estimate_gap(cauchy_samples, SingleTail(1.0)).within(0.75)


def test_whole_line_gap_is_zero(cauchy_samples):
    est = mc.estimate_gap(cauchy_samples, Union(((-math.inf, math.inf),)))
    assert est.value == 0.0 and est.stderr == 0.0


def test_double_tail_against_fredholm():
    p = EnsembleParams(2, 1.0)
    s = mc.sample(mc.MCConfig(p, seed=11))
    exact = det_gap(FiniteCauchyKernel(p), DoubleTail(1.0), 128)
    est = mc.estimate_gap(s, DoubleTail(1.0))
    assert est.within(exact)
    assert 0 < est.n_effective <= len(s)


def test_density_profile_matches_kernel_diagonal(cauchy_samples):
    edges = np.linspace(-4, 4, 17)
    prof = mc.density_profile(cauchy_samples, edges)
    # bin averages of 1/(pi (1+x^2))
    exact = (np.arctan(edges[1:]) - np.arctan(edges[:-1])) / (math.pi * np.diff(edges))
    assert np.all(np.abs(prof.density - exact) <= 3 * prof.stderr)


def test_density_profile_even_and_counts_n():
    s = mc.sample(mc.MCConfig(EnsembleParams(3, 1.0), seed=5))
    edges = np.linspace(-1e4, 1e4, 2001)
    prof = mc.density_profile(s, edges)
    assert prof.total_mass + prof.outside == pytest.approx(3.0, abs=1e-12)
    assert prof.total_mass == pytest.approx(3.0, abs=1e-3)
    sym = mc.density_profile(s, np.linspace(-3, 3, 13))
    diff = sym.density - sym.density[::-1]
    assert np.all(np.abs(diff) <= 4 * np.hypot(sym.stderr, sym.stderr[::-1]))


def test_density_profile_rejects_bad_bins(cauchy_samples):
    with pytest.raises(DomainError):
        mc.density_profile(cauchy_samples, [1.0, 0.0])


def test_coincident_points_rejected_without_error():
    rng = np.random.default_rng(0)
    state = np.zeros((10, 2))
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        rate = mc._sweep(state, 1e-300, rng, 3.0)
    assert 0.0 <= rate <= 1.0 and np.all(np.isfinite(state))


def test_run_seeds_order_independent_of_threads():
    cfg = mc.MCConfig(EnsembleParams(1, 1.0), sweeps=20, burn_in=5, walkers=20)
    serial = mc.run_seeds(cfg, [1, 2, 3])
    pooled = mc.run_seeds(cfg, [1, 2, 3], threads=3)
    for a, b in zip(serial, pooled):
        np.testing.assert_array_equal(a.configs, b.configs)
