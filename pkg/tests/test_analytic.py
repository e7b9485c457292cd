import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracpoisson import errors
from fracpoisson.analytic import (
    caputo_residual,
    factorial_moment,
    generating_function,
    phi,
    pmf,
    pmf_derivative,
    pmf_vector,
    series_tail_bound,
)
from fracpoisson.specfun import ProcessParams, mittag_leffler, series_limit

import oracles

P1 = ProcessParams(1.0, 1.0)
P5 = ProcessParams(0.5, 1.0)
P7 = ProcessParams(0.7, 1.0)


def test_phi_examples():
    assert phi(0, 3.0, P7).value == 1.0
    assert phi(1, 1.0, P1).value == -1.0
    assert phi(2, 1.0, P5).value == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(errors.NumericOverflowError):
        phi(400, 1e6, P5)


def test_pmf_initial_condition():
    assert pmf(0, 0.0, P7) == 1.0
    assert pmf(3, 0.0, P7) == 0.0


@pytest.mark.parametrize("t", [0.3, 1.0, 2.0])
def test_pmf_zero_is_mittag_leffler(t):
    assert pmf(0, t, P7) == pytest.approx(mittag_leffler(0.7, -(t**0.7)), abs=1e-14)


def test_pmf_poisson():
    assert abs(pmf(2, 1.0, P1, tol=1e-12) - math.exp(-1) / 2) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(
    st.integers(min_value=0, max_value=25),
    st.floats(min_value=0.01, max_value=3.0),
    st.sampled_from([0.3, 0.5, 0.7, 0.9]),
)
def test_pmf_against_direct_summation(n, x, beta):
    params = ProcessParams(beta, 1.0)
    t = x ** (1.0 / beta)
    if x > series_limit(beta, n):
        with pytest.raises(errors.PrecisionError):
            pmf(n, t, params)
        return
    ref = float(oracles.fpp_pmf_mp(n, x, beta, dps=60))
    assert abs(pmf(n, t, params) - ref) <= 1e-13


@pytest.mark.parametrize("n", [0, 3, 14])
def test_pmf_accurate_at_edge_of_range(n):
    # just inside the admissible range the terms reach ~1e21 before cancelling
    beta = 0.3
    x = 0.995 * series_limit(beta, n)
    ref = float(oracles.fpp_pmf_mp(n, x, beta, dps=60))
    assert abs(pmf(n, x ** (1.0 / beta), ProcessParams(beta, 1.0)) - ref) <= 1e-13


def test_pmf_outside_validity_domain():
    with pytest.raises(errors.PrecisionError):
        pmf(0, 400.0, P5)


def test_pmf_vector_initial():
    v = pmf_vector(10, 0.0, P5)
    assert list(v.values) == [1.0] + [0.0] * 9 and v.tail_bound == 0.0


def test_pmf_vector_poisson():
    v = pmf_vector(40, 1.0, P1, tol=1e-12)
    ref = [oracles.poisson_pmf(n, 1.0) for n in range(40)]
    assert np.abs(v.values - ref).max() <= 1e-12
    assert abs(v.mass - 1.0) <= 1e-12


def test_pmf_vector_tail_certificate():
    v = pmf_vector(60, 2.0, P7, tol=1e-10)
    assert abs(v.mass + v.tail_bound - 1.0) <= 1e-9
    assert (v.values >= 0).all() and (v.values <= 1).all()
    # the bound must dominate the true discarded mass
    true_tail = sum(float(oracles.fpp_pmf_mp(n, 2.0**0.7, 0.7)) for n in range(60, 90))
    assert true_tail <= v.tail_bound


def test_pmf_vector_values_are_read_only():
    v = pmf_vector(5, 1.0, P7)
    with pytest.raises(ValueError):
        v.values[0] = 0.0


def test_generating_function():
    assert generating_function(1.0, 1.3, P7) == 1.0
    assert generating_function(0.0, 1.3, P7) == pytest.approx(pmf(0, 1.3, P7), abs=1e-14)
    direct = math.fsum(0.5**n * pmf(n, 1.0, P7) for n in range(60))
    assert abs(generating_function(0.5, 1.0, P7) - direct) <= 1e-9
    with pytest.raises(errors.DomainError):
        generating_function(1.5, 1.0, P7)


def test_factorial_moments():
    assert factorial_moment(1, 2.5, ProcessParams(1.0, 3.0)) == pytest.approx(7.5, rel=1e-15)
    m1 = factorial_moment(1, 1.0, P5)
    assert m1 == pytest.approx(2.0 / math.sqrt(math.pi), rel=1e-15)
    assert math.fsum(n * pmf(n, 1.0, P5) for n in range(80)) == pytest.approx(m1, rel=1e-12)
    assert factorial_moment(2, 1.0, P5) == pytest.approx(2.0, rel=1e-15)
    with pytest.raises(errors.NumericOverflowError):
        factorial_moment(200, 1e3, P5)


def test_series_tail_bound_examples():
    assert series_tail_bound(2, 3, 0.0, P7) == 0.0
    bound = series_tail_bound(0, 20, 1.0, P1)
    assert bound <= 2.0 / math.factorial(21)
    exact = math.fsum(1.0 / math.factorial(j) for j in range(21, 40))
    assert exact <= bound
    # beta = 0.7, n = 2: true remainder after j = 40 from a 200-term reference
    import mpmath

    with mpmath.workdps(50):
        rem = abs(
            mpmath.fsum(mpmath.binomial(j, 2) * (-1) ** j * mpmath.rgamma(0.7 * j + 1) for j in range(41, 240))
        )
    assert series_tail_bound(2, 40, 1.0, P7) >= float(rem)


def test_pmf_derivative_matches_finite_difference():
    for n in (0, 1, 4):
        tau, h = 1.2, 1e-4
        fd = (pmf(n, (tau + h) ** (1 / 0.7), P7) - pmf(n, (tau - h) ** (1 / 0.7), P7)) / (2 * h)
        assert abs(pmf_derivative(n, tau, P7) - fd) <= 1e-7


def test_caputo_examples():
    assert abs(caputo_residual(0, 1.0, P1)) <= 1e-8
    assert abs(caputo_residual(0, 1.0, P5)) <= 1e-6
    assert abs(caputo_residual(3, 2.0, P7)) <= 1e-6
