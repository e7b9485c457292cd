import math

import numpy as np
import pytest
from scipy import stats

from fracpoisson import errors, mc
from fracpoisson.analytic import pmf_vector
from fracpoisson.mc import (
    EmpiricalPmf,
    SamplePath,
    chi_square_gof,
    empirical_pmf,
    path_rng,
    sample_waiting_time,
    sample_waiting_times,
    simulate_path,
    simulate_paths,
    survival,
)
from fracpoisson.specfun import ProcessParams, mittag_leffler

import oracles

P1 = ProcessParams(1.0, 1.0)
P5 = ProcessParams(0.5, 1.0)
P7 = ProcessParams(0.7, 1.0)


@pytest.mark.parametrize("x", [1e-6, 0.3, 2.0, 3.99, 4.01, 9.0, 50.0, 1e3])
def test_survival_half_against_erfc(x):
    assert survival(x, 0.5)[0] == pytest.approx(oracles.ml_half(x), rel=1e-12)


@pytest.mark.parametrize("beta", [0.7, 0.9])
@pytest.mark.parametrize("x", [4.5, 8.0, 15.0, 25.0])
def test_survival_integral_branch(beta, x):
    ref = float(oracles.fpp_pmf_mp(0, x, beta, dps=60))
    assert survival(x, beta)[0] == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("beta", [0.5, 0.7, 0.9])
def test_survival_derivative(beta):
    for x in (0.5, 3.0, 12.0):
        h = 1e-5 * x
        fd = (survival(x + h, beta)[0] - survival(x - h, beta)[0]) / (2 * h)
        assert survival(x, beta)[1] == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("beta", [0.5, 0.7, 0.9, 1.0])
def test_inversion_accuracy(beta):
    u = np.concatenate([np.logspace(-12, -1e-4, 300), 1 - np.logspace(-12, -1, 100)])
    x = mc._scaled_from_uniform(u, beta)
    err = max(abs(survival(xx, beta)[0] - uu) for xx, uu in zip(x, u))
    assert err <= 1e-10
    assert (np.diff(x[:300]) < 0).all()


def test_inverse_map_extremes():
    # CDF value U close to 0 and 1
    x = mc._scaled_from_uniform(np.array([1 - 1e-6, 1e-6]), 0.7)
    t = x ** (1 / 0.7)
    assert 0 < t[0] < 1e-6 and t[1] > 1e6


def test_exponential_case_ks():
    draws = sample_waiting_times(np.random.default_rng(5), P1, 100_000)
    assert stats.kstest(draws, "expon").pvalue > 0.01


def test_survival_fraction_at_one():
    draws = sample_waiting_times(np.random.default_rng(6), P7, 100_000)
    p = mittag_leffler(0.7, -1.0)
    sigma = math.sqrt(p * (1 - p) / draws.size)
    assert abs((draws > 1.0).mean() - p) <= 3 * sigma


def test_rate_scaling():
    a = sample_waiting_times(np.random.default_rng(1), ProcessParams(0.7, 1.0), 50)
    b = sample_waiting_times(np.random.default_rng(1), ProcessParams(0.7, 2.0), 50)
    assert np.allclose(b, a * 2.0 ** (-1 / 0.7), rtol=1e-15)
    assert sample_waiting_time(np.random.default_rng(1), P7) > 0


def test_empty_path():
    rng = path_rng(0, 0)
    first = sample_waiting_time(path_rng(0, 0), P7)
    path = simulate_path(rng, P7, 0.5 * first)
    assert path.arrival_times.size == 0 and path.count(0.5 * first) == 0


def test_poisson_law_of_large_numbers():
    paths = simulate_paths(3, P1, 1000.0, 1000)
    mean = np.mean([p.count(1000.0) for p in paths])
    assert abs(mean - 1000) <= 3 * math.sqrt(1000)


def test_runaway_guard(monkeypatch):
    monkeypatch.setattr(mc, "MAX_DRAWS", 20)
    with pytest.raises(errors.RunawayError):
        simulate_path(path_rng(0, 1), P1, 1000.0)


def test_worker_count_does_not_change_paths():
    a = simulate_paths(9, P7, 3.0, 500)
    b = simulate_paths(9, P7, 3.0, 500, workers=4)
    assert all(np.array_equal(x.arrival_times, y.arrival_times) for x, y in zip(a, b))
    c = [simulate_path(path_rng(9, i), P7, 3.0) for i in range(500)]
    assert all(np.array_equal(x.arrival_times, y.arrival_times) for x, y in zip(a, c))
    assert np.array_equal(empirical_pmf(a, 2.0).counts, empirical_pmf(b, 2.0).counts)


def test_path_invariants():
    with pytest.raises(errors.ContractError):
        SamplePath(np.array([0.5, 0.4]), 1.0)
    with pytest.raises(errors.ContractError):
        SamplePath(np.array([0.5, 1.5]), 1.0)
    with pytest.raises(errors.DomainError):
        SamplePath(np.array([0.5]), 1.0).count(2.0)


def test_empirical_pmf_basics():
    emp = empirical_pmf([SamplePath(np.array([]), 1.0)], 1.0)
    assert emp.counts.tolist() == [1] and emp.total == 1
    paths = simulate_paths(4, P7, 2.0, 300)
    emp = empirical_pmf(paths, 2.0)
    assert emp.counts.sum() == 300
    merged = empirical_pmf(paths[:100], 2.0).merge(empirical_pmf(paths[100:], 2.0))
    assert np.array_equal(merged.counts, emp.counts)
    with pytest.raises(errors.DomainError):
        empirical_pmf(paths, 2.5)


def test_chi_square_on_exact_counts():
    model = pmf_vector(12, 1.0, P1)
    counts = np.round(model.values * 1e6).astype(int)
    emp = EmpiricalPmf(1.0, counts, int(counts.sum()))
    res = chi_square_gof(emp, model)
    assert res.statistic < 1e-2 and res.p_value > 0.99


def test_chi_square_degenerate():
    model = pmf_vector(3, 1.0, P1)
    with pytest.raises(errors.ContractError):
        chi_square_gof(EmpiricalPmf(1.0, [2, 1], 3), model)
    with pytest.raises(errors.ContractError):
        chi_square_gof(EmpiricalPmf(2.0, [2, 1], 3), model)


def test_chi_square_power():
    emp = empirical_pmf(simulate_paths(12, P5, 1.0, 100_000), 1.0)
    assert chi_square_gof(emp, pmf_vector(40, 1.0, P1)).p_value < 1e-6
