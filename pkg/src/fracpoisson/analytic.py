"""Closed-form side of the process: counting probabilities as binomial series.

Everything here is evaluated in the extended working precision of
:mod:`fracpoisson.specfun`, with series cutoffs driven by a certified
geometric remainder bound rather than a fixed number of terms.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericOverflowError, PrecisionError
from .specfun import (
    CANCELLATION_BUDGET,
    WORK_EPS,
    ProcessParams,
    _mp,
    _rgamma_coeff,
    binomial_series_tail,
    max_log_term,
    mittag_leffler,
)

__all__ = [
    "PhiValue",
    "ProbVector",
    "phi",
    "pmf",
    "pmf_vector",
    "pmf_derivative",
    "generating_function",
    "factorial_moment",
    "series_tail_bound",
    "caputo_residual",
]

log = logging.getLogger(__name__)

#: entries this far below zero are rounding noise and get clamped
CLAMP_SLACK = 1e-12
_MAX_LOG = math.log(np.finfo(float).max)
_MARKOV_MAX_ORDER = 64


@dataclass(frozen=True)
class PhiValue:
    index: int
    value: float


@dataclass(frozen=True)
class ProbVector:
    """Truncated counting distribution ``P(0, t) .. P(trunc - 1, t)``.

    ``tail_bound`` is a certified upper bound on the discarded mass
    ``sum_{n >= trunc} P(n, t)``.
    """

    params: ProcessParams
    time: float
    trunc: int
    values: np.ndarray = field(repr=False)
    tail_bound: float

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def mass(self) -> float:
        return math.fsum(self.values)

    @property
    def normalization_defect(self) -> float:
        """``1 - sum(values)``; never larger than ``tail_bound`` up to rounding."""
        return 1.0 - self.mass


def _scaled_time(t: float, params: ProcessParams) -> float:
    if not t >= 0.0:
        raise DomainError(f"time must be non-negative, got {t!r}")
    return params.lam * t ** params.beta


def _check_cancellation(n: int, x: float, beta: float, what: str) -> None:
    if max_log_term(n, x, beta) > math.log(CANCELLATION_BUDGET / WORK_EPS):
        raise PrecisionError(
            f"{what}: lambda*t^beta = {x:.6g} is outside the cancellation-validity "
            f"domain for beta={beta}, n={n}"
        )


def phi(j: int, tau: float, params: ProcessParams) -> PhiValue:
    """``(-lam tau)^j / Gamma(beta j + 1)``, built from log-magnitude and sign."""
    if j < 0:
        raise DomainError(f"index must be non-negative, got {j}")
    if not tau >= 0.0:
        raise DomainError(f"transformed time must be non-negative, got {tau!r}")
    if j == 0:
        return PhiValue(0, 1.0)
    x = params.lam * tau
    if x == 0.0:
        return PhiValue(j, 0.0)
    log_mag = j * math.log(x) - math.lgamma(params.beta * j + 1)
    if log_mag > _MAX_LOG:
        raise NumericOverflowError(f"|phi({j})| = exp({log_mag:.1f}) overflows")
    sign = -1.0 if j % 2 else 1.0
    return PhiValue(j, sign * math.exp(log_mag))


def _pmf_mp(n: int, x: float, beta: float, tol: float):
    # (-1)^n sum_{j>=n} C(j,n) (-x)^j / Gamma(beta j + 1), returned as mpf
    if x == 0.0:
        return _mp.one if n == 0 else _mp.zero
    _check_cancellation(n, x, beta, "pmf")
    xm = _mp.mpf(x)
    power = xm ** n  # sign (-1)^n cancels the prefactor
    terms = []
    j = n
    binom = 1
    while True:
        terms.append(binom * power * _rgamma_coeff(beta, j))
        if binomial_series_tail(n, j, x, beta) < tol:
            break
        j += 1
        binom = binom * j // (j - n)
        power *= -xm
    return _mp.fsum(terms)


def _clamp(value: float, n: int, t: float) -> float:
    if value < 0.0:
        if value < -CLAMP_SLACK:
            raise PrecisionError(f"P({n}, {t}) = {value:.3e} is negative beyond rounding")
        log.debug("clamped P(%d, %g) = %.3e to 0", n, t, value)
        return 0.0
    return min(value, 1.0)


def pmf(n: int, t: float, params: ProcessParams, tol: float = 1e-14) -> float:
    """Probability of exactly ``n`` arrivals by time ``t``.

    The series is summed in ascending order until the certified remainder is
    below ``tol`` (and never coarser than a tenth of the clamp slack, so that
    truncation alone cannot push a tiny probability negative). Results in
    ``[-1e-12, 0)`` are clamped to 0.
    """
    if n < 0:
        raise DomainError(f"count must be non-negative, got {n}")
    if not tol > 0.0:
        raise DomainError(f"tolerance must be positive, got {tol!r}")
    x = _scaled_time(t, params)
    tol = min(tol, 0.1 * CLAMP_SLACK)
    return _clamp(float(_pmf_mp(n, x, params.beta, tol)), n, t)


def _markov_tail(trunc: int, x: float, beta: float) -> float:
    # min over k of E[(N)_k] / (trunc)_k, a certified bound on P(N >= trunc)
    if x == 0.0:
        return 0.0
    best = math.inf
    for k in range(1, min(trunc, _MARKOV_MAX_ORDER) + 1):
        log_moment = math.lgamma(k + 1) + k * math.log(x) - math.lgamma(beta * k + 1)
        log_falling = math.lgamma(trunc + 1) - math.lgamma(trunc - k + 1)
        best = min(best, log_moment - log_falling)
    return math.exp(best) if best < _MAX_LOG else math.inf


def pmf_vector(trunc: int, t: float, params: ProcessParams, tol: float = 1e-14) -> ProbVector:
    """Counting probabilities for ``n < trunc`` with a certified tail bound.

    The tail bound is the smaller of a factorial-moment Markov bound and the
    normalization deficit ``1 - sum`` widened by the per-entry tolerance.
    """
    if trunc < 1:
        raise DomainError(f"truncation must be at least 1, got {trunc}")
    x = _scaled_time(t, params)
    values = [pmf(n, t, params, tol) for n in range(trunc)]
    if x == 0.0:
        return ProbVector(params, float(t), trunc, values, 0.0)
    deficit = max(0.0, 1.0 - math.fsum(values)) + trunc * (tol + CLAMP_SLACK)
    tail = min(_markov_tail(trunc, x, params.beta), deficit)
    return ProbVector(params, float(t), trunc, values, tail)


def series_tail_bound(n: int, j_cut: int, t: float, params: ProcessParams) -> float:
    """Bound on ``|sum_{j > j_cut} C(j, n) phi(j, t)|``; ``inf`` if not yet certifiable."""
    return binomial_series_tail(n, j_cut, _scaled_time(t, params), params.beta)


def generating_function(s: float, t: float, params: ProcessParams) -> float:
    """Probability generating function ``E_beta(lam t^beta (s - 1))`` on ``[0, 1]``."""
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0, 1], got {s!r}")
    x = _scaled_time(t, params)
    return mittag_leffler(params.beta, x * (s - 1.0))


def factorial_moment(k: int, t: float, params: ProcessParams) -> float:
    """``E[N(t)(N(t)-1)...(N(t)-k+1)] = k! (lam t^beta)^k / Gamma(beta k + 1)``."""
    if k < 1:
        raise DomainError(f"moment order must be >= 1, got {k}")
    x = _scaled_time(t, params)
    if x == 0.0:
        return 0.0
    log_value = math.lgamma(k + 1) + k * math.log(x) - math.lgamma(params.beta * k + 1)
    if log_value > _MAX_LOG:
        raise NumericOverflowError(f"factorial moment of order {k} overflows at t={t}")
    return math.exp(log_value)


def pmf_derivative(n: int, tau: float, params: ProcessParams, tol: float = 1e-16) -> float:
    """``dP(n)/dtau`` from the termwise-differentiated series, ``tau = t^beta``."""
    if n < 0:
        raise DomainError(f"count must be non-negative, got {n}")
    if not tau >= 0.0:
        raise DomainError(f"transformed time must be non-negative, got {tau!r}")
    beta, lam = params.beta, params.lam
    x = lam * tau
    start = max(n, 1)
    if x == 0.0:
        # only the j = 1 term has a non-vanishing tau^(j-1)
        return {0: -lam, 1: lam}.get(n, 0.0) / math.gamma(beta + 1)
    _check_cancellation(n, x, beta, "pmf_derivative")
    xm = _mp.mpf(x)
    power = xm ** (start - 1)
    terms = []
    j = start
    binom = math.comb(j, n)
    while True:
        # C(j,n) j lam^j tau^(j-1) / Gamma(beta j + 1), sign (-1)^(j+n)
        term = binom * j * power * _rgamma_coeff(beta, j)
        terms.append(-term if (j + n) % 2 else term)
        # with term ratio q <= 1/2: sum_{i>j} i a_i <= 2 (j+2) a_{j+1} <= 2 (j+2) tail
        tail = binomial_series_tail(n, j, x, beta)
        if 2.0 * (j + 2) * tail / x < tol:
            break
        j += 1
        binom = binom * j // (j - n)
        power *= xm
    return float(_mp.fsum(terms) * lam)


def caputo_residual(n: int, t: float, params: ProcessParams, quad_tol: float = 1e-10) -> float:
    """Caputo derivative of ``P(n, .)`` at ``t`` minus the Kolmogorov-Feller right side.

    The convolution integral is split at ``t/2``. On the left half the
    variable ``tau = s^beta`` absorbs the ``s^(beta-1)`` singularity of the
    derivative; on the right half ``u = (t-s)^(1-beta)`` absorbs the kernel
    singularity ``(t-s)^(-beta)``. Both integrands are then bounded.
    """
    if not t > 0.0:
        raise DomainError(f"caputo_residual needs t > 0, got {t!r}")
    beta, lam = params.beta, params.lam
    rhs = lam * ((pmf(n - 1, t, params) if n > 0 else 0.0) - pmf(n, t, params))

    def dp_dt(s):
        return pmf_derivative(n, s**beta, params) * beta * s ** (beta - 1.0)

    if beta == 1.0:
        return dp_dt(t) - rhs

    half = 0.5 * t

    def left(tau):
        return (t - tau ** (1.0 / beta)) ** (-beta) * pmf_derivative(n, tau, params)

    def right(u):
        return dp_dt(t - u ** (1.0 / (1.0 - beta))) / (1.0 - beta)

    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for fn, upper in ((left, half**beta), (right, half ** (1.0 - beta))):
            try:
                val, err = integrate.quad(fn, 0.0, upper, epsabs=quad_tol, epsrel=quad_tol, limit=200)
            except integrate.IntegrationWarning as exc:
                raise PrecisionError(f"Caputo quadrature did not converge: {exc}") from exc
            if err > 10 * quad_tol:
                raise PrecisionError(f"Caputo quadrature error estimate {err:.2e} too large")
            total += val
    return total / math.gamma(1.0 - beta) - rhs
