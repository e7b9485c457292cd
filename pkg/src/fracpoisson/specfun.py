"""Gamma and Mittag-Leffler kernels.

Gamma and log-Gamma are thin guards around :mod:`math`. The Mittag-Leffler
function is summed from its power series in extended precision. The
admissible range of ``x`` in ``E_beta(-x)`` is the one a 113-bit (IEEE quad)
sum could certify, a runtime-determined bound. The arithmetic itself carries
extra guard bits, so rounding over a few hundred large alternating terms
stays far below the tolerances callers ask for, even at the edge of that range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath

from .errors import DomainError, NumericOverflowError, PrecisionError

__all__ = [
    "ProcessParams",
    "WORK_PREC",
    "gamma",
    "log_gamma",
    "mittag_leffler",
    "series_limit",
]

#: mantissa bits that define the admissible range of the series sums
WORK_PREC = 113
WORK_EPS = 2.0 ** (1 - WORK_PREC)
#: a series sum is trusted only while (largest term) * WORK_EPS stays below this
CANCELLATION_BUDGET = 1e-12
#: extra bits actually carried, so accumulated rounding is ~1e-7 of the budget
GUARD_BITS = 24

_GAMMA_MAX_ARG = 171.62437695630272

# A private context so that precision never leaks through mpmath's global mp.
_mp = mpmath.MPContext()
_mp.prec = WORK_PREC + GUARD_BITS


@dataclass(frozen=True)
class ProcessParams:
    """Order ``beta`` in (0, 1] and rate ``lam`` > 0 of the process."""

    beta: float
    lam: float

    def __post_init__(self):
        beta, lam = float(self.beta), float(self.lam)
        if not (0.0 < beta <= 1.0):
            raise DomainError(f"beta must lie in (0, 1], got {self.beta!r}")
        if not (lam > 0.0) or math.isinf(lam):
            raise DomainError(f"lambda must be a positive finite rate, got {self.lam!r}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "lam", lam)


def gamma(x: float) -> float:
    """Gamma function on the positive reals.

    Raises
    ------
    DomainError
        If ``x <= 0``.
    NumericOverflowError
        If ``Gamma(x)`` exceeds the double range (about ``x > 171.6``);
        use :func:`log_gamma` instead.
    """
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gamma is defined here for x > 0 only, got {x!r}")
    if x > _GAMMA_MAX_ARG:
        raise NumericOverflowError(f"Gamma({x}) overflows a double; use log_gamma")
    return math.gamma(x)


def log_gamma(x: float) -> float:
    """Natural logarithm of Gamma on the positive reals."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"log_gamma is defined here for x > 0 only, got {x!r}")
    return math.lgamma(x)


@lru_cache(maxsize=65536)
def _rgamma_coeff(beta: float, m: int):
    # 1/Gamma(beta*m + 1) in working precision; shared by every series below
    return _mp.rgamma(_mp.mpf(beta) * m + 1)


def _log_term(n: int, j: int, x: float, beta: float) -> float:
    # log of |C(j, n) x^j / Gamma(beta j + 1)| for x > 0
    return (
        math.lgamma(j + 1) - math.lgamma(n + 1) - math.lgamma(j - n + 1)
        + j * math.log(x) - math.lgamma(beta * j + 1)
    )


def binomial_series_tail(n: int, j_cut: int, x: float, beta: float) -> float:
    """Bound ``sum_{j > j_cut} C(j, n) x^j / Gamma(beta j + 1)`` for ``x >= 0``.

    The term ratio is decreasing in ``j`` (both ``(j+1)/(j+1-n)`` and the
    Gamma quotient are), so once the first neglected ratio ``q`` is at most
    1/2 the remainder is dominated by a geometric series. Returns ``inf`` if
    that has not happened yet at ``j_cut``.
    """
    if j_cut < n:
        raise DomainError(f"cutoff {j_cut} lies below the first index {n}")
    if x == 0.0:
        return 0.0
    j1 = j_cut + 1
    q = (j1 + 1) / (j1 + 1 - n) * x * math.exp(
        math.lgamma(beta * j1 + 1) - math.lgamma(beta * j1 + beta + 1)
    )
    if q > 0.5:
        return math.inf
    log_a = _log_term(n, j1, x, beta)
    # factor guards the float evaluation of the leading term
    return math.exp(log_a) / (1.0 - q) * (1.0 + 1e-12)


def max_log_term(n: int, x: float, beta: float) -> float:
    """Largest ``log |C(j,n) x^j / Gamma(beta j + 1)|`` over ``j >= n``."""
    if x == 0.0:
        return 0.0 if n == 0 else -math.inf
    best = _log_term(n, n, x, beta)
    j = n
    # terms are unimodal in j (decreasing ratio), so stop after the peak
    while True:
        j += 1
        cur = _log_term(n, j, x, beta)
        if cur < best:
            return best
        best = cur


@lru_cache(maxsize=1024)
def series_limit(beta: float, n: int = 0) -> float:
    """Largest ``x`` for which the series at index ``n`` stays within budget.

    This is the runtime value of ``Z_max``: beyond it the largest series term
    times the working epsilon exceeds :data:`CANCELLATION_BUDGET`.
    """
    log_cap = math.log(CANCELLATION_BUDGET / WORK_EPS)
    lo, hi = 0.0, 1.0
    while max_log_term(n, hi, beta) <= log_cap:
        lo, hi = hi, hi * 2.0
        if hi > 1e6:
            return math.inf
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if max_log_term(n, mid, beta) <= log_cap:
            lo = mid
        else:
            hi = mid
    return lo


def ml_series_mp(beta: float, x: float, tail_tol: float = 1e-20):
    """``E_beta(-x)`` as an mpf together with the largest term magnitude.

    Summation runs until the certified remainder is below ``tail_tol``.
    """
    if x == 0.0:
        return _mp.one, 1.0
    xm = _mp.mpf(x)
    terms = []
    power = _mp.one
    m = 0
    while True:
        terms.append(power * _rgamma_coeff(beta, m))
        if m >= 1 and binomial_series_tail(0, m, x, beta) < tail_tol:
            break
        m += 1
        power *= -xm
    biggest = float(max(abs(t) for t in terms))
    return _mp.fsum(terms), biggest


def mittag_leffler(beta: float, z: float) -> float:
    """One-parameter Mittag-Leffler function ``E_beta(z)`` for ``z <= 0``.

    Absolute error is at most 1e-10 wherever the call returns; arguments whose
    series would lose too many digits to cancellation raise instead.

    Raises
    ------
    DomainError
        If ``beta`` is outside (0, 1] or ``z > 0``.
    PrecisionError
        If ``|z|`` exceeds the achievable bound for this ``beta``; the message
        names that bound.
    """
    beta, z = float(beta), float(z)
    if not (0.0 < beta <= 1.0):
        raise DomainError(f"beta must lie in (0, 1], got {beta!r}")
    if not z <= 0.0:
        raise DomainError(f"mittag_leffler is implemented for z <= 0 only, got {z!r}")
    x = -z
    if max_log_term(0, x, beta) > math.log(CANCELLATION_BUDGET / WORK_EPS):
        raise PrecisionError(
            f"E_{beta}({z}) is beyond the series validity domain; "
            f"achievable bound is |z| <= {series_limit(beta):.6g}"
        )
    value, _ = ml_series_mp(beta, x)
    return float(value)
