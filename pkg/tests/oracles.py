"""Reference values computed without the package under test."""

import math
from fractions import Fraction

import mpmath
import numpy as np
from scipy import special


def poisson_pmf(n, mu):
    return math.exp(-mu + n * math.log(mu) - math.lgamma(n + 1)) if mu > 0 else float(n == 0)


def pascal_row(k):
    # binomials of row k by the additive recurrence only
    row = [1]
    for _ in range(k):
        row = [a + b for a, b in zip([0] + row, row + [0])]
    return row


def gamma_by_quadrature(x):
    # tanh-sinh quadrature of int_0^inf s^(x-1) e^(-s) ds copes with the endpoint singularity
    with mpmath.workdps(30):
        return float(mpmath.quad(lambda s: s ** (x - 1) * mpmath.exp(-s), [0, 1, mpmath.inf]))


def log_factorial_exact(n):
    return float(mpmath.log(mpmath.mpf(math.factorial(n))))


def ml_half(x):
    # E_{1/2}(-x) = exp(x^2) erfc(x)
    with mpmath.workdps(40):
        return float(mpmath.exp(mpmath.mpf(x) ** 2) * mpmath.erfc(x))


def fpp_pmf_mp(n, x, beta, dps=80, rel=1e-30):
    """Direct high-precision summation of (-1)^n sum_j C(j,n) (-x)^j / Gamma(beta j + 1).

    Terms are added until they have been shrinking and fall below ``rel``
    times the running sum; for small beta that can take well over a thousand
    terms.
    """
    with mpmath.workdps(dps):
        xm, b = mpmath.mpf(x), mpmath.mpf(beta)
        total, j, prev = mpmath.mpf(0), n, mpmath.inf
        while True:
            term = mpmath.binomial(j, n) * (-xm) ** j * mpmath.rgamma(b * j + 1)
            total += term
            if abs(term) < prev and abs(term) <= rel * abs(total):
                break
            prev = abs(term)
            j += 1
        return (-1) ** n * total


def ml_survival(x, beta):
    """E_beta(-x) for an array of x >= 0, to about 1e-5 absolute; used as a KS oracle."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if beta == 1.0:
        return np.exp(-x)
    out = np.empty_like(x)
    small = x <= 4.0
    m = np.arange(0, 200)
    with np.errstate(divide="ignore"):
        logx = np.log(x[small])[:, None]
    logs = m * logx - special.gammaln(beta * m + 1)
    logs[:, 0] = 0.0
    terms = np.where(m % 2, -1.0, 1.0) * np.exp(logs)
    out[small] = terms.sum(axis=1)
    big = ~small
    if big.any():
        s, w = special.roots_genlaguerre(100, beta - 1.0)
        c = math.cos(beta * math.pi)
        xb = x[big][:, None]
        r = s[None, :] ** beta / xb
        f = 1.0 / (r * r + 2.0 * c * r + 1.0)
        out[big] = math.sin(beta * math.pi) / math.pi / x[big] * (f @ w)
    return out


def exact_rational(values):
    return [Fraction(v) for v in values]
