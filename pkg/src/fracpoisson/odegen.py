"""Generator of the counting probabilities in transformed time ``tau = t**beta``.

In ``tau`` the probabilities obey the linear system

    dP(n)/dtau = sum_{k >= n-1} A[n, k] P(k)

with constant coefficients

    A[n, k] = (-1)^(n+1) lam * sum_{j=n-1}^{k} (-1)^j C(j+1, n) C(k, j) g(j),
    g(j)    = Gamma(beta j + 1) / (beta Gamma(beta j + beta))
            = (j + 1) Gamma(beta j + 1) / Gamma(beta (j + 1) + 1).

The ``1/beta`` inside ``g`` comes from ``j / Gamma(beta j + 1) =
1 / (beta Gamma(beta j))`` when the series is differentiated termwise. The
inner sum is an alternating sum of binomially weighted terms (weights
reach ~1e46 at k = 80), so it is evaluated exactly in big-integer fixed
point: ``g(j)`` is rounded once to ``p`` fractional bits and everything
after that is integer arithmetic. ``p`` is raised until the certified
rounding bound is below ``1e-9 |A| + 1e-300``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import mpmath
import numpy as np

from .analytic import ProbVector, pmf
from .errors import ConservationError, DomainError, IntegrationError, PrecisionError
from .specfun import ProcessParams, _mp, _rgamma_coeff

__all__ = [
    "GeneratorMatrix",
    "Trajectory",
    "coefficient",
    "generator_matrix",
    "evolve",
    "integrate_adaptive",
    "tau_of_t",
    "t_of_tau",
    "proofstep_check",
]

REL_TOL = 1e-9
ABS_FLOOR = 1e-300
_GUARD_BITS = 96
_ZERO_BITS = 1100  # 2**-1100 < 1e-300, enough to certify an exact zero
MAX_STEPS = 10**7
MASS_DEFECT_LIMIT = 1e-6


def tau_of_t(t: float, beta: float) -> float:
    if not t >= 0.0:
        raise DomainError(f"time must be non-negative, got {t!r}")
    return t**beta


def t_of_tau(tau: float, beta: float) -> float:
    if not tau >= 0.0:
        raise DomainError(f"transformed time must be non-negative, got {tau!r}")
    return tau ** (1.0 / beta)


# --------------------------------------------------------------------------
# coefficients


@lru_cache(maxsize=None)
def _context(prec: int):
    ctx = mpmath.MPContext()
    ctx.prec = prec
    return ctx


@lru_cache(maxsize=4096)
def _g_fixed(beta: float, j: int, bits: int) -> int:
    # round(g(j) * 2**bits), g evaluated through log-Gamma with 64 guard bits
    ctx = _context(bits + 64)
    b = ctx.mpf(beta)
    g = (j + 1) * ctx.exp(ctx.loggamma(b * j + 1) - ctx.loggamma(b * (j + 1) + 1))
    return int(ctx.nint(ctx.ldexp(g, bits)))


@lru_cache(maxsize=None)
def _binom_row(k: int) -> tuple:
    return tuple(math.comb(k, j) for j in range(k + 1))


def _weights(n: int, k: int):
    # signed integer weights (-1)^j C(j+1, n) C(k, j) for j = max(n-1,0)..k
    ck = _binom_row(k)
    out = []
    for j in range(max(n - 1, 0), k + 1):
        w = math.comb(j + 1, n) * ck[j]
        out.append((j, -w if j % 2 else w))
    return out


def _fixed_sum(weights, beta: float, bits: int) -> int:
    return sum(w * _g_fixed(beta, j, bits) for j, w in weights)


def _certified(total: int, abs_weight: int, bits: int, lam: float):
    # value and whether the rounding bound (1 unit per |weight|) meets the contract
    # int / int is correctly rounded; an underflow to 0.0 only happens below 1e-300
    value = total / (1 << bits)
    bound = abs_weight / (1 << bits)
    ok = lam * bound <= REL_TOL * lam * abs(value) + ABS_FLOOR
    return value, ok


def _coefficient_checked(n: int, k: int, params: ProcessParams, base_bits: int | None = None) -> float:
    if k < n - 1:
        return 0.0
    weights = _weights(n, k)
    abs_weight = sum(abs(w) for _, w in weights)
    scale_bits = abs_weight.bit_length()
    for bits in (base_bits or scale_bits + _GUARD_BITS, scale_bits + _ZERO_BITS):
        bits = max(bits, scale_bits + _GUARD_BITS)
        value, ok = _certified(_fixed_sum(weights, params.beta, bits), abs_weight, bits, params.lam)
        if ok:
            sign = -1.0 if n % 2 == 0 else 1.0  # (-1)^(n+1)
            return sign * params.lam * value
    raise PrecisionError(f"A[{n},{k}] cannot be certified for beta={params.beta}")


def coefficient(n: int, k: int, params: ProcessParams) -> float:
    """Generator entry ``A[n, k]``; exactly 0.0 for ``k < n - 1``."""
    if n < 0 or k < 0:
        raise DomainError(f"indices must be non-negative, got ({n}, {k})")
    return _coefficient_checked(n, k, params)


@dataclass(frozen=True)
class GeneratorMatrix:
    """Top-left ``size x size`` block of the infinite generator.

    Column ``k`` is complete when its whole support ``n = 0..k+1`` is inside
    the block, i.e. for ``k <= size - 2``; only the last column leaks mass.
    """

    size: int
    params: ProcessParams
    entries: np.ndarray = field(repr=False)
    column_complete: np.ndarray = field(repr=False)

    def column_sums(self) -> np.ndarray:
        return np.array([math.fsum(col) for col in self.entries.T])

    def conservation_defects(self) -> np.ndarray:
        """``|column sum| / sum |column|`` for every column."""
        scale = np.abs(self.entries).sum(axis=0)
        return np.abs(self.column_sums()) / np.where(scale > 0, scale, 1.0)

    def sign_pattern(self) -> dict:
        """Counts of positive, negative and zero gains from above (``k > n``)."""
        upper = self.entries[np.triu_indices(self.size, k=1)]
        return {
            "positive": int((upper > 0).sum()),
            "negative": int((upper < 0).sum()),
            "zero": int((upper == 0).sum()),
        }


@lru_cache(maxsize=32)
def generator_matrix(size: int, params: ProcessParams) -> GeneratorMatrix:
    """Assemble all ``A[n, k]`` for ``0 <= n, k < size``."""
    if size < 2:
        raise DomainError(f"truncation must be at least 2, got {size}")
    # one precision for the bulk; entries that fail are redone near 2**-1100
    max_weight = max(
        sum(abs(w) for _, w in _weights(n, size - 1)) for n in range(size)
    )
    base_bits = max_weight.bit_length() + _GUARD_BITS
    entries = np.zeros((size, size))
    for k in range(size):
        for n in range(min(size, k + 2)):
            try:
                entries[n, k] = _coefficient_checked(n, k, params, base_bits)
            except PrecisionError as exc:
                raise PrecisionError(f"{exc} (while assembling N={size})") from exc
    entries.setflags(write=False)
    complete = np.arange(size) <= size - 2
    complete.setflags(write=False)
    gen = GeneratorMatrix(size, params, entries, complete)
    bad = np.flatnonzero(gen.conservation_defects()[complete] > REL_TOL)
    if bad.size:
        raise ConservationError(f"columns {bad.tolist()} do not conserve probability")
    return gen


# --------------------------------------------------------------------------
# integration

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


def integrate_adaptive(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_out: Sequence[float],
    rtol: float,
    atol: float,
    max_steps: int = MAX_STEPS,
) -> tuple[np.ndarray, int]:
    """Dormand-Prince 5(4) with error-per-step control, stepping onto each output time.

    Returns the states at ``t_out`` (starting from ``t = 0``) and the number
    of accepted steps.
    """
    t_out = np.asarray(t_out, dtype=float)
    if t_out.size == 0 or t_out[0] < 0.0 or np.any(np.diff(t_out) <= 0.0):
        raise DomainError("output times must be non-negative and strictly ascending")
    y = np.array(y0, dtype=float)
    t = 0.0
    out = np.empty((t_out.size, y.size))
    k1 = rhs(t, y)
    # a cautious start; the controller grows it by up to 5x per accepted step
    h = 1e-6 * t_out[-1]
    steps = 0
    for i, target in enumerate(t_out):
        while t < target:
            if steps >= max_steps:
                raise IntegrationError(f"step budget exhausted at tau = {t:.6g}")
            last = t + h >= target
            step = target - t if last else h
            ks = [k1]
            for s in range(1, 7):
                yi = y + step * sum(a * kk for a, kk in zip(_A[s], ks) if a)
                ks.append(rhs(t + _C[s] * step, yi))
            y_new = yi  # stage 7 is evaluated at the 5th-order solution (FSAL)
            err_vec = step * sum(e * kk for e, kk in zip(_E, ks) if e)
            sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(err_vec) / sc))
            if err <= 1.0:
                t = target if last else t + step
                y, k1 = y_new, ks[6]
                steps += 1
            factor = 0.9 * err ** -0.2 if err > 0.0 else 5.0
            h = step * min(5.0, max(0.2, factor))
            if t + h == t or h < 1e-300:
                raise IntegrationError(f"step size underflow at tau = {t:.6g}")
        out[i] = y
    return out, steps


@dataclass(frozen=True)
class Trajectory:
    params: ProcessParams
    tau_grid: np.ndarray
    states: np.ndarray = field(repr=False)
    conservation_log: np.ndarray = field(repr=False)
    steps: int = 0

    def state_at(self, i: int) -> np.ndarray:
        return self.states[i]


def evolve(
    gen: GeneratorMatrix,
    tau_end: float,
    grid: Sequence[float] | None = None,
    step_tol: float = 1e-10,
    initial: np.ndarray | None = None,
) -> Trajectory:
    """Integrate ``dP/dtau = A P`` from ``P(0) = delta_{n,0}``.

    Local error per step is held below ``step_tol`` in the mixed sense
    ``|err_i| <= step_tol * (1 + |P_i|)``.

    The returned grid always starts at ``tau = 0`` and ends at ``tau_end``.
    """
    if not tau_end > 0.0:
        raise DomainError(f"tau_end must be positive, got {tau_end!r}")
    pts = sorted(set(float(x) for x in (grid if grid is not None else ())) | {float(tau_end)})
    if pts[0] <= 0.0 or pts[-1] > tau_end:
        raise DomainError("grid points must lie in (0, tau_end]")
    if initial is None:
        initial = np.zeros(gen.size)
        initial[0] = 1.0
    a = gen.entries
    states, steps = integrate_adaptive(
        lambda _tau, p: a @ p, initial, pts, rtol=step_tol, atol=step_tol
    )
    tau_grid = np.concatenate(([0.0], pts))
    states = np.vstack([initial, states])
    defects = np.abs(states.sum(axis=1) - initial.sum())
    worst = int(np.argmax(defects))
    if defects[worst] > MASS_DEFECT_LIMIT:
        raise ConservationError(
            f"mass defect {defects[worst]:.3e} at tau = {tau_grid[worst]:.6g} exceeds {MASS_DEFECT_LIMIT}"
        )
    return Trajectory(gen.params, tau_grid, states, defects, steps)


# --------------------------------------------------------------------------
# proof-chain check


def _derivative_phi_form(n: int, tau: float, params: ProcessParams, n_terms: int):
    # (-1)^(n+1) lam sum_{j>=n-1} C(j+1, n) g(j) phi(j, tau), with phi in working precision
    beta = params.beta
    b = _mp.mpf(beta)
    x = _mp.mpf(params.lam * tau)
    terms = []
    for j in range(max(n - 1, 0), n_terms):
        g = (j + 1) * _mp.exp(_mp.loggamma(b * j + 1) - _mp.loggamma(b * (j + 1) + 1))
        phi_j = (-x) ** j * _rgamma_coeff(beta, j)
        terms.append(math.comb(j + 1, n) * g * phi_j)
    total = _mp.fsum(terms) * params.lam
    return -total if n % 2 == 0 else total


def proofstep_check(n: int, tau: float, params: ProcessParams, n_terms: int = 80) -> float:
    """Difference between the two ends of the derivation of the generator.

    Evaluates ``dP(n)/dtau`` once as the binomial sum over ``phi(j, tau)``
    (before the order of summation is exchanged) and once as
    ``sum_k A[n, k] P(k, tau)`` (after), both truncated at ``n_terms``.
    """
    if n >= n_terms - 1:
        raise DomainError("n_terms must exceed n + 1")
    phi_form = float(_derivative_phi_form(n, tau, params, n_terms))
    gen = generator_matrix(n_terms, params)
    t = t_of_tau(tau, params.beta)
    ks = range(max(n - 1, 0), n_terms)
    # the generator grows with k, so P(k) is needed to high relative accuracy
    matrix_form = math.fsum(gen.entries[n, k] * pmf(k, t, params, tol=1e-200) for k in ks)
    return abs(phi_form - matrix_form)


def generator_action(gen: GeneratorMatrix, probs: ProbVector | np.ndarray) -> np.ndarray:
    """``A @ P`` for a probability vector of matching length."""
    values = probs.values if isinstance(probs, ProbVector) else np.asarray(probs, dtype=float)
    if values.size != gen.size:
        raise DomainError(f"vector length {values.size} does not match generator size {gen.size}")
    return gen.entries @ values
