"""Monte Carlo renewal paths with Mittag-Leffler waiting times.

Waiting times are drawn by inverse-transform sampling. The survival function
``S(x) = E_beta(-x)`` of the scaled variable ``x = lam * T^beta`` does not
depend on ``lam``, so one table per ``beta`` serves every rate. The table
stores ``v = ln(-ln S)`` against ``ln x``, a smooth increasing function, and
is inverted with a cubic Hermite interpolant built from exact derivatives.

``S`` comes from the power series where that is trustworthy and from the
integral representation

    S(x) = sin(beta pi) / (pi beta x) * int_0^inf exp(-y^(1/beta)) / ((y/x)^2 + 2 (y/x) cos(beta pi) + 1) dy

for larger ``x``. Outside the table the leading asymptotes are used:
``x ~ Gamma(1+beta) (-ln S)`` near 0 and ``x ~ 1 / (Gamma(1-beta) S)`` in the
tail (``x = -ln S`` when ``beta = 1``).

Every path owns a random stream derived from ``(seed, path index)``, so
results do not depend on how paths are spread over workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from multiprocessing.pool import ThreadPool
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, interpolate, stats

from .analytic import ProbVector
from .errors import ContractError, DomainError, PrecisionError, RunawayError
from .specfun import ProcessParams, _mp, _rgamma_coeff, binomial_series_tail, series_limit

__all__ = [
    "SamplePath",
    "EmpiricalPmf",
    "GofResult",
    "survival",
    "sample_waiting_time",
    "sample_waiting_times",
    "simulate_path",
    "simulate_paths",
    "path_rng",
    "empirical_pmf",
    "chi_square_gof",
]

MAX_DRAWS = 10**9
#: probability floor of the tabulated survival range; beyond it asymptotes take over
TABLE_FLOOR = 1e-10
_GRID_STEP = 0.01
_SERIES_SWITCH = 4.0
_BLOCK = 8


# --------------------------------------------------------------------------
# survival function


def _survival_series(beta: float, x: float):
    # (S, dS/dx) as mpf, summed until the certified tail is negligible
    xm = _mp.mpf(x)
    s = [_mp.one]
    ds = []
    power = _mp.one  # (-x)^(m-1)
    m = 1
    while True:
        coeff = _rgamma_coeff(beta, m)
        ds.append(-m * power * coeff)
        s.append(-xm * power * coeff)
        # derivative tail <= 2 (m+2) * value tail / x once the ratio is <= 1/2
        if binomial_series_tail(0, m, x, beta) * 2.0 * (m + 2) / x < 1e-24:
            break
        power *= -xm
        m += 1
    return _mp.fsum(s), _mp.fsum(ds)


def _survival_integral(beta: float, x: float):
    c = math.cos(beta * math.pi)
    pref = math.sin(beta * math.pi) / (math.pi * beta)
    inv = 1.0 / beta

    def f(y):
        return math.exp(-(y**inv)) / (y * y / x + 2.0 * c * y + x)

    def df(y):
        d = y * y / x + 2.0 * c * y + x
        return -math.exp(-(y**inv)) * (1.0 - (y / x) ** 2) / (d * d)

    # the weight is negligible beyond y = 60^beta
    upper = 60.0**beta
    s, _ = integrate.quad(f, 0.0, upper, epsabs=0.0, epsrel=2e-14, limit=200)
    ds, _ = integrate.quad(df, 0.0, upper, epsabs=0.0, epsrel=2e-14, limit=200)
    return pref * s, pref * ds


def survival(x: float, beta: float) -> tuple[float, float]:
    """``S(x) = E_beta(-x)`` and ``dS/dx`` for ``x >= 0``.

    Unlike :func:`fracpoisson.specfun.mittag_leffler` this is defined for
    every ``x`` (for ``beta < 1`` the integral representation covers the
    range where the series cancels).
    """
    if not x >= 0.0:
        raise DomainError(f"x must be non-negative, got {x!r}")
    if x == 0.0:
        return 1.0, -1.0 / math.gamma(beta + 1.0)
    if beta == 1.0 or x <= min(_SERIES_SWITCH, 0.9 * series_limit(beta)):
        if beta == 1.0 and x > 0.9 * series_limit(1.0):
            return math.exp(-x), -math.exp(-x)
        s, ds = _survival_series(beta, x)
        return float(s), float(ds)
    return _survival_integral(beta, x)


def _log_neg_log(beta: float, x: float):
    # v = ln(-ln S) and dv/d(ln x), keeping -ln S accurate when S is near 1
    if beta == 1.0 or x <= min(_SERIES_SWITCH, 0.9 * series_limit(beta)):
        if beta == 1.0 and x > 0.9 * series_limit(1.0):
            return math.log(x), 1.0
        s, ds = _survival_series(beta, x)
        neg_log = -_mp.log(s)
        return float(_mp.log(neg_log)), float(-x * ds / (s * neg_log))
    s, ds = _survival_integral(beta, x)
    neg_log = -math.log(s)
    return math.log(neg_log), -x * ds / (s * neg_log)


@dataclass(frozen=True)
class _SurvivalTable:
    beta: float
    v_lo: float
    v_hi: float
    inverse: interpolate.CubicHermiteSpline = field(repr=False)
    forward: interpolate.CubicHermiteSpline = field(repr=False)


@lru_cache(maxsize=16)
def _table(beta: float) -> _SurvivalTable:
    if beta == 1.0:
        x_hi = -math.log(TABLE_FLOOR)
    else:
        x_hi = 1.0 / (math.gamma(1.0 - beta) * TABLE_FLOOR)
    lo, hi = math.log(TABLE_FLOOR), math.log(x_hi)
    lnx = np.linspace(lo, hi, int(math.ceil((hi - lo) / _GRID_STEP)) + 1)
    vals = np.array([_log_neg_log(beta, math.exp(u)) for u in lnx])
    v, dv = vals[:, 0], vals[:, 1]
    if not (np.all(np.diff(v) > 0) and np.all(dv > 0)):
        raise PrecisionError(f"survival tabulation for beta={beta} is not monotone")
    inverse = interpolate.CubicHermiteSpline(v, lnx, 1.0 / dv, extrapolate=False)
    forward = interpolate.CubicHermiteSpline(lnx, v, dv, extrapolate=False)
    return _SurvivalTable(beta, float(v[0]), float(v[-1]), inverse, forward)


def _scaled_from_uniform(u: np.ndarray, beta: float) -> np.ndarray:
    # x solving S(x) = u, for u in (0, 1)
    table = _table(beta)
    neg_log = -np.log(u)
    v = np.log(neg_log)
    x = np.empty_like(u)
    low = v < table.v_lo
    high = v > table.v_hi
    mid = ~(low | high)
    x[mid] = np.exp(table.inverse(v[mid]))
    x[low] = math.gamma(1.0 + beta) * neg_log[low]
    if beta == 1.0:
        x[high] = neg_log[high]
    else:
        x[high] = 1.0 / (math.gamma(1.0 - beta) * u[high])
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise PrecisionError("waiting-time inversion left the validity domain of the survival table")
    return x


def _uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    # exact dyadic values in [2^-53, 1 - 2^-53]; neither endpoint can occur
    return rng.integers(1, 2**53, size=size, dtype=np.int64) * 2.0**-53


def sample_waiting_times(rng: np.random.Generator, params: ProcessParams, size: int) -> np.ndarray:
    """``size`` independent waiting times with ``P(T > t) = E_beta(-lam t^beta)``."""
    x = _scaled_from_uniform(_uniforms(rng, size), params.beta)
    return (x / params.lam) ** (1.0 / params.beta)


def sample_waiting_time(rng: np.random.Generator, params: ProcessParams) -> float:
    """One waiting time; see :func:`sample_waiting_times`."""
    return float(sample_waiting_times(rng, params, 1)[0])


# --------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class SamplePath:
    arrival_times: np.ndarray = field(repr=False)
    horizon: float

    def __post_init__(self):
        arr = np.array(self.arrival_times, dtype=float)
        if arr.size and (arr[0] <= 0.0 or arr[-1] > self.horizon or np.any(np.diff(arr) <= 0.0)):
            raise ContractError("arrivals must be strictly increasing within (0, horizon]")
        arr.setflags(write=False)
        object.__setattr__(self, "arrival_times", arr)

    def count(self, t: float) -> int:
        """``N(t)``, the number of arrivals at or before ``t``."""
        if t > self.horizon:
            raise DomainError(f"t={t} lies beyond the path horizon {self.horizon}")
        return int(np.searchsorted(self.arrival_times, t, side="right"))


def path_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for path ``index`` under master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _simulate_batch(rngs: Sequence[np.random.Generator], params: ProcessParams, t_end: float) -> list[SamplePath]:
    # Each path draws blocks of 8, 16, 32, ... from its own stream until a
    # block overshoots t_end. Inversion is shared across the batch, which
    # leaves every path's draws unchanged.
    if not t_end > 0.0:
        raise DomainError(f"t_end must be positive, got {t_end!r}")
    inv_beta = 1.0 / params.beta
    chunks: list[list[np.ndarray]] = [[] for _ in rngs]
    totals = np.zeros(len(rngs))
    active = np.arange(len(rngs))
    block, draws = _BLOCK, 0
    while active.size:
        u = np.concatenate([_uniforms(rngs[k], block) for k in active])
        w = (_scaled_from_uniform(u, params.beta) / params.lam) ** inv_beta
        times = totals[active, None] + np.cumsum(w.reshape(active.size, block), axis=1)
        still = []
        for row, k in enumerate(active):
            inside = times[row][times[row] <= t_end]
            chunks[k].append(inside)
            if inside.size == block:
                totals[k] = times[row, -1]
                still.append(k)
        active = np.asarray(still, dtype=np.intp)
        draws += block
        if active.size and draws > MAX_DRAWS:
            raise RunawayError(f"more than {MAX_DRAWS} waiting-time draws on one path")
        block = min(2 * block, 1 << 20)
    out = []
    for parts in chunks:
        arrivals = np.concatenate(parts)
        # float ties after accumulation would break strict monotonicity; drop them
        if arrivals.size > 1:
            arrivals = arrivals[np.concatenate(([True], np.diff(arrivals) > 0.0))]
        out.append(SamplePath(arrivals, float(t_end)))
    return out


def simulate_path(rng: np.random.Generator, params: ProcessParams, t_end: float) -> SamplePath:
    """Renewal path on ``(0, t_end]``: partial sums of waiting times.

    Raises :class:`RunawayError` if a path needs more than ``10^9`` draws.
    """
    return _simulate_batch([rng], params, t_end)[0]


def simulate_paths(
    seed: int, params: ProcessParams, t_end: float, n_paths: int, workers: int = 1
) -> list[SamplePath]:
    """``n_paths`` independent paths; identical output for every ``workers`` value."""
    if n_paths < 0:
        raise DomainError("number of paths must be non-negative")

    def run(span):
        return _simulate_batch([path_rng(seed, i) for i in span], params, t_end)

    if workers <= 1:
        return run(range(n_paths))
    chunk = max(1, -(-n_paths // (4 * workers)))
    spans = [range(i, min(i + chunk, n_paths)) for i in range(0, n_paths, chunk)]
    with ThreadPool(workers) as pool:
        parts = pool.map(run, spans)
    return [p for part in parts for p in part]


# --------------------------------------------------------------------------
# histograms and goodness of fit


@dataclass(frozen=True)
class EmpiricalPmf:
    time: float
    counts: np.ndarray = field(repr=False)
    total: int

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.sum() != self.total:
            raise ContractError("histogram does not sum to the number of paths")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.total

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.counts.size), self.counts) / self.total)

    @property
    def mean_stderr(self) -> float:
        n = np.arange(self.counts.size)
        var = np.dot((n - self.mean) ** 2, self.counts) / max(self.total - 1, 1)
        return float(math.sqrt(var / self.total))

    def merge(self, other: "EmpiricalPmf") -> "EmpiricalPmf":
        if other.time != self.time:
            raise ContractError("cannot merge histograms taken at different times")
        size = max(self.counts.size, other.counts.size)
        a = np.zeros(size, dtype=np.int64)
        a[: self.counts.size] += self.counts
        a[: other.counts.size] += other.counts
        return EmpiricalPmf(self.time, a, self.total + other.total)


def empirical_pmf(paths: Iterable[SamplePath], t: float) -> EmpiricalPmf:
    """Histogram of ``N(t)`` over ``paths``."""
    values = [p.count(t) for p in paths]
    if not values:
        raise DomainError("need at least one path")
    counts = np.bincount(np.asarray(values, dtype=np.int64))
    return EmpiricalPmf(float(t), counts, len(values))


@dataclass(frozen=True)
class GofResult:
    statistic: float
    dof: int
    p_value: float


def _pool_bins(expected: np.ndarray, minimum: float) -> list[list[int]]:
    bins, current, mass = [], [], 0.0
    for i, e in enumerate(expected):
        current.append(i)
        mass += e
        if mass >= minimum:
            bins.append(current)
            current, mass = [], 0.0
    if current:
        if bins:
            bins[-1].extend(current)
        else:
            bins.append(current)
    return bins


def chi_square_gof(emp: EmpiricalPmf, model: ProbVector, min_expected: float = 5.0) -> GofResult:
    """Pearson chi-square of the histogram against model probabilities.

    Model cells are ``P(0..trunc-1)`` plus one tail cell of mass
    ``tail_bound`` that also collects every observation ``n >= trunc``.
    Adjacent cells are pooled left to right until each expected count is at
    least ``min_expected``.
    """
    if abs(model.time - emp.time) > 1e-12 * max(1.0, emp.time):
        raise ContractError(f"model time {model.time} differs from histogram time {emp.time}")
    probs = np.append(np.asarray(model.values, dtype=float), model.tail_bound)
    probs = probs / probs.sum()
    observed = np.zeros(probs.size)
    k = min(emp.counts.size, model.trunc)
    observed[:k] = emp.counts[:k]
    observed[-1] += emp.counts[model.trunc :].sum()
    expected = emp.total * probs
    bins = _pool_bins(expected, min_expected)
    obs = np.array([observed[b].sum() for b in bins])
    exp = np.array([expected[b].sum() for b in bins])
    dof = len(bins) - 1
    if dof < 1:
        raise ContractError("pooling left fewer than two cells; the test has no degrees of freedom")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return GofResult(stat, dof, float(stats.chi2.sf(stat, dof)))
