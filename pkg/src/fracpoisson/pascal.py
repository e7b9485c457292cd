"""Exact Pascal-matrix binomial transforms on finite truncations.

The Pascal matrix ``B[n, k] = C(k, n)`` is upper triangular, so entry ``n``
of a truncated product depends only on ``v[n:]``; truncation never perturbs
the matrix itself, only the part of the input vector that was cut off.

Integer and :class:`fractions.Fraction` entries are transformed exactly.
Float entries are accumulated with :func:`math.fsum`, mpf entries with
``mpmath.fsum``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import mpmath
import numpy as np

from .errors import ContractError, DomainError

__all__ = [
    "SignedVector",
    "BinomialMatrix",
    "binomial_exact",
    "apply_pascal",
    "apply_inverse_pascal",
]

DENSE_LIMIT = 64


def binomial_exact(k: int, n: int) -> int:
    """``C(k, n)`` as an exact Python integer, 0 when ``n > k``."""
    if k < 0 or n < 0:
        raise DomainError(f"binomial arguments must be non-negative, got ({k}, {n})")
    return math.comb(k, n)


@dataclass(frozen=True)
class SignedVector:
    """Finite vector plus the sign convention it is stored in.

    With ``alternating=True`` the stored entries are ``(-1)^n x_n`` (the
    convention of the probability side of the transform pair); ``plain``
    recovers the ``x_n`` themselves.
    """

    entries: tuple
    alternating: bool = False

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise ContractError("a SignedVector needs at least one entry")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def from_plain(cls, values: Sequence, alternating: bool = True) -> "SignedVector":
        """Store ``values`` under the requested convention."""
        if not alternating:
            return cls(tuple(values), False)
        return cls(tuple(-v if n % 2 else v for n, v in enumerate(values)), True)

    def plain(self) -> tuple:
        """Entries with the alternating sign removed."""
        if not self.alternating:
            return self.entries
        return tuple(-v if n % 2 else v for n, v in enumerate(self.entries))

    def padded(self, size: int) -> "SignedVector":
        if size < len(self):
            raise DomainError("cannot pad to a shorter length")
        zero = 0 if all(isinstance(v, (int, Rational)) for v in self.entries) else 0.0
        return SignedVector(self.entries + (zero,) * (size - len(self)), self.alternating)


@dataclass(frozen=True)
class BinomialMatrix:
    """Implicit ``size x size`` truncation of the Pascal matrix or its inverse."""

    size: int
    kind: str = "pascal"

    def __post_init__(self):
        if self.kind not in ("pascal", "inverse_pascal"):
            raise DomainError(f"unknown matrix kind {self.kind!r}")
        if self.size < 1:
            raise DomainError("matrix size must be positive")

    def entry(self, n: int, k: int) -> int:
        if not (0 <= n < self.size and 0 <= k < self.size):
            raise IndexError((n, k))
        c = math.comb(k, n)
        if self.kind == "inverse_pascal" and (n + k) % 2:
            return -c
        return c

    def dense(self) -> np.ndarray:
        """Object-dtype array of exact integers; refused above 64 x 64."""
        if self.size > DENSE_LIMIT:
            raise ContractError(f"dense storage is limited to N <= {DENSE_LIMIT}")
        out = np.empty((self.size, self.size), dtype=object)
        for n in range(self.size):
            for k in range(self.size):
                out[n, k] = self.entry(n, k)
        return out

    def apply(self, v: SignedVector | Sequence) -> SignedVector:
        if len(v) != self.size:
            raise DomainError(f"vector of length {len(v)} does not match size {self.size}")
        return _transform(v, self.kind == "inverse_pascal")


def _exact_sum(values):
    if all(isinstance(v, (int, Rational)) for v in values):
        return sum(values, 0)
    if any(isinstance(v, mpmath.mpf) for v in values):
        return mpmath.fsum(values)
    return math.fsum(values)


def _transform(v, inverse: bool) -> SignedVector:
    if not isinstance(v, SignedVector):
        v = SignedVector(tuple(v))
    x = v.entries
    size = len(x)
    out = []
    for n in range(size):
        terms = []
        for k in range(n, size):
            c = math.comb(k, n)
            if inverse and (n + k) % 2:
                c = -c
            xk = x[k]
            if isinstance(xk, (float, np.floating)):
                terms.append(float(c) * float(xk))
            else:
                terms.append(c * xk)
        out.append(_exact_sum(terms))
    return SignedVector(tuple(out), not v.alternating)


def apply_pascal(v: SignedVector | Sequence) -> SignedVector:
    """``w_n = sum_{k >= n} C(k, n) v_k`` on the given truncation.

    The sign-convention flag of the result is the opposite of the input's,
    since the matrix carries plain data to the alternating side.
    """
    return _transform(v, inverse=False)


def apply_inverse_pascal(v: SignedVector | Sequence) -> SignedVector:
    """``w_n = sum_{k >= n} (-1)^(n+k) C(k, n) v_k``, the exact inverse of :func:`apply_pascal`."""
    return _transform(v, inverse=True)


def as_fractions(values: Sequence) -> tuple:
    """Convenience: exact rational copies of float data (each float is a dyadic rational)."""
    return tuple(Fraction(v) for v in values)
