import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracpoisson import errors
from fracpoisson.analytic import phi, pmf, series_tail_bound
from fracpoisson.pascal import (
    BinomialMatrix,
    SignedVector,
    apply_inverse_pascal,
    apply_pascal,
    binomial_exact,
)
from fracpoisson.specfun import ProcessParams

import oracles


def test_binomial_examples():
    assert binomial_exact(4, 2) == 6
    assert binomial_exact(3, 5) == 0
    assert binomial_exact(60, 30) == oracles.pascal_row(60)[30] == 118264581564861424
    with pytest.raises(errors.DomainError):
        binomial_exact(-1, 0)


def test_matrix_entries():
    b = BinomialMatrix(6)
    bi = BinomialMatrix(6, "inverse_pascal")
    assert b.entry(2, 4) == 6 and b.entry(4, 2) == 0
    assert bi.entry(1, 4) == -4
    prod = b.dense().dot(bi.dense())
    assert (prod == np.eye(6, dtype=int)).all()
    with pytest.raises(errors.ContractError):
        BinomialMatrix(65).dense()


def test_apply_examples():
    assert apply_pascal([1, 0, 0, 0]).entries == (1, 0, 0, 0)
    assert apply_pascal([0, 0, 0, 1]).entries == (1, 3, 3, 1)
    ones = [1, 1, 1, 1, 1]
    dense = BinomialMatrix(5, "inverse_pascal").dense()
    assert apply_inverse_pascal(ones).entries == tuple(dense.dot(ones)) == (1, -2, 4, -3, 1)
    # the alternating row-sum identity lives in the transposed orientation
    assert tuple(dense.T.dot(ones)) == (1, 0, 0, 0, 0)


def test_sign_convention_flag():
    v = SignedVector.from_plain([1, 2, 3], alternating=True)
    assert v.entries == (1, -2, 3)
    assert v.plain() == (1, 2, 3)
    assert apply_pascal(v).alternating is False
    assert apply_pascal([1, 2]).alternating is True


@given(st.lists(st.integers(min_value=-(10**12), max_value=10**12), min_size=1, max_size=60))
def test_roundtrip_exact(v):
    assert apply_inverse_pascal(apply_pascal(v)).entries == tuple(v)
    assert apply_pascal(apply_inverse_pascal(v)).entries == tuple(v)


def test_roundtrip_fractions():
    rng = random.Random(3)
    v = [Fraction(rng.randint(-99, 99), rng.randint(1, 50)) for _ in range(25)]
    assert list(apply_inverse_pascal(apply_pascal(v)).entries) == v


def test_pascal_on_phi_gives_signed_pmf():
    params = ProcessParams(0.7, 1.0)
    tau, size = 1.0, 30
    phis = [phi(j, tau, params).value for j in range(size)]
    signed = apply_pascal(phis).plain()
    for n in range(16):
        assert abs(signed[n] - pmf(n, 1.0, params)) <= 1e-8 + series_tail_bound(n, size - 1, 1.0, params)


def test_inverse_pascal_on_pmf_gives_phi():
    params = ProcessParams(0.7, 1.0)
    size, t = 80, 2.0
    p = SignedVector.from_plain([pmf(n, t, params, tol=1e-200) for n in range(size)], alternating=True)
    rec = apply_inverse_pascal(p).plain()
    tau = t ** 0.7
    for m in range(21):
        assert abs(rec[m] - phi(m, tau, params).value) <= 1e-8


def test_length_mismatch():
    with pytest.raises(errors.DomainError):
        BinomialMatrix(3).apply([1, 2])
