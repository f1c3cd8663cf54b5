import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.utilities.iterables import partitions

from adtrw.bell import (
    complete_bell,
    exponential_bell,
    incomplete_bell,
    mean_arrivals_via_bell,
    state_poly_via_bell,
)
from adtrw.dtrp_core import expected_arrivals, geometric, lambda_poly, sibuya, state_table
from adtrw.errors import ParameterError


def partition_sum(psi, r, n):
    """Sum over partitions of ``r`` into ``n`` parts with multinomial weights."""
    if n == 0:
        return float(r == 0)
    total = []
    for part in partitions(r, m=n):
        if sum(part.values()) != n:
            continue
        weight = math.factorial(n)
        for c in part.values():
            weight //= math.factorial(c)
        total.append(weight * math.prod(psi[k] ** c for k, c in part.items()))
    return math.fsum(total)


# -- oracles -----------------------------------------------------------------


@pytest.mark.parametrize("d", [geometric(0.5, 32), sibuya(0.5, 32), geometric(0.83, 32)], ids=str)
def test_partition_oracle(d):
    table = incomplete_bell(d, 32)
    psi = d.padded
    for r in range(33):
        for n in range(r + 1):
            assert table(r, n) == pytest.approx(partition_sum(psi, r, n), abs=1e-12)


def test_symbolic_oracle_geometric():
    p = sympy.Rational(1, 3)
    psi = [0] + [p * (1 - p) ** (k - 1) for k in range(1, 11)]
    table = incomplete_bell(geometric(1 / 3, 10), 10)
    u = sympy.symbols("u")
    gf = sum(psi[k] * u**k for k in range(11))
    for n in range(1, 6):
        poly = sympy.Poly(sympy.expand(gf**n), u)
        for r in range(n, 11):
            assert table(r, n) == pytest.approx(float(poly.coeff_monomial(u**r)), abs=1e-15)


def test_bell_examples():
    d = geometric(0.5, 10)
    table = incomplete_bell(d, 10)
    for r in range(1, 11):
        assert table(r, 1) == d.padded[r]
    assert table(3, 2) == pytest.approx(0.25, abs=1e-15)
    assert table(2, 3) == 0.0
    assert table(0, 0) == 1.0
    assert all(table(r, 0) == 0.0 for r in range(1, 11))
    assert complete_bell(table, 0.3, 0) == 1.0
    assert complete_bell(table, 0.3, 1) == pytest.approx(0.3 * 0.5)
    assert complete_bell(table, 1.0, 2) == pytest.approx(0.5, abs=1e-15)


def test_state_poly_examples():
    assert state_poly_via_bell(geometric(0.5, 4), 0.0, 2) == pytest.approx(0.25, abs=1e-15)
    d = sibuya(0.5, 8)
    assert state_poly_via_bell(d, 0.1, 4) == pytest.approx(lambda_poly(d, 0.1, 1.0)[4], abs=1e-14)
    for t in range(9):
        assert state_poly_via_bell(d, 1.0, t) == pytest.approx(1.0, abs=1e-14)


def test_mean_arrivals_examples():
    assert mean_arrivals_via_bell(geometric(0.5, 4), 0) == 0.0
    assert mean_arrivals_via_bell(geometric(0.5, 4), 4) == pytest.approx(2.0, abs=1e-14)
    assert mean_arrivals_via_bell(sibuya(0.5, 2), 2) == pytest.approx(0.875, abs=1e-14)


def test_generating_function_powers():
    d = sibuya(0.6, 400)
    table = incomplete_bell(d, 400)
    k = np.arange(401)
    for u in (0.1, 0.3, 0.5):
        psi_bar = float(np.dot(d.padded, u**k))
        for n in (1, 2, 4):
            partial = float(np.dot(table.entries[n], u**k))
            # everything beyond the table is bounded by u^401
            assert partial == pytest.approx(psi_bar**n, rel=1e-13, abs=u**401 * 10)


def test_exponential_bell_limit():
    d = geometric(0.5, 30)
    e = exponential_bell(incomplete_bell(d, 20))
    assert e[2, 3] == pytest.approx(incomplete_bell(d, 20)(3, 2) * 6 / 2)
    with pytest.raises(ParameterError, match="r <= 20"):
        exponential_bell(incomplete_bell(d, 21))


def test_horizon_guard():
    with pytest.raises(ParameterError):
        incomplete_bell(geometric(0.5, 5), 6)


# -- properties --------------------------------------------------------------

densities = st.one_of(
    st.floats(0.05, 1.0).map(lambda p: geometric(p, 64)),
    st.floats(0.05, 0.95).map(lambda b: sibuya(b, 64)),
)
disc = st.tuples(st.floats(0.0, 1.0), st.floats(-math.pi, math.pi)).map(
    lambda rp: rp[0] * complex(math.cos(rp[1]), math.sin(rp[1]))
)


@settings(max_examples=50, deadline=None)
@given(densities, disc, st.integers(0, 64))
def test_state_poly_matches_lambda(d, v, t):
    assert abs(state_poly_via_bell(d, v, t) - lambda_poly(d, v, 1.0, t)[t]) < 1e-12


@settings(max_examples=30, deadline=None)
@given(densities)
def test_mean_arrivals_match_state_table(d):
    en = expected_arrivals(state_table(d))
    table = incomplete_bell(d, 64)
    for t in (0, 1, 7, 64):
        assert abs(mean_arrivals_via_bell(d, t, table) - en[t]) < 1e-10


@settings(max_examples=30, deadline=None)
@given(densities, st.integers(1, 64))
def test_columns_are_probabilities(d, r):
    table = incomplete_bell(d, 64)
    # the n-th success lands on trial r for at most one n
    col = table.entries[:, r]
    assert np.all(col >= 0.0)
    assert col.sum() <= 1.0 + 1e-12
