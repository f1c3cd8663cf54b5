import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.special import erfc

from adtrw.actrw import (
    ENVELOPE,
    SERIES_RADIUS,
    MLParams,
    actrw_mc,
    composed_states,
    frac_poisson_states,
    mittag_leffler,
    pi_geometric_closed,
    pi_series,
)
from adtrw.dtrp_core import geometric, sibuya
from adtrw.errors import EnvelopeError, ParameterError
from adtrw.walk import Direction, JumpDensity

UP = JumpDensity.unit(Direction.POSITIVE)
DOWN = JumpDensity.unit(Direction.NEGATIVE)

# -- oracles -----------------------------------------------------------------


def test_ml_examples():
    assert mittag_leffler(0.6, 0.0) == 1.0
    assert mittag_leffler(1.0, -1.0) == pytest.approx(math.exp(-1), abs=1e-16)
    assert mittag_leffler(0.5, -1.0) == pytest.approx(0.4275836, abs=1e-7)
    for x in (0.3, 1.0, 2.5, 4.0, 7.0, 15.0):
        assert mittag_leffler(0.5, -x) == pytest.approx(math.exp(x * x) * erfc(x), rel=1e-10)


def test_ml_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        mittag_leffler(0.5, 0.1)
    with pytest.raises(ParameterError):
        mittag_leffler(1.5, -1.0)
    with pytest.raises(ParameterError):
        mittag_leffler(0.5, -1.0, method="pade")


@pytest.mark.parametrize("mu", [0.3, 0.5, 0.6, 0.8, 0.95])
def test_ml_series_and_integral_agree_at_seam(mu):
    for x in (SERIES_RADIUS * 0.9, SERIES_RADIUS, 1.0):
        try:
            series = mittag_leffler(mu, -x, method="series")
        except EnvelopeError:
            continue
        assert series == pytest.approx(mittag_leffler(mu, -x, method="integral"), abs=1e-10)


def test_frac_poisson_examples():
    c = frac_poisson_states(MLParams(1.0), 2.0)
    assert c.probs[0] == pytest.approx(math.exp(-2), abs=1e-15)
    np.testing.assert_allclose(c.probs, stats.poisson.pmf(np.arange(c.probs.size), 2.0), atol=1e-12)
    zero = frac_poisson_states(MLParams(0.7), 0.0)
    np.testing.assert_array_equal(zero.probs, [1.0])
    first = frac_poisson_states(MLParams(0.8), 1.0)
    assert first.probs[0] == pytest.approx(mittag_leffler(0.8, -1.0), abs=1e-12)
    assert first.deficit < 1e-12


def test_frac_poisson_envelope():
    clock = MLParams(0.6, 1.0)
    t_edge = ENVELOPE ** (1 / 0.6)
    frac_poisson_states(clock, t_edge * 0.99)
    with pytest.raises(EnvelopeError, match="envelope"):
        frac_poisson_states(clock, t_edge * 1.01)


def test_clock_params_validation():
    with pytest.raises(ParameterError):
        MLParams(0.0)
    with pytest.raises(ParameterError):
        MLParams(0.5, -1.0)


def test_composed_examples():
    d = geometric(0.4, 200)
    table = composed_states(d, MLParams(0.8), [0.0, 1.0, 3.0])
    assert table.probs[0, 0] == 1.0
    for k, t in enumerate(table.times[1:], 1):
        assert table.probs[k, 0] == pytest.approx(mittag_leffler(0.8, -0.4 * t**0.8), abs=1e-8)
    poisson = composed_states(d, MLParams(1.0, 2.0), [1.5])
    assert poisson.probs[0, 0] == pytest.approx(math.exp(-0.4 * 2.0 * 1.5), abs=1e-12)


def test_composed_horizon_guard():
    with pytest.raises(ParameterError, match="horizon"):
        composed_states(geometric(0.5, 5), MLParams(0.8), [3.0])


def test_pi_examples():
    d = sibuya(0.5, 200)
    clock = MLParams(0.7)
    assert pi_series(d, clock, 1.0, 1.0, 2.0) == pytest.approx(1.0, abs=1e-12)
    assert pi_series(d, clock, 0.3, -0.4, 0.0) == 1.0
    g = geometric(0.3, 200)
    assert pi_series(g, clock, 0.2, -0.5, 3.0) == pytest.approx(pi_geometric_closed(0.3, clock, 0.2, -0.5, 3.0), abs=1e-8)


def test_pi_accepts_complex_arguments():
    d = geometric(0.5, 200)
    value = pi_series(d, MLParams(1.0), 1j, -1j, 1.0)
    # Poisson clock with Bernoulli trials: exp(-xi0 t (1 - q b - p a))
    assert value == pytest.approx(np.exp(-(1 - 0.5 * (-1j) - 0.5 * 1j)), abs=1e-12)


def test_ml_identity_grid():
    rng = np.random.default_rng(20240607)
    pairs = rng.uniform(-1, 1, size=(20, 2))
    for p in (0.3, 0.7):
        d = geometric(p, 256)
        for mu in (0.6, 0.8, 1.0):
            clock = MLParams(mu)
            for t in (0.5, 1.0, 2.0, 5.0):
                for a, b in pairs:
                    assert abs(pi_series(d, clock, a, b, t) - pi_geometric_closed(p, clock, a, b, t)) < 1e-8


def test_mc_clock_reduces_to_poisson():
    ens = actrw_mc(geometric(0.5, 400), MLParams(1.0), UP, DOWN, [3.0], 200_000, seed=7)
    empirical = ens.trial_distribution(3.0)
    exact = stats.poisson.pmf(np.arange(empirical.size), 3.0)
    assert 0.5 * np.abs(empirical - exact).sum() < 0.01


def test_mc_matches_state_polynomial():
    d = geometric(0.5, 400)
    clock = MLParams(0.8)
    ens = actrw_mc(d, clock, UP, DOWN, [1.0, 4.0], 200_000, seed=8)
    for t in (1.0, 4.0):
        succ = ens.success_distribution(t)
        v = 0.4
        empirical = float(np.dot(v ** np.arange(succ.size), succ))
        assert empirical == pytest.approx(pi_series(d, clock, v, 1.0, t), abs=0.005)


def test_mc_repeatable():
    d = sibuya(0.5, 400)
    a = actrw_mc(d, MLParams(0.7), UP, DOWN, [2.0], 5000, seed=3)
    b = actrw_mc(d, MLParams(0.7), UP, DOWN, [2.0], 5000, seed=3)
    np.testing.assert_array_equal(a.position_counts, b.position_counts)
    np.testing.assert_array_equal(a.trial_counts, b.trial_counts)


# -- properties --------------------------------------------------------------

mus = st.floats(0.2, 1.0)


@settings(max_examples=40, deadline=None)
@given(mus, st.floats(0.0, 12.0), st.floats(0.0, 12.0))
def test_ml_monotone_and_bounded(mu, x, dx):
    hi = mittag_leffler(mu, -x)
    lo = mittag_leffler(mu, -(x + dx))
    assert 0.0 < lo <= hi + 1e-13 <= 1.0 + 1e-13


@settings(max_examples=25, deadline=None)
@given(st.floats(0.4, 1.0), st.floats(0.0, 8.0))
def test_clock_states_normalized(mu, t):
    clock = MLParams(mu)
    if clock.scaled_time(t) > ENVELOPE:
        return
    c = frac_poisson_states(clock, t)
    assert np.all(c.probs >= 0.0)
    assert c.deficit < 1e-10
    assert abs(math.fsum(c.probs) + c.deficit - 1.0) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0.4, 1.0), st.floats(0.05, 1.0))
def test_composed_survival_non_increasing(mu, p):
    d = geometric(p, 300)
    table = composed_states(d, MLParams(mu), np.linspace(0.0, 5.0, 11))
    assert np.all(np.diff(table.probs[:, 0]) <= 1e-12)
    assert np.all(table.probs >= 0.0)
    assert np.all(table.probs.sum(axis=1) <= 1.0 + 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.0, 4.0))
def test_poisson_clock_thins_to_poisson(p, t):
    table = composed_states(geometric(p, 300), MLParams(1.0), [t])
    assert table.probs[0, 0] == pytest.approx(math.exp(-p * t), abs=1e-12)
