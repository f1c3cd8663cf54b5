import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from adtrw.dtrp_core import TailClass, geometric, shifted_poisson, sibuya, tabulated, trivial
from adtrw.errors import ParameterError
from adtrw.recurrence import (
    MAX_DERIVATIVE_ORDER,
    Verdict,
    analyze,
    asymptotic_slope,
    density_from_bias,
    escape_and_return,
    est_lt,
    est_numeric,
    est_partial_sums,
    expected_position,
    find_r_zero,
    invert_bias,
    mean_wait,
    site_table,
    strict_unbiased_check,
)

# -- oracles -----------------------------------------------------------------


def test_mean_wait_examples():
    assert mean_wait(geometric(0.5, 8)) == 2.0
    assert mean_wait(sibuya(0.5, 8)) == math.inf
    assert mean_wait(trivial(8)) == 1.0
    with pytest.raises(ParameterError, match="tail class unknown"):
        mean_wait(tabulated([0.5, 0.5]))
    assert mean_wait(tabulated([0.5, 0.5]), TailClass.LIGHT) == 1.5


def test_est_examples():
    d = geometric(0.6, 256)
    assert est_lt(d, 0) == pytest.approx(5.0, abs=1e-12)
    assert est_lt(d, -1) == pytest.approx(5.0 - 1 / 0.6, abs=1e-12)
    assert est_lt(trivial(16), -3) == 0.0
    assert est_lt(geometric(0.5, 64), 0) == math.inf


@pytest.mark.parametrize("p", [0.55, 0.6, 0.7, 0.9])
def test_bernoulli_branches_agree(p):
    left, right = est_lt(geometric(p, 1024), 0), est_lt(geometric(1 - p, 1024), 0)
    assert left == pytest.approx(1 / (2 * p - 1), abs=1e-12)
    assert right == pytest.approx(left, abs=1e-12)


@pytest.mark.parametrize("p", [0.6, 0.3])
@pytest.mark.parametrize("n", [-5, -3, -1, 0, 1, 2, 4])
def test_residues_match_truncated_sums(p, n):
    d = geometric(p, 1500)
    assert est_lt(d, n) == pytest.approx(est_numeric(d, n, 1500), abs=1e-6)


def test_residue_for_poisson_waits():
    d = shifted_poisson(0.5, 1200)
    for n in (-2, 0, 3):
        assert est_lt(d, n) == pytest.approx(est_numeric(d, n, 1200), abs=1e-6)


def test_derivative_order_cap():
    d = geometric(0.6, 64)
    est_lt(d, -(MAX_DERIVATIVE_ORDER + 1))
    with pytest.raises(ParameterError):
        est_lt(d, -(MAX_DERIVATIVE_ORDER + 2))


def test_fat_tails_rejected_by_residues():
    with pytest.raises(ParameterError, match="light-tailed"):
        est_lt(sibuya(0.5, 64), 0)


def test_r_zero_examples():
    r, slope = find_r_zero(geometric(0.4, 200))
    assert r == pytest.approx(2 / 3, abs=1e-12)
    assert slope < 1.0
    assert est_lt(geometric(0.4, 200), 0) == pytest.approx(5.0, abs=1e-12)
    d = shifted_poisson(1.5, 200)
    r, slope = find_r_zero(d)
    assert 0 < r < 1
    assert abs(math.exp(1.5 * (r - 1)) - r) < 1e-12
    assert slope < 1.0
    with pytest.raises(ParameterError):
        find_r_zero(geometric(0.6, 64))


def test_partial_sums_monotone_and_converging():
    d = geometric(0.6, 2048)
    sums = est_partial_sums(d, 0, 2048)
    assert np.all(np.diff(sums) >= 0)
    gaps = 5.0 - sums[::2]
    assert np.all(np.diff(gaps) <= 0)
    assert gaps[-1] < 1e-3
    assert est_numeric(geometric(0.6, 400), 0, 400) == pytest.approx(5.0, abs=1e-3)


def test_escape_examples():
    assert escape_and_return(geometric(0.6, 8)) == pytest.approx((0.8, 1.0))
    assert escape_and_return(geometric(0.5, 8)) == (1.0, 1.0)
    assert escape_and_return(trivial(8)) == (0.0, 1.0)
    with pytest.raises(ParameterError):
        escape_and_return(geometric(0.3, 8))


def test_slope_examples():
    assert asymptotic_slope(geometric(0.7, 8)) == pytest.approx(0.4)
    assert asymptotic_slope(geometric(0.5, 8)) == 0.0
    assert asymptotic_slope(sibuya(0.5, 8)) == -1.0


def test_bias_inversion_examples():
    np.testing.assert_allclose(density_from_bias(0.2 * np.arange(1, 65)).probs, geometric(0.6, 64).probs, atol=1e-13)
    np.testing.assert_allclose(density_from_bias(np.zeros(64)).probs, geometric(0.5, 64).probs, atol=1e-13)
    np.testing.assert_allclose(density_from_bias(np.arange(1.0, 65.0)).probs, trivial(64).probs, atol=1e-13)


def test_bias_inversion_round_trip():
    d = geometric(0.6, 128)
    recovered = density_from_bias(expected_position(d, 128)[1:])
    assert np.max(np.abs(recovered.probs - d.probs)) < 1e-10


def test_bias_inversion_rejections():
    report = invert_bias([0.2, 0.9])
    assert not report.admissible
    assert report.first_bad_t == 2
    with pytest.raises(ParameterError):
        density_from_bias([0.5, -3.0])
    with pytest.raises(ParameterError):
        invert_bias([0.2, 0.9]).density


def test_strict_unbiased_examples():
    assert strict_unbiased_check(geometric(0.5, 64), 64)
    assert not strict_unbiased_check(geometric(0.6, 64), 64)
    assert not strict_unbiased_check(sibuya(0.5, 64), 64)
    assert not strict_unbiased_check(shifted_poisson(1.0, 64), 64)


def test_analyze_reports():
    rep = analyze(geometric(0.6, 256))
    assert rep.verdict is Verdict.TRANSIENT
    assert rep.est_origin == pytest.approx(5.0)
    assert rep.escape_prob == pytest.approx(0.2)
    assert rep.to_dict()["est"] == pytest.approx(5.0)
    rec = analyze(geometric(0.5, 256))
    assert rec.verdict is Verdict.RECURRENT
    assert rec.escape_prob == 0.0
    assert rec.to_dict()["est"] == "inf"
    fat = analyze(sibuya(0.5, 256))
    assert fat.verdict is Verdict.TRANSIENT
    assert fat.to_dict()["a1"] == "inf"
    assert fat.asym_slope == -1.0
    left = analyze(geometric(0.4, 256))
    assert left.r_zero == pytest.approx(2 / 3)


def test_recurrence_tolerance_is_configurable():
    d = geometric(0.5 + 1e-7, 64)
    assert analyze(d).verdict is Verdict.TRANSIENT
    assert analyze(d, recurrence_tol=1e-5).verdict is Verdict.RECURRENT


def test_site_table_rows():
    rows = site_table(geometric(0.6, 512), [-1, 0, 1], 512)
    assert [r[0] for r in rows] == [-1, 0, 1]
    for _, exact, numeric in rows:
        assert exact == pytest.approx(numeric, abs=1e-3)
    fat = site_table(sibuya(0.5, 64), [-1, 0, 1], 64)
    assert math.isnan(fat[0][1]) and math.isnan(fat[2][1])
    assert fat[1][1] == pytest.approx(fat[1][2], abs=0.01)


# -- properties --------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95))
def test_est_is_feller_value(p):
    assume(abs(p - 0.5) > 0.02)
    assert est_lt(geometric(p, 512), 0) == pytest.approx(1 / abs(2 * p - 1), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.45))
def test_r_zero_properties(p):
    d = geometric(p, 512)
    r, slope = find_r_zero(d)
    assert 0 < r < 1
    assert abs(np.polynomial.polynomial.polyval(r, d.probs) - r) < 1e-12
    assert slope < 1


@settings(max_examples=30, deadline=None)
@given(st.floats(0.6, 0.95), st.integers(-6, 6))
def test_est_matches_sums_on_every_site(p, n):
    d = geometric(p, 800)
    assert est_lt(d, n) == pytest.approx(est_numeric(d, n, 800), abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=40))
def test_bias_inversion_recovers_tabulated_densities(xs):
    psi = np.asarray(xs)
    psi = psi / (psi.sum() * 1.05) if psi.sum() > 0 else psi
    assume(psi[0] > 0.05)
    d = tabulated(psi)
    f = expected_position(d, d.horizon)[1:]
    recovered = density_from_bias(f)
    np.testing.assert_allclose(recovered.probs, d.probs, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.0))
def test_escape_probability_in_unit_interval(p):
    assume(p >= 0.5)
    f00, f0n = escape_and_return(geometric(p, 32))
    assert 0 <= f00 <= 1 and f0n == 1.0
