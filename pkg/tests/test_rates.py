import math

import pytest
from hypothesis import given, strategies as st

from idfeedback import rates


def test_anchors():
    assert rates.rate_s(0.0) == 1.0
    assert rates.rate_s(1.0 / 3.0) == 0.0
    assert rates.rate_id(0.0) == 1.0
    assert rates.rate_id(0.5) == 0.0


def test_entropy_values():
    assert rates.entropy(0.5) == 1.0
    assert rates.entropy(0.0) == rates.entropy(1.0) == 0.0
    assert rates.entropy(0.11) == pytest.approx(0.49991596, abs=1e-8)
    with pytest.raises(rates.DomainError):
        rates.entropy(1.5)


@pytest.mark.parametrize("fn,brk", [(rates.rate_s, rates.SUBST_BREAK), (rates.rate_id, rates.ID_BREAK)])
def test_continuous_at_break(fn, brk):
    assert abs(fn(brk) - fn(math.nextafter(brk, 1.0))) < 1e-9
    assert abs(fn(brk - 1e-12) - fn(brk + 1e-12)) < 1e-9


def test_break_points_correspond():
    # the insertion-deletion break maps onto the substitution break under tau -> tau / (1 + tau)
    assert rates.ID_BREAK / (1 + rates.ID_BREAK) == pytest.approx(rates.SUBST_BREAK, abs=1e-15)


def test_alpha_max_solves_key_equation():
    a = rates.ALPHA_MAX
    assert a * (2 - a) ** 2 == pytest.approx(1.0, abs=1e-14)


def test_tangent_line_is_the_linear_branch():
    # the tangent to 1 - h at the break goes through (1/3, 0) with slope -3 log(phi)
    slope, intercept = rates.tangent_params(rates.SUBST_BREAK)
    assert slope == pytest.approx(-3 * rates.LOG2_PHI, abs=1e-12)
    assert intercept == pytest.approx(rates.LOG2_PHI, abs=1e-12)
    for tau in (0.2, 0.25, 0.3, 1 / 3):
        assert rates.rate_s(tau) == pytest.approx(intercept + slope * tau, abs=1e-12)


@given(st.floats(min_value=0.0, max_value=1.0))
def test_identity_between_curves(tau):
    assert rates.rate_id(tau) == pytest.approx((1 + tau) * rates.rate_s(tau / (1 + tau)), abs=1e-9)


@given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0))
def test_curves_nonincreasing(a, b):
    lo, hi = min(a, b), max(a, b)
    assert rates.rate_s(lo) >= rates.rate_s(hi) - 1e-15
    assert rates.rate_id(lo) >= rates.rate_id(hi) - 1e-15


@given(st.floats(min_value=1e-9, max_value=0.5 - 1e-9))
def test_minimization_margin_nonnegative(tau):
    assert rates.minimization_margin(tau) >= -1e-12


@given(st.floats(min_value=0.0, max_value=1.0))
def test_tangent_lies_below_curve(tau):
    # 1 - h is convex, so every tangent lies below it
    slope, intercept = rates.tangent_params(0.2)
    assert intercept + slope * tau <= 1 - rates.entropy(tau) + 1e-12


def test_branch_labels():
    assert rates.rate_s_branch(0.1) == "entropy"
    assert rates.rate_s_branch(0.3) == "tangent"
    assert rates.rate_s_branch(0.4) == "zero"
    assert rates.rate_id_branch(0.2) == "entropy"
    assert rates.rate_id_branch(0.4) == "tangent"
    assert rates.rate_id_branch(0.6) == "zero"
    with pytest.raises(rates.DomainError):
        rates.rate_s(-0.1)


def test_rate_curve_table():
    table = rates.rate_curve("id", 0.001)
    assert len(table.rows) == 1001
    assert table.rows[0].rate == 1.0
    assert table.rows[500].tau == 0.5 and table.rows[500].rate == 0.0
    lines = table.to_text().splitlines()
    assert lines[0] == "0.000000 1.000000000000"
    assert all(len(line.split()) == 2 for line in lines)


def test_rate_curve_rejects_bad_input():
    with pytest.raises(rates.DomainError):
        rates.rate_curve("s", 0.3)
    with pytest.raises(rates.DomainError):
        rates.rate_curve("x", 0.01)
