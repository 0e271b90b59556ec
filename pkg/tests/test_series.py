"""Truncated series, coefficient fields and multivariate jets."""
from fractions import Fraction

import pytest

from kolmo.core.config import Precision
from kolmo.core.errors import DegenerateBranchError, NonInvertibleError, SeriesDomainError, SingularSeriesError
from kolmo.series.fields import F64, RATIONAL, ExtendedField, field_for
from kolmo.series.multijet import MultiJet
from kolmo.series.truncated import (
    TruncatedSeries,
    implicit_series_solve,
    level_set_branch,
    series_exp,
    series_log,
    series_pow,
    series_reversion,
)


def rational(coeffs, order=None):
    return TruncatedSeries([Fraction(c) for c in coeffs], order, RATIONAL)


def test_geometric_reciprocal():
    s = rational([1, -1], 6)
    assert s.reciprocal().coeffs == tuple(Fraction(1) for _ in range(7))


def test_reciprocal_needs_constant_term():
    with pytest.raises(SingularSeriesError):
        TruncatedSeries.identity(4, RATIONAL).reciprocal()


def test_log_exp_are_inverse_in_rationals():
    s = rational([1, 1], 6)
    log1p = series_log(s)
    assert log1p.coeffs[:5] == (0, 1, Fraction(-1, 2), Fraction(1, 3), Fraction(-1, 4))
    assert series_exp(log1p) == s


def test_exp_of_identity():
    e = series_exp(TruncatedSeries.identity(4, RATIONAL))
    assert e.coeffs == (1, 1, Fraction(1, 2), Fraction(1, 6), Fraction(1, 24))


def test_log_rejects_nonpositive_constant():
    with pytest.raises(SeriesDomainError):
        series_log(rational([0, 1], 3))
    with pytest.raises(SeriesDomainError):
        series_log(rational([-2, 1], 3))


def test_rational_log_of_non_unit_constant_is_not_rational():
    with pytest.raises(SeriesDomainError):
        series_log(rational([2, 1], 3))


def test_square_root_series():
    root = series_pow(rational([1, 1], 3), Fraction(1, 2))
    assert root.coeffs == (1, Fraction(1, 2), Fraction(-1, 8), Fraction(1, 16))


def test_integer_power_matches_product():
    s = rational([2, 3, -1], 5)
    assert series_pow(s, 3) == s * s * s


def test_reversion_catalan_signs():
    s = rational([0, 1, 1], 4)
    assert series_reversion(s).coeffs == (0, 1, -1, 2, -5)


def test_reversion_round_trip_in_floats():
    s = TruncatedSeries([0.0, 2.0, 0.5, -0.25, 0.125], 4, F64)
    t = series_reversion(s)
    composed = s.compose(t)
    assert composed[1] == pytest.approx(1.0)
    assert all(abs(c) < 1e-14 for c in composed.coeffs[2:])


def test_reversion_needs_linear_term():
    with pytest.raises(NonInvertibleError):
        series_reversion(rational([0, 0, 1], 4))


def test_compose_needs_zero_constant_inner():
    with pytest.raises(SeriesDomainError):
        rational([1, 1], 3).compose(rational([1, 1], 3))


def test_derivative_drops_order():
    d = rational([5, 1, 1, 1], 3).derivative()
    assert d.order == 2
    assert d.coeffs == (1, 2, 3)


def test_shift_down():
    assert rational([0, 0, 3, 4], 3).shift_down(2).coeffs == (3, 4)
    with pytest.raises(SeriesDomainError):
        rational([0, 1, 3], 2).shift_down(2)


def test_truncation_order_below_two_is_rejected():
    for order in (0, 1):
        with pytest.raises(SeriesDomainError):
            rational([1, 1], order)
    with pytest.raises(SeriesDomainError):
        TruncatedSeries.identity(1, RATIONAL)
    with pytest.raises(SeriesDomainError):
        TruncatedSeries([3.0])
    with pytest.raises(SeriesDomainError):
        rational([1, 2, 3], 2).with_order(1)


def test_derived_series_may_fall_below_two():
    d = rational([5, 1, 1], 2).derivative()
    assert d.order == 1
    assert (d * 2).coeffs == (2, 4)
    assert d.shift_up(1).coeffs == (0, 1, 2)


def test_implicit_solve_linear_branch():
    # H = σ - ρ - ρσ gives σ = ρ/(1 - ρ)
    H = [[0, 1], [-1, -1]]
    sigma = implicit_series_solve(H, 5, RATIONAL)
    assert sigma.coeffs == (0, 1, 1, 1, 1, 1)


def test_implicit_solve_degenerate():
    with pytest.raises(DegenerateBranchError):
        implicit_series_solve([[0, 0, 1], [1]], 4, RATIONAL)


def test_level_set_branch_of_pure_square():
    branch = level_set_branch(rational([0, 0, 1], 4))
    assert branch.coeffs == (0, -1, 0, 0)


def test_level_set_branch_cubic_term():
    h3 = Fraction(2, 5)
    branch = level_set_branch(rational([0, 0, 1, h3], 5))
    assert branch[1] == -1
    assert branch[2] == -h3


def test_level_set_branch_needs_quadratic_start():
    with pytest.raises(DegenerateBranchError):
        level_set_branch(rational([0, 1, 1], 3))


def test_extended_field_carries_digits():
    field = ExtendedField(50)
    third = field.coerce(Fraction(1, 3))
    assert abs(third * 3 - 1) < field.coerce("1e-45")


def test_field_for():
    assert field_for(Precision.RATIONAL) is RATIONAL
    assert field_for(Precision.F64) is F64
    assert isinstance(field_for(Precision.EXTENDED, 30), ExtendedField)


def test_multijet_products():
    r = MultiJet.radial(4, 2, 2)
    lam0 = MultiJet.parameter(0, 4, 2, 2)
    s = 1 + r + lam0
    sq = s * s
    assert sq.coefficient(0, (0, 0)) == pytest.approx(1.0)
    assert sq.coefficient(1, (1, 0)) == pytest.approx(2.0)
    assert sq.coefficient(0, (2, 0)) == pytest.approx(1.0)
    assert sq.coefficient(0, (1, 1)) == pytest.approx(0.0)


def test_multijet_truncates_lambda_degree():
    lam1 = MultiJet.parameter(1, 2, 2, 2)
    cube = lam1 * lam1 * lam1
    assert all(v == 0 for v in cube.data)


def test_multijet_reciprocal():
    one_plus_r = 1 + MultiJet.radial(5, 1, 1)
    inv = one_plus_r.reciprocal()
    assert [inv.coefficient(k, (0,)) for k in range(6)] == pytest.approx([1, -1, 1, -1, 1, -1])


def test_multijet_reciprocal_singular():
    with pytest.raises(SingularSeriesError):
        MultiJet.radial(3, 1, 1).reciprocal()
