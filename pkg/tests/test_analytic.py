"""Closed-form half-return maps, Lyapunov quantities and center predicates."""
import random
from fractions import Fraction

import pytest

from kolmo.cli.verify import CENTER2_INSTANCES, c3_continuity, parity_residual
from kolmo.core.config import Precision
from kolmo.core.errors import MonodromyError, RepresentationUnavailableError
from kolmo.models.results import ReturnCoefficients
from kolmo.models.system import PiecewiseKolmogorov
from kolmo.series.fields import F64, RATIONAL
from kolmo.services.analytic_service import (
    analytic_lyapunov,
    c3_condition,
    c3_line,
    center2_conditions,
    center2_system,
    center_check_c3,
    center_check_center2,
    difference_coeffs,
    first_integral,
    gradient_residual,
    half_return_by_reversion,
    half_return_coeffs,
    half_return_series,
    reduced_coeffs,
)
from kolmo.services.model_service import cc_build, cc_zone

H_SAMPLE = tuple(Fraction(v) for v in ("0", "0", "1", "1/2", "-1/3", "2", "0", "1/5", "-1", "3/7"))


def rc(h, zone=1):
    return ReturnCoefficients(h=tuple(Fraction(v) for v in h), A=Fraction(1), zone=zone)


def c3_ii_sample() -> PiecewiseKolmogorov:
    return cc_build(1, 1, ((2, 1, 1), (3, Fraction(7, 3), 1)), c3_line("ii"))


def test_first_integral_is_conserved():
    Z = cc_zone(1.0, 1.0, 1.0, 4.0 / 3.0, 1.0)
    H = first_integral(Z, (1.0, 1.0), F64)
    for x, y in ((1.05, 0.97), (0.9, 1.1), (1.2, 1.0)):
        assert gradient_residual(H, Z, x, y) < 1e-12


def test_first_integral_needs_nonzero_b():
    with pytest.raises(RepresentationUnavailableError):
        first_integral(cc_zone(1.0, 1.0, 0.0, 1.0, 1.0), (1.0, 1.0), F64)


def test_first_integral_needs_a_center():
    saddle_like = cc_zone(1.0, 1.0, 1.0, 1.0, 1.0).with_trace(3.0)
    with pytest.raises(MonodromyError):
        first_integral(saddle_like, (1.0, 1.0), F64)


def test_half_return_closed_forms_match_the_series():
    printed = half_return_coeffs(rc(H_SAMPLE))
    series = half_return_series(rc(H_SAMPLE), RATIONAL)
    assert sorted(printed) == list(range(2, 9))
    for k, value in printed.items():
        assert series[k] == value


def test_reversion_agrees_with_level_set():
    a = half_return_series(rc(H_SAMPLE), RATIONAL)
    b = half_return_by_reversion(rc(H_SAMPLE), RATIONAL)
    assert a.coeffs == b.coeffs[: len(a.coeffs)]


def test_half_return_starts_with_reflection():
    series = half_return_series(rc(H_SAMPLE), RATIONAL)
    assert series[0] == 0
    assert series[1] == -1
    assert series[2] == -H_SAMPLE[3]


def test_identical_zones_have_no_displacement():
    seq = difference_coeffs(rc(H_SAMPLE, 1), rc(H_SAMPLE, 2))
    assert all(w == 0 for w in seq.W)
    assert seq.center_suspected


def test_first_difference_decides_stability():
    other = list(H_SAMPLE)
    other[3] = Fraction(1, 4)
    seq = difference_coeffs(rc(H_SAMPLE, 1), rc(other, 2))
    # W2 = -h13 + h23 = -1/2 + 1/4
    assert seq[2] == Fraction(-1, 4)
    assert seq.order == 2
    assert seq.stability.value == "unstable"
    assert seq.reduced[2] == seq[2]


def test_reduced_w4_on_its_locus():
    other = list(H_SAMPLE)
    other[4] = Fraction(1, 3)
    full = difference_coeffs(rc(H_SAMPLE, 1), rc(other, 2))
    reduced = reduced_coeffs(rc(H_SAMPLE, 1), rc(other, 2))
    assert full[2] == 0
    assert full[3] == 0
    assert reduced[4] == full[4]


def test_parity_of_odd_quantities():
    assert parity_residual(random.Random(7)) == 0


def test_c3_ii_sample_is_an_exact_center():
    seq = analytic_lyapunov(c3_ii_sample(), 9, Precision.RATIONAL)
    assert all(w == 0 for w in seq.W)
    assert seq.center_suspected


def test_generic_cc_pair_is_a_weak_focus():
    Z = cc_build(1, 1, ((1, Fraction(4, 3), 1), (2, 1, 1)))
    seq = analytic_lyapunov(Z, 9, Precision.RATIONAL)
    assert seq[1] == 0
    assert not seq.center_suspected
    assert seq.order % 2 == 0


def test_rational_and_float_pipelines_agree():
    Z = cc_build(1, 1, ((1, Fraction(4, 3), 1), (2, 1, 1)))
    exact = analytic_lyapunov(Z, 7, Precision.RATIONAL)
    approx = analytic_lyapunov(Z, 7, Precision.F64)
    assert approx.as_floats() == pytest.approx(exact.as_floats(), rel=1e-8, abs=1e-10)


def test_analytic_needs_cc_point():
    Z = cc_build(1, 1, ((1, Fraction(4, 3), 1), (2, 1, 1)))
    Z = Z.replace_zone(1, Z.zone1.with_trace(Fraction(1, 10)))
    with pytest.raises(MonodromyError):
        analytic_lyapunov(Z, 6, Precision.RATIONAL)


def test_c3_condition_vanishes_on_sample():
    value, terms = c3_condition("ii", 2, 1, 3, Fraction(7, 3), 1, 1)
    assert value == 0
    assert len(terms) == 4
    assert center_check_c3("ii", 2, 1, 3, Fraction(7, 3), 1, 1)
    assert not center_check_c3("ii", 2, 1, 3, Fraction(7, 3), 1, 2)


def test_c3_rejects_opposite_rotation():
    with pytest.raises(MonodromyError):
        center_check_c3("i", 1, 1, 2, -1, 1, 1)


def test_c3_unknown_variant():
    with pytest.raises(ValueError):
        c3_line("iv")


def test_center2_membership():
    assert center_check_center2(Fraction(1), Fraction(3, 2), Fraction(3, 2)) == {"C1"}
    assert center_check_center2(Fraction(5, 2), Fraction(1, 3), Fraction(7, 4)) == set()


def test_center2_conditions_vanish_on_their_family():
    for family, (b2, e1, e2) in CENTER2_INSTANCES.items():
        values = center2_conditions(b2, e1, e2)
        assert sorted(values) == [f"C{k}" for k in range(1, 9)]
        assert values[family] == (0, 0)
    assert center2_conditions(Fraction(-1), Fraction(2), Fraction(-2))["C2"] == (0, 0)
    assert center2_conditions(Fraction(5, 2), Fraction(1, 3), Fraction(7, 4))["C1"] == (Fraction(3, 2), Fraction(-17, 12))


@pytest.mark.parametrize("family", sorted(CENTER2_INSTANCES))
def test_center2_instances_are_centers(family):
    b2, e1, e2 = CENTER2_INSTANCES[family]
    assert family in center_check_center2(b2, e1, e2)
    seq = analytic_lyapunov(center2_system(b2, e1, e2), 9, Precision.RATIONAL)
    assert all(w == 0 for w in seq.W)


def test_c3_closed_form_integrals_are_continuous():
    assert c3_continuity() <= 1e-10
