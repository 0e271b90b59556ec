"""Equilibrium classification, Σ geometry and the canonical frame."""
from fractions import Fraction

import numpy as np
import pytest

from kolmo.core.errors import InputError, NotSlidingError, OffLineError, ParametrizationError
from kolmo.models.results import EquilibriumClass, SigmaClass
from kolmo.models.system import KolmogorovField, PiecewiseKolmogorov, SeparationLine
from kolmo.services.model_service import (
    analyze_equilibrium,
    canonical_frame,
    canonical_frame_at,
    canonical_frame_mp,
    cc_build,
    cc_zone,
    classify_sigma_point,
    equilibrium_off_axes,
    exact_sigma_direction,
    sigma_arcs,
    sigma_point,
    sliding_field,
)

LV = KolmogorovField(1.0, 0.0, -1.0, -1.0, 1.0, 0.0)


def cc_pair():
    return cc_build(1, 1, ((1, Fraction(4, 3), 1), (2, 1, 1)))


def test_cc_zone_is_a_center_at_the_point():
    Z = cc_zone(Fraction(2), Fraction(3), Fraction(1, 2), Fraction(5, 4), Fraction(3))
    x0, y0 = Fraction(2), Fraction(3)
    assert Z(x0, y0) == (0, 0)
    J = Z.jacobian(x0, y0)
    assert J[0, 0] + J[1, 1] == 0
    assert J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0] == 9


def test_cc_zone_rejects_bad_parameters():
    with pytest.raises(ParametrizationError):
        cc_zone(1, 1, 1, 0, 1)
    with pytest.raises(ParametrizationError):
        cc_zone(1, 1, 1, 1, 0)


def test_cc_build_classification():
    eq = analyze_equilibrium(cc_pair())
    assert eq.classification is EquilibriumClass.CC
    assert (float(eq.x0), float(eq.y0)) == (1.0, 1.0)
    assert eq.D == pytest.approx((1.0, 1.0))
    assert eq.traces == pytest.approx((0.0, 0.0), abs=1e-15)
    assert eq.on_sigma


def test_focus_focus_after_trace_shift():
    Z = cc_pair()
    Z = PiecewiseKolmogorov(Z.zone1.with_trace(Fraction(1, 10)), Z.zone2.with_trace(Fraction(-1, 5)), Z.line)
    eq = analyze_equilibrium(Z)
    assert eq.classification is EquilibriumClass.FOCUS_FOCUS
    assert eq.traces == pytest.approx((0.1, -0.2))


def test_mixed_when_one_zone_keeps_zero_trace():
    Z = cc_pair()
    Z = Z.replace_zone(1, Z.zone1.with_trace(Fraction(1, 10)))
    assert analyze_equilibrium(Z).classification is EquilibriumClass.MIXED


def test_non_monodromic_off_sigma():
    Z = cc_build(1, 1, ((1, 1, 1), (2, 1, 1)), SeparationLine(1, 0, -2))
    assert analyze_equilibrium(Z).classification is EquilibriumClass.NON_MONODROMIC


def test_non_monodromic_opposite_rotation():
    Z = cc_build(1, 1, ((1, 1, 1), (1, -1, 1)))
    assert analyze_equilibrium(Z).classification is EquilibriumClass.NON_MONODROMIC


def test_lotka_volterra_is_a_center_point():
    Z = PiecewiseKolmogorov(LV, LV, SeparationLine.through(4.0, -3.0, (1.0, 1.0)))
    eq = analyze_equilibrium(Z)
    assert eq.classification is EquilibriumClass.CC
    assert eq.dets == pytest.approx((1.0, 1.0))


def test_axes_are_invariant():
    assert cc_pair().zone1.axis_residual() == 0.0
    assert LV.axis_residual() == 0.0


def test_homothety_scales_equilibrium():
    Z = cc_pair().zone2
    x0, y0 = equilibrium_off_axes(Z.homothety(Fraction(1, 10)))
    assert (x0, y0) == (Fraction(11, 10), Fraction(11, 10))


def test_with_trace_keeps_equilibrium():
    Z = cc_pair().zone1.with_trace(Fraction(3, 7))
    assert equilibrium_off_axes(Z) == (1, 1)
    J = Z.jacobian(Fraction(1), Fraction(1))
    assert J[0, 0] + J[1, 1] == Fraction(3, 7)


def test_separation_line_needs_a_gradient():
    with pytest.raises(InputError):
        SeparationLine(0, 0, 1)


def test_zone_of():
    line = SeparationLine.through(4, -3, (1, 1))
    assert line.zone_of(0, 1) == 1
    assert line.zone_of(2, 1) == 2
    assert line.zone_of(1, 1) == 0


def test_classify_requires_a_point_on_sigma():
    with pytest.raises(OffLineError):
        classify_sigma_point(cc_pair(), (2.0, 1.0))


def test_identical_zones_cross_everywhere():
    Z = PiecewiseKolmogorov(LV, LV, SeparationLine.through(4.0, -3.0, (1.0, 1.0)))
    arcs = sigma_arcs(Z, (1.0, 1.0), -0.2, 0.2)
    assert len(arcs) == 1
    assert arcs[0][2] is SigmaClass.CROSSING


def test_homothety_opens_a_segment():
    Z = cc_build(1.0, 1.0, ((1.0, 1.0, 1.0), (2.0, 1.0, 1.0)), SeparationLine.through(1.0, 2.0, (1.0, 1.0)))
    Z = Z.replace_zone(1, Z.zone1.homothety(0.01))
    kinds = {kind for _, _, kind in sigma_arcs(Z, (1.0, 1.0), -0.2, 0.2, samples=401)}
    assert kinds & {SigmaClass.SLIDING, SigmaClass.ESCAPING}
    assert SigmaClass.CROSSING in kinds


def opened_segment():
    Z = cc_build(1.0, 1.0, ((1.0, 1.0, 1.0), (2.0, 1.0, 1.0)), SeparationLine.through(1.0, 2.0, (1.0, 1.0)))
    return Z.replace_zone(1, Z.zone1.homothety(0.01))


def test_sliding_field_is_tangent_to_sigma():
    Z = opened_segment()
    arcs = sigma_arcs(Z, (1.0, 1.0), -0.2, 0.2, samples=401)
    segments = [(lo, hi) for lo, hi, kind in arcs if kind in (SigmaClass.SLIDING, SigmaClass.ESCAPING)]
    assert segments
    for lo, hi in segments:
        for s in np.linspace(lo, hi, 7)[1:-1]:
            p = sigma_point(Z, (1.0, 1.0), s)
            v = sliding_field(Z, p)
            assert abs(float(Z.line.gradient @ v)) <= 1e-12 * (1 + np.hypot(*v))


def test_sliding_field_refuses_crossing_points():
    Z = opened_segment()
    arcs = sigma_arcs(Z, (1.0, 1.0), -0.2, 0.2, samples=401)
    lo, hi, _ = next(arc for arc in arcs if arc[2] is SigmaClass.CROSSING)
    with pytest.raises(NotSlidingError):
        sliding_field(Z, sigma_point(Z, (1.0, 1.0), 0.5 * (lo + hi)))


def test_exact_sigma_direction():
    line = SeparationLine(Fraction(3), Fraction(4), Fraction(-7))
    assert exact_sigma_direction(line) == (Fraction(-4, 5), Fraction(3, 5))
    assert exact_sigma_direction(line, reflected=True) == (Fraction(4, 5), Fraction(-3, 5))
    assert exact_sigma_direction(SeparationLine(1, 1, -2)) is None


def test_sigma_point_stays_on_line():
    Z = cc_pair()
    for s in (-0.3, 0.0, 0.7):
        p = sigma_point(Z, (1.0, 1.0), s)
        assert float(Z.line.h(*p)) == pytest.approx(0.0, abs=1e-12)


def test_canonical_frame_orientation():
    Z = cc_pair()
    frame = canonical_frame(Z, analyze_equilibrium(Z))
    M = frame.transform.matrix
    assert M @ M.T == pytest.approx(np.eye(2))
    assert list(frame.transform.forward((1.0, 1.0))) == pytest.approx([0.0, 0.0])
    # Σ is the canonical x-axis, zone 1 lies above it
    assert frame.transform.forward(sigma_point(Z, (1.0, 1.0), 0.1))[1] == pytest.approx(0.0, abs=1e-12)
    above = frame.transform.inverse((0.0, 0.1))
    assert Z.line.zone_of(*above) == 1
    # counter-clockwise: on the positive x-axis zone 1 moves up
    assert frame.zone1(0.1, 0.0)[1] > 0


def test_working_precision_frame_matches_the_binary64_one():
    Z = cc_pair()
    frame = canonical_frame(Z, analyze_equilibrium(Z))
    precise = canonical_frame_mp(Z, frame.transform, 50)
    assert precise.transform.reflected == frame.transform.reflected
    assert precise.transform.matrix.dtype == object
    assert np.array(precise.transform.matrix, dtype=float) == pytest.approx(frame.transform.matrix, abs=1e-15)
    for v in precise.transform.offset:
        assert abs(v - 1) < 1e-45
    for i in (1, 2):
        coeffs = precise.zone(i).coeffs
        assert all(abs(c) < 1e-45 for c in coeffs[:, 0])
        assert np.array(coeffs, dtype=float) == pytest.approx(frame.zone(i).coeffs, abs=1e-12)


def test_working_precision_frame_off_the_equilibrium():
    Z = cc_pair()
    frame = canonical_frame_at(Z, (1.3, 1.4))
    precise = canonical_frame_mp(Z, frame.transform, 40)
    x, y = precise.transform.offset
    assert abs(4 * (x - 1) - 3 * (y - 1)) < 1e-35
    assert (float(x), float(y)) == pytest.approx(frame.transform.offset, abs=1e-12)


def test_rational_frame_transform_is_exact():
    q = cc_pair().zone1.to_quadratic()
    M = np.array([[Fraction(3, 5), Fraction(4, 5)], [Fraction(-4, 5), Fraction(3, 5)]], dtype=object)
    exact = q.transformed((Fraction(1), Fraction(1)), M)
    assert exact.coeffs[0, 0] == 0 and exact.coeffs[1, 0] == 0
    approx = q.as_float().transformed((1.0, 1.0), np.array(M, dtype=float))
    assert np.array(exact.coeffs, dtype=float) == pytest.approx(approx.coeffs, abs=1e-14)
