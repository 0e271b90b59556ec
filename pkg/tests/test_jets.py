"""Jet transport: numeric Lyapunov quantities and parameter jets."""
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from kolmo.core.config import Precision
from kolmo.models.system import KolmogorovField, PiecewiseKolmogorov, SeparationLine
from kolmo.services.analytic_service import analytic_lyapunov
from kolmo.services.jet_service import (
    family_jets,
    finite_difference_gradient,
    jet_gradient,
    jet_half_return,
    numeric_lyapunov,
)
from kolmo.services.model_service import cc_build
from kolmo.services.unfold_service import (
    build_ff_system,
    build_ps_system,
    first_order_jets,
    homogeneity_defect,
    printed_w2_row,
    second_order_jets,
)
from kolmo.utils.published_polynomials import PROMEAN_POINT

MU = (0.5, 1.2)


def lotka_volterra():
    lv = KolmogorovField(1.0, 0.0, -1.0, -1.0, 1.0, 0.0)
    return PiecewiseKolmogorov(lv, lv, SeparationLine.through(4.0, -3.0, (1.0, 1.0)))


def test_identical_zones_center(cfg):
    seq = numeric_lyapunov(lotka_volterra(), 6, cfg)
    assert seq.center_suspected
    assert max(abs(w) for w in seq.as_floats()) < 1e-9


def test_jets_agree_with_closed_forms(cfg):
    Z = cc_build(1.0, 1.0, ((1.0, 4.0 / 3.0, 1.0), (2.0, 1.0, 1.0)))
    exact = analytic_lyapunov(Z, 8, Precision.F64)
    jet = numeric_lyapunov(Z, 6, cfg)
    scale = max(abs(float(exact[k])) for k in range(2, 7))
    for k in range(1, 7):
        assert abs(float(exact[k]) - jet[k]) <= 1e-6 * scale
    assert jet.order == exact.order
    assert jet.stability is exact.stability


def test_linear_rows_match_finite_differences(cfg):
    jd = first_order_jets("ps", MU, order=6, cfg=cfg)
    fd = finite_difference_gradient(build_ps_system, MU, 4, 2, step=1e-4, order=6, cfg=cfg)
    assert jet_gradient(jd, 2) == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_ps_w2_row_is_antisymmetric(cfg):
    row = first_order_jets("ps", MU, order=4, cfg=cfg).linear_row(2)
    assert row[2] == pytest.approx(-row[0], rel=1e-8, abs=1e-12)
    assert row[3] == pytest.approx(-row[1], rel=1e-8, abs=1e-12)


def test_ps_w2_row_direction_matches_printed_polynomials(cfg):
    jet_row = first_order_jets("ps", MU, order=4, cfg=cfg).linear_row(2)
    printed = printed_w2_row(MU)
    assert jet_row[1] / jet_row[0] == pytest.approx(printed[1] / printed[0], rel=1e-4)


def test_printed_w2_row_at_b_zero():
    row = printed_w2_row((0.0, 1.0))
    assert row * 243 == pytest.approx(np.array([-4032.0, 74.0, 4032.0, -74.0]))


def test_ff_lambda_jets_are_homogeneous(cfg):
    jd = first_order_jets("ff", MU, order=4, cfg=cfg)
    assert homogeneity_defect(jd, 2, [0.3, -0.1, 0.2, 0.05]) < 1e-12


def test_ps_family_keeps_the_center_shape():
    Z = build_ps_system(MU, (0.01, 0.02, -0.01, 0.03))
    for zone in (Z.zone1, Z.zone2):
        assert np.hypot(*zone(1.0, 1.0)) < 1e-14
        J = zone.jacobian(1.0, 1.0)
        assert J[0, 0] + J[1, 1] == pytest.approx(0.0, abs=1e-14)
        assert np.linalg.det(J) == pytest.approx(1.0, rel=1e-12)


def test_ff_family_moves_only_the_traces():
    lam = (0.2, -0.1, 0.3, 0.05)
    Z = build_ff_system(MU, lam, eps=0.01)
    traces = []
    for zone in (Z.zone1, Z.zone2):
        assert np.hypot(*zone(1.0, 1.0)) < 1e-14
        J = zone.jacobian(1.0, 1.0)
        traces.append(J[0, 0] + J[1, 1])
    assert traces == pytest.approx([0.01 * (0.2 + 0.3), 0.01 * (-0.1 + 0.05)])


def test_quadratic_jets_match_symmetric_differences(cfg):
    jd = family_jets(build_ps_system, MU, 4, order=4, degree=2, point=(1, 1), cfg=cfg)
    v = np.array([0.3, -0.2, 0.1, 0.4])
    t = 1e-2
    w_plus = numeric_lyapunov(build_ps_system(MU, tuple(t * v)), 4, cfg)[2]
    w_minus = numeric_lyapunov(build_ps_system(MU, tuple(-t * v)), 4, cfg)[2]
    assert jd.evaluate(2, 1, t * v) == pytest.approx((w_plus - w_minus) / 2, rel=1e-3, abs=1e-9)
    assert jd.evaluate(2, 2, t * v) == pytest.approx((w_plus + w_minus) / 2, rel=1e-2, abs=1e-7)


def test_family_jets_without_quadratic_terms(cfg):
    jd = family_jets(build_ff_system, MU, 4, order=4, degree=1, point=(1, 1), cfg=cfg)
    assert jd.degree == 1 and jd.m == 4
    assert not any(k == 2 for _, k in jd.parts)
    assert jd.linear_row(2) == pytest.approx(first_order_jets("ff", MU, order=4, cfg=cfg).linear_row(2))


@pytest.mark.slow
def test_second_order_jets_reduce_onto_omega(cfg):
    sj = second_order_jets(PROMEAN_POINT, order=6, cfg=cfg)
    T = sj.omega_matrix
    assert T.shape == (4, 4)
    assert np.linalg.matrix_rank(T) == 4
    for j in (3, 5):
        assert sj.linear_in_omega[j] @ T == pytest.approx(sj.jets.linear_row(j), rel=1e-8, abs=1e-12)
        assert all(sum(alpha) == 2 for alpha in sj.reduced[j])
    lam = np.array([0.1, -0.2, 0.05, 0.3])
    assert sj.lambda_for(T @ lam) == pytest.approx(lam)


@pytest.mark.slow
def test_extended_jets_resolve_below_binary64_rounding(cfg):
    Z = cc_build(1, 1, ((1, Fraction(4, 3), 1), (2, 1, 1)))
    exact = analytic_lyapunov(Z, 6, Precision.RATIONAL)
    ext = cfg.model_copy(update={"precision": Precision.EXTENDED, "extended_dps": 30})
    upper, lower = jet_half_return(Z, 4, ext)
    assert upper.data.dtype == object
    for k in (2, 3, 4):
        w = Fraction(exact[k])
        target = mpmath.mpf(w.numerator) / w.denominator
        assert abs((lower.data[k] - upper.data[k]) - target) < mpmath.mpf("1e-20") * (1 + abs(target))
