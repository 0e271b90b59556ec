"""Exact root isolation, modular reduction and certified signs."""
from fractions import Fraction

import pytest
import sympy as sp

from kolmo.core.errors import InconclusiveSignError, KolmoError
from kolmo.services.polyroots_service import (
    GAMMA,
    RootInterval,
    certify_sign,
    interval_eval,
    poly_value,
    reduce_mod,
    refine_root,
    sturm_isolate,
    to_poly,
)
from kolmo.utils.published_polynomials import TABLE


def test_isolate_sqrt2():
    roots = sturm_isolate(GAMMA ** 2 - 2)
    assert len(roots) == 2
    neg, pos = roots
    assert neg.lo <= -2 ** 0.5 <= neg.hi
    assert pos.lo <= 2 ** 0.5 <= pos.hi


def test_isolate_repeated_root_counts_once():
    roots = sturm_isolate((GAMMA - 1) ** 2 * (GAMMA + 3))
    assert len(roots) == 2
    assert roots[0].lo <= -3 <= roots[0].hi
    assert roots[1].lo <= 1 <= roots[1].hi


def test_isolate_no_real_roots():
    assert sturm_isolate(GAMMA ** 2 + 1) == []


def test_isolate_zero_polynomial():
    with pytest.raises(KolmoError):
        sturm_isolate(0 * GAMMA)


def test_refine_keeps_the_root():
    (_, pos) = sturm_isolate(GAMMA ** 2 - 2)
    fine = refine_root(pos, GAMMA ** 2 - 2, Fraction(1, 10 ** 12))
    assert fine.width <= Fraction(1, 10 ** 12)
    assert float(fine.midpoint) == pytest.approx(2 ** 0.5, abs=1e-12)


def test_poly_value_exact():
    p = to_poly(3 * GAMMA ** 2 - GAMMA + sp.Rational(1, 2))
    assert poly_value(p, Fraction(1, 3)) == Fraction(1, 2)


def test_reduce_mod():
    assert reduce_mod(GAMMA ** 3, GAMMA ** 2 - 1) == to_poly(GAMMA)
    assert reduce_mod(GAMMA ** 2 - 1, GAMMA ** 2 - 1).is_zero


def test_interval_eval_inconclusive():
    iv = RootInterval(Fraction(-1), Fraction(1), -1, 1)
    with pytest.raises(InconclusiveSignError):
        interval_eval(GAMMA, iv)


def test_certify_sign_at_sqrt2():
    root_poly = GAMMA ** 2 - 2
    (_, pos) = sturm_isolate(root_poly)
    sign, iv = certify_sign(GAMMA - sp.Rational(7, 5), pos, root_poly)
    assert sign == 1
    assert iv.lo <= 2 ** 0.5 <= iv.hi


def test_g_has_four_real_roots():
    roots = sturm_isolate(TABLE.polynomial("g"))
    assert len(roots) == 4
    g = TABLE.polynomial("g")
    positives = sorted(float(refine_root(iv, g, Fraction(1, 10 ** 10)).midpoint) for iv in roots if iv.lo > 0)
    assert positives == pytest.approx([0.74084, 0.84838], abs=1e-4)


def test_g_is_even():
    roots = [float(iv) for iv in sturm_isolate(TABLE.polynomial("g"))]
    assert roots[0] == pytest.approx(-roots[3], abs=1e-6)
    assert roots[1] == pytest.approx(-roots[2], abs=1e-6)
