"""
Exact univariate polynomial tools over the rationals.

Polynomials are sympy ``Poly`` objects over QQ; interval endpoints are
``fractions.Fraction``. Real roots are isolated with Sturm sequences and
refined by bisection, and signs at algebraic points are decided by exact
interval arithmetic.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple, Union

import sympy as sp
from sympy import Poly

from kolmo.core.errors import InconclusiveSignError, KolmoError

log = logging.getLogger("kolmo.polyroots")

GAMMA = sp.Symbol("gamma")

IntPolynomial = Poly


@dataclass(frozen=True)
class RootInterval:
    lo: Fraction
    hi: Fraction
    sign_lo: int
    sign_hi: int
    sturm_count: int = 1

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __float__(self):
        return float(self.midpoint)


def to_poly(p: Union[Poly, sp.Expr, Sequence], gen=GAMMA) -> Poly:
    """Coerce an expression or a high-to-low coefficient list into a Poly over QQ."""
    if isinstance(p, Poly):
        return p.set_domain(sp.QQ) if p.get_domain() != sp.QQ else p
    if isinstance(p, (list, tuple)):
        return Poly([sp.Rational(str(c)) if isinstance(c, Fraction) else c for c in p], gen, domain=sp.QQ)
    return Poly(sp.expand(p), gen, domain=sp.QQ)


def _fraction(c) -> Fraction:
    c = sp.Rational(c)
    return Fraction(int(c.p), int(c.q))


def coefficients(p: Poly) -> List[Fraction]:
    """High-to-low coefficients as Fractions."""
    return [_fraction(c) for c in p.all_coeffs()]


def poly_value(p: Poly, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in coefficients(p):
        acc = acc * x + c
    return acc


def _sign(v) -> int:
    return (v > 0) - (v < 0)


# ─────────────────────────────────────────────
# Sturm sequences
# ─────────────────────────────────────────────

def sturm_sequence(p: Poly) -> List[Poly]:
    return [to_poly(q, p.gen) for q in sp.sturm(p)]


def count_sign_changes(values: Sequence) -> int:
    """Sign changes in a sequence, ignoring zeros."""
    signs = [_sign(v) for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def sturm_count(seq: List[Poly], lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots in (lo, hi]."""
    v_lo = count_sign_changes([poly_value(q, lo) for q in seq])
    v_hi = count_sign_changes([poly_value(q, hi) for q in seq])
    return v_lo - v_hi


def root_bound(p: Poly) -> Fraction:
    """Cauchy bound: every real root lies strictly inside (−B, B)."""
    cs = coefficients(p)
    lead = cs[0]
    return 1 + max((abs(c / lead) for c in cs[1:]), default=Fraction(0))


def _nonroot_split(p: Poly, lo: Fraction, hi: Fraction) -> Fraction:
    mid = (lo + hi) / 2
    step = (hi - lo) / 7
    while poly_value(p, mid) == 0:
        mid += step
        step /= 3
    return mid


def sturm_isolate(p) -> List[RootInterval]:
    """Disjoint isolating intervals, one per distinct real root, in increasing order."""
    p = to_poly(p)
    if p.is_zero:
        raise KolmoError("cannot isolate roots of the zero polynomial")
    if p.degree() < 1:
        return []
    p = to_poly(p.sqf_part(), p.gen)
    seq = sturm_sequence(p)
    bound = root_bound(p)
    total = sturm_count(seq, -bound, bound)
    log.debug(f"Sturm: {total} real roots within |x| < {float(bound):.4g}")

    found = []
    stack = [(-bound, bound)]
    while stack:
        lo, hi = stack.pop()
        n = sturm_count(seq, lo, hi)
        if n == 0:
            continue
        if n == 1:
            found.append(RootInterval(lo, hi, _sign(poly_value(p, lo)), _sign(poly_value(p, hi))))
            continue
        mid = _nonroot_split(p, lo, hi)
        stack.append((mid, hi))
        stack.append((lo, mid))
    found.sort(key=lambda iv: iv.lo)
    if len(found) != total:
        raise KolmoError(f"isolation found {len(found)} intervals, Sturm count is {total}")
    return found


def refine_root(iv: RootInterval, p, target) -> RootInterval:
    """Bisect until the width is at most ``target``; endpoints stay exact."""
    p = to_poly(p)
    target = Fraction(str(target)) if not isinstance(target, Fraction) else target
    lo, hi = iv.lo, iv.hi
    s_lo = _sign(poly_value(p, lo))
    while hi - lo > target:
        mid = (lo + hi) / 2
        s_mid = _sign(poly_value(p, mid))
        if s_mid == 0:
            return RootInterval(mid, mid, 0, 0)
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    return RootInterval(lo, hi, s_lo, _sign(poly_value(p, hi)))


# ─────────────────────────────────────────────
# Exact reduction and interval evaluation
# ─────────────────────────────────────────────

def reduce_mod(p, modulus) -> Poly:
    p, modulus = to_poly(p), to_poly(modulus)
    if modulus.degree() < 1:
        raise KolmoError("modulus must be nonconstant")
    return p.rem(modulus)


def _interval_mul(a: Tuple[Fraction, Fraction], b: Tuple[Fraction, Fraction]):
    products = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    return min(products), max(products)


def interval_image(p, lo: Fraction, hi: Fraction) -> Tuple[Fraction, Fraction]:
    """Horner evaluation in exact interval arithmetic; encloses p([lo, hi])."""
    p = to_poly(p)
    acc = (Fraction(0), Fraction(0))
    for c in coefficients(p):
        acc = _interval_mul(acc, (lo, hi))
        acc = (acc[0] + c, acc[1] + c)
    return acc


def interval_eval(p, iv: RootInterval) -> int:
    low, high = interval_image(p, iv.lo, iv.hi)
    if low > 0:
        return 1
    if high < 0:
        return -1
    raise InconclusiveSignError(f"image [{float(low):.3g}, {float(high):.3g}] straddles zero")


def certify_sign(p, iv: RootInterval, root_poly, max_rounds: int = 200) -> Tuple[int, RootInterval]:
    """Refine ``iv`` (a root interval of ``root_poly``) until p has a strict sign on it."""
    for _ in range(max_rounds):
        try:
            return interval_eval(p, iv), iv
        except InconclusiveSignError:
            if iv.width == 0:
                break
            iv = refine_root(iv, root_poly, iv.width / 16)
    raise InconclusiveSignError(f"no strict sign after {max_rounds} refinements")
