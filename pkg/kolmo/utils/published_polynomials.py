"""
Integer-coefficient polynomials of the weak-focus analysis, kept exactly as
printed. Entries whose expressions were never printed stay in the table as
unavailable so that callers fail loudly instead of guessing.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import sympy as sp

from kolmo.core.errors import UnavailableEntryError
from kolmo.services.polyroots_service import GAMMA

b, e = sp.symbols("b e")
e1, b2, e2 = sp.symbols("e1 b2 e2")


@dataclass(frozen=True)
class PublishedEntry:
    name: str
    expr: Optional[sp.Expr]
    variables: Tuple[sp.Symbol, ...] = ()
    note: str = ""

    @property
    def available(self) -> bool:
        return self.expr is not None


def m_shell(l: int) -> sp.Expr:
    """Common factor of M_{2l}: M_{2l} = shell · m_{2l}."""
    return (e ** (2 * l) * (4 * b + 3 * e) ** 2 * (4 * b ** 2 - b * e - 3 * e ** 2 + 4) ** 2
            * (4 * b ** 2 + 3 * b * e + 4) ** 2 * (16 * b ** 2 + 24 * b * e + 9 * e ** 2 + 16) ** (2 * l))


L2 = (-243 * e ** 6 - 1458 * b * e ** 5 + 8 * (27 - 31 * b ** 2) * e ** 4 + 288 * (4 * b ** 2 + 3) * b * e ** 3
      + 192 * (42 * b ** 4 + 27 * b ** 2 - 5) * e ** 2 + 512 * b * (17 * b ** 2 + 5) * (b ** 2 + 1) * e
      + 1024 * (3 * b ** 2 + 1) * (b ** 2 + 1) ** 2)

M2 = (-243 * b * e ** 6 - 1296 * b ** 2 * e ** 5 - 972 * b * (3 * b ** 2 + 2) * e ** 4
      - 2016 * (2 * b ** 2 + 1) * (b ** 2 + 1) * e ** 3 - 192 * b * (22 * b ** 2 + 17) * (b ** 2 + 1) * e ** 2
      - 3072 * b ** 2 * (b ** 2 + 1) ** 2 * e - 1024 * b * (b ** 2 + 1) ** 3)

M4_SMALL = (-27 * b * e ** 4 - (81 * b ** 2 - 162) * e ** 3 - 36 * b ** 3 * e ** 2
            + (8 * b ** 4 - 192 * b ** 2 - 272) * e + 64 * b * (b ** 2 + 1) ** 2)

# transcribed term by term, including the (434294784 b^9 + ...) b e^6 group
M6_SMALL = (
    -346428 * b ** 3 * e ** 12
    - (31177872 * b ** 2 - 149328) * b ** 2 * e ** 11
    - (1739448 * b ** 4 - 8485776 * b ** 2 - 36551331) * b * e ** 10
    - (145881648 * b ** 6 - 172851732 * b ** 4 - 9128457 * b ** 2 - 33736662) * e ** 9
    + (6624864 * b ** 6 + 1459224 * b ** 4 - 2776284 * b ** 2 - 162724464) * b * e ** 8
    + (451638 * b ** 8 + 1337868 * b ** 6 - 12979584 * b ** 4 - 88322148 * b ** 2 - 223416) * e ** 7
    + (434294784 * b ** 9 + 296182656 * b ** 6 - 46674 * b ** 4 - 2553264 * b ** 2 + 1383552) * b * e ** 6
    - (167878656 * b ** 10 + 86413824 * b ** 8 - 1349768448 * b ** 6 - 26465832 * b ** 4
       - 1792233216 * b ** 2 - 414288) * e ** 5
    - 27648 * (b ** 2 + 1) ** 2 * (2768 * b ** 6 - 2678 * b ** 4 - 3559 * b ** 2 - 15344) * b * e ** 4
    - 496 * (68288 * b ** 6 + 36774 * b ** 4 + 73641 * b ** 2 + 58141) * (b ** 2 + 1) ** 3 * e ** 3
    + 49152 * (2816 * b ** 4 - 5634 * b ** 2 - 6551) * (b ** 2 + 1) ** 4 * b * e ** 2
    + 393216 * (b ** 2 + 1) ** 5 * (44 * b ** 2 - 279) * b ** 2 * e
    + 46137344 * b ** 3 * (b ** 2 + 1) ** 6
)

G = 9604 * GAMMA ** 6 - 1470 * GAMMA ** 4 - 9797 * GAMMA ** 2 + 4232

E_STAR = -GAMMA * (1392580 * GAMMA ** 4 + 544194 * GAMMA ** 2 - 1145761) / 62169

W8_LINEAR = (sp.Rational(753747879498059507302400000, 10557) * GAMMA ** 5
             + sp.Rational(14617417205145737048883200000, 517293) * GAMMA ** 3
             - sp.Rational(3294809732513451317657600000, 57477) * GAMMA)

DET_JAC = (sp.Rational(1163618760932343152640, 901) * GAMMA ** 4
           + sp.Rational(3223719345310777999360, 6307) * GAMMA ** 2
           - sp.Rational(6539723921076330168320, 6307))

R_PROMEAN = 63 * b ** 3 - 63 * b ** 2 * e - 4 * b ** 2 + 8 * b * e + 63 * b + 18 * e - 4

W2_HAT = (
    27 * b2 * e1 * (9 * e1 ** 2 - 24 * e1 + 32) * e2 ** 4
    - (1215 * b2 ** 2 * e1 ** 3 - 3240 * b2 ** 2 * e1 ** 2 + 243 * e1 ** 4 + 4320 * b2 ** 2 * e1
       - 1215 * e1 ** 3 + 2916 * e1 ** 2 - 3456 * e1 + 2304) * e2 ** 3
    + 12 * b2 * (189 * b2 ** 2 * e1 ** 3 - 504 * b2 ** 2 * e1 ** 2 + 54 * e1 ** 4 + 672 * b2 ** 2 * e1
                 - 216 * e1 ** 3 + 504 * e1 ** 2 - 576 * e1 + 512) * e2 ** 2
    - 16 * (b2 ** 2 + 1) * (117 * b2 ** 2 * e1 ** 3 - 312 * b2 ** 2 * e1 ** 2 + 27 * e1 ** 4 + 416 * b2 ** 2 * e1
                            - 144 * e1 ** 3 + 348 * e1 ** 2 - 416 * e1 + 256) * e2
    + 64 * e1 * b2 * (9 * e1 ** 2 - 24 * e1 + 32) * (b2 ** 2 + 1) ** 2
)

PROMEAN_POINT = (-0.3589344145, 1.09217769345)


def _entries() -> Dict[str, PublishedEntry]:
    be = (b, e)
    entries = [
        PublishedEntry("L2", L2, be, "coefficient of (q1 - q2) in W2^[1], times 2e/243"),
        PublishedEntry("M2", M2, be, "coefficient of (p1 - p2) in W2^[1], times 2/243"),
        PublishedEntry("m4", M4_SMALL, be),
        PublishedEntry("m6", M6_SMALL, be),
        PublishedEntry("M4", m_shell(2) * M4_SMALL, be, "W4^[1] = M4/L2 (p1 - p2)"),
        PublishedEntry("M6", m_shell(3) * M6_SMALL, be, "W6^[1] = M6/L2 (p1 - p2)"),
        PublishedEntry("g", G, (GAMMA,), "its real roots parametrize the m4 = m6 = 0 locus"),
        PublishedEntry("e_star", E_STAR, (GAMMA,)),
        PublishedEntry("W8_linear", W8_LINEAR, (GAMMA,), "W8^[1] on the locus"),
        PublishedEntry("det_jac", DET_JAC, (GAMMA,), "Jacobian of (m4, m6) on the locus"),
        PublishedEntry("R", R_PROMEAN, be, "common factor of the reduced W3, W5 second-order terms"),
        PublishedEntry("W2_hat", W2_HAT, (e1, b2, e2), "last term uses (9e1^2 - 24e1 + 32)"),
        PublishedEntry("m8", None, be, "degree 25, not printed"),
        PublishedEntry("L", None, be, "degree 18, not printed"),
        PublishedEntry("M", None, be, "degree 24, not printed"),
        PublishedEntry("f", None, (GAMMA,), "degree 36, not printed"),
        PublishedEntry("W4_hat", None, (e1, b2, e2), "degree 20 with 295 monomials, not printed"),
        PublishedEntry("W6_hat", None, (e1, b2, e2), "degree 104 with 1832 monomials, not printed"),
        PublishedEntry("L3", None, be, "degree 6, not printed"),
        PublishedEntry("M3", None, be, "degree 3, not printed"),
        PublishedEntry("L5", None, be, "degree 12, not printed"),
        PublishedEntry("M5", None, be, "degree 9, not printed"),
        PublishedEntry("R5", None, be, "degree 3, not printed"),
    ]
    return {entry.name: entry for entry in entries}


def _rational(v) -> sp.Rational:
    if isinstance(v, Fraction):
        return sp.Rational(v.numerator, v.denominator)
    return sp.Rational(str(v)) if isinstance(v, float) else sp.Rational(v)


class PublishedPolynomialTable:
    def __init__(self):
        self._entries = _entries()

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def names(self) -> List[str]:
        return list(self._entries)

    def available(self) -> List[str]:
        return [n for n, entry in self._entries.items() if entry.available]

    def unavailable(self) -> List[str]:
        return [n for n, entry in self._entries.items() if not entry.available]

    def entry(self, name: str) -> PublishedEntry:
        if name not in self._entries:
            raise UnavailableEntryError(f"no published polynomial named {name!r}")
        return self._entries[name]

    def get(self, name: str) -> sp.Expr:
        entry = self.entry(name)
        if not entry.available:
            raise UnavailableEntryError(f"{name} is unavailable: {entry.note}")
        return entry.expr

    def evaluate(self, name: str, **values) -> Fraction:
        """Exact value at rational (or decimal-string) arguments."""
        entry = self.entry(name)
        expr = self.get(name)
        missing = [str(v) for v in entry.variables if str(v) not in values]
        if missing:
            raise ValueError(f"{name} needs values for {', '.join(missing)}")
        result = sp.Rational(expr.subs({v: _rational(values[str(v)]) for v in entry.variables}))
        return Fraction(int(result.p), int(result.q))

    def evaluate_float(self, name: str, **values) -> float:
        entry = self.entry(name)
        expr = self.get(name)
        return float(expr.subs({v: values[str(v)] for v in entry.variables}))

    def polynomial(self, name: str) -> sp.Poly:
        entry = self.entry(name)
        return sp.Poly(self.get(name), *entry.variables, domain=sp.QQ)


TABLE = PublishedPolynomialTable()
