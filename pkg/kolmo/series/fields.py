"""Coefficient fields for the series kernel.

A field knows how to coerce numbers into its own representation and how to
evaluate the scalar functions (exp, log, real powers) needed at the constant
term of a series. Three fields are available:

- rational: exact ``fractions.Fraction``; transcendental values only where exact
- f64: binary64 floats
- extended: ``mpmath`` mpf numbers at a configurable decimal precision
"""
from fractions import Fraction

import mpmath
import numpy as np
from mpmath import mp
from sympy import integer_nthroot

from kolmo.core.config import Precision
from kolmo.core.errors import SeriesDomainError


class CoefficientField:
    precision: Precision = Precision.F64

    def coerce(self, x):
        raise NotImplementedError

    @property
    def zero(self):
        return self.coerce(0)

    @property
    def one(self):
        return self.coerce(1)

    def exp(self, x):
        raise NotImplementedError

    def log(self, x):
        raise NotImplementedError

    def pow(self, x, alpha):
        raise NotImplementedError

    def to_float(self, x) -> float:
        return float(x)

    def __repr__(self):
        return f"{type(self).__name__}()"


class RationalField(CoefficientField):
    precision = Precision.RATIONAL

    def coerce(self, x):
        if isinstance(x, Fraction):
            return x
        if isinstance(x, (int, np.integer)):
            return Fraction(int(x))
        if isinstance(x, (float, np.floating)):
            return Fraction(float(x))
        # sympy Rational, mpf and strings all go through their decimal/ratio text
        return Fraction(str(x))

    def exp(self, x):
        if x != 0:
            raise SeriesDomainError(f"exp({x}) is not rational")
        return Fraction(1)

    def log(self, x):
        if x <= 0:
            raise SeriesDomainError(f"log of nonpositive constant term {x}")
        if x != 1:
            raise SeriesDomainError(f"log({x}) is not rational")
        return Fraction(0)

    def pow(self, x, alpha):
        alpha = self.coerce(alpha)
        if alpha.denominator == 1:
            return x ** alpha.numerator
        if x <= 0:
            raise SeriesDomainError(f"real power of nonpositive constant term {x}")
        num, exact_num = integer_nthroot(x.numerator, alpha.denominator)
        den, exact_den = integer_nthroot(x.denominator, alpha.denominator)
        if not (exact_num and exact_den):
            raise SeriesDomainError(f"{x}**{alpha} is not rational")
        return Fraction(num, den) ** alpha.numerator


class Float64Field(CoefficientField):
    precision = Precision.F64

    def coerce(self, x):
        return float(x)

    def exp(self, x):
        return float(np.exp(x))

    def log(self, x):
        if x <= 0:
            raise SeriesDomainError(f"log of nonpositive constant term {x}")
        return float(np.log(x))

    def pow(self, x, alpha):
        alpha = float(alpha)
        if alpha.is_integer():
            return float(x) ** int(alpha)
        if x <= 0:
            raise SeriesDomainError(f"real power of nonpositive constant term {x}")
        return float(x) ** alpha


class ExtendedField(CoefficientField):
    precision = Precision.EXTENDED

    def __init__(self, dps: int = 40):
        self.dps = dps
        # mp is process-global; only ever raise its precision
        if mp.dps < dps:
            mp.dps = dps

    def coerce(self, x):
        if isinstance(x, Fraction):
            return mpmath.mpf(x.numerator) / x.denominator
        if isinstance(x, np.integer):
            x = int(x)
        elif isinstance(x, np.floating):
            x = float(x)
        if isinstance(x, (int, float, str, mpmath.mpf)):
            return mpmath.mpf(x)
        return self.coerce(Fraction(str(x)))

    def exp(self, x):
        return mpmath.exp(x)

    def log(self, x):
        if x <= 0:
            raise SeriesDomainError(f"log of nonpositive constant term {x}")
        return mpmath.log(x)

    def pow(self, x, alpha):
        alpha = self.coerce(alpha)
        if alpha == int(alpha):
            return x ** int(alpha)
        if x <= 0:
            raise SeriesDomainError(f"real power of nonpositive constant term {x}")
        return mpmath.power(x, alpha)

    def __repr__(self):
        return f"ExtendedField(dps={self.dps})"


RATIONAL = RationalField()
F64 = Float64Field()


def field_for(precision: Precision, dps: int = 40) -> CoefficientField:
    precision = Precision(precision)
    if precision is Precision.RATIONAL:
        return RATIONAL
    if precision is Precision.EXTENDED:
        return ExtendedField(dps)
    return F64
