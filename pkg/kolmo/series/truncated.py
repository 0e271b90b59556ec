"""
Truncated power series in one variable.

Coefficients live in a pluggable ``CoefficientField`` (exact rationals,
binary64, or mpmath extended precision). Values are immutable; every
operation returns a new series whose order is the minimum of its operands'.
"""
from typing import Sequence

from kolmo.core.errors import (
    DegenerateBranchError,
    NonInvertibleError,
    SeriesDomainError,
    SingularSeriesError,
)
from kolmo.series.fields import F64, CoefficientField


MIN_ORDER = 2


class TruncatedSeries:
    __slots__ = ("coeffs", "field")

    def __init__(self, coeffs: Sequence, order: int = None, field: CoefficientField = F64):
        if order is None:
            order = len(coeffs) - 1
        if order < MIN_ORDER:
            raise SeriesDomainError(f"truncation order must be at least {MIN_ORDER}, got {order}")
        self._fill(coeffs, order, field)

    def _fill(self, coeffs, order, field):
        padded = [field.coerce(c) for c in list(coeffs)[: order + 1]]
        padded += [field.zero] * (order + 1 - len(padded))
        self.coeffs = tuple(padded)
        self.field = field

    @classmethod
    def _derived(cls, coeffs, order: int, field: CoefficientField) -> "TruncatedSeries":
        # derivatives and quotients by ρ^k may fall below MIN_ORDER
        if order < 0:
            raise ValueError(f"order must be nonnegative, got {order}")
        out = cls.__new__(cls)
        out._fill(coeffs, order, field)
        return out

    # ─── constructors ───

    @classmethod
    def constant(cls, value, order: int, field: CoefficientField = F64):
        return cls([value], order, field)

    @classmethod
    def identity(cls, order: int, field: CoefficientField = F64):
        """The series ρ."""
        return cls([0, 1], order, field)

    @classmethod
    def linear(cls, c0, c1, order: int, field: CoefficientField = F64):
        return cls([c0, c1], order, field)

    # ─── basic protocol ───

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def __repr__(self):
        terms = " + ".join(f"{c}*r^{k}" for k, c in enumerate(self.coeffs) if c != 0)
        return f"TruncatedSeries({terms or '0'}; N={self.order})"

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def with_order(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries(self.coeffs, order, self.field)

    def to_field(self, field: CoefficientField) -> "TruncatedSeries":
        return TruncatedSeries._derived(self.coeffs, self.order, field)

    def _lift(self, other):
        if isinstance(other, TruncatedSeries):
            return other
        return TruncatedSeries._derived([other], self.order, self.field)

    # ─── arithmetic ───

    def __add__(self, other):
        other = self._lift(other)
        n = min(self.order, other.order)
        return TruncatedSeries._derived([self.coeffs[k] + other.coeffs[k] for k in range(n + 1)], n, self.field)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries._derived([-c for c in self.coeffs], self.order, self.field)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            c = self.field.coerce(other)
            return TruncatedSeries._derived([c * a for a in self.coeffs], self.order, self.field)
        n = min(self.order, other.order)
        a, b = self.coeffs, other.coeffs
        out = []
        for k in range(n + 1):
            acc = self.field.zero
            for i in range(k + 1):
                acc += a[i] * b[k - i]
            out.append(acc)
        return TruncatedSeries._derived(out, n, self.field)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, TruncatedSeries):
            c = self.field.coerce(other)
            if c == 0:
                raise SingularSeriesError("division by zero scalar")
            return TruncatedSeries._derived([a / c for a in self.coeffs], self.order, self.field)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def __pow__(self, exponent):
        return series_pow(self, exponent)

    def reciprocal(self) -> "TruncatedSeries":
        b = self.coeffs
        if b[0] == 0:
            raise SingularSeriesError("reciprocal of a series with zero constant term")
        q = [self.field.one / b[0]]
        for k in range(1, self.order + 1):
            acc = self.field.zero
            for i in range(1, k + 1):
                acc += b[i] * q[k - i]
            q.append(-acc / b[0])
        return TruncatedSeries._derived(q, self.order, self.field)

    # ─── calculus / composition ───

    def derivative(self) -> "TruncatedSeries":
        """d/dρ; the top coefficient is lost so the order drops by one."""
        if self.order == 0:
            return TruncatedSeries._derived([0], 0, self.field)
        return TruncatedSeries._derived([k * self.coeffs[k] for k in range(1, self.order + 1)], self.order - 1, self.field)

    def shift_down(self, k: int) -> "TruncatedSeries":
        """Divide by ρ^k; the first k coefficients must vanish."""
        if any(c != 0 for c in self.coeffs[:k]):
            raise SeriesDomainError(f"cannot divide by rho^{k}: low coefficients nonzero")
        return TruncatedSeries._derived(self.coeffs[k:], self.order - k, self.field)

    def shift_up(self, k: int) -> "TruncatedSeries":
        return TruncatedSeries._derived([self.field.zero] * k + list(self.coeffs), self.order + k, self.field)

    def evaluate(self, x):
        acc = self.field.zero
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def compose(self, inner: "TruncatedSeries") -> "TruncatedSeries":
        """self(inner(ρ)) by Horner; inner must have zero constant term."""
        if inner.coeffs[0] != 0:
            raise SeriesDomainError("composition needs an inner series with zero constant term")
        n = min(self.order, inner.order)
        acc = TruncatedSeries._derived([self.coeffs[n]], n, self.field)
        for c in reversed(self.coeffs[:n]):
            acc = acc * inner + c
        return acc

    def is_zero(self, tol=0) -> bool:
        return all(abs(c) <= tol for c in self.coeffs)


# ─────────────────────────────────────────────
# Operations
# ─────────────────────────────────────────────

def series_arith(a: TruncatedSeries, b: TruncatedSeries, kind: str) -> TruncatedSeries:
    if kind == "add":
        return a + b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    raise ValueError(f"unknown arithmetic kind {kind!r}")


def series_exp(a: TruncatedSeries) -> TruncatedSeries:
    field = a.field
    c = a.coeffs
    e = [field.exp(c[0])]
    for k in range(1, a.order + 1):
        acc = field.zero
        for j in range(1, k + 1):
            acc += j * c[j] * e[k - j]
        e.append(acc / k)
    return TruncatedSeries._derived(e, a.order, field)


def series_log(a: TruncatedSeries) -> TruncatedSeries:
    field = a.field
    c = a.coeffs
    if c[0] <= 0:
        raise SeriesDomainError(f"log needs a positive constant term, got {c[0]}")
    out = [field.log(c[0])]
    for k in range(1, a.order + 1):
        acc = k * c[k]
        for j in range(1, k):
            acc -= j * out[j] * c[k - j]
        out.append(acc / (k * c[0]))
    return TruncatedSeries._derived(out, a.order, field)


def series_pow(a: TruncatedSeries, alpha) -> TruncatedSeries:
    """a**alpha. Integer powers take any constant term; real powers need c_0 > 0."""
    field = a.field
    alpha = field.coerce(alpha)
    if alpha == int(alpha) and alpha >= 0:
        result = TruncatedSeries._derived([1], a.order, field)
        base, n = a, int(alpha)
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result
    c = a.coeffs
    if c[0] <= 0:
        if alpha == int(alpha) and c[0] != 0:
            return series_pow(a.reciprocal(), -alpha)
        raise SeriesDomainError(f"pow({alpha}) needs a positive constant term, got {c[0]}")
    # J.C.P. Miller recurrence, equal to exp(alpha*log(a)) term by term
    p = [field.pow(c[0], alpha)]
    for k in range(1, a.order + 1):
        acc = field.zero
        for j in range(1, k + 1):
            acc += ((alpha + 1) * j - k) * c[j] * p[k - j]
        p.append(acc / (k * c[0]))
    return TruncatedSeries._derived(p, a.order, field)


def series_transcendental(a: TruncatedSeries, kind: str, alpha=None) -> TruncatedSeries:
    if kind == "exp":
        return series_exp(a)
    if kind == "log":
        return series_log(a)
    if kind == "pow":
        if alpha is None:
            raise ValueError("pow needs an exponent")
        return series_pow(a, alpha)
    raise ValueError(f"unknown transcendental kind {kind!r}")


def series_reversion(s: TruncatedSeries) -> TruncatedSeries:
    """Compositional inverse t with s(t(ρ)) = ρ + O(ρ^{N+1})."""
    field = s.field
    if s.coeffs[0] != 0 or s.order < 1 or s.coeffs[1] == 0:
        raise NonInvertibleError("reversion needs c_0 = 0 and c_1 != 0")
    c1 = s.coeffs[1]
    t = [field.zero, field.one / c1] + [field.zero] * (s.order - 1)
    for k in range(2, s.order + 1):
        residual = s.compose(TruncatedSeries._derived(t, s.order, field)).coeffs[k]
        t[k] = -residual / c1
    return TruncatedSeries._derived(t, s.order, field)


def _bivariate_eval(rows, sigma: TruncatedSeries, order: int, field) -> TruncatedSeries:
    """Σ_{i,j} H[i][j] ρ^i σ^j with σ a series in ρ, Horner in σ."""
    width = max(len(r) for r in rows)
    columns = []
    for j in range(width):
        columns.append(TruncatedSeries._derived([r[j] if j < len(r) else 0 for r in rows], order, field))
    acc = columns[-1]
    for col in reversed(columns[:-1]):
        acc = acc * sigma + col
    return acc


def implicit_series_solve(H: Sequence[Sequence], order: int, field: CoefficientField = F64) -> TruncatedSeries:
    """
    Solve H(ρ, σ(ρ)) = 0 for the branch σ(0) = 0.

    ``H[i][j]`` is the coefficient of ρ^i σ^j. The chord iteration
    σ ← σ − H(ρ, σ)/H_σ(0,0) gains one order per sweep.
    """
    rows = [[field.coerce(c) for c in row] for row in H]
    rows += [[] for _ in range(order + 1 - len(rows))]
    if rows[0] and rows[0][0] != 0:
        raise DegenerateBranchError("H(0,0) must vanish")
    h01 = rows[0][1] if len(rows[0]) > 1 else field.zero
    if h01 == 0:
        raise DegenerateBranchError("H has zero linear part in sigma at the origin")
    sigma = [field.zero] * (order + 1)
    for k in range(1, order + 1):
        residual = _bivariate_eval(rows, TruncatedSeries._derived(sigma, order, field), order, field).coeffs[k]
        sigma[k] = -residual / h01
    return TruncatedSeries._derived(sigma, order, field)


def level_set_branch(restriction: TruncatedSeries) -> TruncatedSeries:
    """
    The partner branch σ(ρ) ≠ ρ of S(ρ) = S(σ), where S = A ρ² + O(ρ³).

    Divides out (ρ − σ) and solves the quotient ρ + σ + O_2 implicitly.
    The result has order N − 1.
    """
    field = restriction.field
    n = restriction.order
    s = restriction.coeffs
    if s[0] != 0 or s[1] != 0 or n < 2 or s[2] == 0:
        raise DegenerateBranchError("restriction must start with a nonzero quadratic term")
    rows = [[field.zero] * n for _ in range(n)]
    for k in range(2, n + 1):
        for j in range(k):
            rows[k - 1 - j][j] += s[k] / s[2]
    return implicit_series_solve(rows, n - 1, field)
