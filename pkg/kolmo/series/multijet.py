"""
Multivariate jets: polynomials in a radial variable r (order ≤ N) and
perturbation parameters λ_1..λ_m (total degree ≤ d).

Coefficients are stored densely in a numpy vector indexed by monomials
(k, α). Products use precomputed index triples, so a float jet multiplies
with one ``np.bincount`` call; object-dtype jets (mpmath) fall back to a
Python loop over the same triples.
"""
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Dict, Tuple

import numpy as np

from kolmo.core.errors import SingularSeriesError
from kolmo.series.fields import F64, CoefficientField
from kolmo.series.truncated import TruncatedSeries


def _lambda_monomials(m: int, d: int):
    monos = []
    for deg in range(d + 1):
        for combo in combinations_with_replacement(range(m), deg):
            alpha = [0] * m
            for j in combo:
                alpha[j] += 1
            monos.append(tuple(alpha))
    return monos


class JetLayout:
    """Monomial ordering and product tables for one (N, m, d)."""

    def __init__(self, order: int, m: int, degree: int):
        self.order = order
        self.m = m
        self.degree = degree
        self.lambda_monos = _lambda_monomials(m, degree)
        self.lambda_index = {a: i for i, a in enumerate(self.lambda_monos)}
        n_lam = len(self.lambda_monos)
        self.size = n_lam * (order + 1)

        I, J, K = [], [], []
        for ia, a in enumerate(self.lambda_monos):
            for ib, b in enumerate(self.lambda_monos):
                if sum(a) + sum(b) > degree:
                    continue
                ic = self.lambda_index[tuple(x + y for x, y in zip(a, b))]
                for p in range(order + 1):
                    for q in range(order + 1 - p):
                        I.append(self.index(ia, p))
                        J.append(self.index(ib, q))
                        K.append(self.index(ic, p + q))
        self.I = np.array(I, dtype=np.intp)
        self.J = np.array(J, dtype=np.intp)
        self.K = np.array(K, dtype=np.intp)

        # nilpotent depth: every product of non-constant monomials raises r-order + λ-degree
        self.nilpotency = order + degree

    def index(self, lambda_idx: int, k: int) -> int:
        return lambda_idx * (self.order + 1) + k


@lru_cache(maxsize=64)
def layout(order: int, m: int, degree: int) -> JetLayout:
    return JetLayout(order, m, degree)


class MultiJet:
    __slots__ = ("data", "layout")

    def __init__(self, data, jet_layout: JetLayout):
        data = np.asarray(data)
        if data.shape != (jet_layout.size,):
            raise ValueError(f"jet data has shape {data.shape}, layout expects ({jet_layout.size},)")
        self.data = data
        self.layout = jet_layout

    # ─── constructors ───

    @classmethod
    def zeros(cls, order: int, m: int, degree: int = 2, dtype=float):
        lay = layout(order, m, degree)
        if dtype is object:
            return cls(np.array([0] * lay.size, dtype=object), lay)
        return cls(np.zeros(lay.size, dtype=dtype), lay)

    @classmethod
    def constant(cls, value, order: int, m: int, degree: int = 2, dtype=float):
        jet = cls.zeros(order, m, degree, dtype)
        jet.data[0] = value
        return jet

    @classmethod
    def radial(cls, order: int, m: int, degree: int = 2, dtype=float):
        """The jet r."""
        jet = cls.zeros(order, m, degree, dtype)
        if order >= 1:
            jet.data[1] = 1
        return jet

    @classmethod
    def parameter(cls, j: int, order: int, m: int, degree: int = 2, dtype=float):
        """The jet λ_j."""
        jet = cls.zeros(order, m, degree, dtype)
        if degree >= 1:
            alpha = tuple(1 if i == j else 0 for i in range(m))
            jet.data[jet.layout.index(jet.layout.lambda_index[alpha], 0)] = 1
        return jet

    @classmethod
    def from_coefficients(cls, coeffs: Dict[Tuple[int, Tuple[int, ...]], float], order: int, m: int,
                          degree: int = 2, dtype=float):
        jet = cls.zeros(order, m, degree, dtype)
        for (k, alpha), value in coeffs.items():
            if k <= order and sum(alpha) <= degree:
                jet.data[jet.layout.index(jet.layout.lambda_index[tuple(alpha)], k)] = value
        return jet

    # ─── protocol ───

    @property
    def order(self) -> int:
        return self.layout.order

    @property
    def m(self) -> int:
        return self.layout.m

    @property
    def degree(self) -> int:
        return self.layout.degree

    @property
    def is_object(self) -> bool:
        return self.data.dtype == object

    def coefficient(self, k: int, alpha: Tuple[int, ...]):
        return self.data[self.layout.index(self.layout.lambda_index[tuple(alpha)], k)]

    def _lift(self, other):
        if isinstance(other, MultiJet):
            if other.layout is not self.layout:
                raise ValueError("jets with different layouts")
            return other
        out = MultiJet.zeros(self.order, self.m, self.degree, object if self.is_object else float)
        out.data[0] = other
        return out

    def __add__(self, other):
        other = self._lift(other)
        return MultiJet(self.data + other.data, self.layout)

    __radd__ = __add__

    def __neg__(self):
        return MultiJet(-self.data, self.layout)

    def __sub__(self, other):
        return MultiJet(self.data - self._lift(other).data, self.layout)

    def __rsub__(self, other):
        return MultiJet(self._lift(other).data - self.data, self.layout)

    def __mul__(self, other):
        if not isinstance(other, MultiJet):
            return MultiJet(self.data * other, self.layout)
        other = self._lift(other)
        lay = self.layout
        if self.is_object or other.is_object:
            out = np.array([0] * lay.size, dtype=object)
            a, b = self.data, other.data
            for i, j, k in zip(lay.I, lay.J, lay.K):
                if a[i] != 0 and b[j] != 0:
                    out[k] = out[k] + a[i] * b[j]
            return MultiJet(out, lay)
        prod = self.data[lay.I] * other.data[lay.J]
        return MultiJet(np.bincount(lay.K, weights=prod, minlength=lay.size), lay)

    __rmul__ = __mul__

    def reciprocal(self) -> "MultiJet":
        c0 = self.data[0]
        if c0 == 0:
            raise SingularSeriesError("jet reciprocal needs a nonzero constant term")
        u = self * (1 / c0) - 1
        acc = self._lift(1)
        for _ in range(self.layout.nilpotency):
            acc = 1 - u * acc
        return acc * (1 / c0)

    def __truediv__(self, other):
        if not isinstance(other, MultiJet):
            return MultiJet(self.data / other, self.layout)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    # ─── slicing ───

    def r_series(self, alpha: Tuple[int, ...] = None, field: CoefficientField = F64) -> TruncatedSeries:
        """Coefficients of λ^α as a series in r."""
        alpha = tuple(alpha) if alpha is not None else (0,) * self.m
        start = self.layout.index(self.layout.lambda_index[alpha], 0)
        return TruncatedSeries(list(self.data[start:start + self.order + 1]), self.order, field)

    def at_lambda_zero(self, field: CoefficientField = F64) -> TruncatedSeries:
        return self.r_series(None, field)

    def gradient_in_lambda(self, k: int):
        """∂/∂λ_j at λ = 0 of the r^k coefficient, for j = 1..m."""
        grads = []
        for j in range(self.m):
            alpha = tuple(1 if i == j else 0 for i in range(self.m))
            grads.append(self.coefficient(k, alpha) if self.degree >= 1 else 0)
        return np.array(grads, dtype=float)

    def __repr__(self):
        return f"MultiJet(N={self.order}, m={self.m}, d={self.degree})"
