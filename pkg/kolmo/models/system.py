"""Vector fields, the separation line and the piecewise system."""
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Tuple

import numpy as np

from kolmo.core.errors import InputError

# Monomial order shared by every quadratic coefficient table: 1, x, y, x², xy, y²
MONOMIALS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
_MONO_INDEX = {m: i for i, m in enumerate(MONOMIALS)}


@dataclass(frozen=True)
class KolmogorovField:
    """ẋ = x(a + bx + cy), ẏ = y(d + ex + fy)."""

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    def __call__(self, x, y):
        return x * (self.a + self.b * x + self.c * y), y * (self.d + self.e * x + self.f * y)

    def jacobian(self, x, y) -> np.ndarray:
        return np.array([
            [self.a + 2 * self.b * x + self.c * y, self.c * x],
            [self.e * y, self.d + self.e * x + 2 * self.f * y],
        ], dtype=object if isinstance(x, Fraction) else float)

    def params(self) -> Tuple:
        return (self.a, self.b, self.c, self.d, self.e, self.f)

    def to_quadratic(self) -> "QuadraticField":
        coeffs = np.zeros((2, 6), dtype=object)
        coeffs[0, _MONO_INDEX[(1, 0)]] = self.a
        coeffs[0, _MONO_INDEX[(2, 0)]] = self.b
        coeffs[0, _MONO_INDEX[(1, 1)]] = self.c
        coeffs[1, _MONO_INDEX[(0, 1)]] = self.d
        coeffs[1, _MONO_INDEX[(1, 1)]] = self.e
        coeffs[1, _MONO_INDEX[(0, 2)]] = self.f
        if not any(isinstance(v, Fraction) for v in self.params()):
            coeffs = coeffs.astype(float)
        return QuadraticField(coeffs)

    def axis_residual(self, samples=(0.25, 0.5, 1.0, 2.0, 4.0)) -> float:
        """Largest transversal component on the invariant axes; zero for a Kolmogorov field."""
        worst = 0.0
        for s in samples:
            worst = max(worst, abs(float(self(0.0, s)[0])), abs(float(self(s, 0.0)[1])))
        return worst

    def homothety(self, eps) -> "KolmogorovField":
        """Conjugate by (x, y) → (1+ε)(x, y); the equilibrium moves by the same factor."""
        k = 1 + eps
        return KolmogorovField(self.a, self.b / k, self.c / k, self.d, self.e / k, self.f / k)

    def with_trace(self, tau, x0=1) -> "KolmogorovField":
        """Add τ·x(x − x₀) to ẋ: trace at (x₀, y₀) grows by τ·x₀, the equilibrium stays put."""
        return replace(self, a=self.a - tau * x0, b=self.b + tau)


@dataclass(frozen=True)
class SeparationLine:
    """h(x, y) = αx + βy + γ₀; zone i is {(−1)^i h > 0}, so zone 1 is {h < 0}."""

    alpha: float
    beta: float
    gamma0: float

    def __post_init__(self):
        if self.alpha == 0 and self.beta == 0:
            raise InputError("separation line needs (alpha, beta) != (0, 0)")

    @classmethod
    def through(cls, alpha, beta, point) -> "SeparationLine":
        x0, y0 = point
        return cls(alpha, beta, -(alpha * x0 + beta * y0))

    def h(self, x, y):
        return self.alpha * x + self.beta * y + self.gamma0

    @property
    def gradient(self) -> np.ndarray:
        return np.array([float(self.alpha), float(self.beta)])

    @property
    def unit_normal(self) -> np.ndarray:
        g = self.gradient
        return g / np.hypot(*g)

    def zone_of(self, x, y) -> int:
        v = self.h(x, y)
        return 1 if v < 0 else (2 if v > 0 else 0)

    def project(self, x, y) -> np.ndarray:
        n = self.gradient
        t = self.h(x, y) / float(n @ n)
        return np.array([x, y], dtype=float) - t * n


@dataclass(frozen=True)
class PiecewiseKolmogorov:
    zone1: KolmogorovField
    zone2: KolmogorovField
    line: SeparationLine

    def zone(self, i: int) -> KolmogorovField:
        if i not in (1, 2):
            raise ValueError(f"zone must be 1 or 2, got {i}")
        return self.zone1 if i == 1 else self.zone2

    def replace_zone(self, i: int, new: KolmogorovField) -> "PiecewiseKolmogorov":
        return replace(self, zone1=new) if i == 1 else replace(self, zone2=new)

    def quadratic_zones(self) -> Tuple["QuadraticField", "QuadraticField"]:
        return self.zone1.to_quadratic(), self.zone2.to_quadratic()


# ─────────────────────────────────────────────
# Generic planar quadratic fields
# ─────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class QuadraticField:
    """
    Planar polynomial field of degree ≤ 2.

    ``coeffs`` has shape (2, 6, ...): component × monomial (see MONOMIALS),
    optionally followed by trailing axes (e.g. λ-jet coefficients).
    """

    coeffs: np.ndarray = field(repr=False)

    def __call__(self, x, y):
        basis = (1, x, y, x * x, x * y, y * y)
        u = sum(self.coeffs[0, k] * basis[k] for k in range(6))
        v = sum(self.coeffs[1, k] * basis[k] for k in range(6))
        return u, v

    def jacobian(self, x, y) -> np.ndarray:
        c = self.coeffs
        rows = []
        for r in range(2):
            dx = c[r, 1] + 2 * c[r, 3] * x + c[r, 4] * y
            dy = c[r, 2] + c[r, 4] * x + 2 * c[r, 5] * y
            rows.append([dx, dy])
        return np.array(rows, dtype=float)

    def linear_part(self) -> np.ndarray:
        c = self.coeffs
        return np.array([[c[0, 1], c[0, 2]], [c[1, 1], c[1, 2]]], dtype=float)

    def constant_part(self) -> np.ndarray:
        return np.array([self.coeffs[0, 0], self.coeffs[1, 0]], dtype=float)

    def transformed(self, offset, matrix) -> "QuadraticField":
        """G(q) = M·F(p₀ + Mᵀq) for an orthogonal M; an object-valued M keeps its own arithmetic."""
        flat = self.coeffs.reshape((12,) + self.coeffs.shape[2:])
        matrix = np.asarray(matrix)
        if matrix.dtype == object:
            T = np.array(_transform_table(offset[0], offset[1], matrix), dtype=object)
            out = np.tensordot(T, flat.astype(object), axes=(1, 0))
            return QuadraticField(out.reshape(self.coeffs.shape))
        T = transform_matrix(tuple(float(v) for v in offset), tuple(float(v) for v in np.ravel(matrix)))
        if flat.dtype == object:
            out = np.tensordot(T.astype(object), flat, axes=(1, 0))
        else:
            out = np.tensordot(T, flat, axes=(1, 0))
        return QuadraticField(out.reshape(self.coeffs.shape))

    def reversed_time(self) -> "QuadraticField":
        return QuadraticField(-self.coeffs)

    def as_float(self) -> "QuadraticField":
        return QuadraticField(np.asarray(self.coeffs, dtype=float))


def _expand_affine_power(i: int, j: int, x0, y0, M) -> list:
    """Coefficients (in MONOMIALS order over (u, v)) of x^i y^j with p = p₀ + Mᵀq."""
    # x = x0 + M00 u + M10 v, y = y0 + M01 u + M11 v
    X = {(0, 0): x0, (1, 0): M[0][0], (0, 1): M[1][0]}
    Y = {(0, 0): y0, (1, 0): M[0][1], (0, 1): M[1][1]}

    def mul(P, Q):
        out = {}
        for (a, b), p in P.items():
            for (c, d), q in Q.items():
                key = (a + c, b + d)
                out[key] = out.get(key, 0) + p * q
        return out

    poly = {(0, 0): 1}
    for _ in range(i):
        poly = mul(poly, X)
    for _ in range(j):
        poly = mul(poly, Y)
    vec = [0] * 6
    for key, val in poly.items():
        vec[_MONO_INDEX[key]] += val
    return vec


def _transform_table(x0, y0, M) -> list:
    """12×12 map from (component, monomial) coefficients of F to those of G."""
    T = [[0] * 12 for _ in range(12)]
    for comp in range(2):
        for k, (i, j) in enumerate(MONOMIALS):
            poly = _expand_affine_power(i, j, x0, y0, M)
            for r in range(2):
                for n in range(6):
                    T[r * 6 + n][comp * 6 + k] += M[r][comp] * poly[n]
    return T


@lru_cache(maxsize=256)
def transform_matrix(offset: Tuple[float, float], matrix_flat: Tuple[float, ...]) -> np.ndarray:
    M = np.array(matrix_flat, dtype=float).reshape(2, 2)
    return np.array(_transform_table(offset[0], offset[1], M), dtype=float)


def linear_center(omega: float = 1.0) -> QuadraticField:
    """ẋ = −ωy, ẏ = ωx (counter-clockwise)."""
    c = np.zeros((2, 6))
    c[0, 2] = -omega
    c[1, 1] = omega
    return QuadraticField(c)
