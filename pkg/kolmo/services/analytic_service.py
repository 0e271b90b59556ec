"""
Closed-form first integrals of center zones and the Lyapunov quantities
they produce.

Every CC zone ẋ = x(a+bx+cy), ẏ = y(d+ex+fy) with equilibrium (x₀, y₀)
normalizes (X = x/x₀, Y = y/y₀, τ = D t) to the family with (1, 1) as a
linear center and det = 1, which has the Darboux integral X^p Y^q Λ.
Restricting log H to Σ gives the level-set relation whose partner branch
is the half-return map of that zone.
"""
import logging
from fractions import Fraction
from typing import Dict, Optional, Sequence, Set

import numpy as np

from kolmo.core.config import Precision, settings
from kolmo.core.errors import (
    MonodromyError,
    RepresentationUnavailableError,
    SeriesDomainError,
)
from kolmo.models.results import (
    EquilibriumClass,
    EquilibriumData,
    FirstIntegralForm,
    LyapunovSequence,
    ReturnCoefficients,
    Stability,
)
from kolmo.models.system import KolmogorovField, PiecewiseKolmogorov, SeparationLine
from kolmo.series import (
    CoefficientField,
    TruncatedSeries,
    field_for,
    level_set_branch,
    series_log,
    series_pow,
    series_reversion,
)
from kolmo.series.fields import F64, RATIONAL
from kolmo.services.model_service import (
    analyze_equilibrium,
    cc_build,
    canonical_frame,
    equilibrium_off_axes,
    exact_sigma_direction,
)

log = logging.getLogger("kolmo.analytic")

CENTER_REL_TOL = 1e-9


# ─────────────────────────────────────────────
# First integrals
# ─────────────────────────────────────────────

def coerce_zone(Z: KolmogorovField, field: CoefficientField) -> KolmogorovField:
    return KolmogorovField(*(field.coerce(v) for v in Z.params()))


def jacobian_det(Z: KolmogorovField, x, y):
    j11 = Z.a + 2 * Z.b * x + Z.c * y
    j22 = Z.d + Z.e * x + 2 * Z.f * y
    return j11 * j22 - (Z.c * x) * (Z.e * y)


def first_integral(Z: KolmogorovField, point=None, field: CoefficientField = RATIONAL) -> FirstIntegralForm:
    """
    Darboux integral H = X^p Y^q Λ of a CC zone, in coordinates normalized at ``point``.

    Normalisation: X = x/x₀, Y = y/y₀, and b, e are divided by D = √det Jac
    only to form the exponents p, q and Λ (kept as ``scale``). The zone itself
    is never rescaled by D, so the canonical frame stays orthogonal and ρ is
    Euclidean distance along Σ. Lyapunov quantities of zones with D₁ ≠ D₂
    therefore carry the elliptic shape of each zone, not a unit-frequency one.
    """
    Z = coerce_zone(Z, field)
    x0, y0 = point if point is not None else equilibrium_off_axes(Z)
    x0, y0 = field.coerce(x0), field.coerce(y0)
    det = jacobian_det(Z, x0, y0)
    if det <= 0:
        raise MonodromyError(f"det Jac = {det} at ({x0}, {y0}); the zone is not a center")
    try:
        D = field.pow(det, Fraction(1, 2))
    except SeriesDomainError as exc:
        raise RepresentationUnavailableError(f"rotation frequency sqrt({det}) is not exact in {field}") from exc

    b, e = Z.b * x0 / D, Z.e * x0 / D
    if b == 0 or e == 0:
        raise RepresentationUnavailableError(f"Darboux integral needs b != 0 and e != 0 (normalized b={b}, e={e})")
    p = b * (b - e)
    q = -(b / e) * (b * b - b * e + 1)
    lam = (
        b * b * e - b * e * e,
        b * b * e - b ** 3 - b,
        b ** 3 - 2 * b * b * e + b * e * e + b - e,
    )
    return FirstIntegralForm(p=p, q=q, lam=lam, x0=x0, y0=y0, scale=D)


def gradient_residual(H: FirstIntegralForm, Z: KolmogorovField, x: float, y: float) -> float:
    """(∇ log H)·Z at (x, y), relative to |Z|; zero for a first integral."""
    X, Y = x / float(H.x0), y / float(H.y0)
    l1, l2, l0 = (float(v) for v in H.lam)
    lam = l1 * X + l2 * Y + l0
    gx = float(H.p) / x + l1 / (float(H.x0) * lam)
    gy = float(H.q) / y + l2 / (float(H.y0) * lam)
    u, v = (float(w) for w in Z(x, y))
    return abs(gx * u + gy * v) / (1 + np.hypot(u, v))


def sigma_direction(line: SeparationLine, reflected: bool, field: CoefficientField):
    """Unit vector of the canonical x-axis, as field elements."""
    if field is RATIONAL:
        direction = exact_sigma_direction(line, reflected)
        if direction is None:
            raise RepresentationUnavailableError("rational mode needs |grad h| rational")
        return direction
    alpha, beta = field.coerce(line.alpha), field.coerce(line.beta)
    norm = field.pow(alpha * alpha + beta * beta, Fraction(1, 2))
    sign = -1 if reflected else 1
    return (-sign * beta / norm, sign * alpha / norm)


def restriction_series(H: FirstIntegralForm, direction, order: int, field: CoefficientField) -> TruncatedSeries:
    """S(ρ) = log|H(p₀ + ρu)| − log|H(p₀)| expanded in ρ."""
    ux, uy = (field.coerce(v) for v in direction)
    l1, l2, l0 = H.lam
    lam0 = l1 + l2 + l0  # Λ at the normalized equilibrium (1, 1)
    if lam0 == 0:
        raise MonodromyError("Λ vanishes at the equilibrium")
    X = TruncatedSeries.linear(1, ux / H.x0, order, field)
    Y = TruncatedSeries.linear(1, uy / H.y0, order, field)
    L = TruncatedSeries.linear(1, (l1 * ux / H.x0 + l2 * uy / H.y0) / lam0, order, field)
    return series_log(X) * H.p + series_log(Y) * H.q + series_log(L)


def restrict_to_sigma(H: FirstIntegralForm, line: SeparationLine, eq: EquilibriumData = None,
                      order: int = None, field: CoefficientField = RATIONAL, reflected: bool = False,
                      zone: int = 0) -> ReturnCoefficients:
    order = order or settings.SERIES_ORDER
    if eq is not None and not eq.on_sigma:
        raise MonodromyError(f"equilibrium ({eq.x0}, {eq.y0}) is not on the separation line")
    S = restriction_series(H, sigma_direction(line, reflected, field), order, field)
    A = S[2]
    tol = 0 if field is RATIONAL else 1e-12 * (1 + max(abs(field.to_float(c)) for c in S.coeffs[:4]))
    if abs(S[1]) > 1e3 * tol:
        raise MonodromyError(f"restriction has a linear term {S[1]}; the base point is not a critical point of H")
    if abs(A) <= tol:
        raise MonodromyError(f"quadratic coefficient A = {A} vanishes; Σ is tangent to the level curves")
    h = (field.zero, field.zero, field.one) + tuple(S[k] / A for k in range(3, order + 1))
    return ReturnCoefficients(h=h, A=A, zone=zone)


# ─────────────────────────────────────────────
# Half-return maps
# ─────────────────────────────────────────────

def half_return_coeffs(rc: ReturnCoefficients) -> Dict[int, object]:
    """The closed forms of W_{i,2}..W_{i,8}; W_{i,k} needs h up to h_{k+1}."""
    h3, h4, h5, h6, h7, h8, h9 = (rc[k] for k in range(3, 10))
    formulas = {
        2: lambda: -h3,
        3: lambda: -h3 ** 2,
        4: lambda: -2 * h3 ** 3 + 2 * h3 * h4 - h5,
        5: lambda: -4 * h3 ** 4 + 6 * h3 ** 2 * h4 - 3 * h3 * h5,
        6: lambda: (-9 * h3 ** 5 + 19 * h3 ** 3 * h4 - 11 * h3 ** 2 * h5 - 4 * h3 * h4 ** 2
                    + 3 * h3 * h6 + 2 * h4 * h5 - h7),
        7: lambda: (-21 * h3 ** 6 + 56 * h3 ** 4 * h4 - 34 * h3 ** 3 * h5 - 24 * h3 ** 2 * h4 ** 2
                    + 12 * h3 ** 2 * h6 + 16 * h3 * h4 * h5 - 4 * h3 * h7 - 2 * h5 ** 2),
        8: lambda: (-51 * h3 ** 7 + 165 * h3 ** 5 * h4 - 104 * h3 ** 4 * h5 - 112 * h3 ** 3 * h4 ** 2
                    + 43 * h3 ** 3 * h6 + 93 * h3 ** 2 * h4 * h5 + 8 * h3 * h4 ** 3 - 18 * h3 ** 2 * h7
                    - 12 * h3 * h4 * h6 - 17 * h3 * h5 ** 2 - 4 * h4 ** 2 * h5 + 4 * h3 * h8
                    + 2 * h4 * h7 + 3 * h5 * h6 - h9),
    }
    return {k: f() for k, f in formulas.items() if k + 1 <= rc.order}


def _normalized_restriction(rc: ReturnCoefficients, field: CoefficientField) -> TruncatedSeries:
    return TruncatedSeries(list(rc.h), rc.order, field)


def _field_of(rc: ReturnCoefficients) -> CoefficientField:
    sample = rc.h[2]
    if isinstance(sample, Fraction):
        return RATIONAL
    if isinstance(sample, float):
        return field_for(Precision.F64)
    return field_for(Precision.EXTENDED, settings.EXTENDED_DPS)


def half_return_series(rc: ReturnCoefficients, field: CoefficientField = None) -> TruncatedSeries:
    """σ(ρ) = −ρ + Σ W_{i,k} ρ^k from the level-set relation, to order N − 1."""
    field = field or _field_of(rc)
    return level_set_branch(_normalized_restriction(rc, field))


def half_return_by_reversion(rc: ReturnCoefficients, field: CoefficientField = None) -> TruncatedSeries:
    """Same map through S = φ², σ = φ⁻¹(−φ(ρ))."""
    field = field or _field_of(rc)
    S = _normalized_restriction(rc, field)
    root = series_pow(S.shift_down(2), Fraction(1, 2))
    phi = root.shift_up(1)
    return series_reversion(phi).compose(-phi)


# ─────────────────────────────────────────────
# Lyapunov quantities
# ─────────────────────────────────────────────

def reduced_coeffs(rc1: ReturnCoefficients, rc2: ReturnCoefficients) -> Dict[int, object]:
    """
    Closed forms of W₂, W₄, W₆, W₈, each valid on the locus where its
    predecessors vanish (so h_{2,3} = h_{1,3} is substituted throughout).
    """
    a = {k: rc1[k] for k in range(3, 10)}
    b = {k: rc2[k] for k in range(3, 10)}
    out = {2: -a[3] + b[3]}
    if min(rc1.order, rc2.order) >= 5:
        out[4] = 2 * a[3] * a[4] - 2 * a[3] * b[4] - a[5] + b[5]
    if min(rc1.order, rc2.order) >= 7:
        out[6] = (-3 * a[3] ** 3 * a[4] + 3 * a[3] ** 3 * b[4] - 4 * a[3] * a[4] ** 2 + 4 * a[3] * a[4] * b[4]
                  + 3 * a[3] * a[6] - 3 * a[3] * b[6] + 2 * a[4] * a[5] - 2 * a[5] * b[4] - a[7] + b[7])
    if min(rc1.order, rc2.order) >= 9:
        out[8] = (11 * a[3] ** 5 * a[4] - 11 * a[3] ** 5 * b[4] + 28 * a[3] ** 3 * a[4] ** 2
                  - 28 * a[3] ** 3 * a[4] * b[4] - 11 * a[3] ** 3 * a[6] + 11 * a[3] ** 3 * b[6]
                  - 11 * a[3] ** 2 * a[4] * a[5] + 11 * a[3] ** 2 * a[5] * b[4] + 8 * a[3] * a[4] ** 3
                  - 8 * a[3] * a[4] ** 2 * b[4] - 12 * a[3] * a[4] * a[6] + 6 * a[3] * a[4] * b[6]
                  + 6 * a[3] * a[6] * b[4] - 4 * a[4] ** 2 * a[5] + 4 * a[4] * a[5] * b[4] + 4 * a[3] * a[8]
                  - 4 * a[3] * b[8] + 2 * a[4] * a[7] + 3 * a[5] * a[6] - 3 * a[5] * b[6] - 2 * a[7] * b[4]
                  - a[9] + b[9])
    return out


def zero_tolerances(W: Sequence, field: CoefficientField, scale: float = 1.0) -> tuple:
    if field is RATIONAL:
        return tuple(0 for _ in W)
    base = 1e-10 if field.precision is Precision.F64 else 10.0 ** (-(getattr(field, "dps", 40) // 2))
    return tuple(base * max(1.0, scale) ** (k + 1) for k in range(len(W)))


def lyapunov_verdict(W: Sequence, noise: Sequence, reduced: Optional[dict] = None) -> LyapunovSequence:
    """Weak-focus order is the first W_k above its noise level; W_ℓ > 0 means stable."""
    for k, (w, tol) in enumerate(zip(W, noise), start=1):
        if abs(w) > tol:
            stability = Stability.STABLE if w > 0 else Stability.UNSTABLE
            return LyapunovSequence(W=tuple(W), order=k, stability=stability, noise=tuple(noise),
                                    reduced=reduced or {})
    return LyapunovSequence(W=tuple(W), order=None, stability=Stability.UNDETERMINED, noise=tuple(noise),
                            reduced=reduced or {})


def difference_coeffs(rc1: ReturnCoefficients, rc2: ReturnCoefficients) -> LyapunovSequence:
    """W_k = W_{1,k} − W_{2,k}, with Δ(ρ) = (Π₂)⁻¹(ρ) − Π₁(ρ) = −Σ W_k ρ^k."""
    field = _field_of(rc1)
    s1 = half_return_series(rc1, field)
    s2 = half_return_series(rc2, field)
    n = min(s1.order, s2.order)
    W = [s1[k] - s2[k] for k in range(1, n + 1)]
    scale = max([1.0] + [abs(field.to_float(v)) ** (1.0 / (k - 2))
                         for rc in (rc1, rc2) for k, v in enumerate(rc.h) if k >= 3 and v != 0])
    return lyapunov_verdict(W, zero_tolerances(W, field, scale), reduced_coeffs(rc1, rc2))


def analytic_lyapunov(Z: PiecewiseKolmogorov, order: int = None, precision: Precision = None) -> LyapunovSequence:
    """End-to-end: equilibrium, canonical orientation, both restrictions, W₁..W_{N−1}."""
    order = order or settings.SERIES_ORDER
    field = field_for(precision or settings.PRECISION, settings.EXTENDED_DPS)
    eq = analyze_equilibrium(Z)
    if eq.classification is not EquilibriumClass.CC:
        raise MonodromyError(f"analytic pipeline needs a CC-equilibrium, got {eq.classification.value}")
    frame = canonical_frame(Z, eq)
    z1 = coerce_zone(Z.zone1, field)
    point = equilibrium_off_axes(z1)
    rcs = []
    for i in (1, 2):
        H = first_integral(Z.zone(i), point, field)
        rcs.append(restrict_to_sigma(H, Z.line, eq, order, field, frame.transform.reflected, zone=i))
    seq = difference_coeffs(*rcs)
    log.info(f"analytic W up to order {len(seq.W)} ({field!r}): weak-focus order {seq.order}, {seq.stability.value}")
    return seq


# ─────────────────────────────────────────────
# Center predicates
# ─────────────────────────────────────────────

def _near_zero(value, terms: Sequence) -> bool:
    if all(isinstance(t, (int, Fraction)) for t in list(terms) + [value]):
        return value == 0
    scale = max([1.0] + [abs(float(t)) for t in terms])
    return abs(float(value)) <= CENTER_REL_TOL * scale


def c3_condition(variant: str, b1, e1, b2, e2, D1, D2, x0=1, y0=1):
    """Value of the center condition for lines through (x₀, y₀) and its monomials."""
    if variant == "i":
        terms = [D1 ** 2 * D2 ** 2 * b1 * e2, -D1 ** 2 * D2 ** 2 * b2 * e1,
                 -x0 ** 2 * D1 ** 2 * b2 * e1 * (b2 - e2) ** 2, x0 ** 2 * D2 ** 2 * b1 * e2 * (b1 - e1) ** 2]
    elif variant == "ii":
        terms = [D1 ** 2 * b2 ** 2, -D1 ** 2 * b2 * e2, -D2 ** 2 * b1 ** 2, D2 ** 2 * b1 * e1]
    elif variant == "iii":
        terms = [D1 ** 2 * D2 ** 2 * b1 * e2, -D1 ** 2 * D2 ** 2 * b2 * e1,
                 -x0 ** 2 * D1 ** 2 * b2 ** 2 * e1 * (b2 - e2), x0 ** 2 * D2 ** 2 * b1 ** 2 * e2 * (b1 - e1)]
    else:
        raise ValueError(f"unknown variant {variant!r}; expected i, ii or iii")
    return sum(terms), terms


def c3_line(variant: str, x0=1, y0=1) -> SeparationLine:
    if variant == "i":
        return SeparationLine(y0, -x0, 0)
    if variant == "ii":
        return SeparationLine(0, 1, -y0)
    if variant == "iii":
        return SeparationLine(1, 0, -x0)
    raise ValueError(f"unknown variant {variant!r}; expected i, ii or iii")


def center_check_c3(variant: str, b1, e1, b2, e2, D1, D2, x0=1, y0=1) -> bool:
    if e1 * e2 <= 0 or D1 <= 0 or D2 <= 0 or x0 * y0 == 0:
        # rotation sense at a CC point is sign(e·y₀); opposite senses are not monodromic
        raise MonodromyError(f"(e1, e2, D1, D2) = ({e1}, {e2}, {D1}, {D2}) is not a monodromic CC configuration")
    value, terms = c3_condition(variant, b1, e1, b2, e2, D1, D2, x0, y0)
    return _near_zero(value, terms)


def center2_conditions(b2, e1, e2) -> Dict[str, tuple]:
    """Each family as a pair of polynomial values (both vanish on the family)."""
    quad_c5 = (8 * b2 - 7 * e2) ** 2 - 49 * (b2 ** 2 - 64)
    return {
        "C1": (b2 - 1, e1 - e2),
        "C2": (b2 + 1, e1 + e2),
        "C3": (3 * e1 - 8, 3 * e2 - 4 * b2),
        "C4": (3 * e1 - 8, 3 * e2 * b2 - 4 * (b2 ** 2 + 1)),
        "C5": (3 * e1 - 8, quad_c5),
        "C6": (3 * e1 - 4, 3 * e2 - 4 * b2),
        "C7": (3 * e1 - 4, 3 * e2 * b2 - 4 * (b2 ** 2 + 1)),
        "C8": (3 * e1 - 4, quad_c5),
    }


def center_check_center2(b2, e1, e2) -> Set[str]:
    """Families C1–C8 (line 4(x−1)−3(y−1)=0, b₁ = 1) containing (b₂, e₁, e₂)."""
    scale_terms = [b2 ** 2, e1 ** 2, e2 ** 2, b2 * e2, 1]
    hits = set()
    for name, values in center2_conditions(b2, e1, e2).items():
        if all(_near_zero(v, [t * 64 for t in scale_terms]) for v in values):
            hits.add(name)
    return hits


def w2hat_eval(b2, e1, e2):
    """
    Numerator of W₂ on the center2 slice, exact for rational input.

    The last term carries (9e₁² − 24e₁ + 32); with +24e₁ the polynomial
    fails to vanish on C1.
    """
    return (
        27 * b2 * e1 * (9 * e1 ** 2 - 24 * e1 + 32) * e2 ** 4
        - (1215 * b2 ** 2 * e1 ** 3 - 3240 * b2 ** 2 * e1 ** 2 + 243 * e1 ** 4 + 4320 * b2 ** 2 * e1
           - 1215 * e1 ** 3 + 2916 * e1 ** 2 - 3456 * e1 + 2304) * e2 ** 3
        + 12 * b2 * (189 * b2 ** 2 * e1 ** 3 - 504 * b2 ** 2 * e1 ** 2 + 54 * e1 ** 4 + 672 * b2 ** 2 * e1
                     - 216 * e1 ** 3 + 504 * e1 ** 2 - 576 * e1 + 512) * e2 ** 2
        - 16 * (b2 ** 2 + 1) * (117 * b2 ** 2 * e1 ** 3 - 312 * b2 ** 2 * e1 ** 2 + 27 * e1 ** 4
                                + 416 * b2 ** 2 * e1 - 144 * e1 ** 3 + 348 * e1 ** 2 - 416 * e1 + 256) * e2
        + 64 * e1 * b2 * (9 * e1 ** 2 - 24 * e1 + 32) * (b2 ** 2 + 1) ** 2
    )


def center2_system(b2, e1, e2, D=1) -> PiecewiseKolmogorov:
    """The slice b₁ = 1 at (1, 1) on 4(x−1) − 3(y−1) = 0."""
    return cc_build(1, 1, ((1, e1, D), (b2, e2, D)))


def continuity_center_check(Z: PiecewiseKolmogorov, s1=1, s2=1, half_width: float = None,
                            samples: int = 41, rel_tol: float = 1e-10) -> bool:
    """
    True iff |H₁/H₁(p₀)|^{s₁} and |H₂/H₂(p₀)|^{s₂} agree along a segment of Σ,
    which certifies a continuous Σ-first integral and therefore a center.
    """
    return continuity_deviation(Z, s1, s2, half_width, samples) <= rel_tol


def continuity_deviation(Z: PiecewiseKolmogorov, s1=1, s2=1, half_width: float = None, samples: int = 41) -> float:
    eq = analyze_equilibrium(Z)
    if not eq.classification.monodromic:
        raise MonodromyError(f"equilibrium is {eq.classification.value}")
    point = (float(eq.x0), float(eq.y0))
    H1 = first_integral(Z.zone1, point, F64)
    H2 = first_integral(Z.zone2, point, F64)
    direction = np.array(sigma_direction(Z.line, False, F64), dtype=float)
    width = half_width or 0.2 * min(point)
    worst = 0.0
    base1, base2 = H1.log_abs(*point), H2.log_abs(*point)
    for s in np.linspace(-width, width, samples):
        if s == 0:
            continue
        x, y = np.array(point) + s * direction
        gap = float(s1) * (H1.log_abs(x, y) - base1) - float(s2) * (H2.log_abs(x, y) - base2)
        worst = max(worst, abs(np.expm1(gap)))
    log.debug(f"continuity deviation on |s| <= {width:.3g}: {worst:.3e}")
    return worst


# ─── the C3 family in closed form ───

def c3_closed_form(zone: int, b2):
    """Zone integrals of the C3 family on 4(x−1) − 3(y−1) = 0, up to a constant factor."""
    if zone == 1:
        return lambda x, y: (3 * y) ** 0.25 * (20 * x - 3 * y - 5) / (4 * x ** (5 / 3))
    b2 = float(b2)
    return lambda x, y: ((3 * y) ** ((b2 ** 2 - 3) / 4) * (4 * b2 ** 2 * x + (3 - b2 ** 2) * (3 * y + 1))
                         / (12 * x ** (b2 ** 2 / 3)))


def c3_exponents(b2) -> tuple:
    return (Fraction(12, 5), Fraction(12) / (Fraction(b2) ** 2 - 3))


def c3_sigma_profile(x):
    """Common value (4x − 1)³/x⁴ of both adjusted integrals on the line."""
    return (4 * x - 1) ** 3 / x ** 4
