import logging
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from mpmath import mp
from scipy.optimize import brentq
from sympy import integer_nthroot

from kolmo.core.errors import (
    DegenerateEquilibriumError,
    MonodromyError,
    NotSlidingError,
    OffLineError,
    ParametrizationError,
)
from kolmo.models.results import (
    CanonicalSystem,
    EquilibriumClass,
    EquilibriumData,
    FrameTransform,
    SigmaClass,
    SigmaClassification,
)
from kolmo.models.system import KolmogorovField, PiecewiseKolmogorov, QuadraticField, SeparationLine
from kolmo.series.fields import ExtendedField

log = logging.getLogger("kolmo.model")

TANGENCY_REL_TOL = 1e-10
ON_LINE_TOL = 1e-8
TRACE_TOL = 1e-12


# ─────────────────────────────────────────────
# Equilibria
# ─────────────────────────────────────────────

def equilibrium_off_axes(Z: KolmogorovField) -> Tuple:
    den = Z.b * Z.f - Z.c * Z.e
    if den == 0:
        raise DegenerateEquilibriumError(f"bf - ce = 0 for {Z}")
    return ((Z.c * Z.d - Z.a * Z.f) / den, (Z.a * Z.e - Z.b * Z.d) / den)


def cc_zone(x0, y0, b, e, D) -> KolmogorovField:
    """One center zone with equilibrium (x₀, y₀), zero trace and det Jac = D²."""
    if e == 0 or x0 * y0 == 0:
        raise ParametrizationError(f"cc_build needs e != 0 and x0*y0 != 0 (e={e}, x0={x0}, y0={y0})")
    if D <= 0:
        raise ParametrizationError(f"rotation frequency D must be positive, got {D}")
    a = ((b * x0) ** 2 - b * e * x0 ** 2 + D ** 2) / (e * x0)
    c = -((b * x0) ** 2 + D ** 2) / (e * x0 * y0)
    d = (b - e) * x0
    f = -b * x0 / y0
    return KolmogorovField(a, b, c, d, e, f)


def cc_build(x0, y0, zones: Sequence[Tuple], line: Optional[SeparationLine] = None) -> PiecewiseKolmogorov:
    """
    zones: ((b₁, e₁, D₁), (b₂, e₂, D₂)).
    Default line is 4(x − x₀) − 3(y − y₀) = 0.
    """
    if len(zones) != 2:
        raise ParametrizationError("cc_build needs exactly two zones")
    z1, z2 = (cc_zone(x0, y0, *z) for z in zones)
    if line is None:
        line = SeparationLine.through(4, -3, (x0, y0))
    return PiecewiseKolmogorov(z1, z2, line)


def _linear_summary(J: np.ndarray):
    tr = float(J[0, 0] + J[1, 1])
    det = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    rotating = tr * tr - 4 * det < 0
    sense = np.sign(float(J[1, 0])) if rotating else 0.0
    return tr, det, rotating, sense


def analyze_equilibrium(Z: PiecewiseKolmogorov, point=None) -> EquilibriumData:
    if point is None:
        point = equilibrium_off_axes(Z.zone1)
    x0, y0 = point
    fx = [np.hypot(*(float(v) for v in Z.zone(i)(x0, y0))) for i in (1, 2)]
    scale = 1 + abs(float(x0)) + abs(float(y0))
    if max(fx) > 1e-9 * scale:
        log.warning(f"({float(x0):.6g}, {float(y0):.6g}) is not a common equilibrium (|Z| = {max(fx):.3g})")
        common = False
    else:
        common = True
    on_sigma = abs(float(Z.line.h(x0, y0))) <= ON_LINE_TOL * (1 + np.hypot(*Z.line.gradient)) * scale

    summaries = [_linear_summary(np.asarray(Z.zone(i).jacobian(x0, y0), dtype=float)) for i in (1, 2)]
    traces = tuple(s[0] for s in summaries)
    dets = tuple(s[1] for s in summaries)
    D = tuple(float(np.sqrt(d)) if d > 0 else 0.0 for d in dets)

    monodromic = common and on_sigma and all(s[2] for s in summaries) and summaries[0][3] == summaries[1][3]
    if not monodromic:
        kind = EquilibriumClass.NON_MONODROMIC
    else:
        zero_trace = [abs(tr) <= TRACE_TOL * (1 + abs(det)) for tr, det in zip(traces, dets)]
        if all(zero_trace):
            kind = EquilibriumClass.CC
        elif not any(zero_trace):
            kind = EquilibriumClass.FOCUS_FOCUS
        else:
            kind = EquilibriumClass.MIXED
    return EquilibriumData(
        x0=x0, y0=y0, traces=traces, dets=dets, D=D, classification=kind,
        on_sigma=on_sigma, counter_clockwise=(summaries[0][3] > 0) if monodromic else None,
    )


# ─────────────────────────────────────────────
# Filippov classification on Σ
# ─────────────────────────────────────────────

def lie_derivatives(Z: PiecewiseKolmogorov, p) -> Tuple[float, float]:
    grad = Z.line.gradient
    return tuple(float(grad @ np.array(Z.zone(i)(float(p[0]), float(p[1])), dtype=float)) for i in (1, 2))


def _is_tangent(lie: float, vec) -> bool:
    return abs(lie) < TANGENCY_REL_TOL * (1 + float(np.hypot(*vec)))


def classify_sigma_point(Z: PiecewiseKolmogorov, p) -> SigmaClassification:
    x, y = float(p[0]), float(p[1])
    norm = float(np.hypot(*Z.line.gradient))
    if abs(Z.line.h(x, y)) / norm > ON_LINE_TOL * (1 + abs(x) + abs(y)):
        raise OffLineError(f"point ({x}, {y}) is {abs(Z.line.h(x, y)) / norm:.3g} away from the separation line")
    L1, L2 = lie_derivatives(Z, (x, y))
    z1, z2 = Z.zone1(x, y), Z.zone2(x, y)
    if _is_tangent(L1, z1) or _is_tangent(L2, z2):
        kind = SigmaClass.TANGENCY
    elif L1 * L2 > 0:
        kind = SigmaClass.CROSSING
    elif L1 > 0 > L2:
        # zone 1 = {h < 0} pushes up toward h = 0, zone 2 pushes down
        kind = SigmaClass.SLIDING
    else:
        kind = SigmaClass.ESCAPING
    return SigmaClassification(point=(x, y), kind=kind, lie_derivatives=(L1, L2))


def sliding_field(Z: PiecewiseKolmogorov, p) -> np.ndarray:
    """Filippov convex combination μZ₁ + (1−μ)Z₂ tangent to Σ."""
    cls = classify_sigma_point(Z, p)
    if cls.kind not in (SigmaClass.SLIDING, SigmaClass.ESCAPING):
        raise NotSlidingError(f"sliding field undefined at a {cls.kind.value} point {cls.point}")
    L1, L2 = cls.lie_derivatives
    mu = L2 / (L2 - L1)
    z1 = np.array(Z.zone1(*cls.point), dtype=float)
    z2 = np.array(Z.zone2(*cls.point), dtype=float)
    return mu * z1 + (1 - mu) * z2


def sigma_point(Z: PiecewiseKolmogorov, ref, s: float) -> np.ndarray:
    """Point at signed arclength s from ``ref`` along Σ (direction (−β, α)/|∇h|)."""
    grad = Z.line.gradient
    direction = np.array([-grad[1], grad[0]]) / np.hypot(*grad)
    base = Z.line.project(*ref)
    return base + s * direction


def sigma_arcs(Z: PiecewiseKolmogorov, ref, s_min: float, s_max: float, samples: int = 201) -> List[Tuple[float, float, SigmaClass]]:
    """Maximal arcs of constant class; boundaries are refined Lie-derivative zeros."""
    grid = np.linspace(s_min, s_max, samples)
    lies = np.array([lie_derivatives(Z, sigma_point(Z, ref, s)) for s in grid])
    boundaries = []
    for i in range(2):
        vals = lies[:, i]
        for k in range(len(grid) - 1):
            if vals[k] == 0:
                boundaries.append(grid[k])
            elif vals[k] * vals[k + 1] < 0:
                fn = lambda s, i=i: lie_derivatives(Z, sigma_point(Z, ref, s))[i]
                boundaries.append(brentq(fn, grid[k], grid[k + 1], xtol=1e-14))
    cuts = sorted(set([s_min, s_max] + [b for b in boundaries if s_min < b < s_max]))
    arcs = []
    for lo, hi in zip(cuts, cuts[1:]):
        kind = classify_sigma_point(Z, sigma_point(Z, ref, 0.5 * (lo + hi))).kind
        if arcs and arcs[-1][2] == kind:
            arcs[-1] = (arcs[-1][0], hi, kind)
        else:
            arcs.append((lo, hi, kind))
    return arcs


# ─────────────────────────────────────────────
# Canonical frame
# ─────────────────────────────────────────────

def frame_matrix(line: SeparationLine, reflected: bool = False) -> np.ndarray:
    n = line.unit_normal
    y_hat = -n  # zone 1 = {h < 0} becomes the upper half-plane
    x_hat = np.array([y_hat[1], -y_hat[0]])
    M = np.vstack([x_hat, y_hat])
    if reflected:
        M = np.diag([-1.0, 1.0]) @ M
    return M


def exact_sigma_direction(line: SeparationLine, reflected: bool = False) -> Optional[Tuple[Fraction, Fraction]]:
    """Rational unit direction of the canonical x-axis, when |∇h| is rational."""
    try:
        alpha, beta = Fraction(str(line.alpha)), Fraction(str(line.beta))
    except (ValueError, TypeError):
        return None
    sq = alpha * alpha + beta * beta
    num, ok_num = integer_nthroot(sq.numerator, 2)
    den, ok_den = integer_nthroot(sq.denominator, 2)
    if not (ok_num and ok_den):
        return None
    norm = Fraction(int(num), int(den))
    direction = (-beta / norm, alpha / norm)
    if reflected:
        direction = (-direction[0], -direction[1])
    return direction


def canonical_frame(Z: PiecewiseKolmogorov, eq: EquilibriumData) -> CanonicalSystem:
    if not eq.classification.monodromic:
        raise MonodromyError(f"equilibrium ({eq.x0}, {eq.y0}) is {eq.classification.value}")
    offset = (float(eq.x0), float(eq.y0))
    q1, q2 = (z.to_quadratic().as_float() for z in (Z.zone1, Z.zone2))
    M = frame_matrix(Z.line)
    g1 = q1.transformed(offset, M)
    reflected = g1.linear_part()[1, 0] < 0
    if reflected:
        M = frame_matrix(Z.line, reflected=True)
        g1 = q1.transformed(offset, M)
        log.debug("clockwise rotation: canonical frame includes a reflection")
    g2 = q2.transformed(offset, M)
    if g2.linear_part()[1, 0] <= 0:
        raise MonodromyError("the two zones rotate in opposite senses")
    return CanonicalSystem(g1, g2, FrameTransform(offset=offset, matrix=M, reflected=reflected))


def canonical_frame_at(Z: PiecewiseKolmogorov, point, reflected: Optional[bool] = None) -> CanonicalSystem:
    """Frame anchored at an arbitrary point of Σ (no equilibrium required)."""
    offset = tuple(float(v) for v in Z.line.project(*point))
    q1, q2 = (z.to_quadratic().as_float() for z in (Z.zone1, Z.zone2))
    if reflected is None:
        reflected = q1.transformed(offset, frame_matrix(Z.line)).linear_part()[1, 0] < 0
    M = frame_matrix(Z.line, reflected=reflected)
    return CanonicalSystem(q1.transformed(offset, M), q2.transformed(offset, M),
                           FrameTransform(offset=offset, matrix=M, reflected=reflected))


ANCHOR_TOL = 1e-8


def _mp_anchor(Z: PiecewiseKolmogorov, approx, coerce) -> Tuple:
    """Zone 1's equilibrium when ``approx`` sits on it, else the projection of ``approx`` onto Σ."""
    x, y = (coerce(v) for v in approx)
    a, b, c, d, e, f = (coerce(v) for v in Z.zone1.params())
    det = b * f - c * e
    if det != 0:
        ex, ey = (c * d - a * f) / det, (a * e - b * d) / det
        if abs(ex - x) + abs(ey - y) <= ANCHOR_TOL * (1 + abs(x) + abs(y)):
            return ex, ey
    alpha, beta, gamma0 = (coerce(v) for v in (Z.line.alpha, Z.line.beta, Z.line.gamma0))
    t = (alpha * x + beta * y + gamma0) / (alpha * alpha + beta * beta)
    return x - t * alpha, y - t * beta


def canonical_frame_mp(Z: PiecewiseKolmogorov, transform: FrameTransform, dps: int) -> CanonicalSystem:
    """
    Rebuild the frame described by ``transform`` in mpmath at ``dps`` digits.

    The anchor, the rotation and both zones are recomputed from the inputs of
    ``Z`` rather than lifted from the binary64 frame, so the canonical fields
    carry the working precision.
    """
    field = ExtendedField(dps)
    with mp.workdps(dps):
        alpha, beta = field.coerce(Z.line.alpha), field.coerce(Z.line.beta)
        norm = mpmath.sqrt(alpha * alpha + beta * beta)
        y_hat = (-alpha / norm, -beta / norm)
        x_hat = (y_hat[1], -y_hat[0])
        if transform.reflected:
            x_hat = (-x_hat[0], -x_hat[1])
        M = np.array([x_hat, y_hat], dtype=object)
        offset = _mp_anchor(Z, transform.offset, field.coerce)
        zones = []
        for z in (Z.zone1, Z.zone2):
            coeffs = np.array([[field.coerce(v) for v in row] for row in z.to_quadratic().coeffs], dtype=object)
            zones.append(QuadraticField(coeffs).transformed(offset, M))
    return CanonicalSystem(zones[0], zones[1], FrameTransform(offset=offset, matrix=M, reflected=transform.reflected))
