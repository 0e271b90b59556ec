"""
Taylor coefficients of the half-return maps by jet transport.

In polar coordinates around a pseudo-equilibrium at the origin with θ as
the independent variable, each zone gives

    dr/dθ = r (A₁(θ) + r A₂(θ)) / (B₁(θ) + r B₂(θ))

where A₁, B₁ come from the linear part and A₂, B₂ from the quadratic part.
The state r(θ) is a MultiJet in the initial radius ρ and in the
perturbation parameters λ, so one integration yields every coefficient
∂^{k+|α|} r / ∂ρ^k ∂λ^α at once. Zone 1 (upper half-plane) runs θ: 0 → π,
zone 2 runs θ: 0 → −π, and

    Δ(ρ) = r₁(π) − r₂(−π) = −Σ W_k ρ^k.
"""
import logging
from typing import Callable, Dict, Optional, Sequence, Tuple

import mpmath
import numpy as np
from mpmath import mp
from scipy.integrate import solve_ivp

from kolmo.core.config import IntegratorConfig, Precision, settings
from kolmo.core.errors import MonodromyError, PrecisionError
from kolmo.models.results import JetDisplacement, LyapunovSequence
from kolmo.models.system import KolmogorovField, PiecewiseKolmogorov, QuadraticField
from kolmo.series import MultiJet
from kolmo.series.multijet import layout
from kolmo.series.fields import ExtendedField
from kolmo.services.analytic_service import lyapunov_verdict
from kolmo.services.model_service import analyze_equilibrium, canonical_frame, canonical_frame_mp, frame_matrix

log = logging.getLogger("kolmo.jets")

NOISE_FACTOR = 100.0


# ─────────────────────────────────────────────
# Coefficient jets
# ─────────────────────────────────────────────

def lambda_vector(value, n_lam: int) -> np.ndarray:
    """λ-coefficients of a number or of an r-order-0 MultiJet."""
    if isinstance(value, MultiJet):
        return np.asarray(value.data, dtype=float)
    out = np.zeros(n_lam)
    out[0] = float(value)
    return out


def zone_coefficient_jets(Z: KolmogorovField, n_lam: int) -> np.ndarray:
    """(2, 6, n_lam) table of a Kolmogorov zone whose parameters may be λ-jets."""
    a, b, c, d, e, f = (lambda_vector(v, n_lam) for v in Z.params())
    coeffs = np.zeros((2, 6, n_lam))
    coeffs[0, 1], coeffs[0, 3], coeffs[0, 4] = a, b, c
    coeffs[1, 2], coeffs[1, 4], coeffs[1, 5] = d, e, f
    return coeffs


def canonical_coefficient_jets(Z: PiecewiseKolmogorov, point, reflected: bool, n_lam: int) -> Tuple[QuadraticField, QuadraticField]:
    M = frame_matrix(Z.line, reflected=reflected)
    offset = tuple(float(v) for v in point)
    return tuple(QuadraticField(zone_coefficient_jets(Z.zone(i), n_lam)).transformed(offset, M) for i in (1, 2))


# ─────────────────────────────────────────────
# Polar transport
# ─────────────────────────────────────────────

def trig_forms(coeffs: np.ndarray, theta):
    """A₁, A₂, B₁, B₂ at θ; each is a λ-vector (trailing axis of ``coeffs``)."""
    cos, sin = (mpmath.cos(theta), mpmath.sin(theta)) if coeffs.dtype == object else (np.cos(theta), np.sin(theta))
    lin_x = coeffs[0, 1] * cos + coeffs[0, 2] * sin
    lin_y = coeffs[1, 1] * cos + coeffs[1, 2] * sin
    quad_x = coeffs[0, 3] * cos * cos + coeffs[0, 4] * cos * sin + coeffs[0, 5] * sin * sin
    quad_y = coeffs[1, 3] * cos * cos + coeffs[1, 4] * cos * sin + coeffs[1, 5] * sin * sin
    return (cos * lin_x + sin * lin_y, cos * quad_x + sin * quad_y,
            cos * lin_y - sin * lin_x, cos * quad_y - sin * quad_x)


def _embed(vec, lay, dtype) -> MultiJet:
    """Place a λ-vector at r-power 0."""
    if dtype is object:
        data = np.array([mpmath.mpf(0)] * lay.size, dtype=object)
    else:
        data = np.zeros(lay.size)
    data[::lay.order + 1] = vec
    return MultiJet(data, lay)


def polar_rhs(field: QuadraticField, order: int, m: int, degree: int) -> Callable:
    lay = layout(order, m, degree)
    coeffs = field.coeffs
    dtype = object if coeffs.dtype == object else float

    def rhs(theta, y):
        R = MultiJet(np.asarray(y, dtype=dtype), lay)
        A1, A2, B1, B2 = (_embed(v, lay, dtype) for v in trig_forms(coeffs, theta))
        den = B1 + R * B2
        if den.data[0] == 0:
            raise MonodromyError(f"angular speed vanishes at theta={float(theta):.6g}")
        return (R * (A1 + R * A2) / den).data

    return rhs


def transport(field: QuadraticField, direction: int, order: int, m: int = 0, degree: int = 0,
              cfg: IntegratorConfig = None):
    """r(±π) as a MultiJet, starting from r(0) = ρ; ``direction`` picks the sign of θ."""
    cfg = cfg or IntegratorConfig.from_settings()
    if np.any(np.abs(np.asarray(field.constant_part(), dtype=float)) > 1e-12):
        raise MonodromyError("jet transport needs the pseudo-equilibrium at the origin")
    lay = layout(order, m, degree)
    rhs = polar_rhs(field, order, m, degree)

    # integrate in s = direction·θ so the independent variable always increases
    def forward(s, y):
        return direction * rhs(direction * s, y)

    if cfg.precision is not Precision.EXTENDED:
        y0 = MultiJet.radial(order, m, degree).data
        sol = solve_ivp(forward, (0.0, np.pi), y0, method="DOP853", rtol=cfg.rtol, atol=cfg.atol)
        if not sol.success:
            raise PrecisionError(f"jet transport failed: {sol.message}")
        return MultiJet(sol.y[:, -1], lay)

    if m:
        raise PrecisionError("extended-precision transport is available for λ-free jets only")
    if mp.dps < cfg.extended_dps:
        mp.dps = cfg.extended_dps
    y0 = [mpmath.mpf(v) for v in MultiJet.radial(order, 0, 0, dtype=object).data]
    solution = mpmath.odefun(lambda s, y: list(forward(s, y)), 0, y0)
    return MultiJet(np.array(solution(mpmath.pi), dtype=object), lay)


def jet_half_return(Z: PiecewiseKolmogorov, order: int = None, cfg: IntegratorConfig = None,
                    zones: Optional[Tuple[QuadraticField, QuadraticField]] = None,
                    m: int = 0, degree: int = 0) -> Tuple[MultiJet, MultiJet]:
    """
    Jets of r₁(π) and r₂(−π), so Π₁(ρ) = −r₁(π) and (Π₂)⁻¹(ρ) = −r₂(−π).

    ``zones`` overrides the canonical fields (used for λ-jets); otherwise the
    frame is built from the equilibrium of ``Z``.
    """
    order = order or settings.SERIES_ORDER
    cfg = cfg or IntegratorConfig.from_settings()
    extended = cfg.precision is Precision.EXTENDED
    if zones is None:
        frame = canonical_frame(Z, analyze_equilibrium(Z))
        if extended:
            frame = canonical_frame_mp(Z, frame.transform, cfg.extended_dps)
        zones = (frame.zone1, frame.zone2)
    elif extended:
        field = ExtendedField(cfg.extended_dps)
        lift = np.vectorize(field.coerce, otypes=[object])
        zones = tuple(QuadraticField(lift(z.coeffs)) for z in zones)
    upper = transport(zones[0], 1, order, m, degree, cfg)
    lower = transport(zones[1], -1, order, m, degree, cfg)
    lead = (float(upper.data[1]), float(lower.data[1]))
    log.debug(f"half-return leading coefficients: {lead[0]:.12g}, {lead[1]:.12g}")
    return upper, lower


def numeric_lyapunov(Z: PiecewiseKolmogorov, order: int = None, cfg: IntegratorConfig = None) -> LyapunovSequence:
    cfg = cfg or IntegratorConfig.from_settings()
    order = order or settings.SERIES_ORDER
    upper, lower = jet_half_return(Z, order, cfg)
    W, noise = [], []
    tol = cfg.rtol if cfg.precision is Precision.F64 else 10.0 ** (-cfg.extended_dps // 2)
    for k in range(1, order + 1):
        a, b = upper.data[k], lower.data[k]
        W.append(float(b - a))
        noise.append(NOISE_FACTOR * (tol * max(1.0, abs(float(a)), abs(float(b))) + cfg.atol))
    seq = lyapunov_verdict(W, noise)
    log.info(f"numeric W up to order {order}: weak-focus order {seq.order}, {seq.stability.value}")
    return seq


# ─────────────────────────────────────────────
# Parameter jets
# ─────────────────────────────────────────────

def displacement_jet(zones: Tuple[QuadraticField, QuadraticField], order: int, m: int, degree: int,
                     cfg: IntegratorConfig = None) -> JetDisplacement:
    """W_j^[k] for every r-power j ≤ N and λ-degree k ≤ d."""
    cfg = (cfg or IntegratorConfig.from_settings()).with_precision(Precision.F64)
    upper = transport(zones[0], 1, order, m, degree, cfg)
    lower = transport(zones[1], -1, order, m, degree, cfg)
    diff = lower - upper
    lay = diff.layout
    parts: Dict[Tuple[int, int], Dict[Tuple[int, ...], float]] = {}
    for ia, alpha in enumerate(lay.lambda_monos):
        k = sum(alpha)
        for j in range(1, order + 1):
            value = float(diff.data[lay.index(ia, j)])
            parts.setdefault((j, k), {})[alpha] = value
    return JetDisplacement(parts=parts, m=m, order=order, degree=degree)


def family_jets(builder: Callable, mu, m: int, order: int = None, degree: int = None, point=(1, 1),
                cfg: IntegratorConfig = None) -> JetDisplacement:
    """
    λ-jets of a perturbation family. ``builder(mu, lam)`` must accept
    λ-components that are r-order-0 MultiJets and return a PiecewiseKolmogorov.
    """
    order = order or 9
    degree = settings.JET_DEGREE if degree is None else degree
    lam = [MultiJet.parameter(j, 0, m, degree) for j in range(m)]
    Z_jet = builder(mu, lam)
    Z_0 = builder(mu, [0.0] * m)
    eq = analyze_equilibrium(Z_0, point)
    reflected = canonical_frame(Z_0, eq).transform.reflected
    n_lam = len(layout(0, m, degree).lambda_monos)
    zones = canonical_coefficient_jets(Z_jet, point, reflected, n_lam)
    return displacement_jet(zones, order, m, degree, cfg)


def jet_gradient(jd: JetDisplacement, j: int) -> np.ndarray:
    return jd.linear_row(j)


def finite_difference_gradient(builder: Callable, mu, m: int, j: int, step: float = 1e-4, order: int = 9,
                               cfg: IntegratorConfig = None) -> np.ndarray:
    """Central differences of numeric W_j in each λ_k, for cross-checking the jets."""
    grads = []
    for k in range(m):
        values = []
        for sign in (1, -1):
            lam = [0.0] * m
            lam[k] = sign * step
            seq = numeric_lyapunov(builder(mu, lam), order, cfg)
            values.append(seq[j])
        grads.append((values[0] - values[1]) / (2 * step))
    return np.array(grads)


def linear_parts(jd: JetDisplacement, rows: Sequence[int]) -> np.ndarray:
    return np.vstack([jd.linear_row(j) for j in rows])
