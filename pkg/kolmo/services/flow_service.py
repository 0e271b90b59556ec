"""
Numerical flow across the separation line.

All return-map work happens in the canonical frame of the anchor point: Σ is
{y = 0}, zone 1 lies above it and the rotation is counter-clockwise. A start
point is (ρ, 0) with ρ > 0; Π₁(ρ) is where zone 1 brings it back to Σ and
(Π₂)⁻¹(ρ) is where zone 2, run backwards, does. Both land on the negative
side, so Δ(ρ) = (Π₂)⁻¹(ρ) − Π₁(ρ) is negative for a stable focus.
"""
import logging
from typing import Callable, List, Optional, Tuple

import mpmath
import numpy as np
from mpmath import mp
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from kolmo.core.config import IntegratorConfig, Precision
from kolmo.core.errors import (
    BasinExceededError,
    CrossingViolatedError,
    InputError,
    KolmoError,
    MonodromyError,
    NoEventError,
    OffLineError,
    PrecisionError,
    StiffnessError,
)
from kolmo.models.results import (
    CanonicalSystem,
    ClosedOrbit,
    CycleScan,
    DisplacementSample,
    EquilibriumClass,
    LimitCycle,
    PseudoHopfOption,
    PseudoHopfResult,
    SigmaClass,
    Stability,
)
from kolmo.models.system import PiecewiseKolmogorov, QuadraticField, SeparationLine
from kolmo.series import field_for
from kolmo.services.analytic_service import first_integral
from kolmo.services.jet_service import NOISE_FACTOR, numeric_lyapunov, trig_forms
from kolmo.services.model_service import (
    TANGENCY_REL_TOL,
    analyze_equilibrium,
    canonical_frame,
    canonical_frame_at,
    canonical_frame_mp,
    classify_sigma_point,
    sigma_arcs,
)

log = logging.getLogger("kolmo.flow")

ENGINES = ("event", "polar", "first_integral")
MAX_HALF_TIME = 1e3
AXIS_FRACTION = 1e-3
GRID_RATIO = 1.5


# ─────────────────────────────────────────────
# Integration primitives
# ─────────────────────────────────────────────

def _as_rhs(field: Callable) -> Callable:
    def rhs(t, p):
        u, v = field(p[0], p[1])
        return np.array([u, v], dtype=float)
    return rhs


def _check_solution(sol, what: str):
    if sol.status == -1:
        if "step size" in sol.message.lower():
            raise StiffnessError(f"{what}: {sol.message}")
        raise PrecisionError(f"{what}: {sol.message}")


def integrate_zone(field: Callable, x0, T: float, cfg: IntegratorConfig = None, events=None):
    """DOP853 trajectory of one polynomial field with dense output; negative T runs backwards."""
    cfg = cfg or IntegratorConfig.from_settings()
    sol = solve_ivp(_as_rhs(field), (0.0, T), np.asarray(x0, dtype=float), method="DOP853",
                    rtol=cfg.rtol, atol=cfg.atol, max_step=cfg.max_step, dense_output=True, events=events)
    _check_solution(sol, "zone integration")
    return sol


def detect_crossings(traj, line: SeparationLine, field: Callable = None, cfg: IntegratorConfig = None) -> List[Tuple[np.ndarray, float]]:
    """Every sign change of h along a dense trajectory, refined by brentq on the interpolant."""
    cfg = cfg or IntegratorConfig.from_settings()
    h = lambda t: float(line.h(*traj.sol(t)))
    values = line.h(traj.y[0], traj.y[1])
    events = []
    for k in range(len(traj.t) - 1):
        lo, hi = traj.t[k], traj.t[k + 1]
        if values[k] == 0 and k > 0:
            t_root = lo
        elif values[k] * values[k + 1] < 0:
            t_root = brentq(h, lo, hi, xtol=cfg.event_tol)
        else:
            continue
        point = np.asarray(traj.sol(t_root), dtype=float)
        if field is not None:
            vec = np.array(field(*point), dtype=float)
            if abs(float(line.gradient @ vec)) < TANGENCY_REL_TOL * (1 + np.hypot(*vec)):
                log.warning(f"crossing at ({point[0]:.6g}, {point[1]:.6g}) is tangential")
        events.append((point, float(t_root)))
    return events


def detect_crossing(traj, line: SeparationLine, field: Callable = None, cfg: IntegratorConfig = None) -> Tuple[np.ndarray, float]:
    events = detect_crossings(traj, line, field, cfg)
    if not events:
        raise NoEventError("h does not change sign along the trajectory")
    return events[0]


# ─────────────────────────────────────────────
# Frames
# ─────────────────────────────────────────────

def frame_for(Z: PiecewiseKolmogorov, point=None, anchor=None, reflected: Optional[bool] = None) -> CanonicalSystem:
    """Canonical frame at the monodromic equilibrium, or at ``anchor`` on Σ when given."""
    if anchor is not None:
        return canonical_frame_at(Z, anchor, reflected)
    eq = analyze_equilibrium(Z, point)
    return canonical_frame(Z, eq)


def _sigma_class(Z: PiecewiseKolmogorov, frame: CanonicalSystem, s: float) -> SigmaClass:
    p = frame.transform.inverse((s, 0.0))
    try:
        return classify_sigma_point(Z, p).kind
    except OffLineError:
        # rounding of the frame map; classify on the canonical axis instead
        return canonical_sigma_class(frame.zone1(s, 0.0), frame.zone2(s, 0.0))


def canonical_sigma_class(z1, z2) -> SigmaClass:
    """Filippov class on {y = 0} from the two canonical velocities; zone 1 lies above."""
    v1, v2 = float(z1[1]), float(z2[1])
    if any(abs(v) < TANGENCY_REL_TOL * (1 + float(np.hypot(*z))) for v, z in ((v1, z1), (v2, z2))):
        return SigmaClass.TANGENCY
    if v1 * v2 > 0:
        return SigmaClass.CROSSING
    return SigmaClass.SLIDING if v1 < 0 else SigmaClass.ESCAPING


def _sweep(field: QuadraticField, frame: CanonicalSystem, q0, direction: int, cfg: IntegratorConfig):
    """Flow ``field`` from q0 until it returns to {y = 0} moving in ``direction``."""
    offset = np.asarray(frame.transform.offset)
    margin = AXIS_FRACTION * float(min(offset))
    M = frame.transform.matrix

    def crossing(t, q):
        return q[1]
    crossing.terminal = True
    crossing.direction = direction

    def axes(t, q):
        p = offset + M.T @ q
        return min(p[0], p[1]) - margin
    axes.terminal = True
    axes.direction = -1

    sol = integrate_zone(field, q0, MAX_HALF_TIME, cfg, events=(crossing, axes))
    if len(sol.t_events[1]):
        raise BasinExceededError(f"orbit from {tuple(np.round(q0, 8))} reaches the vicinity of an invariant axis")
    if not len(sol.t_events[0]):
        raise NoEventError(f"no return to the separation line within t = {MAX_HALF_TIME}")
    return float(sol.y_events[0][0][0]), float(sol.t_events[0][0]), sol


# ─────────────────────────────────────────────
# Displacement engines
# ─────────────────────────────────────────────

def frame_displacement(frame: CanonicalSystem, rho: float, cfg: IntegratorConfig = None) -> DisplacementSample:
    """Both half-returns of an arbitrary pair of fields already in canonical position."""
    cfg = cfg or IntegratorConfig.from_settings()
    pi1, t1, _ = _sweep(frame.zone1, frame, (rho, 0.0), -1, cfg)
    pi2_inv, t2, _ = _sweep(frame.zone2.reversed_time(), frame, (rho, 0.0), 1, cfg)
    for s in (pi1, pi2_inv):
        if s >= 0:
            raise CrossingViolatedError(f"orbit from rho={rho:.6g} returned to the positive side (s={s:.6g})")
        if frame.zone1(s, 0.0)[1] * frame.zone2(s, 0.0)[1] <= 0:
            raise CrossingViolatedError(f"orbit from rho={rho:.6g} lands on a non-crossing point s={s:.6g}")
    return DisplacementSample(rho=rho, delta=pi2_inv - pi1, pi1=pi1, pi2_inv=pi2_inv, t1=t1, t2=t2)


def _event_displacement(Z, frame: CanonicalSystem, rho: float, cfg: IntegratorConfig) -> DisplacementSample:
    sample = frame_displacement(frame, rho, cfg)
    for s in (sample.pi1, sample.pi2_inv):
        kind = _sigma_class(Z, frame, s)
        if kind is not SigmaClass.CROSSING:
            raise CrossingViolatedError(f"orbit from rho={rho:.6g} lands on a {kind.value} point s={s:.6g}")
    return sample


def _polar_radius(field: QuadraticField, rho: float, direction: int, cfg: IntegratorConfig):
    """r(±π) for dr/dθ = r(A₁ + rA₂)/(B₁ + rB₂), integrated in s = direction·θ."""
    if np.any(np.abs(field.constant_part()) > 1e-12):
        raise MonodromyError("polar engine needs the equilibrium at the origin; use the event engine")
    if cfg.precision is Precision.EXTENDED:
        if field.coeffs.dtype != object:
            raise PrecisionError("extended polar sweep needs a frame built at working precision")
        coeffs = field.coeffs
    else:
        coeffs = np.asarray(field.coeffs, dtype=float)

    def rhs(s, r):
        A1, A2, B1, B2 = trig_forms(coeffs, direction * s)
        den = B1 + r * B2
        if den == 0:
            raise BasinExceededError(f"angular speed vanishes at r={float(r):.6g}")
        return direction * r * (A1 + r * A2) / den

    if cfg.precision is Precision.EXTENDED:
        with mp.workdps(cfg.extended_dps):
            solution = mpmath.odefun(rhs, 0, mpmath.mpf(rho))
            return solution(mpmath.pi)

    def angular_stop(s, r):
        A1, A2, B1, B2 = trig_forms(coeffs, direction * s)
        return B1 + r[0] * B2
    angular_stop.terminal = True

    sol = solve_ivp(lambda s, r: [rhs(s, r[0])], (0.0, np.pi), [rho], method="DOP853",
                    rtol=cfg.rtol, atol=cfg.atol, events=angular_stop)
    _check_solution(sol, "polar sweep")
    if len(sol.t_events[0]):
        raise BasinExceededError(f"rho={rho:.6g} leaves the region where the angle is monotone")
    return float(sol.y[0, -1])


def _polar_displacement(Z, frame: CanonicalSystem, rho: float, cfg: IntegratorConfig) -> DisplacementSample:
    if cfg.precision is Precision.EXTENDED:
        frame = canonical_frame_mp(Z, frame.transform, cfg.extended_dps)
    r1 = _polar_radius(frame.zone1, rho, 1, cfg)
    r2 = _polar_radius(frame.zone2, rho, -1, cfg)
    delta = r1 - r2
    return DisplacementSample(rho=rho, delta=float(delta), pi1=-float(r1), pi2_inv=-float(r2))


def _log_level(H, x, y):
    X, Y = x / H.x0, y / H.y0
    lam = H.lam[0] * X + H.lam[1] * Y + H.lam[2]
    return H.p * mpmath.log(X) + H.q * mpmath.log(Y) + mpmath.log(abs(lam))


def _first_integral_displacement(Z, frame: CanonicalSystem, rho: float, cfg: IntegratorConfig) -> DisplacementSample:
    eq = analyze_equilibrium(Z, frame.transform.offset)
    if eq.classification is not EquilibriumClass.CC:
        raise MonodromyError(f"first-integral engine needs a CC-equilibrium, got {eq.classification.value}")
    dps = cfg.extended_dps if cfg.precision is Precision.EXTENDED else 20
    field = field_for(cfg.precision if cfg.precision is Precision.EXTENDED else Precision.F64, dps)
    anchored = frame.transform
    if cfg.precision is Precision.EXTENDED:
        anchored = canonical_frame_mp(Z, frame.transform, dps).transform
    with mp.workdps(dps):
        x0, y0 = (mpmath.mpf(v) for v in anchored.offset)
        ux, uy = (mpmath.mpf(v) for v in anchored.sigma_direction)
        landing = []
        for i in (1, 2):
            H = first_integral(Z.zone(i), anchored.offset, field)
            level = lambda s, H=H: _log_level(H, x0 + s * ux, y0 + s * uy)
            target = level(mpmath.mpf(rho))
            try:
                s = mpmath.findroot(lambda s: level(s) - target, -mpmath.mpf(rho))
            except (ValueError, ZeroDivisionError) as exc:
                raise BasinExceededError(f"level set of zone {i} through rho={rho:.6g} does not close") from exc
            if s >= 0:
                raise BasinExceededError(f"zone {i} level solve converged to the start side (s={float(s):.6g})")
            landing.append(s)
        pi1, pi2_inv = landing
        delta = pi2_inv - pi1
    for s in landing:
        kind = _sigma_class(Z, frame, float(s))
        if kind is not SigmaClass.CROSSING:
            raise CrossingViolatedError(f"orbit from rho={rho:.6g} lands on a {kind.value} point")
    return DisplacementSample(rho=rho, delta=float(delta), pi1=float(pi1), pi2_inv=float(pi2_inv))


_ENGINES = {
    "event": _event_displacement,
    "polar": _polar_displacement,
    "first_integral": _first_integral_displacement,
}


def displacement(Z: PiecewiseKolmogorov, rho: float, cfg: IntegratorConfig = None, engine: str = "event",
                 frame: CanonicalSystem = None) -> DisplacementSample:
    """Δ(ρ) = (Π₂)⁻¹(ρ) − Π₁(ρ) at signed distance ρ > 0 from the frame anchor."""
    cfg = cfg or IntegratorConfig.from_settings()
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if engine not in _ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    frame = frame or frame_for(Z)
    kind = _sigma_class(Z, frame, rho)
    if kind is not SigmaClass.CROSSING:
        raise CrossingViolatedError(f"start point rho={rho:.6g} is a {kind.value} point")
    return _ENGINES[engine](Z, frame, rho, cfg)


def displacement_table(Z: PiecewiseKolmogorov, rhos, cfg: IntegratorConfig = None, engine: str = "event",
                       frame: CanonicalSystem = None) -> List[DisplacementSample]:
    frame = frame or frame_for(Z)
    return [displacement(Z, float(r), cfg, engine, frame) for r in rhos]


# ─────────────────────────────────────────────
# Return map and closed orbits
# ─────────────────────────────────────────────

def return_map(Z: PiecewiseKolmogorov, rho: float, cfg: IntegratorConfig = None, frame: CanonicalSystem = None) -> float:
    """Full return P(ρ): zone 1 forward to the negative side, then zone 2 forward back."""
    cfg = cfg or IntegratorConfig.from_settings()
    frame = frame or frame_for(Z)
    pi1, _, _ = _sweep(frame.zone1, frame, (rho, 0.0), -1, cfg)
    back, _, _ = _sweep(frame.zone2, frame, (pi1, 0.0), 1, cfg)
    return back


def sigma_crossings(line: SeparationLine, polyline) -> int:
    """Sign changes of h around a closed polyline; points exactly on Σ are skipped."""
    signs = np.sign(np.asarray(line.h(polyline[:, 0], polyline[:, 1]), dtype=float))
    signs = signs[signs != 0]
    if len(signs) < 2:
        return 0
    return int(np.count_nonzero(signs != np.roll(signs, 1)))


def closed_orbit(Z: PiecewiseKolmogorov, rho: float, cfg: IntegratorConfig = None, frame: CanonicalSystem = None,
                 points_per_arc: int = 200) -> ClosedOrbit:
    cfg = cfg or IntegratorConfig.from_settings()
    frame = frame or frame_for(Z)
    pi1, t1, upper = _sweep(frame.zone1, frame, (rho, 0.0), -1, cfg)
    back, t2, lower = _sweep(frame.zone2, frame, (pi1, 0.0), 1, cfg)
    arcs = []
    for sol, t_end in ((upper, t1), (lower, t2)):
        ts = np.linspace(0.0, t_end, points_per_arc)
        q = sol.sol(ts)
        arcs.append(np.array([frame.transform.inverse(q[:, k]) for k in range(points_per_arc)]))
    for s in (pi1, back):
        if _sigma_class(Z, frame, s) is not SigmaClass.CROSSING:
            raise CrossingViolatedError(f"closed orbit through rho={rho:.6g} touches a non-crossing point")
    polyline = np.vstack(arcs)
    return ClosedOrbit(rho=rho, returned=back, period=t1 + t2, crossings=sigma_crossings(Z.line, polyline),
                       polyline=polyline)


# ─────────────────────────────────────────────
# Limit cycles
# ─────────────────────────────────────────────

def _noise(rho: float, cfg: IntegratorConfig) -> float:
    return NOISE_FACTOR * (cfg.rtol * rho + cfg.atol)


def _limit_cycle(Z, frame: CanonicalSystem, rho_star: float, cfg: IntegratorConfig) -> LimitCycle:
    step = max(1e-4 * rho_star, 1e3 * cfg.event_tol)
    slope = (return_map(Z, rho_star + step, cfg, frame) - return_map(Z, rho_star - step, cfg, frame)) / (2 * step)
    orbit = closed_orbit(Z, rho_star, cfg, frame)
    stability = Stability.STABLE if slope < 1 else Stability.UNSTABLE
    return LimitCycle(rho_star=rho_star, period=orbit.period, stability=stability, margin=abs(slope - 1),
                      polyline=orbit.polyline, residual=orbit.closure)


def geometric_grid(rho_min: float, rho_max: float, ratio: float = GRID_RATIO) -> np.ndarray:
    if not 0 < rho_min < rho_max:
        raise ValueError(f"need 0 < rho_min < rho_max, got [{rho_min}, {rho_max}]")
    n = int(np.floor(np.log(rho_max / rho_min) / np.log(ratio)))
    grid = rho_min * ratio ** np.arange(n + 1)
    if grid[-1] < rho_max:
        grid = np.append(grid, rho_max)
    return grid


def find_cycles(Z: PiecewiseKolmogorov, rho_min: float, rho_max: float, cfg: IntegratorConfig = None,
                engine: str = "event", frame: CanonicalSystem = None, ratio: float = GRID_RATIO) -> CycleScan:
    """Zeros of Δ on a geometric grid, refined with brentq and classified by the return-map slope."""
    cfg = cfg or IntegratorConfig.from_settings()
    frame = frame or frame_for(Z)
    samples, warnings = [], []
    truncated_at = None
    for rho in geometric_grid(rho_min, rho_max, ratio):
        try:
            samples.append(displacement(Z, float(rho), cfg, engine, frame))
        except (CrossingViolatedError, BasinExceededError, NoEventError) as exc:
            if samples:
                truncated_at = float(rho)
                warnings.append(f"window truncated at rho={rho:.6g}: {exc}")
                break
            warnings.append(f"skipped rho={rho:.6g}: {exc}")
    for w in warnings:
        log.warning(w)

    if samples and all(abs(s.delta) <= _noise(s.rho, cfg) for s in samples):
        log.info(f"|delta| below noise on all {len(samples)} samples: center suspected")
        return CycleScan(cycles=(), samples=tuple(samples), center_suspected=True,
                         truncated_at=truncated_at, warnings=tuple(warnings))

    cycles = []
    for left, right in zip(samples, samples[1:]):
        if left.delta * right.delta >= 0:
            continue
        if max(abs(left.delta), abs(right.delta)) <= _noise(right.rho, cfg):
            continue
        fn = lambda r: displacement(Z, r, cfg, engine, frame).delta
        try:
            rho_star = brentq(fn, left.rho, right.rho, xtol=cfg.event_tol)
            cycles.append(_limit_cycle(Z, frame, rho_star, cfg))
        except KolmoError as exc:
            warnings.append(f"cycle bracket [{left.rho:.6g}, {right.rho:.6g}] dropped: {exc}")
            log.warning(warnings[-1])
            continue
        log.info(f"limit cycle at rho*={rho_star:.10g} ({cycles[-1].stability.value}, margin {cycles[-1].margin:.3g})")
    return CycleScan(cycles=tuple(cycles), samples=tuple(samples), center_suspected=False,
                     truncated_at=truncated_at, warnings=tuple(warnings))


# ─────────────────────────────────────────────
# Pseudo-Hopf perturbation
# ─────────────────────────────────────────────

def _perturbed(Z: PiecewiseKolmogorov, zone: int, eps: float) -> PiecewiseKolmogorov:
    return Z.replace_zone(zone, Z.zone(zone).homothety(eps))


def _segment(Z: PiecewiseKolmogorov, ref, eps: float):
    """The non-crossing arc of Σ born near ``ref``, as signed arclengths from it."""
    reach = 50 * abs(eps) * (1 + abs(float(ref[0])) + abs(float(ref[1])))
    arcs = sigma_arcs(Z, ref, -reach, reach, samples=401)
    segments = [a for a in arcs if a[2] in (SigmaClass.SLIDING, SigmaClass.ESCAPING)]
    if not segments:
        return None
    return min(segments, key=lambda a: abs(a[0] + a[1]))


def _born(stability: Stability, kind: Optional[SigmaClass]) -> bool:
    return (stability is Stability.STABLE and kind is SigmaClass.ESCAPING) or \
           (stability is Stability.UNSTABLE and kind is SigmaClass.SLIDING)


def _equilibrium_stability(Z: PiecewiseKolmogorov, point, cfg: IntegratorConfig) -> Stability:
    eq = analyze_equilibrium(Z, point)
    if not eq.classification.monodromic:
        raise MonodromyError(f"pseudo-Hopf needs a monodromic equilibrium, got {eq.classification.value}")
    return numeric_lyapunov(Z, cfg=cfg).stability


def pseudo_hopf_options(Z: PiecewiseKolmogorov, eps: float = 1e-3, point=None,
                        cfg: IntegratorConfig = None) -> List[PseudoHopfOption]:
    """Which (zone, sign of ε) homotheties open a segment that releases a cycle."""
    eps = abs(eps)
    eq = analyze_equilibrium(Z, point)
    stability = _equilibrium_stability(Z, eq.point, cfg)
    options = []
    for zone in (1, 2):
        for sign in (1, -1):
            seg = _segment(_perturbed(Z, zone, sign * eps), eq.point, eps)
            kind = seg[2] if seg else None
            options.append(PseudoHopfOption(zone=zone, sign=sign, segment=kind, born=_born(stability, kind)))
    return options


def pseudo_hopf_perturb(Z: PiecewiseKolmogorov, zone: int, eps: float, cfg: IntegratorConfig = None,
                        point=None, rho_max: float = None) -> PseudoHopfResult:
    """
    Homothety (x, y) → (1+ε)(x, y) of one zone. If it opens an escaping
    segment at a stable point (or a sliding one at an unstable point) the
    cycle it releases is located and returned.
    """
    cfg = cfg or IntegratorConfig.from_settings()
    if zone not in (1, 2):
        raise InputError(f"zone must be 1 or 2, got {zone}")
    eq = analyze_equilibrium(Z, point)
    stability = _equilibrium_stability(Z, eq.point, cfg)
    if eps == 0:
        return PseudoHopfResult(system=Z, eps=0.0, zone=zone, equilibrium_stability=stability)

    Z_eps = _perturbed(Z, zone, eps)
    seg = _segment(Z_eps, eq.point, eps)
    if seg is None:
        return PseudoHopfResult(system=Z_eps, eps=eps, zone=zone, equilibrium_stability=stability,
                                notes=("no sliding or escaping segment appeared",))
    predicted = _born(stability, seg[2])
    log.info(f"zone {zone}, eps={eps:g}: {seg[2].value} segment of length {seg[1] - seg[0]:.3g} "
             f"at a {stability.value} point; cycle {'expected' if predicted else 'not expected'}")
    if not predicted:
        return PseudoHopfResult(system=Z_eps, eps=eps, zone=zone, equilibrium_stability=stability,
                                segment=seg, notes=(f"{seg[2].value} segment does not oppose a {stability.value} point",))

    reflected = canonical_frame(Z, eq).transform.reflected
    frame = canonical_frame_at(Z_eps, eq.point, reflected)
    half = max(abs(seg[0]), abs(seg[1]))
    rho_max = rho_max or 0.25 * min(float(eq.x0), float(eq.y0))
    scan = find_cycles(Z_eps, 1.5 * half, rho_max, cfg, frame=frame)
    notes = list(scan.warnings)
    cycle = scan.cycles[0] if scan.cycles else None
    if cycle is None:
        notes.append("segment opened but no crossing cycle found in the window")
    elif cycle.stability is not stability:
        notes.append(f"born cycle is {cycle.stability.value}, equilibrium was {stability.value}")
    return PseudoHopfResult(system=Z_eps, eps=eps, zone=zone, equilibrium_stability=stability, segment=seg,
                            predicted=True, cycle=cycle, notes=tuple(notes))
