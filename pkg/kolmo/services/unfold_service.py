"""
Perturbation families around the shared center at (1, 1), their λ-jets,
the algebraic eighth-order weak-focus locus and staged unfoldings.

Both families start from the center

    X_c = x(bx − (b²+1)y/e + (b²−be+1)/e),   Y_c = y(ex − by + b − e)

with the separation line 4(x−1) − 3(y−1) = 0.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from kolmo.core.config import IntegratorConfig, Precision
from kolmo.core.errors import (
    InconclusiveSignError,
    KolmoError,
    ParametrizationError,
    PrecisionError,
    ReparametrizationUnavailableError,
    StiffnessError,
    TranscriptionMismatchError,
)
from kolmo.models.results import (
    JetDisplacement,
    LocusVerification,
    LyapunovSequence,
    SecondOrderJets,
    StageReport,
    UnfoldSchedule,
    WeakFocusLocus,
)
from kolmo.models.system import KolmogorovField, PiecewiseKolmogorov, SeparationLine
from kolmo.series import MultiJet
from kolmo.services.flow_service import find_cycles, pseudo_hopf_options, pseudo_hopf_perturb
from kolmo.services.jet_service import family_jets, linear_parts, numeric_lyapunov
from kolmo.services.model_service import analyze_equilibrium, canonical_frame, canonical_frame_at
from kolmo.services.polyroots_service import (
    GAMMA,
    certify_sign,
    poly_value,
    reduce_mod,
    refine_root,
    sturm_isolate,
    to_poly,
)
from kolmo.utils.published_polynomials import PROMEAN_POINT, TABLE, PublishedPolynomialTable, b, e

log = logging.getLogger("kolmo.unfold")

ANCHOR = (1, 1)
PS_DELTA = 1e-2
FF_OMEGA = 1e-3
BASE_AMPLITUDE = 0.15
LADDER = 1 / 3
HOPF_EPS_FACTOR = 0.02
FD_STEP = 1e-5
CHORD_ITERATIONS = 8
LOCUS_NEWTON_ITERATIONS = 6
LOCUS_STEP = 1e-6
LOCUS_TOL = 1e-9


def separation_line() -> SeparationLine:
    return SeparationLine.through(4, -3, ANCHOR)


def _scalar(v) -> float:
    return float(v.data[0]) if isinstance(v, MultiJet) else float(v)


def _center_terms(b_, e_):
    if _scalar(e_) == 0:
        raise ParametrizationError("the center needs e != 0")
    return (b_ * b_ - b_ * e_ + 1) / e_, -(b_ * b_ + 1) / e_


# ─────────────────────────────────────────────
# Families
# ─────────────────────────────────────────────

def build_ps_system(mu: Sequence, lam: Sequence) -> PiecewiseKolmogorov:
    """λ = (p₁, q₁, p₂, q₂); each zone keeps zero trace and det 1 at (1, 1)."""
    b_, e_ = mu
    if len(lam) != 4:
        raise ParametrizationError(f"PS family needs 4 parameters, got {len(lam)}")
    a_c, c_c = _center_terms(b_, e_)
    zones = []
    for i in range(2):
        p, q = lam[2 * i], lam[2 * i + 1]
        if _scalar(e_ + p) == 0:
            raise ParametrizationError(f"e + p{i + 1} = 0")
        den = (e_ + p) * e_
        slope = ((1 + b_ * b_) * p - (2 * b_ + q) * e_ * q) / den
        shift = ((b_ * b_ + e_ * q + 1) * p + (e_ - 2 * b_ - q) * e_ * q) / den
        zones.append(KolmogorovField(a_c - shift, b_ + q, c_c + slope, b_ - e_ + q - p, e_ + p, -b_ - q))
    return PiecewiseKolmogorov(zones[0], zones[1], separation_line())


def build_ff_system(mu: Sequence, lam: Sequence, eps=1.0) -> PiecewiseKolmogorov:
    """λ = (p₁₀, p₂₀, q₁₁, q₂₁); zone i adds ε(p_{i0}x(x−1), q_{i1}y(y−1))."""
    b_, e_ = mu
    if len(lam) != 4:
        raise ParametrizationError(f"FF family needs 4 parameters, got {len(lam)}")
    a_c, c_c = _center_terms(b_, e_)
    zones = []
    for i in range(2):
        p, q = eps * lam[i], eps * lam[2 + i]
        zones.append(KolmogorovField(a_c - p, b_ + p, c_c, b_ - e_ - q, e_, -b_ + q))
    return PiecewiseKolmogorov(zones[0], zones[1], separation_line())


FAMILIES: Dict[str, Callable] = {"ps": build_ps_system, "ff": build_ff_system}
DEFAULT_ORDER = {"ps": 8, "ff": 6}


def _family(name: str) -> Callable:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ParametrizationError(f"unknown family {name!r}; expected one of {sorted(FAMILIES)}") from None


# ─────────────────────────────────────────────
# λ-jets
# ─────────────────────────────────────────────

def first_order_jets(family: str, mu, order: int = None, cfg: IntegratorConfig = None) -> JetDisplacement:
    order = order or DEFAULT_ORDER[family]
    return family_jets(_family(family), mu, 4, order=order, degree=1, point=ANCHOR, cfg=cfg)


def printed_w2_row(mu, table: PublishedPolynomialTable = TABLE) -> np.ndarray:
    """∂W₂/∂(p₁, q₁, p₂, q₂) of the PS family from the printed L₂, M₂."""
    b_, e_ = (float(v) for v in mu)
    L2 = table.evaluate_float("L2", b=b_, e=e_)
    M2 = table.evaluate_float("M2", b=b_, e=e_)
    row = np.array([2 * M2, 2 * e_ * L2, -2 * M2, -2 * e_ * L2]) / 243
    return row


def printed_q1_slice(mu, p1: float, table: PublishedPolynomialTable = TABLE) -> float:
    """q₁ making the printed W₂^[1] vanish when p₂ = q₂ = 0."""
    b_, e_ = (float(v) for v in mu)
    L2 = table.evaluate_float("L2", b=b_, e=e_)
    if L2 == 0:
        raise ReparametrizationUnavailableError(f"L2 vanishes at (b, e) = ({b_}, {e_})")
    return -table.evaluate_float("M2", b=b_, e=e_) * p1 / (e_ * L2)


def _quadratic_part(jd: JetDisplacement, j: int) -> Dict[Tuple[int, ...], float]:
    return dict(jd.parts.get((j, 2), {}))


def second_order_jets(mu=PROMEAN_POINT, order: int = 6, rows: Tuple[int, ...] = (1, 2, 4, 6),
                      reduce: Tuple[int, ...] = (3, 5), cfg: IntegratorConfig = None) -> SecondOrderJets:
    """
    Degree-2 jets of the FF family. The linear parts of ``rows`` become the
    ω-coordinates; each W_j in ``reduce`` has its linear part expressed in ω
    and the matching quadratic parts subtracted.
    """
    jd = family_jets(build_ff_system, mu, 4, order=order, degree=2, point=ANCHOR, cfg=cfg)
    T = linear_parts(jd, rows)
    scale = float(np.max(np.abs(T))) if T.size else 0.0
    rank = int(np.linalg.matrix_rank(T, tol=1e-8 * max(scale, 1e-300)))
    if rank < len(rows):
        raise ReparametrizationUnavailableError(f"linear parts of W{rows} have rank {rank} at mu={tuple(mu)}")
    linear, reduced = {}, {}
    for j in reduce:
        c = np.linalg.solve(T.T, jd.linear_row(j))
        linear[j] = c
        form = _quadratic_part(jd, j)
        for ci, r in zip(c, rows):
            for alpha, v in _quadratic_part(jd, r).items():
                form[alpha] = form.get(alpha, 0.0) - ci * v
        reduced[j] = form
    log.info(f"second-order jets at mu={tuple(round(float(v), 10) for v in mu)}: rank {rank}")
    return SecondOrderJets(jets=jd, rows=tuple(rows), omega_matrix=T, linear_in_omega=linear, reduced=reduced)


def homogeneity_defect(jd: JetDisplacement, j: int, lam, t: float = 2.0) -> float:
    """max over k of |W_j^[k](tλ) − t^k W_j^[k](λ)|; zero for a well-formed jet."""
    lam = np.asarray(lam, dtype=float)
    return max(abs(jd.evaluate(j, k, t * lam) - t ** k * jd.evaluate(j, k, lam)) for k in range(1, jd.degree + 1))


# ─────────────────────────────────────────────
# The eighth-order locus
# ─────────────────────────────────────────────

def _on_locus(expr: sp.Expr, table: PublishedPolynomialTable) -> sp.Poly:
    return to_poly(sp.expand(expr.subs({b: GAMMA, e: table.get("e_star")})))


@lru_cache(maxsize=4)
def _verification(table: PublishedPolynomialTable) -> LocusVerification:
    g = table.polynomial("g")
    flags, remainders = {}, {}
    for name in ("m4", "m6"):
        rem = reduce_mod(_on_locus(table.get(name), table), g)
        flags[name] = rem.is_zero
        if not rem.is_zero:
            remainders[name] = str(rem.as_expr())
    w8 = reduce_mod(table.get("W8_linear"), g)
    jac = reduce_mod(table.get("det_jac"), g)
    return LocusVerification(m4_exact=flags["m4"], m6_exact=flags["m6"], w8_nonzero_mod_g=not w8.is_zero,
                             det_jac_nonzero_mod_g=not jac.is_zero, remainders=remainders)


def locus_exact_verify(locus: Optional[WeakFocusLocus] = None, table: PublishedPolynomialTable = TABLE,
                       strict: bool = False) -> LocusVerification:
    """
    Substitute b = γ, e = e*(γ) into m₄ and m₆ and reduce modulo g. The
    remainder is the same for every root of g, so ``locus`` only labels logs.
    """
    result = _verification(table)
    where = f" at gamma~{locus.gamma:.10g}" if locus is not None else ""
    for name, exact in (("m4", result.m4_exact), ("m6", result.m6_exact)):
        if not exact:
            log.warning(f"{name}(gamma, e*(gamma)) mod g is nonzero{where}")
    if strict and not result.exact:
        bad = [n for n, ok in (("m4", result.m4_exact), ("m6", result.m6_exact)) if not ok]
        raise TranscriptionMismatchError(f"published locus does not annihilate {', '.join(bad)} modulo g")
    return result


def _certified(p, iv, root_poly, max_rounds: int, label: str, notes: List[str]) -> int:
    try:
        sign, _ = certify_sign(p, iv, root_poly, max_rounds=max_rounds)
        return sign
    except InconclusiveSignError as exc:
        notes.append(f"{label}: {exc}")
        return 0


def gamma_locus(table: PublishedPolynomialTable = TABLE, width=Fraction(1, 10 ** 30),
                max_rounds: int = 40) -> List[WeakFocusLocus]:
    g = table.polynomial("g")
    e_star = to_poly(table.get("e_star"))
    w8, jac = to_poly(table.get("W8_linear")), to_poly(table.get("det_jac"))
    flags = locus_exact_verify(table=table)
    loci = []
    for iv in sturm_isolate(g):
        iv = refine_root(iv, g, width)
        notes = []
        if not flags.exact:
            notes.append("published (b*, e*) does not satisfy m4 = m6 = 0 exactly")
        w8_sign = _certified(w8, iv, g, max_rounds, "W8^[1]", notes)
        jac_sign = _certified(jac, iv, g, max_rounds, "det Jac", notes)
        mid = iv.midpoint
        loci.append(WeakFocusLocus(
            gamma_lo=iv.lo, gamma_hi=iv.hi, b_star=float(mid), e_star=float(poly_value(e_star, mid)),
            m4_exact=flags.m4_exact, m6_exact=flags.m6_exact, w8_sign=w8_sign, jac_sign=jac_sign,
            notes=tuple(notes),
        ))
        log.info(f"gamma in [{float(iv.lo):.15g}, {float(iv.hi):.15g}]: sign W8^[1]={w8_sign}, det Jac={jac_sign}")
    return loci


# ─────────────────────────────────────────────
# Staged unfolding
# ─────────────────────────────────────────────

@dataclass(frozen=True)
class Scenario:
    name: str
    family: str
    lower: Tuple[int, ...]
    top: int
    pseudo_hopf: bool


SCENARIOS = {
    "bclcc": Scenario("bclcc", "ps", (2, 4, 6), 8, False),
    "co1": Scenario("co1", "ps", (2, 4, 6), 8, True),
    "promean": Scenario("promean", "ff", (1, 2, 4), 6, False),
    "thm_m1": Scenario("thm_m1", "ff", (1, 2, 4), 6, True),
}


@dataclass
class _Controls:
    names: Tuple[str, ...]
    build: Callable[[np.ndarray], PiecewiseKolmogorov]
    theta0: np.ndarray
    rows: Tuple[int, ...]
    jacobian: Optional[np.ndarray] = None
    top_target: Optional[float] = None


def _values(seq: LyapunovSequence, rows: Sequence[int]) -> np.ndarray:
    return np.array([float(seq[j]) for j in rows])


def _noise(seq: LyapunovSequence, rows: Sequence[int]) -> np.ndarray:
    return np.array([float(seq.noise[j - 1]) for j in rows])


def sign_pattern(seq: LyapunovSequence) -> List[int]:
    return [0 if abs(w) <= n else int(np.sign(w)) for w, n in zip(seq.as_floats(), seq.noise)]


def _fd_jacobian(ctl: _Controls, theta: np.ndarray, order: int, cfg: IntegratorConfig) -> np.ndarray:
    cols = []
    for k in range(len(theta)):
        step = FD_STEP * max(1.0, abs(theta[k]))
        up, down = theta.copy(), theta.copy()
        up[k] += step
        down[k] -= step
        w_up = _values(numeric_lyapunov(ctl.build(up), order, cfg), ctl.rows)
        w_down = _values(numeric_lyapunov(ctl.build(down), order, cfg), ctl.rows)
        cols.append((w_up - w_down) / (2 * step))
    return np.column_stack(cols)


def _chord_solve(ctl: _Controls, targets: np.ndarray, theta: np.ndarray, order: int,
                 cfg: IntegratorConfig) -> Tuple[np.ndarray, LyapunovSequence]:
    """Chord iteration θ ← θ + J⁻¹(target − W(θ)) with the Jacobian frozen at θ₀."""
    seq = numeric_lyapunov(ctl.build(theta), order, cfg)
    for it in range(CHORD_ITERATIONS):
        residual = targets - _values(seq, ctl.rows)
        if np.all(np.abs(residual) <= _noise(seq, ctl.rows)):
            break
        theta = theta + np.linalg.solve(ctl.jacobian, residual)
        seq = numeric_lyapunov(ctl.build(theta), order, cfg)
    else:
        log.warning(f"chord iteration stopped with residual {np.max(np.abs(residual)):.3g}")
    return theta, seq


def ladder_targets(lower: Sequence[int], top: int, w_top: float, amplitudes: Sequence[float]) -> Dict[int, float]:
    """
    Lower coefficients putting zeros of Σ W_j ρ^j at ``amplitudes``: the
    highest len(amplitudes) rows are solved for, the rest set to zero.
    """
    s = len(amplitudes)
    targets = {j: 0.0 for j in lower}
    if s == 0:
        return targets
    free = list(lower)[-s:]
    A = np.array([[rho ** j for j in free] for rho in amplitudes])
    rhs = np.array([-w_top * rho ** top for rho in amplitudes])
    for j, value in zip(free, np.linalg.solve(A, rhs)):
        targets[j] = float(value)
    return targets


def _slice_residual(mu, order: int, cfg: IntegratorConfig) -> Tuple[np.ndarray, float, float]:
    """Jet (W₄^[1], W₆^[1]) along the direction λ = (1, s, 0, 0) on which W₂^[1] vanishes."""
    J = linear_parts(first_order_jets("ps", mu, order=order, cfg=cfg), (2, 4, 6))
    if J[0, 1] == 0:
        raise ReparametrizationUnavailableError(f"dW2/dq1 vanishes at mu={tuple(mu)}")
    s = -J[0, 0] / J[0, 1]
    return J[1:] @ np.array([1.0, s, 0.0, 0.0]), float(s), float(np.max(np.abs(J[1:])))


def refine_ps_point(mu0, order: int = 8, cfg: IntegratorConfig = None,
                    iterations: int = LOCUS_NEWTON_ITERATIONS) -> Tuple[np.ndarray, dict]:
    """
    Newton on (b, e) for W₄^[1] = W₆^[1] = 0 along the q₁ slice, seeded at
    ``mu0``. The Jacobian is rebuilt by central differences every step. If
    the iteration does not settle the seed is returned unchanged.
    """
    cfg = (cfg or IntegratorConfig.from_settings()).with_precision(Precision.F64)
    seed = np.array([float(v) for v in mu0])
    mu = seed.copy()
    r, s, scale = _slice_residual(mu, order, cfg)
    record = {"b_printed": float(seed[0]), "e_printed": float(seed[1]), "residual_printed": [float(v) for v in r]}
    tol = LOCUS_TOL * max(scale, 1e-300)
    converged = bool(np.all(np.abs(r) <= tol))
    it = 0
    while not converged and it < iterations:
        it += 1
        cols = []
        for k in range(2):
            step = LOCUS_STEP * max(1.0, abs(mu[k]))
            up, down = mu.copy(), mu.copy()
            up[k] += step
            down[k] -= step
            cols.append((_slice_residual(up, order, cfg)[0] - _slice_residual(down, order, cfg)[0]) / (2 * step))
        try:
            delta = np.linalg.solve(np.column_stack(cols), -r)
        except np.linalg.LinAlgError:
            log.warning(f"locus refinement: singular Jacobian at mu={tuple(mu)}")
            break
        mu = mu + delta
        r, s, scale = _slice_residual(mu, order, cfg)
        tol = LOCUS_TOL * max(scale, 1e-300)
        converged = bool(np.all(np.abs(r) <= tol) or np.max(np.abs(delta)) <= 1e-13 * (1 + np.max(np.abs(mu))))
    if not converged:
        log.warning(f"locus refinement did not settle after {it} step(s); keeping the printed point")
        mu = seed
        r, s, _ = _slice_residual(mu, order, cfg)
    record.update(b=float(mu[0]), e=float(mu[1]), residual=[float(v) for v in r], slice=s,
                  iterations=it, converged=converged, shift=float(np.hypot(*(mu - seed))))
    log.info(f"weak-focus point refined to (b, e) = ({mu[0]:.12g}, {mu[1]:.12g}) in {it} step(s)")
    return mu, record


def _ps_controls(scenario: Scenario, table: PublishedPolynomialTable, checks: dict, cfg: IntegratorConfig) -> _Controls:
    loci = [lc for lc in gamma_locus(table) if lc.b_star > 0]
    certified = [lc for lc in loci if lc.w8_sign != 0 and lc.jac_sign != 0]
    locus = (certified or loci)[0]
    checks["locus"] = {"gamma": locus.gamma, "b_star": locus.b_star, "e_star": locus.e_star,
                       "m4_exact": locus.m4_exact, "m6_exact": locus.m6_exact,
                       "w8_sign": locus.w8_sign, "jac_sign": locus.jac_sign}
    mu, checks["refined_point"] = refine_ps_point((locus.b_star, locus.e_star), scenario.top, cfg)
    q1 = printed_q1_slice(mu, PS_DELTA, table)
    build = lambda th: build_ps_system((th[0], th[1]), (PS_DELTA, th[2], 0.0, 0.0))
    return _Controls(names=("b", "e", "q1"), build=build, theta0=np.array([mu[0], mu[1], q1]),
                     rows=scenario.lower)


def _ff_controls(scenario: Scenario, table: PublishedPolynomialTable, checks: dict, cfg: IntegratorConfig) -> _Controls:
    mu = PROMEAN_POINT
    checks["R_at_point"] = table.evaluate_float("R", b=mu[0], e=mu[1])
    rows = tuple(scenario.lower) + (scenario.top,)
    jd = first_order_jets("ff", mu, order=scenario.top, cfg=cfg)
    J = linear_parts(jd, rows)
    rank = int(np.linalg.matrix_rank(J, tol=1e-8 * float(np.max(np.abs(J)))))
    checks["linear_rank"] = rank
    if rank < len(rows):
        raise ReparametrizationUnavailableError(f"linear parts of W{rows} have rank {rank}")
    build = lambda th: build_ff_system(mu, th)
    return _Controls(names=("p10", "p20", "q11", "q21"), build=build, theta0=np.zeros(4), rows=rows,
                     jacobian=J, top_target=FF_OMEGA)


def _cycles_record(scan) -> List[Dict[str, float]]:
    return [{"rho_star": c.rho_star, "period": c.period, "stability": c.stability.value, "margin": c.margin}
            for c in scan.cycles]


def _persisted(previous: List[Dict[str, float]], current: List[Dict[str, float]]) -> int:
    found = [c["rho_star"] for c in current]
    return sum(1 for c in previous if any(abs(r - c["rho_star"]) <= 0.1 * c["rho_star"] for r in found))


def _stage(name: str, ctl: _Controls, theta: np.ndarray, seq: LyapunovSequence, window: Tuple[float, float],
           cfg: IntegratorConfig, engine: str, precision: Precision) -> StageReport:
    Z = ctl.build(theta)
    scan = find_cycles(Z, window[0], window[1], cfg, engine=engine)
    report = StageReport(
        name=name,
        parameters={n: float(v) for n, v in zip(ctl.names, theta)},
        lyapunov=seq.as_floats(),
        sign_pattern=sign_pattern(seq),
        cycles=_cycles_record(scan),
        precision=precision.value,
        notes=list(scan.warnings),
    )
    log.info(f"stage {name}: {len(report.cycles)} cycle(s), signs {report.sign_pattern}")
    return report


def _hopf_stage(Z: PiecewiseKolmogorov, inner: float, window_hi: float, cfg: IntegratorConfig,
                precision: Precision, parameters: Dict[str, float]) -> StageReport:
    eps = HOPF_EPS_FACTOR * inner
    options = [o for o in pseudo_hopf_options(Z, eps, ANCHOR, cfg) if o.born]
    if not options:
        return StageReport(name="pseudo-hopf", parameters=dict(parameters), lyapunov=[], sign_pattern=[],
                           cycles=[], precision=precision.value, notes=["no homothety opens a cycle-releasing segment"])
    option = options[0]
    result = pseudo_hopf_perturb(Z, option.zone, option.sign * eps, cfg, point=ANCHOR, rho_max=inner)
    if result.segment is None:
        return StageReport(name="pseudo-hopf", parameters=dict(parameters), lyapunov=[], sign_pattern=[],
                           cycles=[], precision=precision.value, notes=list(result.notes))
    reflected = canonical_frame(Z, analyze_equilibrium(Z, ANCHOR)).transform.reflected
    frame = canonical_frame_at(result.system, ANCHOR, reflected)
    half = max(abs(result.segment[0]), abs(result.segment[1]))
    scan = find_cycles(result.system, 1.5 * half, window_hi, cfg, frame=frame)
    params = dict(parameters, hopf_zone=float(option.zone), hopf_eps=float(option.sign * eps))
    notes = list(result.notes) + list(scan.warnings)
    notes.append(f"{result.segment[2].value} segment of length {result.segment_length:.3g}")
    return StageReport(name="pseudo-hopf", parameters=params, lyapunov=[], sign_pattern=[],
                       cycles=_cycles_record(scan), precision=precision.value, notes=notes)


def stage_unfolding(scenario: str, precision: Precision = Precision.F64, cfg: IntegratorConfig = None,
                    amplitude: float = BASE_AMPLITUDE, ladder: float = LADDER,
                    table: PublishedPolynomialTable = TABLE) -> UnfoldSchedule:
    """
    Stage 0 places a weak focus whose top coefficient dominates; stage s puts
    s sign changes of Δ at amplitudes amplitude·ladder^i by solving for the
    highest s lower coefficients. Scenarios with a pseudo-Hopf step add one
    more cycle inside the innermost one.
    """
    if scenario not in SCENARIOS:
        raise ParametrizationError(f"unknown scenario {scenario!r}; expected one of {sorted(SCENARIOS)}")
    plan = SCENARIOS[scenario]
    precision = Precision(precision)
    cfg = (cfg or IntegratorConfig.from_settings()).with_precision(precision)
    engine = "polar" if precision is Precision.EXTENDED else "event"
    schedule = UnfoldSchedule(scenario=scenario, precision=precision.value)
    order = plan.top

    try:
        if plan.family == "ps":
            ctl = _ps_controls(plan, table, schedule.checks, cfg)
            ctl.jacobian = _fd_jacobian(ctl, ctl.theta0, order, cfg)
        else:
            ctl = _ff_controls(plan, table, schedule.checks, cfg)
    except ReparametrizationUnavailableError as exc:
        schedule.checks["error"] = str(exc)
        log.error(f"{scenario}: {exc}")
        return schedule

    amplitudes = [amplitude * ladder ** i for i in range(len(plan.lower))]
    window = (amplitudes[-1] / 2.5, 2.5 * amplitude)
    theta = ctl.theta0.copy()
    w_top = ctl.top_target
    try:
        for s in range(len(plan.lower) + 1):
            if w_top is None:
                # top coefficient is not controlled: measure it after stage 0
                targets = np.zeros(len(ctl.rows))
            else:
                lower = ladder_targets(plan.lower, plan.top, w_top, amplitudes[:s])
                targets = np.array([lower[j] for j in plan.lower] +
                                   ([w_top] if plan.top in ctl.rows else []))
            theta, seq = _chord_solve(ctl, targets, theta, order, cfg)
            if w_top is None:
                w_top = float(seq[plan.top])
                schedule.checks["top_sign"] = int(np.sign(w_top))
            report = _stage(f"stage-{s}", ctl, theta, seq, window, cfg, engine, precision)
            if schedule.stages:
                kept = _persisted(schedule.stages[-1].cycles, report.cycles)
                report.notes.append(f"{kept} of {len(schedule.stages[-1].cycles)} earlier cycles persisted")
            schedule.stages.append(report)
        if plan.pseudo_hopf:
            parameters = {n: float(v) for n, v in zip(ctl.names, theta)}
            schedule.stages.append(_hopf_stage(ctl.build(theta), amplitudes[-1], window[1], cfg, precision, parameters))
    except (PrecisionError, StiffnessError) as exc:
        schedule.checks["stopped"] = str(exc)
        log.warning(f"{scenario}: precision exhausted after {len(schedule.stages)} stage(s): {exc}")
    except KolmoError as exc:
        schedule.checks["stopped"] = str(exc)
        log.warning(f"{scenario}: stopped after {len(schedule.stages)} stage(s): {exc}")

    for k, stage in enumerate(schedule.stages):
        if len(stage.cycles) < k:
            break
        schedule.verified_stage = stage.name
    return schedule
