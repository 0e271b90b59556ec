"""
One function per subcommand. Each reads its RunConfig, writes artifacts
into ``run.out`` and returns the process exit code.
"""
import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np

from kolmo.cli.schemas import RunConfig, SystemInput, load_system
from kolmo.cli.verify import run_suite
from kolmo.core.config import IntegratorConfig
from kolmo.core.errors import KolmoError
from kolmo.models.results import EquilibriumClass, EquilibriumData, LyapunovSequence
from kolmo.models.system import PiecewiseKolmogorov
from kolmo.services.analytic_service import analytic_lyapunov, continuity_deviation
from kolmo.services.flow_service import (
    closed_orbit,
    displacement,
    find_cycles,
    frame_for,
    geometric_grid,
    pseudo_hopf_options,
    pseudo_hopf_perturb,
)
from kolmo.services.jet_service import numeric_lyapunov
from kolmo.services.model_service import analyze_equilibrium, canonical_frame, sigma_arcs
from kolmo.services.unfold_service import stage_unfolding
from kolmo.utils import tables
from kolmo.utils.svg_portrait import render_portrait, write_svg

log = logging.getLogger("kolmo.cli")

CENTER_W_TOL = 1e-9
CENTER_DELTA_TOL = 1e-8
CENTER_GRID = 10


def _system(run: RunConfig):
    spec = load_system(run.input)
    return spec, spec.build()


def _out(run: RunConfig, name: str) -> Path:
    return Path(run.out) / name


def _fmt(v) -> str:
    return f"{float(v):g}"


def equilibrium_summary(eq: EquilibriumData) -> str:
    where = f"({_fmt(eq.x0)}, {_fmt(eq.y0)})"
    if eq.classification is EquilibriumClass.CC:
        return f"CC-equilibrium at {where}, D1={_fmt(eq.D[0])}, D2={_fmt(eq.D[1])}"
    return f"{eq.classification.value} equilibrium at {where}, traces {_fmt(eq.traces[0])}, {_fmt(eq.traces[1])}"


def _half_width(eq: EquilibriumData) -> float:
    return 0.25 * min(abs(float(eq.x0)), abs(float(eq.y0)))


def _arcs_record(arcs) -> List[dict]:
    return [{"s_lo": float(lo), "s_hi": float(hi), "kind": kind.value} for lo, hi, kind in arcs]


# ─── classify ───

def cmd_classify(run: RunConfig) -> int:
    spec, Z = _system(run)
    eq = analyze_equilibrium(Z, spec.equilibrium())
    w = _half_width(eq)
    arcs = sigma_arcs(Z, eq.point, -w, w)
    summary = equilibrium_summary(eq)
    report = {"system": spec.name, "summary": summary, "equilibrium": eq, "sigma_arcs": _arcs_record(arcs)}
    path = tables.write_json(report, _out(run, "classify.json"))
    log.info(f"{spec.name}: {summary}; {len(arcs)} arc(s) on |s| <= {w:.3g}")
    log.info(f"wrote {path}")
    print(summary)
    return 0


# ─── lyapunov / center-check ───

def lyapunov_for(Z: PiecewiseKolmogorov, run: RunConfig) -> Tuple[LyapunovSequence, str]:
    """Closed-form pipeline at CC points, jet transport otherwise."""
    eq = analyze_equilibrium(Z)
    if eq.classification is EquilibriumClass.CC:
        return analytic_lyapunov(Z, run.order + 1, run.precision), "analytic"
    return numeric_lyapunov(Z, run.order, run.integrator()), "jet"


def verdict(seq: LyapunovSequence) -> str:
    if seq.center_suspected:
        return "center-suspected"
    return f"weak focus of order {seq.order}, {seq.stability.value}"


def cmd_lyapunov(run: RunConfig) -> int:
    spec, Z = _system(run)
    seq, method = lyapunov_for(Z, run)
    tables.write_csv(tables.lyapunov_frame(seq), _out(run, "lyapunov.csv"))
    report = {"system": spec.name, "method": method, "precision": run.precision.value,
              "verdict": verdict(seq), "W": seq.W, "reduced": seq.reduced}
    tables.write_json(report, _out(run, "lyapunov.json"))
    log.info(f"{spec.name}: {report['verdict']} ({method})")
    print(report["verdict"])
    return 0


def _delta_grid(spec: SystemInput, Z: PiecewiseKolmogorov, cfg: IntegratorConfig) -> List[float]:
    frame = frame_for(Z, spec.equilibrium())
    rhos = np.linspace(spec.scan.rho_min, spec.scan.rho_max, CENTER_GRID)
    return [displacement(Z, float(r), cfg, spec.scan.engine, frame).delta for r in rhos]


def cmd_center_check(run: RunConfig) -> int:
    spec, Z = _system(run)
    seq, method = lyapunov_for(Z, run)
    w_max = max(abs(float(w)) for w in seq.W)
    deltas = _delta_grid(spec, Z, run.integrator())
    delta_max = max(abs(d) for d in deltas)
    report = {"system": spec.name, "method": method, "W_max": w_max, "delta_max": delta_max,
              "lyapunov_verdict": verdict(seq)}
    center = seq.center_suspected and w_max <= CENTER_W_TOL and delta_max <= CENTER_DELTA_TOL
    if analyze_equilibrium(Z).classification is EquilibriumClass.CC:
        try:
            report["continuity_deviation"] = continuity_deviation(Z)
        except KolmoError as exc:
            report["continuity_deviation"] = None
            log.warning(f"continuity check skipped: {exc}")
    report["verdict"] = "center" if center else "not-center"
    tables.write_json(report, _out(run, "center.json"))
    log.info(f"{spec.name}: {report['verdict']} (max|W| {w_max:.3g}, max|delta| {delta_max:.3g})")
    print(report["verdict"])
    return 0


# ─── displacement / cycles ───

def cmd_displacement(run: RunConfig) -> int:
    spec, Z = _system(run)
    cfg = run.integrator()
    frame = frame_for(Z, spec.equilibrium())
    rhos = spec.scan.rhos or geometric_grid(spec.scan.rho_min, spec.scan.rho_max)
    samples = []
    for rho in rhos:
        try:
            samples.append(displacement(Z, float(rho), cfg, spec.scan.engine, frame))
        except KolmoError as exc:
            log.warning(f"rho={float(rho):.6g} skipped: {exc}")
    if not samples:
        log.error("no displacement sample could be computed")
        return 2
    path = tables.write_csv(tables.displacement_frame(samples), _out(run, "displacement.csv"))
    log.info(f"{len(samples)} sample(s) written to {path}")
    return 0


def cmd_cycles(run: RunConfig) -> int:
    spec, Z = _system(run)
    cfg = run.integrator()
    frame = frame_for(Z, spec.equilibrium())
    scan = find_cycles(Z, spec.scan.rho_min, spec.scan.rho_max, cfg, spec.scan.engine, frame)
    tables.write_csv(tables.cycles_frame(scan), _out(run, "cycles.csv"))
    tables.write_json({"system": spec.name, "count": len(scan.cycles), "center_suspected": scan.center_suspected,
                       "truncated_at": scan.truncated_at, "warnings": scan.warnings, "cycles": scan.cycles},
                      _out(run, "cycles.json"))
    log.info(f"{spec.name}: {len(scan.cycles)} crossing cycle(s)")
    print(f"{len(scan.cycles)} cycle(s)")
    return 0


# ─── unfold ───

def cmd_unfold(run: RunConfig) -> int:
    cfg = run.integrator()
    schedule = stage_unfolding(run.scenario, cfg.precision, cfg)
    tables.write_json(tables.schedule_summary(schedule), _out(run, f"unfold_{run.scenario}.json"))
    for row in tables.stage_rows(schedule):
        print(f"{row['stage']:<12} {row['cycles']:>2} cycle(s)  {row['signs']}")
    if "error" in schedule.checks or "stopped" in schedule.checks:
        log.error(f"{run.scenario}: {schedule.checks.get('error') or schedule.checks.get('stopped')}")
        return 2
    log.info(f"{run.scenario}: up to {schedule.max_nested} nested cycle(s), verified through {schedule.verified_stage}")
    return 0


# ─── portrait ───

def _hopf_choice(Z: PiecewiseKolmogorov, spec: SystemInput, eq: EquilibriumData, cfg: IntegratorConfig):
    hopf = spec.pseudo_hopf
    if hopf.zone is not None:
        return hopf.zone, hopf.eps
    born = [o for o in pseudo_hopf_options(Z, abs(hopf.eps), eq.point, cfg) if o.born]
    if not born:
        log.warning("no homothety releases a cycle; perturbing zone 1 as given")
        return 1, hopf.eps
    return born[0].zone, born[0].sign * abs(hopf.eps)


def cmd_portrait(run: RunConfig) -> int:
    spec, Z = _system(run)
    cfg = run.integrator()
    eq = analyze_equilibrium(Z, spec.equilibrium())
    reflected = canonical_frame(Z, eq).transform.reflected
    cycles = []
    if spec.pseudo_hopf is not None:
        zone, eps = _hopf_choice(Z, spec, eq, cfg)
        result = pseudo_hopf_perturb(Z, zone, eps, cfg, point=eq.point, rho_max=spec.scan.rho_max)
        Z = result.system
        if result.cycle is not None:
            cycles.append(result.cycle.polyline)
        for note in result.notes:
            log.warning(note)
    else:
        scan = find_cycles(Z, spec.scan.rho_min, spec.scan.rho_max, cfg, spec.scan.engine)
        cycles.extend(c.polyline for c in scan.cycles)
    frame = frame_for(Z, anchor=eq.point, reflected=reflected)
    trajectories = []
    for rho in spec.trajectories:
        try:
            trajectories.append(closed_orbit(Z, float(rho), cfg, frame).polyline)
        except KolmoError as exc:
            log.warning(f"trajectory from rho={rho:.6g} skipped: {exc}")
    w = _half_width(eq)
    arcs = sigma_arcs(Z, eq.point, -w, w)
    svg = render_portrait(Z, eq.point, trajectories, cycles, arcs, title=spec.name)
    path = write_svg(svg, _out(run, f"{spec.name}.svg"))
    log.info(f"portrait with {len(cycles)} cycle(s) written to {path}")
    return 0


def cmd_verify(run: RunConfig) -> int:
    return run_suite(run)


COMMAND_TABLE = {
    "classify": cmd_classify,
    "lyapunov": cmd_lyapunov,
    "center-check": cmd_center_check,
    "displacement": cmd_displacement,
    "cycles": cmd_cycles,
    "unfold": cmd_unfold,
    "portrait": cmd_portrait,
    "verify": cmd_verify,
}
