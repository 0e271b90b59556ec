"""Displacement engines, closed orbits, cycle search and pseudo-Hopf."""
import numpy as np
import pytest

from kolmo.cli.verify import linear_pair_frame, lotka_volterra, pseudo_hopf_system
from kolmo.core.config import Precision
from kolmo.core.errors import InputError, NoEventError
from kolmo.models.results import SigmaClass
from kolmo.models.system import KolmogorovField, SeparationLine
from kolmo.services.analytic_service import analytic_lyapunov
from kolmo.services.flow_service import (
    canonical_sigma_class,
    closed_orbit,
    detect_crossing,
    detect_crossings,
    displacement,
    find_cycles,
    frame_displacement,
    geometric_grid,
    integrate_zone,
    pseudo_hopf_options,
    pseudo_hopf_perturb,
    return_map,
    sigma_crossings,
)
from kolmo.services.model_service import cc_build


def weak_focus():
    return cc_build(1.0, 1.0, ((1.0, 4.0 / 3.0, 1.0), (2.0, 1.0, 1.0)))


def test_lotka_volterra_has_no_displacement(cfg):
    Z = lotka_volterra()
    for rho in (0.05, 0.1, 0.2):
        assert abs(displacement(Z, rho, cfg).delta) < 1e-9


def test_shifted_linear_centers_have_constant_gap(cfg):
    frame = linear_pair_frame(0.01)
    deltas = [frame_displacement(frame, rho, cfg).delta for rho in (0.05, 0.2, 0.5)]
    assert deltas == pytest.approx([0.02, 0.02, 0.02], abs=1e-9)


def test_displacement_sign_follows_first_lyapunov_quantity(cfg):
    Z = weak_focus()
    seq = analytic_lyapunov(Z, 6, Precision.F64)
    w2 = float(seq[2])
    rho = 2e-3
    delta = displacement(Z, rho, cfg).delta
    assert np.sign(delta) == -np.sign(w2)
    assert delta == pytest.approx(-w2 * rho ** 2, rel=0.1)


def test_engines_agree(cfg):
    Z = weak_focus()
    event = displacement(Z, 0.05, cfg, "event").delta
    polar = displacement(Z, 0.05, cfg, "polar").delta
    first_integral = displacement(Z, 0.05, cfg, "first_integral").delta
    assert polar == pytest.approx(event, abs=1e-8)
    assert first_integral == pytest.approx(event, abs=1e-8)


def test_displacement_rejects_bad_arguments(cfg):
    with pytest.raises(ValueError):
        displacement(weak_focus(), 0.0, cfg)
    with pytest.raises(ValueError):
        displacement(weak_focus(), 0.1, cfg, engine="leapfrog")


def test_geometric_grid():
    grid = geometric_grid(0.01, 0.1)
    assert grid[0] == 0.01
    assert grid[-1] == pytest.approx(0.1)
    ratios = grid[1:] / grid[:-1]
    assert np.all(ratios > 1.0)
    assert np.all(ratios <= 1.5 + 1e-12)
    with pytest.raises(ValueError):
        geometric_grid(0.1, 0.01)


def test_closed_orbit_of_a_center(cfg):
    orbit = closed_orbit(lotka_volterra(), 0.2, cfg)
    assert orbit.closure < 1e-8
    assert orbit.crossings == 2
    assert orbit.period == pytest.approx(2 * np.pi, rel=0.1)
    assert orbit.polyline.shape[1] == 2


def test_return_map_of_a_center_is_identity(cfg):
    assert return_map(lotka_volterra(), 0.15, cfg) == pytest.approx(0.15, abs=1e-9)


def test_center_is_suspected_without_cycles(cfg):
    scan = find_cycles(lotka_volterra(), 0.01, 0.2, cfg)
    assert scan.center_suspected
    assert scan.cycles == ()
    assert len(scan.samples) >= 5


def test_pseudo_hopf_options_cover_both_zones(cfg):
    options = pseudo_hopf_options(pseudo_hopf_system(), 1e-3, cfg=cfg)
    assert {(o.zone, o.sign) for o in options} == {(1, 1), (1, -1), (2, 1), (2, -1)}
    for option in options:
        if option.born:
            assert option.segment in (SigmaClass.SLIDING, SigmaClass.ESCAPING)


def test_pseudo_hopf_without_perturbation(cfg):
    Z = pseudo_hopf_system()
    result = pseudo_hopf_perturb(Z, 1, 0.0, cfg)
    assert result.system is Z
    assert result.segment is None
    assert result.cycle is None


def test_pseudo_hopf_zone_must_exist(cfg):
    with pytest.raises(InputError):
        pseudo_hopf_perturb(pseudo_hopf_system(), 3, 1e-2, cfg)


LV_FIELD = KolmogorovField(1.0, 0.0, -1.0, -1.0, 1.0, 0.0)
VERTICAL = SeparationLine(1.0, 0.0, -1.0)


def test_zone_trajectory_crosses_twice_per_turn(cfg):
    traj = integrate_zone(LV_FIELD, (1.2, 1.0), 7.0, cfg)
    events = detect_crossings(traj, VERTICAL, LV_FIELD, cfg)
    assert len(events) == 2
    for point, t in events:
        assert point[0] == pytest.approx(1.0, abs=1e-6)
        assert 0.0 < t < 7.0
    first, t_first = detect_crossing(traj, VERTICAL, LV_FIELD, cfg)
    assert t_first == events[0][1]
    assert first[1] > 1.0


def test_backward_zone_trajectory(cfg):
    traj = integrate_zone(LV_FIELD, (1.2, 1.0), -1.0, cfg)
    assert traj.t[-1] == pytest.approx(-1.0)
    assert traj.y[1, -1] < 1.0


def test_short_trajectory_has_no_crossing(cfg):
    traj = integrate_zone(LV_FIELD, (1.2, 1.0), 0.3, cfg)
    assert detect_crossings(traj, VERTICAL) == []
    with pytest.raises(NoEventError):
        detect_crossing(traj, VERTICAL, cfg=cfg)


def test_canonical_sigma_classes():
    assert canonical_sigma_class((0.0, 1.0), (0.5, 2.0)) is SigmaClass.CROSSING
    assert canonical_sigma_class((0.0, -1.0), (0.5, -2.0)) is SigmaClass.CROSSING
    assert canonical_sigma_class((1.0, -1.0), (1.0, 1.0)) is SigmaClass.SLIDING
    assert canonical_sigma_class((1.0, 1.0), (1.0, -1.0)) is SigmaClass.ESCAPING
    assert canonical_sigma_class((1.0, 0.0), (1.0, 1.0)) is SigmaClass.TANGENCY


def test_sigma_crossings_of_polylines():
    theta = np.linspace(0.0, 2 * np.pi, 400, endpoint=False)
    circle = np.column_stack([1.0 + 0.1 * np.cos(theta), 1.0 + 0.1 * np.sin(theta)])
    assert sigma_crossings(VERTICAL, circle) == 2
    assert sigma_crossings(VERTICAL, circle + np.array([0.5, 0.0])) == 0
    lobes = np.column_stack([1.0 + 0.1 * np.sin(2 * theta), 1.0 + 0.1 * np.cos(theta)])
    assert sigma_crossings(VERTICAL, lobes) == 4


def test_closed_orbit_counts_its_own_crossings(cfg):
    orbit = closed_orbit(lotka_volterra(), 0.2, cfg)
    assert orbit.crossings == sigma_crossings(lotka_volterra().line, orbit.polyline) == 2


@pytest.mark.slow
def test_pseudo_hopf_cycles_shrink_with_the_perturbation(cfg):
    Z = pseudo_hopf_system()
    option = next(o for o in pseudo_hopf_options(Z, 1e-3, cfg=cfg) if o.born)
    amplitudes = []
    for eps in (1e-2, 1e-3):
        result = pseudo_hopf_perturb(Z, option.zone, option.sign * eps, cfg)
        assert result.segment is not None
        assert result.cycle is not None
        assert result.cycle.stability is result.equilibrium_stability
        amplitudes.append(result.cycle.rho_star)
    assert amplitudes[0] > amplitudes[1] > 0
