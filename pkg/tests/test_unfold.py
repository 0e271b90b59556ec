"""Published polynomials, the eighth-order locus and staged unfoldings."""
import numpy as np
import pytest

from kolmo.core.config import Precision
from kolmo.core.errors import ParametrizationError, TranscriptionMismatchError, UnavailableEntryError
from kolmo.models.results import LyapunovSequence, Stability
from kolmo.services.unfold_service import (
    SCENARIOS,
    gamma_locus,
    ladder_targets,
    locus_exact_verify,
    printed_q1_slice,
    printed_w2_row,
    refine_ps_point,
    sign_pattern,
    stage_unfolding,
)
from kolmo.utils import tables
from kolmo.utils.published_polynomials import TABLE


def test_table_values():
    assert TABLE.evaluate("L2", b=0, e=1) == 37
    assert TABLE.evaluate("M2", b=0, e=1) == -2016
    assert TABLE.evaluate("L2", b="1/2", e=1) == TABLE.evaluate("L2", b=0.5, e=1)


def test_table_missing_arguments():
    with pytest.raises(ValueError):
        TABLE.evaluate("L2", b=0)


def test_unprinted_entries_fail_loudly():
    assert "m8" in TABLE
    assert "m8" in TABLE.unavailable()
    with pytest.raises(UnavailableEntryError):
        TABLE.get("m8")
    with pytest.raises(UnavailableEntryError):
        TABLE.entry("no_such_polynomial")


def test_q1_slice_cancels_printed_w2():
    mu = (0.7, 1.3)
    q1 = printed_q1_slice(mu, 0.01)
    assert float(printed_w2_row(mu) @ np.array([0.01, q1, 0.0, 0.0])) == pytest.approx(0.0, abs=1e-12)


def test_gamma_locus():
    loci = gamma_locus()
    assert len(loci) == 4
    positive = sorted((lc for lc in loci if lc.b_star > 0), key=lambda lc: lc.gamma)
    assert [lc.gamma for lc in positive] == pytest.approx([0.74084, 0.84838], abs=1e-4)
    first = positive[0]
    assert first.w8_sign == -1
    assert first.jac_sign == -1
    assert first.gamma_lo <= first.gamma <= first.gamma_hi


def test_printed_locus_mismatch_is_reported():
    check = locus_exact_verify()
    assert check.w8_nonzero_mod_g
    assert check.det_jac_nonzero_mod_g
    assert not check.m4_exact
    assert "m4" in check.remainders


def test_printed_locus_mismatch_raises_when_strict():
    with pytest.raises(TranscriptionMismatchError):
        locus_exact_verify(strict=True)


def test_ladder_single_amplitude():
    targets = ladder_targets((2, 4, 6), 8, 1.0, [0.15])
    assert targets[2] == 0.0
    assert targets[4] == 0.0
    assert targets[6] == pytest.approx(-0.15 ** 2)


def test_ladder_places_zeros_at_amplitudes():
    amplitudes = [0.15, 0.05, 0.05 / 3]
    targets = ladder_targets((2, 4, 6), 8, 1.0, amplitudes)
    for rho in amplitudes:
        value = sum(w * rho ** j for j, w in targets.items()) + rho ** 8
        assert value / rho ** 8 == pytest.approx(0.0, abs=1e-6)


def test_ladder_without_amplitudes():
    assert ladder_targets((1, 2, 4), 6, 1e-3, []) == {1: 0.0, 2: 0.0, 4: 0.0}


def test_sign_pattern_respects_noise():
    seq = LyapunovSequence(W=(0.0, 1e-3, 1e-12, -2.0), order=2, stability=Stability.STABLE,
                           noise=(1e-9, 1e-9, 1e-9, 1e-9))
    assert sign_pattern(seq) == [0, 1, 0, -1]


def test_scenarios():
    assert set(SCENARIOS) == {"bclcc", "co1", "promean", "thm_m1"}
    assert SCENARIOS["bclcc"].lower == (2, 4, 6) and SCENARIOS["bclcc"].top == 8
    assert SCENARIOS["promean"].lower == (1, 2, 4) and SCENARIOS["promean"].top == 6
    assert SCENARIOS["co1"].pseudo_hopf and SCENARIOS["thm_m1"].pseudo_hopf
    assert not SCENARIOS["bclcc"].pseudo_hopf


def test_unknown_scenario():
    with pytest.raises(ParametrizationError):
        stage_unfolding("nope")


@pytest.mark.slow
def test_bclcc_schedule(cfg):
    schedule = stage_unfolding("bclcc", Precision.F64, cfg)
    assert schedule.scenario == "bclcc"
    assert "locus" in schedule.checks
    assert [s.name for s in schedule.stages] == [f"stage-{k}" for k in range(len(schedule.stages))]
    rows = tables.stage_rows(schedule)
    assert [r["stage"] for r in rows] == [s.name for s in schedule.stages]
    summary = tables.schedule_summary(schedule)
    assert summary["max_nested"] == schedule.max_nested
    assert "refined_point" in schedule.checks
    signs = schedule.stages[0].sign_pattern
    assert signs[1] == signs[3] == signs[5] == 0
    assert signs[7] != 0
    assert schedule.max_nested >= 1


@pytest.mark.slow
def test_locus_refinement_never_worsens_the_printed_point(cfg):
    locus = next(lc for lc in gamma_locus() if lc.b_star > 0)
    mu, record = refine_ps_point((locus.b_star, locus.e_star), 8, cfg)
    assert record["b_printed"] == locus.b_star
    assert (record["b"], record["e"]) == (float(mu[0]), float(mu[1]))
    assert max(map(abs, record["residual"])) <= max(map(abs, record["residual_printed"]))
    if not record["converged"]:
        assert record["shift"] == 0.0


@pytest.mark.slow
def test_co1_ends_with_a_pseudo_hopf_stage(cfg):
    schedule = stage_unfolding("co1", Precision.F64, cfg)
    assert "refined_point" in schedule.checks
    assert schedule.stages[0].sign_pattern[1] == 0
    assert schedule.stages[-1].name == "pseudo-hopf"
    assert schedule.max_nested >= 1


@pytest.mark.slow
def test_thm_m1_reparametrizes_the_trace_family(cfg):
    schedule = stage_unfolding("thm_m1", Precision.F64, cfg)
    assert schedule.checks["linear_rank"] == 4
    assert schedule.checks["R_at_point"] != 0
    ladder = [s for s in schedule.stages if s.name != "pseudo-hopf"]
    assert [s.name for s in ladder] == [f"stage-{k}" for k in range(len(ladder))]
    assert schedule.stages[-1].name == "pseudo-hopf"
    assert max(len(s.cycles) for s in ladder) >= 1
