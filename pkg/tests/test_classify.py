import csv

import numpy as np
import pytest

from helpers import burgers_shock, chatter_profile, oracle_run, sw_gap_profile
from selfsim.classify import (ClassifyConfig, constancy_bounds, endpoint_states, format_report,
                              jump_analysis, partition_axis, refine_partition, structure_report,
                              write_intervals_csv)
from selfsim.dafermos import verify_weak
from selfsim.flux_models import char_fields, make_flux
from selfsim.profiles import EssImQuery, classify_point, constant_profile, quartic_rarefaction_profile, step_profile

BURGERS = make_flux("burgers")
QUARTIC = make_flux("quartic")
CFG = ClassifyConfig()


@pytest.fixture(scope="module")
def quartic_report():
    return structure_report(QUARTIC, quartic_rarefaction_profile())


@pytest.fixture(scope="module")
def burgers_report():
    return structure_report(BURGERS, burgers_shock())


def _labels_at(base, lo, hi):
    sel = (base.nodes > lo) & (base.nodes < hi)
    return set(base.labels[sel].tolist())


def test_constancy_bounds_examples():
    xl, xr, lam = constancy_bounds(BURGERS, burgers_shock())
    assert xl <= -1 and xr >= 1 and lam == np.inf
    _, p = sw_gap_profile()
    _, _, lam = constancy_bounds(make_flux("shallow_water", g=1.0, box=((0.1, -3), (4, 3))), p)
    assert lam == pytest.approx(1.0, abs=2e-3)
    xl, xr, _ = constancy_bounds(BURGERS, constant_profile([0.3]))
    assert xl < 0.3 < xr


def test_partition_quartic():
    base = partition_axis(QUARTIC, quartic_rarefaction_profile())
    assert _labels_at(base, -0.99, 0.99) == {"W"}
    assert _labels_at(base, -np.inf, -1.01) == {"C"} and _labels_at(base, 1.01, np.inf) == {"C"}
    assert base.s_points == []


def test_partition_burgers():
    base = partition_axis(BURGERS, burgers_shock())
    assert base.s_points == [0.0]
    assert set(base.labels[base.nodes != 0.0].tolist()) == {"C"}


def test_partition_constant_resonant_node():
    base = partition_axis(BURGERS, constant_profile([0.3]))
    w = base.nodes[base.labels == "W"]
    assert len(w) == 1 and w[0] == pytest.approx(0.3)


def test_partition_totality(quartic_report, burgers_report):
    for rep in (quartic_report, burgers_report):
        base = rep.base
        assert len(base.labels) == len(base.nodes)
        assert set(base.labels.tolist()) <= {"C", "W", "S"}


def test_refine_quartic(quartic_report):
    rep = quartic_report
    assert len(rep.r_intervals) == 1
    a, b = rep.r_intervals[0]
    assert abs(a + 1) <= CFG.dxi and abs(b - 1) <= CFG.dxi
    assert sorted(round(x, 6) for x, _ in rep.e_points) == [-1.0, 1.0]
    assert all(case == 1 for _, case in rep.e_points)
    assert rep.iso_s == [] and rep.s_prime == []


def test_refine_burgers(burgers_report):
    rep = burgers_report
    assert rep.iso_s == [0.0] and rep.r_intervals == [] and rep.e_points == []


def test_refine_partition_direct():
    p = burgers_shock()
    rep = refine_partition(partition_axis(BURGERS, p), BURGERS, p)
    assert rep.iso_s == [0.0] and rep.s_prime == []


def test_endpoint_states_examples():
    va, vb = endpoint_states(quartic_rarefaction_profile(), (-1.0, 1.0))
    assert va[0] == pytest.approx(-1.0, abs=1e-9) and vb[0] == pytest.approx(1.0, abs=1e-9)
    va, vb = endpoint_states(burgers_shock(), (1.5, np.inf))
    assert va[0] == vb[0] == -1.0
    va, vb = endpoint_states(step_profile([0.4], [-0.6]), (0.0, 1.0))
    assert va[0] == vb[0] == -0.6


def test_jump_analysis_examples():
    p = burgers_shock()
    jd = jump_analysis(BURGERS, p, 0.0, verify_weak(BURGERS, p))
    assert jd.kind == "jump" and jd.passed
    (um, up, rh, det), = jd.pairs
    assert um[0] == 1.0 and up[0] == -1.0 and rh <= 1e-12 and det <= 1e-12
    jd = jump_analysis(BURGERS, step_profile([1.0], [-1.0], 0.1), 0.1)
    assert jd.max_rh == pytest.approx(0.2) and not jd.passed


def test_jump_analysis_chatter():
    p = chatter_profile()
    rep = verify_weak(BURGERS, p)
    jd = jump_analysis(BURGERS, p, 0.0, rep if rep.verdict else None)
    assert jd.kind == "general" and len(jd.left) >= 2
    # Hugoniot consistency is asserted only for verified weak solutions
    assert not rep.verdict and jd.flux_check is None


def test_structure_quartic(quartic_report):
    rep = quartic_report
    assert rep.exit_code == 0 and not rep.anomalies
    kinds = [w.kind for w in rep.waves]
    assert kinds == ["constant", "rarefaction", "constant"]
    assert rep.waves[0].left_state[0] == -1.0 and rep.waves[2].left_state[0] == 1.0
    assert rep.waves[1].family == 1


def test_structure_burgers(burgers_report):
    rep = burgers_report
    assert rep.exit_code == 0
    kinds = [(w.kind, w.left_state[0], w.right_state[0]) for w in rep.waves]
    assert kinds == [("constant", 1.0, 1.0), ("jump", 1.0, -1.0), ("constant", -1.0, -1.0)]
    assert rep.waves[1].speed == 0.0


def test_structure_wrong_speed():
    rep = structure_report(BURGERS, step_profile([1.0], [-1.0], 0.1))
    assert rep.exit_code == 3 and not rep.verified


def test_component_invariants(quartic_report, burgers_report):
    for rep in (quartic_report, burgers_report):
        # constancy on C components
        assert all(ok for *_, ok in rep.constancy)
        # E points are endpoints of C components
        for xi, _ in rep.e_points:
            assert any(c.label == "C" and min(abs(c.a - xi), abs(c.b - xi)) <= CFG.dxi for c in rep.components)
        # isolated discontinuities are jump points
        for s in rep.iso_s:
            assert classify_point(burgers_shock() if rep is burgers_report else quartic_rarefaction_profile(),
                                  s).kind == "jump"
        assert rep.closure_ok


def test_accumulating_shocks_flagged():
    # test-only flux whose oracle solution has shocks at speeds 2^-k, k = 1..6
    model, env, p, rep = oracle_run("bumped", -0.25, 1.0)
    assert len(rep.iso_s) >= 3
    speeds = sorted(rep.iso_s, reverse=True)
    assert np.all(np.diff(speeds) < 0)
    assert len(rep.s_prime) == 1 and abs(rep.s_prime[0]) <= 0.02
    assert rep.exit_code == 2 and rep.waves is None and not rep.anomalies
    # no C node sits next to the limit point
    for s in rep.s_prime:
        near = np.abs(rep.base.nodes - s) <= CFG.dxi
        assert "C" not in set(rep.base.labels[near].tolist())


def test_oscillatory_oracle_partition():
    model, env, p, rep = oracle_run("oscillatory", -1.0, 1.0)
    assert len(rep.iso_s) >= 3
    assert rep.s_prime


def test_oscillatory_oracle_structure():
    model, env, p, rep = oracle_run("oscillatory", -1.0, 1.0)
    assert sum(w.kind == "jump" for w in (rep.waves or [])) + len(rep.iso_s) >= 3
    assert rep.s_prime and rep.waves is None


def test_report_outputs(tmp_path, burgers_report):
    text = format_report(burgers_report)
    assert "exit code: 0" in text
    write_intervals_csv(burgers_report, tmp_path / "i.csv")
    with open(tmp_path / "i.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["label"] for r in rows] == ["C", "S", "C"]
