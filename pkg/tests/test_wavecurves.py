import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selfsim.dafermos import verify_weak
from selfsim.errors import NotMonotoneError, ResonanceError
from selfsim.flux_models import char_fields, eigenvalues_many, make_flux, register_flux
from selfsim.profiles import Constant, constant_profile, piecewise, quartic_rarefaction_profile
from selfsim.wavecurves import (build_rarefaction_profile, build_rarefaction_wave, embed_between_constants,
                                flow, integrate_rarefaction_curve, reparametrize_by_speed,
                                straightening_chart, verify_rarefaction_segment, write_curve_csv)

BURGERS = make_flux("burgers")
QUARTIC = make_flux("quartic")
SW = make_flux("shallow_water", g=1.0)


def test_scalar_curves():
    c = integrate_rarefaction_curve(BURGERS, 0.0, 1, (-1, 1))
    np.testing.assert_allclose(c.states[:, 0], c.eta, atol=1e-14)
    c = integrate_rarefaction_curve(QUARTIC, 0.0, 1, (-1, 1))
    np.testing.assert_allclose(c.states[:, 0], c.eta, atol=1e-14)
    np.testing.assert_allclose(c.speeds, c.eta ** 3, atol=1e-14)


def test_shallow_water_curve_speeds_increase():
    c = integrate_rarefaction_curve(SW, [1.0, 0.0], 2, (0.0, 0.5))
    assert np.all(np.diff(c.speeds) > 0)
    assert np.all(c.gn_values > 0)
    # second route: difference quotient of lambda_2 along r_2
    for u in c.states[::200]:
        f = char_fields(SW, u)[1]
        h = 1e-6
        dl = (char_fields(SW, u + h * f.right)[1].speed - char_fields(SW, u - h * f.right)[1].speed) / (2 * h)
        assert dl == pytest.approx(f.gn_indicator, rel=1e-6)


def test_reparametrize_examples():
    w = reparametrize_by_speed(integrate_rarefaction_curve(QUARTIC, 0.0, 1, (-1, 1)))
    xs = np.linspace(-1, 1, 101)
    np.testing.assert_allclose(w.values(xs)[:, 0], np.sign(xs) * np.abs(xs) ** (1 / 3), atol=1e-9)
    w = reparametrize_by_speed(integrate_rarefaction_curve(BURGERS, 0.0, 1, (-1, 1)))
    np.testing.assert_allclose(w.values(xs)[:, 0], xs, atol=1e-12)


def test_contact_family_not_monotone():
    register_flux("transport", lambda u: 0.5 * u, ((-1,), (1,)), df=lambda u: np.array([[0.5]]))
    curve = integrate_rarefaction_curve(make_flux("transport"), 0.0, 1, (-0.5, 0.5))
    with pytest.raises(NotMonotoneError):
        reparametrize_by_speed(curve)


def test_build_profile_examples():
    seg = build_rarefaction_profile(QUARTIC, 0.0, 1, (-1, 1))
    xs = np.linspace(-1, 1, 41)
    np.testing.assert_allclose(seg.func(xs)[:, 0], np.sign(xs) * np.abs(xs) ** (1 / 3), atol=1e-9)
    seg = build_rarefaction_profile(BURGERS, 1.0, 1, (0.5, 1.5))
    xs = np.linspace(0.5, 1.5, 41)
    np.testing.assert_allclose(seg.func(xs)[:, 0], xs, atol=1e-12)
    wave = build_rarefaction_wave(SW, [1.0, 0.0], 2, (1.0, 1.2))
    assert wave.resonance_residual(np.linspace(1.0, 1.2, 201)) <= 1e-6


def test_verify_segment_examples():
    rc = verify_rarefaction_segment(QUARTIC, quartic_rarefaction_profile(), (-0.9, 0.9))
    assert rc.passed
    assert rc.total_variation == pytest.approx(2 * 0.9 ** (1 / 3), rel=1e-6)
    with pytest.raises(ResonanceError):
        verify_rarefaction_segment(BURGERS, constant_profile([0.3]), (0.0, 1.0))
    seg = build_rarefaction_profile(SW, [1.0, 0.0], 2, (1.0, 1.2))
    p = embed_between_constants(SW, seg, (1.0, 1.2))
    rc = verify_rarefaction_segment(SW, p, (1.0, 1.2))
    assert rc.passed and rc.family == 2 and rc.along_distance <= 1e-6


def test_chart_examples():
    ch = straightening_chart(SW, [1.0, 0.0], 2)
    assert ch.flow_residual <= 1e-5 and ch.sigma_min > 0 and ch.injective
    # z = 0 line is the integral curve through u*
    k0 = int(np.argmin(np.linalg.norm(ch.z, axis=1)))
    curve = integrate_rarefaction_curve(SW, [1.0, 0.0], 2, (ch.w[0], ch.w[-1]))
    np.testing.assert_allclose(ch.G[:, k0], curve.state_at(ch.w), atol=1e-10)
    # w = 0 column is the flat slice u* + R* z
    i0 = len(ch.w) // 2
    np.testing.assert_allclose(ch.G[i0], ch.u_star + ch.z @ ch.R_star.T, atol=1e-14)


@settings(max_examples=10)
@given(h=st.floats(0.5, 2.0), m=st.floats(-0.5, 0.5), e1=st.floats(-0.2, 0.2), e2=st.floats(-0.2, 0.2),
       fam=st.sampled_from([1, 2]))
def test_flow_group_property(h, m, e1, e2, fam):
    u = np.array([h, m])
    once = flow(SW, u, fam, e1 + e2)
    twice = flow(SW, flow(SW, u, fam, e1), fam, e2)
    assert np.linalg.norm(once - twice) <= 1e-8


@settings(max_examples=10)
@given(h=st.floats(0.5, 2.0), m=st.floats(-0.5, 0.5), fam=st.sampled_from([1, 2]), width=st.floats(0.05, 0.4))
def test_reparametrization_round_trip(h, m, fam, width):
    u = np.array([h, m])
    lam = char_fields(SW, u)[fam - 1].speed
    wave = build_rarefaction_wave(SW, u, fam, (lam - width / 2, lam + width / 2))
    speeds = eigenvalues_many(SW, wave.values(wave.xi_table))[:, fam - 1]
    assert np.max(np.abs(speeds - wave.xi_table)) <= 1e-9


def test_gn_sign_and_monotonicity():
    c = integrate_rarefaction_curve(SW, [1.0, 0.0], 1, (-0.5, 0.5))
    assert np.all(c.gn_values < 0) or np.all(c.gn_values > 0)
    assert np.all(np.diff(c.speeds) > 0) or np.all(np.diff(c.speeds) < 0)
    # quartic: gn vanishes at u = 0 yet the speed stays strictly monotone
    c = integrate_rarefaction_curve(QUARTIC, 0.0, 1, (-1, 1))
    assert np.min(np.abs(c.gn_values)) == 0.0
    assert np.all(np.diff(c.speeds) > 0)


@pytest.mark.parametrize("fam,interval", [(1, (-1.3, -0.9)), (2, (0.9, 1.3))])
def test_embedded_rarefaction_is_weak(fam, interval):
    lam = -1.0 if fam == 1 else 1.0
    seg = build_rarefaction_profile(SW, [1.0, 0.0], fam, interval)
    assert interval[0] < lam < interval[1]
    rep = verify_weak(SW, embed_between_constants(SW, seg, interval))
    assert rep.verdict and rep.deviation <= 1e-6


def test_curve_csv(tmp_path):
    c = integrate_rarefaction_curve(QUARTIC, 0.0, 1, (-1, 1), n_nodes=11)
    write_curve_csv(c, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "eta,u0,speed,gn" and len(lines) == 12
