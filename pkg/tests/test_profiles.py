import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import burgers_shock, chatter_profile, sampled_profile
from selfsim.errors import EmptyIntervalError, NotContinuousError
from selfsim.profiles import (EssImQuery, accum_sets, accum_two_sided, classify_point, constant_profile,
                              continuous_representative, essim_interval, eval_profile, hausdorff,
                              merge_accum, quartic_rarefaction_profile)

Q = EssImQuery()


def _punctured(p, xs, state):
    return dataclasses.replace(p, overlay=tuple((float(x), np.full(p.n, state)) for x in xs))


def test_eval_profile_examples():
    assert eval_profile(constant_profile([0.3]), 12.0)[0] == 0.3
    p = burgers_shock()
    assert eval_profile(p, -0.3)[0] == 1.0
    assert eval_profile(_punctured(p, [-0.3], 99.0), -0.3)[0] == 99.0


def test_essim_examples():
    c = essim_interval(constant_profile([0.3]), (0, 1))
    assert c.is_singleton and c.reps[0, 0] == 0.3
    s = essim_interval(burgers_shock(), (-1, 1))
    assert sorted(s.reps[:, 0]) == [-1.0, 1.0]
    assert all(cl.fraction == pytest.approx(0.5, abs=0.02) for cl in s.clusters)
    p = quartic_rarefaction_profile()
    qr = essim_interval(p, (0, 1))
    delta = Q.delta(p)
    reps = qr.reps[:, 0]
    assert reps.min() >= -delta and reps.max() <= 1 + delta
    # every value in [0, 1] is covered by some cluster
    gaps = np.abs(np.linspace(0, 1, 2001)[:, None] - reps[None, :]).min(axis=1)
    assert gaps.max() <= 2 * delta
    assert len(qr) >= 0.3 / delta


def test_essim_empty_interval():
    with pytest.raises(EmptyIntervalError):
        essim_interval(burgers_shock(), (0.5, 0.5))


def test_accum_examples():
    left, right, union = accum_sets(burgers_shock(), 0.0)
    assert left.reps[:, 0].tolist() == [1.0] and right.reps[:, 0].tolist() == [-1.0]
    assert len(union) == 2
    left, right, _ = accum_sets(constant_profile([0.3]), 5.0)
    assert left.reps[:, 0].tolist() == right.reps[:, 0].tolist() == [0.3]
    left, right, _ = accum_sets(chatter_profile(), 0.0)
    assert {-1.0, 1.0} <= set(left.reps[:, 0].tolist())
    assert right.reps[:, 0].tolist() == [-1.0]


def test_classify_point_examples():
    c = classify_point(burgers_shock(), 0.0)
    assert c.kind == "jump" and c.left.reps[0, 0] == 1.0 and c.right.reps[0, 0] == -1.0
    c = classify_point(quartic_rarefaction_profile(), 0.5)
    assert c.kind == "continuity"
    assert c.value[0] == pytest.approx(0.5 ** (1 / 3), abs=1e-9)
    c = classify_point(chatter_profile(), 0.0)
    assert c.kind == "general" and len(c.left) >= 2


def test_continuous_representative_examples():
    rep = continuous_representative(constant_profile([0.3]), (0, 1))
    assert np.all(rep.values == 0.3)
    rep = continuous_representative(quartic_rarefaction_profile(), (-1, 1))
    exact = np.sign(rep.xi) * np.abs(rep.xi) ** (1 / 3)
    np.testing.assert_allclose(rep.values[:, 0], exact, atol=1e-9)
    with pytest.raises(NotContinuousError) as err:
        continuous_representative(burgers_shock(), (-1, 1))
    assert abs(err.value.xi) <= 0.01


@given(xs=st.lists(st.floats(-2, 2), min_size=1, max_size=32), at=st.floats(-1.5, 1.5))
def test_punctures_do_not_change_accum(xs, at):
    p = sampled_profile()
    a = accum_sets(p, at)
    b = accum_sets(_punctured(p, xs, 50.0), at)
    assert all(x.same_as(y) for x, y in zip(a, b))
    assert classify_point(p, at).kind == classify_point(_punctured(p, xs, 50.0), at).kind


@given(c=st.floats(-0.9, 0.9))
def test_union_law(c):
    p = sampled_profile()
    whole = essim_interval(p, (-1, 1))
    parts = merge_accum(essim_interval(p, (-1, c)), essim_interval(p, (c, 1)), Q.delta(p))
    assert hausdorff(whole, parts) <= Q.delta(p)


@given(a=st.floats(-0.9, 0.0), w=st.floats(0.05, 0.9))
def test_monotone_in_interval(a, w):
    p = quartic_rarefaction_profile()
    inner = essim_interval(p, (a, a + w))
    outer = essim_interval(p, (a - 0.1, a + w + 0.1))
    d = np.linalg.norm(inner.reps[:, None, :] - outer.reps[None, :, :], axis=-1).min(axis=1)
    assert d.max() <= Q.delta(p)


@given(a=st.floats(-2, 2), w=st.floats(1e-3, 1.0))
def test_nonempty_and_bounded(a, w):
    p = sampled_profile()
    s = essim_interval(p, (a, a + w))
    assert len(s) >= 1
    assert np.all(np.linalg.norm(s.reps, axis=1) <= p.ess_bound + Q.delta(p))


@given(xi=st.floats(-0.95, 0.95))
def test_two_sided_is_merge_of_one_sided(xi):
    p = chatter_profile()
    _, _, union = accum_sets(p, xi)
    assert hausdorff(union, accum_two_sided(p, xi)) <= Q.delta(p)
