"""Profiles and fluxes shared by the test modules."""

from functools import lru_cache

import numpy as np

from selfsim.classify import structure_report
from selfsim.flux_models import FluxModel, make_flux
from selfsim.profiles import Chatter, Constant, Sampled, piecewise, quartic_rarefaction_profile, step_profile
from selfsim.scalar_oracle import convex_envelope, oleinik_solve
from selfsim.wavecurves import build_rarefaction_profile

# acceptance lines collected for the terminal summary: (number, passed, detail)
ACCEPTANCE = []


def burgers_shock(at=0.0):
    return step_profile([1.0], [-1.0], at)


def chatter_profile():
    """+1 / -1 on the sign of sin(1/xi) for xi in (-1, 0), then -1."""
    return piecewise([Constant([1.0]), -1.0, Chatter(0.0, [1.0], [-1.0]), 0.0, Constant([-1.0])])


def sampled_profile():
    return piecewise([Constant([0.0]), -0.5,
                      Sampled(xi=[-0.5, -0.2, 0.1, 0.35], values=[0.3, -0.4, 0.8, 0.1]),
                      0.6, Constant([0.5])])


def sw_rarefaction_profile(g=1.0):
    """Shallow water 2-rarefaction through (1, 0) on (0.8, 1.4) between constants."""
    model = make_flux("shallow_water", g=g)
    seg = build_rarefaction_profile(model, [1.0, 0.0], 2, (0.8, 1.4))
    a = seg.func(np.array([0.8]))[0]
    b = seg.func(np.array([1.4]))[0]
    return model, piecewise([Constant(a), 0.8, seg, 1.4, Constant(b)], n=2)


def sw_gap_model():
    return make_flux("shallow_water", g=1.0, box=((0.1, -3.0), (4.0, 3.0)))


def sw_gap_profile():
    """1-rarefaction on (-1, 0.5), constant (0.25, 0.25) on (0.5, 1.5), 2-rarefaction on (1.5, 3).

    With g = 1 the 1-invariant m/h + 2 sqrt(h) = 2 and the 2-invariant
    m/h - 2 sqrt(h) = 0 fix the outer states (1, 0) and (1, 2); h stays in
    [0.25, 1], so the smallest speed gap is 2 sqrt(0.25) = 1.
    """
    model = sw_gap_model()
    mid = np.array([0.25, 0.25])
    r1 = build_rarefaction_profile(model, mid, 1, (-1.0, 0.5))
    r2 = build_rarefaction_profile(model, mid, 2, (1.5, 3.0))
    p = piecewise([Constant([1.0, 0.0]), -1.0, r1, 0.5, Constant(mid), 1.5, r2, 3.0, Constant([1.0, 2.0])], n=2)
    return model, p


def archetypes():
    """(name, profile) pairs for the essential-image property suite."""
    _, sw = sw_rarefaction_profile()
    return [
        ("constant", piecewise([Constant([0.7])])),
        ("step", burgers_shock()),
        ("quartic", quartic_rarefaction_profile()),
        ("sampled", sampled_profile()),
        ("chatter", chatter_profile()),
        ("sw_rarefaction", sw),
    ]


def bumped_flux(levels=6, amp=0.5):
    """u^2/2 plus C^2 bumps a_k (1 - s^2)^3, s = (u - c_k)/w_k, c_k = 2^-k, w_k = c_k/4, a_k = amp w_k^2.

    Each bump is concave near its centre, so the lower convex envelope
    bridges it with one chord whose slope is f'(c_k) = c_k by symmetry.  The
    Riemann solution for data (-0.25, 1) thus has shocks at speeds 2^-k,
    accumulating geometrically at 0.  Test-only flux.
    """
    c = 2.0 ** -np.arange(1, levels + 1)
    w = c / 4
    a = amp * w ** 2

    def f(U):
        u = U[..., 0]
        s = (u[..., None] - c) / w
        b = np.where(np.abs(s) < 1, (1 - s ** 2) ** 3, 0.0)
        return (0.5 * u ** 2 + (a * b).sum(-1))[..., None]

    def jac(U):
        u = U[..., 0]
        s = (u[..., None] - c) / w
        d = np.where(np.abs(s) < 1, -6 * s * (1 - s ** 2) ** 2 / w, 0.0)
        return (u + (a * d).sum(-1))[..., None, None]

    return FluxModel(n=1, f=f, jac=jac, domain_lo=np.array([-2.0]), domain_hi=np.array([2.0]),
                     name="bumped", vectorized=True, params={"levels": levels, "amp": amp})


@lru_cache(maxsize=None)
def oracle_run(name, u_left, u_right):
    """(model, envelope, profile, report) for a scalar Riemann problem; shared across test modules."""
    model = bumped_flux() if name == "bumped" else make_flux(name)
    env = convex_envelope(model, u_left, u_right)
    p = oleinik_solve(model, u_left, u_right)
    return model, env, p, structure_report(model, p)
