"""Exact scalar Riemann solutions from convex / concave envelopes of the flux."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .flux_models import FluxModel, register_factory
from .profiles import Constant, Profile, piecewise
from .wavecurves import build_rarefaction_profile

CONTACT_TOL = 1e-10


@dataclass(frozen=True)
class Piece:
    kind: str           # "rarefaction" (envelope coincides with f) or "shock" (chord)
    u_start: float      # in solution order
    u_end: float
    speed_start: float
    speed_end: float


@dataclass(frozen=True)
class EnvelopeResult:
    u_left: float
    u_right: float
    knots: tuple        # states in solution order, from u_left to u_right
    pieces: tuple

    @property
    def shocks(self):
        return [p for p in self.pieces if p.kind == "shock"]

    @property
    def slopes(self):
        return [p.speed_start for p in self.pieces if p.kind == "shock"]


def _lower_hull(x, y, tol):
    hull = []
    for i in range(len(x)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (x[a] - x[o]) * (y[i] - y[o]) - (y[a] - y[o]) * (x[i] - x[o])
            if cross < -tol:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _refine_chord(f, df, a, b, br_a, br_b, lo, hi, sign):
    """Alternate tangency solves at both ends until the chord contacts settle."""
    for _ in range(60):
        a_old, b_old = a, b
        if br_a is not None:
            h = lambda t: sign * (df(t) * (b - t) - (f(b) - f(t)))
            lo_a, hi_a = br_a
            if h(lo_a) * h(hi_a) < 0:
                a = brentq(h, lo_a, hi_a, xtol=1e-15, maxiter=200)
        if br_b is not None:
            h = lambda t: sign * (df(t) * (t - a) - (f(t) - f(a)))
            lo_b, hi_b = br_b
            if h(lo_b) * h(hi_b) < 0:
                b = brentq(h, lo_b, hi_b, xtol=1e-15, maxiter=200)
        if abs(a - a_old) <= CONTACT_TOL * 1e-3 and abs(b - b_old) <= CONTACT_TOL * 1e-3:
            break
    return a, b


def convex_envelope(model: FluxModel, u_left: float, u_right: float, resolution: int = 4001) -> EnvelopeResult:
    """Lower convex (u_left < u_right) or upper concave (u_left > u_right) envelope of a scalar flux."""
    if model.n != 1:
        raise ValueError("envelopes need a scalar flux")
    uL, uR = float(np.ravel(u_left)[0]), float(np.ravel(u_right)[0])
    f = lambda u: float(model.flux(np.array([[u]]))[0, 0])
    df = lambda u: float(model.jacobian(np.array([[u]]))[0, 0, 0])
    if uL == uR:
        return EnvelopeResult(uL, uR, (uL,), ())
    lo, hi = min(uL, uR), max(uL, uR)
    sign = 1.0 if uL < uR else -1.0
    x = np.linspace(lo, hi, resolution)
    y = sign * model.flux(x[:, None])[:, 0]
    scale = (hi - lo) * (1 + np.max(np.abs(y)))
    hull = _lower_hull(x, y, 1e-13 * scale * (hi - lo))
    # pieces in increasing u: consecutive hull vertices are "on f", gaps are chords
    raw = []
    k = 0
    while k < len(hull) - 1:
        i, j = hull[k], hull[k + 1]
        if j == i + 1:
            m = k
            while m + 1 < len(hull) - 1 and hull[m + 2] == hull[m + 1] + 1:
                m += 1
            raw.append(["rarefaction", x[i], x[hull[m + 1]]])
            k = m + 1
        else:
            br_a = None if i == 0 else (x[i - 1], x[min(i + 1, j - 1)])
            br_b = None if j == resolution - 1 else (x[max(j - 1, i + 1)], x[j + 1])
            a, b = _refine_chord(lambda t: sign * f(t), lambda t: sign * df(t), x[i], x[j], br_a, br_b,
                                 lo, hi, 1.0)
            raw.append(["shock", a, b])
            k += 1
    # reconcile rarefaction ends with refined chord contacts
    for idx, pc in enumerate(raw):
        if pc[0] != "rarefaction":
            continue
        if idx > 0:
            pc[1] = raw[idx - 1][2]
        if idx + 1 < len(raw):
            pc[2] = raw[idx + 1][1]
    raw = [pc for pc in raw if pc[2] > pc[1]]
    pieces = []
    for kind, a, b in raw:
        if kind == "shock":
            s = (f(b) - f(a)) / (b - a)
            pieces.append(Piece("shock", a, b, s, s))
        else:
            pieces.append(Piece("rarefaction", a, b, df(a), df(b)))
    if sign < 0:
        pieces = [Piece(p.kind, p.u_end, p.u_start, p.speed_end, p.speed_start) for p in reversed(pieces)]
    knots = tuple([pieces[0].u_start] + [p.u_end for p in pieces]) if pieces else (uL, uR)
    return EnvelopeResult(uL, uR, knots, tuple(pieces))


def oleinik_solve(model: FluxModel, u_left: float, u_right: float, resolution: int = 4001) -> Profile:
    """Self-similar profile built from the envelope: rarefaction fans and chord jumps between constants."""
    env = convex_envelope(model, u_left, u_right, resolution)
    uL, uR = env.u_left, env.u_right
    if not env.pieces:
        return piecewise([Constant([uL])], n=1) if uL == uR else piecewise([Constant([uL]), 0.0, Constant([uR])])
    items = [Constant(np.array([uL]))]
    last = -np.inf
    for pc in env.pieces:
        tiny = 1e-12 * (1 + abs(pc.speed_start))
        if pc.kind == "shock":
            s = pc.speed_start
            if s <= last + tiny:
                # speeds coincide within round-off: collapse onto the previous breakpoint
                items[-1] = Constant(np.array([pc.u_end]))
                continue
            items += [s, Constant(np.array([pc.u_end]))]
            last = s
        else:
            s0, s1 = pc.speed_start, pc.speed_end
            a0 = max(s0, last)
            if s0 > last + tiny:
                items += [s0]
            else:
                items.pop()   # constant squeezed to zero width
            mid = np.array([0.5 * (pc.u_start + pc.u_end)])
            seg = build_rarefaction_profile(model, mid, 1, (a0 if a0 < s1 else s0, s1))
            items += [seg, s1, Constant(np.array([pc.u_end]))]
            last = s1
    items[-1] = Constant(np.array([uR]))
    return piecewise(items, n=1)


# ---------------------------------------------------------------------------
# randomized C^2 fluxes

def spline_flux(knots, values, box=None, name: str = "spline") -> FluxModel:
    """C^2 natural cubic spline flux through (knots, values)."""
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(values, dtype=float)
    cs = CubicSpline(knots, values, bc_type="natural")
    d1, d2 = cs.derivative(1), cs.derivative(2)
    lo, hi = (knots[0], knots[-1]) if box is None else box
    return FluxModel(
        n=1, name=name, vectorized=True, domain_lo=np.array([lo], float), domain_hi=np.array([hi], float),
        f=lambda u: cs(u),
        jac=lambda u: d1(u)[..., None],
        djac=lambda u, r: np.array([[float(d2(u[0])) * r[0]]]),
        params={"knots": knots.tolist(), "values": values.tolist()},
        kinks=tuple(float(k) for k in knots[1:-1]),
    )


def random_c2_flux(rng: np.random.Generator, n_knots: int = 7, box=(-2.0, 2.0)) -> FluxModel:
    knots = np.linspace(box[0], box[1], n_knots)
    values = rng.normal(size=n_knots) + 0.5 * knots ** 2
    return spline_flux(knots, values)


def random_riemann_instance(seed: int):
    """(flux, u_left, u_right) for the oracle soundness sweep."""
    rng = np.random.default_rng(seed)
    model = random_c2_flux(rng)
    uL, uR = rng.uniform(-1.8, 1.8, size=2)
    while abs(uL - uR) < 0.2:
        uR = rng.uniform(-1.8, 1.8)
    return model, float(uL), float(uR)


register_factory("spline", lambda knots, values, box=None: spline_flux(knots, values, box))
