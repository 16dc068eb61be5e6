"""Rarefaction integral curves, speed reparametrization and straightening charts."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.linalg import null_space
from scipy.spatial import cKDTree

from .errors import (CoverageError, DomainExit, HyperbolicityError, NotMonotoneError,
                     PreconditionError, ResonanceError)
from .flux_models import FluxModel, as_state, char_fields, eigenvalues_many
from .profiles import (Constant, EssImQuery, Mapped, Profile, continuous_representative, limit_values,
                       one_sided_batch, piecewise)

EPS_ODE = 1e-10
RTOL = 1e-12
ATOL = 1e-13


# ---------------------------------------------------------------------------
# integral curves

@dataclass(eq=False)
class IntegralCurve:
    family: int
    u_star: np.ndarray
    eta: np.ndarray
    states: np.ndarray
    speeds: np.ndarray
    gn_values: np.ndarray
    model: FluxModel
    # whether the curve stopped early at the low / high end of eta
    domain_exit: tuple = (False, False)
    direction: float = 1.0      # n = 1 only: sign of the eigenvector field
    _dense: list = field(default_factory=list, repr=False)

    @property
    def span(self):
        return float(self.eta[0]), float(self.eta[-1])

    def state_at(self, eta) -> np.ndarray:
        eta = np.asarray(eta, dtype=float)
        if self.model.n == 1:
            return self.u_star + self.direction * eta[..., None]
        flat = eta.ravel()
        out = np.empty((flat.size, self.model.n))
        neg = flat < 0
        for mask, sol in ((neg, self._dense[0]), (~neg, self._dense[1])):
            if np.any(mask):
                if sol is None:
                    out[mask] = self.u_star
                else:
                    out[mask] = sol(flat[mask]).T
        return out.reshape(eta.shape + (self.model.n,))

    def speed_at(self, eta) -> np.ndarray:
        return eigenvalues_many(self.model, self.state_at(eta))[..., self.family - 1]


def _initial_direction(model, u_star, family, hint):
    fld = char_fields(model, u_star, None if hint is None else [hint if i == family - 1 else None
                                                                for i in range(model.n)])
    return fld[family - 1].right


def _field_rhs(model, family, r0):
    last = {"r": r0}

    def rhs(_, U):
        hints = [None] * model.n
        hints[family - 1] = last["r"]
        r = char_fields(model, U, hints)[family - 1].right
        last["r"] = r
        return r

    return rhs


def _box_event(model, margin=1e-9):
    width = model.domain_hi - model.domain_lo

    def ev(_, U):
        return float(np.min(np.minimum(U - model.domain_lo, model.domain_hi - U) / width) + margin)

    ev.terminal = True
    return ev


def _gap_event(model):
    def ev(_, U):
        try:
            lam = eigenvalues_many(model, U)
        except HyperbolicityError:
            return -1.0
        return float(np.min(np.diff(lam)) - 1e-8 * (1 + np.max(np.abs(lam))))

    ev.terminal = True
    return ev


def _speed_event(model, family, bound, sign):
    def ev(_, U):
        return sign * (eigenvalues_many(model, U)[family - 1] - bound)

    ev.terminal = True
    return ev


def _integrate_branch(model, u_star, family, r0, eta_end, speed_stop, max_step):
    if eta_end == 0:
        return None, np.array([0.0]), False
    events = [_box_event(model)]
    if model.n > 1:
        events.append(_gap_event(model))
    if speed_stop is not None:
        lo, hi = speed_stop
        events += [_speed_event(model, family, lo, 1.0), _speed_event(model, family, hi, -1.0)]
    rhs = _field_rhs(model, family, r0)
    sol = solve_ivp(rhs, (0.0, eta_end), u_star, method="DOP853", rtol=RTOL, atol=ATOL,
                    dense_output=True, events=events, max_step=max_step)
    if sol.status == -1:
        raise HyperbolicityError(sol.message)
    hit = [len(t) > 0 for t in sol.t_events]
    exited = bool(hit[0] or (model.n > 1 and hit[1]))
    return sol.sol, sol.t, exited


def integrate_rarefaction_curve(model: FluxModel, u_star, family: int, eta_span=(-1.0, 1.0),
                                hint=None, speed_stop=None, n_nodes: int = 2001) -> IntegralCurve:
    """Integral curve of the ``family`` right eigenvector field through ``u_star``.

    Integration runs from eta=0 in both directions and stops at the end of
    ``eta_span``, on leaving the domain box, on loss of strict hyperbolicity,
    or when the speed leaves ``speed_stop`` (if given).
    """
    u_star = as_state(model, u_star)
    if not 1 <= family <= model.n:
        raise ValueError(f"family must lie in 1..{model.n}")
    e0, e1 = float(eta_span[0]), float(eta_span[1])
    if not e0 <= 0 <= e1:
        raise ValueError("eta_span must contain 0")
    r0 = _initial_direction(model, u_star, family, hint)
    if model.n == 1:
        sgn = float(r0[0])
        lo = (model.domain_lo[0] - u_star[0]) * sgn
        hi = (model.domain_hi[0] - u_star[0]) * sgn
        if sgn < 0:
            lo, hi = hi, lo
        a, b = max(e0, lo), min(e1, hi)
        eta = np.unique(np.concatenate([np.linspace(a, b, n_nodes), [0.0]]))
        curve_eta, exit_ = eta, (a > e0, b < e1)
        if speed_stop is not None:
            sp = model.jacobian((u_star + sgn * eta)[:, None])[:, 0, 0]
            i0 = int(np.searchsorted(eta, 0.0))
            out = (sp < speed_stop[0]) | (sp > speed_stop[1])
            hi_idx = next((j for j in range(i0, len(eta)) if out[j]), len(eta) - 1)
            lo_idx = next((j for j in range(i0, -1, -1) if out[j]), 0)
            curve_eta = eta[lo_idx:hi_idx + 1]
        curve = IntegralCurve(family, u_star, curve_eta, np.empty((0, 1)), np.empty(0), np.empty(0),
                              model, domain_exit=exit_, direction=sgn)
    else:
        scale = float(np.max(model.domain_hi - model.domain_lo))
        max_step = scale / 50
        neg, tn, exn = _integrate_branch(model, u_star, family, r0, e0, speed_stop, max_step)
        pos, tp, exp_ = _integrate_branch(model, u_star, family, r0, e1, speed_stop, max_step)
        a = float(tn[-1]) if neg is not None else 0.0
        b = float(tp[-1]) if pos is not None else 0.0
        curve_eta = np.unique(np.concatenate([np.linspace(a, b, n_nodes), tn, tp, [0.0]]))
        curve = IntegralCurve(family, u_star, curve_eta, np.empty((0, model.n)), np.empty(0),
                              np.empty(0), model, domain_exit=(exn, exp_), _dense=[neg, pos])
    curve.states = curve.state_at(curve.eta)
    curve.speeds = curve.speed_at(curve.eta)
    curve.gn_values = _gn_along(model, curve)
    return curve


def _gn_along(model, curve, stride: int = 1):
    idx = np.arange(0, len(curve.eta), stride)
    out = np.empty(len(curve.eta))
    prev = curve.direction * np.ones(1) if model.n == 1 else None
    for j in idx:
        hints = [None] * model.n
        hints[curve.family - 1] = prev
        f = char_fields(model, curve.states[j], hints)[curve.family - 1]
        prev = f.right
        out[j] = f.gn_indicator
    return out


def flow(model: FluxModel, u, family: int, eta: float, hint=None) -> np.ndarray:
    """Phi(eta, u): the eigenvector flow applied for time ``eta``."""
    span = (min(eta, 0.0), max(eta, 0.0))
    c = integrate_rarefaction_curve(model, u, family, span, hint=hint, n_nodes=3)
    if (eta < 0 and c.domain_exit[0]) or (eta > 0 and c.domain_exit[1]):
        raise DomainExit("flow left the domain box")
    return c.state_at(np.array([eta]))[0]


# ---------------------------------------------------------------------------
# reparametrization by speed

def _check_monotone(curve: IntegralCurve):
    d = np.diff(curve.speeds)
    if np.all(d > 0):
        return 1.0
    if np.all(d < 0):
        return -1.0
    sgn = 1.0 if curve.speeds[-1] >= curve.speeds[0] else -1.0
    bad = int(np.nonzero(sgn * d <= 0)[0][0])
    pair = (float(curve.eta[bad]), float(curve.eta[bad + 1]))
    raise NotMonotoneError(f"speed along the curve is not strictly monotone between eta={pair[0]:.6g} "
                           f"and eta={pair[1]:.6g}", pair)


def _invert_speed(curve: IntegralCurve, sgn: float, xi, iters: int = 64) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    s = sgn * curve.speeds
    idx = np.clip(np.searchsorted(s, sgn * xi), 1, len(s) - 1)
    lo = curve.eta[idx - 1].copy()
    hi = curve.eta[idx].copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = sgn * curve.speed_at(mid) < sgn * xi
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4 * np.finfo(float).eps * (1 + np.abs(hi))):
            break
    return 0.5 * (lo + hi)


@dataclass(eq=False)
class RarefactionWave:
    interval: tuple
    curve: IntegralCurve
    xi_table: np.ndarray
    w_table: np.ndarray
    sign: float
    _w: Optional[PchipInterpolator] = field(default=None, repr=False)

    def __post_init__(self):
        self._w = PchipInterpolator(self.xi_table, self.w_table)

    def w(self, xi, polish: int = 8) -> np.ndarray:
        """Inverse speed map: PCHIP guess polished by Illinois steps inside the table bracket."""
        xi = np.clip(np.asarray(xi, dtype=float), *self.interval)
        shape = xi.shape
        x = xi.ravel()
        w = self._w(x)
        if polish <= 0 or x.size == 0:
            return w.reshape(shape)
        xt, wt, sg = self.xi_table, self.w_table, self.sign
        j = np.clip(np.searchsorted(xt, x), 1, len(xt) - 1)
        wa, wb = wt[j - 1], wt[j]
        ga, gb = sg * (xt[j - 1] - x), sg * (xt[j] - x)
        w = np.clip(w, np.minimum(wa, wb), np.maximum(wa, wb))
        w[ga == 0] = wa[ga == 0]
        w[gb == 0] = wb[gb == 0]
        act = np.nonzero((ga != 0) & (gb != 0))[0]
        wa, wb, ga, gb, xa = wa[act], wb[act], ga[act], gb[act], x[act]
        cur = w[act]
        side = np.zeros(len(act), dtype=np.int8)
        tol = 4 * np.finfo(float).eps
        for _ in range(polish):
            if not len(act):
                break
            g = sg * (self.curve.speed_at(cur) - xa)
            lower = g < 0
            upper = ~lower
            wa = np.where(lower, cur, wa)
            ga = np.where(lower, g, ga)
            wb = np.where(upper, cur, wb)
            gb = np.where(upper, g, gb)
            # Illinois: halve the residual of the end point retained twice in a row
            ga[upper & (side == -1)] *= 0.5
            gb[lower & (side == 1)] *= 0.5
            side = np.where(lower, 1, -1).astype(np.int8)
            den = gb - ga
            safe = den != 0
            nxt = np.where(safe, wa - ga * (wb - wa) / np.where(safe, den, 1.0), 0.5 * (wa + wb))
            done = (g == 0) | (np.abs(wb - wa) <= tol * (1 + np.abs(cur))) | \
                   (np.abs(g) <= tol * (1 + np.abs(xa)))
            w[act] = np.where(done, cur, nxt)
            keep = ~done
            act, wa, wb, ga, gb, xa, side = act[keep], wa[keep], wb[keep], ga[keep], gb[keep], xa[keep], side[keep]
            cur = w[act]
        return w.reshape(shape)

    def values(self, xi) -> np.ndarray:
        return self.curve.state_at(self.w(xi))

    def exact_w(self, xi) -> np.ndarray:
        return _invert_speed(self.curve, self.sign, xi)

    def resonance_residual(self, xi=None) -> float:
        if xi is None:
            xi = self.xi_table
        lam = eigenvalues_many(self.curve.model, self.values(xi))[..., self.curve.family - 1]
        return float(np.max(np.abs(lam - np.asarray(xi))))

    def segment(self, spec: Optional[dict] = None) -> Mapped:
        return Mapped(func=self.values, spec=spec)


def reparametrize_by_speed(curve: IntegralCurve, target_interval=None, tol: float = 1e-9,
                           n_initial: int = 257, max_rounds: int = 40) -> RarefactionWave:
    """Tabulate w = inverse of the speed along ``curve`` on J (clipped to ``target_interval``)."""
    sgn = _check_monotone(curve)
    lo, hi = float(np.min(curve.speeds)), float(np.max(curve.speeds))
    if target_interval is not None:
        lo, hi = max(lo, target_interval[0]), min(hi, target_interval[1])
    if not lo < hi:
        raise NotMonotoneError("speed range of the curve is degenerate", None)
    inside = curve.speeds[(curve.speeds > lo) & (curve.speeds < hi)]
    xs = np.unique(np.concatenate([np.linspace(lo, hi, n_initial), inside]))
    ws = _invert_speed(curve, sgn, xs)
    # only the halves of freshly split intervals are re-checked
    pending = np.ones(len(xs) - 1, dtype=bool)
    full = True
    for _ in range(max_rounds):
        interp = PchipInterpolator(xs, ws)
        mids = 0.5 * (xs[1:] + xs[:-1])
        test = pending & ((xs[1:] - xs[:-1]) > 1e-10 * (1 + np.abs(mids)))
        bad = np.zeros_like(test)
        if np.any(test):
            wm = _invert_speed(curve, sgn, mids[test])
            bad[test] = np.abs(interp(mids[test]) - wm) > tol * (1 + np.abs(wm))
        if not np.any(bad):
            if full:
                break
            # insertions perturb neighbouring slopes; sweep every interval once more
            pending, full = np.ones(len(xs) - 1, dtype=bool), True
            continue
        full = bool(np.all(pending))
        new_x, new_w = mids[bad], wm[bad[test]]
        xs = np.concatenate([xs, new_x])
        ws = np.concatenate([ws, new_w])
        flag = np.concatenate([np.zeros(len(xs) - len(new_x), dtype=bool), np.ones(len(new_x), dtype=bool)])
        order = np.argsort(xs)
        xs, ws, flag = xs[order], ws[order], flag[order]
        pending = flag[1:] | flag[:-1]
    return RarefactionWave(interval=(lo, hi), curve=curve, xi_table=xs, w_table=ws, sign=sgn)


def build_rarefaction_wave(model: FluxModel, u_star, family: int, xi_interval, eta_span=None,
                           hint=None) -> RarefactionWave:
    u_star = as_state(model, u_star)
    a, b = float(xi_interval[0]), float(xi_interval[1])
    if not a < b:
        raise ValueError("empty speed interval")
    lam = char_fields(model, u_star)[family - 1].speed
    tol = 1e-12 * (1 + abs(lam))
    if not a - tol <= lam <= b + tol:
        raise PreconditionError(f"speed {lam:.6g} of the base state lies outside [{a:.6g}, {b:.6g}]")
    if eta_span is None:
        L = 2.0 * float(np.max(model.domain_hi - model.domain_lo))
        eta_span = (-L, L)
    pad = 1e-9 * (1 + abs(a) + abs(b))
    curve = integrate_rarefaction_curve(model, u_star, family, eta_span, hint=hint,
                                        speed_stop=(a - pad, b + pad))
    if curve.speeds.min() > a + tol or curve.speeds.max() < b - tol:
        raise CoverageError(f"curve speeds [{curve.speeds.min():.6g}, {curve.speeds.max():.6g}] "
                            f"do not cover [{a:.6g}, {b:.6g}]")
    return reparametrize_by_speed(curve, (a, b))


def build_rarefaction_profile(model: FluxModel, u_star, family: int, xi_interval, eta_span=None,
                              hint=None) -> Mapped:
    """Mapped segment v(xi) = U(w(xi)) on ``xi_interval``."""
    wave = build_rarefaction_wave(model, u_star, family, xi_interval, eta_span, hint)
    spec = {"map": "rarefaction", "u_star": as_state(model, u_star).tolist(), "family": family,
            "xi_interval": [float(xi_interval[0]), float(xi_interval[1])]}
    return wave.segment(spec)


def embed_between_constants(model: FluxModel, seg: Mapped, xi_interval) -> Profile:
    """Riemann-type profile: constant, the rarefaction segment on ``xi_interval``, constant."""
    a, b = float(xi_interval[0]), float(xi_interval[1])
    va = np.asarray(seg.func(np.array([a])), dtype=float).reshape(-1)
    vb = np.asarray(seg.func(np.array([b])), dtype=float).reshape(-1)
    return piecewise([Constant(va), a, seg, b, Constant(vb)], n=model.n)


# ---------------------------------------------------------------------------
# verification of continuous resonant segments

@dataclass(frozen=True)
class RarefactionCheck:
    family: int
    interval: tuple
    resonance_residual: float
    along_distance: float
    total_variation: float
    passed: bool


def verify_rarefaction_segment(model: FluxModel, p: Profile, interval, q: EssImQuery = EssImQuery(),
                               dxi: float = 1e-2, eps_res: float = 1e-6,
                               eps_along: float = 1e-6, scan_step: Optional[float] = None) -> RarefactionCheck:
    """Resonance, lies-along and bounded-variation checks on a continuous segment."""
    rep = continuous_representative(p, interval, q, dxi, scan_step)
    xs, V = rep.xi, rep.values
    lam = eigenvalues_many(model, V)
    res = np.abs(lam - xs[:, None])
    fam = int(np.argmin(res.max(axis=0)))
    worst = res[:, fam]
    if worst.max() > eps_res:
        j = int(np.argmax(worst > eps_res))
        raise ResonanceError(f"no family is resonant at xi={xs[j]:.6g} (residual {worst[j]:.3g})", float(xs[j]))
    family = fam + 1
    mid = len(xs) // 2
    a, b = float(xs[0]), float(xs[-1])
    along = 0.0
    if b > a:
        wave = build_rarefaction_wave(model, V[mid], family, (min(a, lam[mid, fam]), max(b, lam[mid, fam])))
        along = float(np.max(np.linalg.norm(wave.values(xs) - V, axis=1)))
    # endpoint states from the inner one-sided accumulation sets, when singletons
    ends = [one_sided_batch(p, [interval[0]], "right", q)[0], one_sided_batch(p, [interval[1]], "left", q)[0]]
    W = V
    if ends[0].is_singleton:
        W = np.vstack([limit_values(p, [interval[0]], q, side="right"), W])
    if ends[1].is_singleton:
        W = np.vstack([W, limit_values(p, [interval[1]], q, side="left")])
    tv = float(np.sum(np.linalg.norm(np.diff(W, axis=0), axis=1)))
    return RarefactionCheck(family=family, interval=(a, b), resonance_residual=float(worst.max()),
                            along_distance=along, total_variation=tv,
                            passed=bool(worst.max() <= eps_res and along <= eps_along))


# ---------------------------------------------------------------------------
# straightening chart

@dataclass(eq=False)
class StraighteningChart:
    u_star: np.ndarray
    family: int
    w: np.ndarray
    z: np.ndarray               # (Nz, n-1)
    G: np.ndarray               # (Nw, Nz, n)
    R_star: np.ndarray
    flow_residual: float        # max |-mu G_w + F_w| at interior nodes
    sigma_min: float            # smallest singular value of -mu G_z + F_z at (0, 0)
    min_separation: float
    extents: tuple
    shrunk: bool = False

    @property
    def injective(self) -> bool:
        return self.min_separation > 0


def _chart_once(model, u_star, family, a, b, hw, hz):
    n = model.n
    r_star = char_fields(model, u_star)[family - 1].right
    R = null_space(r_star[None, :])
    nw = int(round(a / hw))
    w = hw * np.arange(-nw, nw + 1)
    nz = int(round(b / hz))
    z1 = hz * np.arange(-nz, nz + 1)
    Z = np.stack(np.meshgrid(*([z1] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1)
    G = np.empty((len(w), len(Z), n))
    for k, zk in enumerate(Z):
        seed = u_star + R @ zk
        if not model.in_domain(seed, 0.0):
            raise DomainExit("chart seed outside the domain box")
        c = integrate_rarefaction_curve(model, seed, family, (w[0], w[-1]), hint=r_star, n_nodes=3)
        if c.domain_exit[0] or c.domain_exit[1]:
            raise DomainExit("eigenvector flow left the domain box")
        G[:, k, :] = c.state_at(w)
    return r_star, R, w, Z, G


def straightening_chart(model: FluxModel, u_star, family: int, extents=(0.1, 0.1),
                        steps=(1e-3, 1e-2)) -> StraighteningChart:
    """Tabulate G(w, z) = Phi(w, u* + R* z) and check the chart identities by differences."""
    if model.n < 2:
        raise PreconditionError("a straightening chart needs n >= 2; for n = 1 use the curve itself")
    u_star = as_state(model, u_star)
    a, b = extents
    shrunk = False
    try:
        r_star, R, w, Z, G = _chart_once(model, u_star, family, a, b, *steps)
    except DomainExit:
        a, b = a / 2, b / 2
        shrunk = True
        r_star, R, w, Z, G = _chart_once(model, u_star, family, a, b, *steps)
    hw = steps[0]
    F = model.flux(G)
    mu = eigenvalues_many(model, G)[..., family - 1]
    Gw = (G[2:] - G[:-2]) / (2 * hw)
    Fw = (F[2:] - F[:-2]) / (2 * hw)
    flow_res = float(np.max(np.abs(-mu[1:-1, :, None] * Gw + Fw)))
    # z-derivatives at the chart origin by central differences
    iw0 = len(w) // 2
    hz = steps[1]
    J = np.empty((model.n, model.n - 1))
    lam0 = char_fields(model, u_star)[family - 1].speed
    for j in range(model.n - 1):
        e = np.zeros(model.n - 1)
        e[j] = hz
        kp = int(np.argmin(np.linalg.norm(Z - e, axis=1)))
        km = int(np.argmin(np.linalg.norm(Z + e, axis=1)))
        Gz = (G[iw0, kp] - G[iw0, km]) / (2 * hz)
        Fz = (F[iw0, kp] - F[iw0, km]) / (2 * hz)
        J[:, j] = -lam0 * Gz + Fz
    sigma = float(np.linalg.svd(J, compute_uv=False).min())
    pts = G.reshape(-1, model.n)
    d, _ = cKDTree(pts).query(pts, k=2)
    return StraighteningChart(u_star=u_star, family=family, w=w, z=Z, G=G, R_star=R,
                              flow_residual=flow_res, sigma_min=sigma, min_separation=float(d[:, 1].min()),
                              extents=(a, b), shrunk=shrunk)


# ---------------------------------------------------------------------------
# CSV export

def write_curve_csv(curve: IntegralCurve, path) -> None:
    n = curve.states.shape[1]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["eta"] + [f"u{i}" for i in range(n)] + ["speed", "gn"])
        for e, u, s, g in zip(curve.eta, curve.states, curve.speeds, curve.gn_values):
            wr.writerow([repr(float(e))] + [repr(float(x)) for x in u] + [repr(float(s)), repr(float(g))])


def write_wave_csv(wave: RarefactionWave, path, n_points: int = 401) -> None:
    xs = np.linspace(*wave.interval, n_points)
    V = wave.values(xs)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["xi"] + [f"v{i}" for i in range(V.shape[1])])
        for x, v in zip(xs, V):
            wr.writerow([repr(float(x))] + [repr(float(c)) for c in v])


def write_chart_csv(chart: StraighteningChart, path) -> None:
    n = chart.G.shape[-1]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["w"] + [f"z{j}" for j in range(n - 1)] + [f"G{i}" for i in range(n)])
        for i, wv in enumerate(chart.w):
            for k, zk in enumerate(chart.z):
                wr.writerow([repr(float(wv))] + [repr(float(c)) for c in zk]
                            + [repr(float(c)) for c in chart.G[i, k]])
