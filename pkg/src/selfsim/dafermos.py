"""Dafermos function, weak-solution verdict and moving frame flux."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BreakpointError, PrerequisiteError
from .flux_models import FluxModel, integrate_panels, m_matrix
from .profiles import EssImQuery, Profile, accum_sets, grid_nodes

EPS_QUAD = 1e-12

def prefix_integral(p: Profile, xi0: float, points, tol: float = EPS_QUAD) -> np.ndarray:
    """int_{xi0}^{x} v for each x in ``points`` (overlay ignored)."""
    points = np.asarray(points, dtype=float)
    bps = p.panel_points()
    lo, hi = min(points.min(), xi0), max(points.max(), xi0)
    edges = np.unique(np.concatenate([points, [xi0], bps[(bps > lo) & (bps < hi)]]))
    if len(edges) < 2:
        return np.zeros((len(points), p.n))
    fun = lambda x: p.values(x, overlay=False)
    panels = integrate_panels(fun, edges, tol)
    cum = np.vstack([np.zeros((1, p.n)), np.cumsum(panels, axis=0)])
    base = cum[np.searchsorted(edges, xi0)]
    return cum[np.searchsorted(edges, points)] - base


@dataclass(frozen=True, eq=False)
class DafermosReport:
    xi0: float
    grid: np.ndarray            # row speeds (breakpoints appear twice)
    sides: np.ndarray           # "" | "left" | "right"
    states: np.ndarray
    d_values: np.ndarray
    d0: np.ndarray
    deviation: float
    f_values: np.ndarray
    lipschitz_estimate: float
    tol_weak: float
    verdict: bool
    breakpoint_jumps: list = field(default_factory=list)

    def moving_frame_flux_at(self, xi: float) -> np.ndarray:
        # F is continuous, so one-sided rows at breakpoints carry the same value
        xs, idx = np.unique(self.grid, return_index=True)
        return np.array([np.interp(xi, xs, self.f_values[idx, c]) for c in range(self.f_values.shape[1])])


def _rows(p: Profile, nodes):
    """Evaluation rows: plain nodes plus one-sided rows at breakpoints."""
    bps = [b for b in p.breakpoints if nodes[0] <= b <= nodes[-1]]
    xs, sides, states = [], [], []
    plain = np.setdiff1d(nodes, bps)
    vals = p.values(plain, overlay=False)
    for x, v in zip(plain, vals):
        xs.append(x), sides.append(""), states.append(v)
    for b in bps:
        for side in ("left", "right"):
            v = p.one_sided(b, side)
            if v is not None:
                xs.append(b), sides.append(side), states.append(v)
    order = np.lexsort((np.array([{"left": 0, "": 1, "right": 2}[s] for s in sides]), np.array(xs)))
    return np.array(xs)[order], np.array(sides)[order], np.array(states)[order]


def dafermos_function(model: FluxModel, p: Profile, xi0: float, grid, tol_weak: Optional[float] = None) -> DafermosReport:
    """D(xi) = -xi v + f(v) + int_{xi0}^{xi} v on the grid, with one-sided rows at breakpoints."""
    nodes = np.unique(np.asarray(grid, dtype=float))
    xs, sides, states = _rows(p, nodes)
    w = prefix_integral(p, xi0, xs)
    fv = model.flux(states)
    D = -xs[:, None] * states + fv + w
    d0 = np.median(D, axis=0)
    dev_rows = np.linalg.norm(D - d0, axis=1)
    deviation = float(dev_rows.max()) if len(dev_rows) else 0.0
    F = d0 - w
    plain = sides == ""
    xp, Fp = xs[plain], F[plain]
    lip = float(np.max(np.linalg.norm(np.diff(Fp, axis=0), axis=1) / np.diff(xp))) if len(xp) > 1 else 0.0
    if tol_weak is None:
        tol_weak = 1e-6 * (1 + float(np.max(np.linalg.norm(fv, axis=1))))
    jumps = []
    for b in p.breakpoints:
        l = np.nonzero((xs == b) & (sides == "left"))[0]
        r = np.nonzero((xs == b) & (sides == "right"))[0]
        if len(l) and len(r):
            jumps.append((b, float(np.linalg.norm(D[r[0]] - D[l[0]]))))
    return DafermosReport(xi0=float(xi0), grid=xs, sides=sides, states=states, d_values=D, d0=d0,
                          deviation=deviation, f_values=F, lipschitz_estimate=lip, tol_weak=float(tol_weak),
                          verdict=deviation <= tol_weak, breakpoint_jumps=jumps)


def auto_grid(model: FluxModel, p: Profile, dxi: float = 1e-2, q: Optional[EssImQuery] = None):
    from .classify import constancy_bounds
    xi_l, xi_r, _ = constancy_bounds(model, p, q or EssImQuery())
    lo = min(xi_l, *(p.breakpoints or (xi_l,))) - 1.0
    hi = max(xi_r, *(p.breakpoints or (xi_r,))) + 1.0
    return grid_nodes(lo, hi, dxi, closed=True)


def verify_weak(model: FluxModel, p: Profile, tol_weak: Optional[float] = None, xi0: Optional[float] = None,
                dxi: float = 1e-2, grid=None) -> DafermosReport:
    """Certify the weak-solution property by near-constancy of the Dafermos function."""
    if grid is None:
        grid = auto_grid(model, p, dxi)
    grid = np.asarray(grid, dtype=float)
    if xi0 is None:
        xi0 = float(grid[0])
    return dafermos_function(model, p, xi0, grid, tol_weak)


@dataclass(frozen=True, eq=False)
class MovingFrameFlux:
    xi: np.ndarray
    values: np.ndarray
    lipschitz: float
    fraction_ok: float


def moving_frame_flux_profile(model: FluxModel, p: Profile, report: DafermosReport) -> MovingFrameFlux:
    if not report.verdict:
        raise PrerequisiteError("moving frame flux requires a verified weak solution")
    plain = report.sides == ""
    xs = report.grid[plain]
    F = report.f_values[plain]
    states = report.states[plain]
    resid = np.linalg.norm(-xs[:, None] * states + model.flux(states) - F, axis=1)
    bps = np.asarray(p.breakpoints)
    off = np.ones(len(xs), dtype=bool) if len(bps) == 0 else \
        np.min(np.abs(xs[:, None] - bps[None, :]), axis=1) > 0
    frac = float(np.mean(resid[off] <= report.tol_weak)) if np.any(off) else 1.0
    return MovingFrameFlux(xi=xs, values=F, lipschitz=report.lipschitz_estimate, fraction_ok=frac)


def integral_equation_residual(model: FluxModel, p: Profile, zeta: float, xi: float) -> np.ndarray:
    """M(v(zeta), xi, v(xi)) [v(xi) - v(zeta)] + int_zeta^xi [v - v(zeta)]."""
    pts = p.panel_points()
    if np.any(pts == zeta) or np.any(pts == xi):
        raise BreakpointError("zeta and xi must avoid profile breakpoints")
    vz = p.values(np.array([zeta]), overlay=False)[0]
    vx = p.values(np.array([xi]), overlay=False)[0]
    w = prefix_integral(p, zeta, np.array([xi]))[0]
    return m_matrix(model, vz, xi, vx) @ (vx - vz) + w - (xi - zeta) * vz


@dataclass(frozen=True)
class TestFunctionSpec:
    """Bump (1 - s^2)^degree, s = (xi - center)/half_width; C^(degree-1) on the line."""
    __test__ = False

    center: float
    half_width: float
    degree: int = 3

    def __post_init__(self):
        if self.half_width <= 0 or self.degree < 2:
            raise ValueError("need half_width > 0 and degree >= 2")

    def psi(self, x):
        s = (np.asarray(x, dtype=float) - self.center) / self.half_width
        return np.where(np.abs(s) < 1, (1 - s ** 2) ** self.degree, 0.0)

    def dpsi(self, x):
        s = (np.asarray(x, dtype=float) - self.center) / self.half_width
        d = -2 * self.degree * s * (1 - s ** 2) ** (self.degree - 1) / self.half_width
        return np.where(np.abs(s) < 1, d, 0.0)


def weak_form_residual(model: FluxModel, p: Profile, t: TestFunctionSpec) -> np.ndarray:
    """int { psi' [-xi v + f(v)] - psi v } dxi with a scalar bump applied per component."""
    a, b = t.center - t.half_width, t.center + t.half_width
    bps = p.panel_points()
    edges = np.unique(np.concatenate([[a, b], bps[(bps > a) & (bps < b)]]))

    def integrand(x):
        v = p.values(x, overlay=False)
        return t.dpsi(x)[..., None] * (-x[..., None] * v + model.flux(v)) - t.psi(x)[..., None] * v

    return integrate_panels(integrand, edges).sum(axis=0)


def accumulation_flux_check(model: FluxModel, p: Profile, xi_star: float, report: DafermosReport,
                            q: EssImQuery = EssImQuery()):
    """Residuals -xi u + f(u) - F(xi) for every accumulation state u at xi."""
    if not report.verdict:
        raise PrerequisiteError("accumulation flux check requires a verified weak solution")
    _, _, union = accum_sets(p, xi_star, q)
    F = report.moving_frame_flux_at(xi_star)
    reps = union.reps
    lip_a = float(np.max(np.linalg.norm(model.jacobian(reps), ord=2, axis=(-2, -1))))
    tol = report.tol_weak + q.delta(p) * (abs(xi_star) + lip_a)
    out = []
    for u in reps:
        res = -xi_star * u + model.flux(u) - F
        out.append((u, res))
    return out, tol


def write_dafermos_csv(report: DafermosReport, path) -> None:
    """Rows xi, side flag, D components, F components."""
    n = report.d_values.shape[1]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["xi", "side"] + [f"D{i}" for i in range(n)] + [f"F{i}" for i in range(n)])
        for x, s, d, f in zip(report.grid, report.sides, report.d_values, report.f_values):
            wr.writerow([repr(float(x)), s or "-"] + [repr(float(v)) for v in d] + [repr(float(v)) for v in f])
